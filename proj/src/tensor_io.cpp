#include "specband/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace specband {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'T', '1'};

void put_u32(std::string& buf, uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u8: return 1;
  }
  fail(Errc::unsupported_dtype, "unknown dtype tag");
}

size_t Container::element_count() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

void write_container(const std::string& path, const std::vector<uint32_t>& dims,
                     Dtype dtype, const std::vector<double>& values) {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  if (values.size() != n)
    fail(Errc::dimension_mismatch, "value count does not match dims");
  if (dims.size() > 255) fail(Errc::dimension_mismatch, "rank > 255");

  std::string buf;
  buf.reserve(6 + 4 * dims.size() + n * dtype_size(dtype));
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(dims.size()));
  for (uint32_t d : dims) put_u32(buf, d);
  buf.push_back(static_cast<char>(dtype));

  switch (dtype) {
    case Dtype::f64: {
      size_t off = buf.size();
      buf.resize(off + n * 8);
      std::memcpy(buf.data() + off, values.data(), n * 8);
      break;
    }
    case Dtype::f32: {
      std::vector<float> tmp(values.begin(), values.end());
      size_t off = buf.size();
      buf.resize(off + n * 4);
      std::memcpy(buf.data() + off, tmp.data(), n * 4);
      break;
    }
    case Dtype::u8: {
      for (double v : values) {
        double c = v < 0 ? 0 : (v > 255 ? 255 : v);
        buf.push_back(static_cast<char>(static_cast<unsigned char>(c + 0.5)));
      }
      break;
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Errc::io_error, "short write: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 6 || std::memcmp(p, kMagic, 4) != 0)
    fail(Errc::bad_magic, "missing SRT1 magic: " + path);

  Container c;
  uint8_t rank = p[4];
  size_t header = 5 + 4 * static_cast<size_t>(rank) + 1;
  if (buf.size() < header)
    fail(Errc::truncated_payload, "header truncated: " + path);
  c.dims.resize(rank);
  for (int i = 0; i < rank; ++i) c.dims[i] = get_u32(p + 5 + 4 * i);
  uint8_t tag = p[5 + 4 * rank];
  if (tag > 2) fail(Errc::unsupported_dtype, "dtype tag " + std::to_string(tag));
  c.dtype = static_cast<Dtype>(tag);

  size_t n = c.element_count();
  size_t need = header + n * dtype_size(c.dtype);
  if (buf.size() < need)
    fail(Errc::truncated_payload, "payload shorter than dims imply: " + path);

  c.values.resize(n);
  const unsigned char* payload = p + header;
  switch (c.dtype) {
    case Dtype::f64: {
      std::memcpy(c.values.data(), payload, n * 8);
      break;
    }
    case Dtype::f32: {
      std::vector<float> tmp(n);
      std::memcpy(tmp.data(), payload, n * 4);
      for (size_t i = 0; i < n; ++i) c.values[i] = tmp[i];
      break;
    }
    case Dtype::u8: {
      for (size_t i = 0; i < n; ++i) c.values[i] = payload[i];
      break;
    }
  }
  return c;
}

void write_tensor(const std::string& path, const TensorImage& image,
                  Dtype dtype) {
  image.validate();
  write_container(path,
                  {static_cast<uint32_t>(image.height),
                   static_cast<uint32_t>(image.width),
                   static_cast<uint32_t>(image.channels)},
                  dtype, image.data);
}

TensorImage read_tensor(const std::string& path) {
  Container c = read_container(path);
  if (c.dims.size() != 3)
    fail(Errc::dimension_mismatch,
         "expected rank-3 tensor, got rank " + std::to_string(c.dims.size()));
  TensorImage img(static_cast<int>(c.dims[0]), static_cast<int>(c.dims[1]),
                  static_cast<int>(c.dims[2]));
  img.data = std::move(c.values);
  return img;
}

}  // namespace specband
