#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specband/types.hpp"

namespace specband {

// Self-describing binary tensor container, file extension ".srt".
//
// Layout (little-endian):
//   bytes 0..3   magic "SRT1"
//   byte  4      rank (uint8)
//   next 4*rank  dims (uint32 each)
//   next byte    dtype tag: 0 = float32, 1 = float64, 2 = uint8
//   payload      product(dims) * dtype_size bytes, row-major
enum class Dtype : uint8_t { f32 = 0, f64 = 1, u8 = 2 };

size_t dtype_size(Dtype d);

struct Container {
  std::vector<uint32_t> dims;
  Dtype dtype = Dtype::f64;
  std::vector<double> values;  // decoded payload

  size_t element_count() const;
};

void write_container(const std::string& path, const std::vector<uint32_t>& dims,
                     Dtype dtype, const std::vector<double>& values);
Container read_container(const std::string& path);

// Rank-3 (height, width, channels) convenience wrappers. float64 round
// trips are bit-exact.
void write_tensor(const std::string& path, const TensorImage& image,
                  Dtype dtype = Dtype::f64);
TensorImage read_tensor(const std::string& path);

}  // namespace specband
