#include "specband/wavelet.hpp"

#include <algorithm>
#include <cmath>

namespace specband {

namespace {

// Daubechies-4 scaling coefficients (8 taps, 4 vanishing moments),
// normalized so the even shifts form an orthonormal family.
const std::vector<double> kDb4Lo = {
    0.23037781330885523,   0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385,  -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945,  -0.010597401784997278};

std::vector<double> make_highpass() {
  const size_t L = kDb4Lo.size();
  std::vector<double> hi(L);
  for (size_t m = 0; m < L; ++m)
    hi[m] = (m % 2 == 0 ? 1.0 : -1.0) * kDb4Lo[L - 1 - m];
  return hi;
}

const std::vector<double> kDb4Hi = make_highpass();

int round_up(int n, int multiple) {
  return ((n + multiple - 1) / multiple) * multiple;
}

// Periodized analysis step: approx[k] = sum_m lo[m] x[(2k+m) mod n].
void analyze(const double* x, int n, double* approx, double* detail) {
  const int L = static_cast<int>(kDb4Lo.size());
  const int half = n / 2;
  for (int k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (int m = 0; m < L; ++m) {
      double v = x[(2 * k + m) % n];
      a += kDb4Lo[m] * v;
      d += kDb4Hi[m] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

// Transpose of analyze: x[j] = sum_k a[k] lo[(j-2k) mod n] + d[k] hi[...].
void synthesize(const double* approx, const double* detail, int n, double* x) {
  const int L = static_cast<int>(kDb4Lo.size());
  const int half = n / 2;
  std::fill(x, x + n, 0.0);
  for (int k = 0; k < half; ++k) {
    for (int m = 0; m < L; ++m) {
      int j = (2 * k + m) % n;
      x[j] += approx[k] * kDb4Lo[m] + detail[k] * kDb4Hi[m];
    }
  }
}

// One 2-D level in place on the top-left cur_h x cur_w corner of a
// padded_w-pitch grid. Low halves land first along each axis, so the
// result has LL in the top-left quadrant, then LH/HL/HH.
void level_forward(std::vector<double>& grid, int pitch, int cur_h,
                   int cur_w) {
  std::vector<double> line(static_cast<size_t>(std::max(cur_h, cur_w)));
  std::vector<double> out(line.size());
  for (int y = 0; y < cur_h; ++y) {
    double* row = grid.data() + static_cast<size_t>(y) * pitch;
    std::copy(row, row + cur_w, line.data());
    analyze(line.data(), cur_w, out.data(), out.data() + cur_w / 2);
    std::copy(out.data(), out.data() + cur_w, row);
  }
  for (int x = 0; x < cur_w; ++x) {
    for (int y = 0; y < cur_h; ++y)
      line[static_cast<size_t>(y)] = grid[static_cast<size_t>(y) * pitch + x];
    analyze(line.data(), cur_h, out.data(), out.data() + cur_h / 2);
    for (int y = 0; y < cur_h; ++y)
      grid[static_cast<size_t>(y) * pitch + x] = out[static_cast<size_t>(y)];
  }
}

void level_inverse(std::vector<double>& grid, int pitch, int cur_h,
                   int cur_w) {
  std::vector<double> line(static_cast<size_t>(std::max(cur_h, cur_w)));
  std::vector<double> out(line.size());
  for (int x = 0; x < cur_w; ++x) {
    for (int y = 0; y < cur_h; ++y)
      line[static_cast<size_t>(y)] = grid[static_cast<size_t>(y) * pitch + x];
    synthesize(line.data(), line.data() + cur_h / 2, cur_h, out.data());
    for (int y = 0; y < cur_h; ++y)
      grid[static_cast<size_t>(y) * pitch + x] = out[static_cast<size_t>(y)];
  }
  for (int y = 0; y < cur_h; ++y) {
    double* row = grid.data() + static_cast<size_t>(y) * pitch;
    std::copy(row, row + cur_w, line.data());
    synthesize(line.data(), line.data() + cur_w / 2, cur_w, out.data());
    std::copy(out.data(), out.data() + cur_w, row);
  }
}

}  // namespace

const std::vector<double>& db4_lowpass() { return kDb4Lo; }
const std::vector<double>& db4_highpass() { return kDb4Hi; }

WaveletPyramid dwt2(const TensorImage& image, int levels) {
  image.validate();
  if (levels < 1 || levels > 16)
    fail(Errc::invalid_range, "levels must be in [1, 16], got " +
                                  std::to_string(levels));
  const int step = 1 << levels;
  const int ph = round_up(image.height, step);
  const int pw = round_up(image.width, step);
  const int support = static_cast<int>(kDb4Lo.size());
  if (ph < support || pw < support)
    fail(Errc::image_too_small,
         "padded size " + std::to_string(ph) + "x" + std::to_string(pw) +
             " is below the filter support " + std::to_string(support));

  WaveletPyramid pyr;
  pyr.levels = levels;
  pyr.height = image.height;
  pyr.width = image.width;
  pyr.channels = image.channels;
  pyr.padded_height = ph;
  pyr.padded_width = pw;

  // Block table in scale order, coarsest first.
  {
    int bh = ph >> levels, bw = pw >> levels;
    size_t offset = 0;
    auto push = [&](const std::string& name, int h, int w) {
      pyr.blocks.push_back({name, h, w, offset});
      offset += static_cast<size_t>(h) * w * image.channels;
    };
    push("cA" + std::to_string(levels), bh, bw);
    for (int l = levels; l >= 1; --l) {
      int lh = ph >> l, lw = pw >> l;
      push("cH" + std::to_string(l), lh, lw);
      push("cV" + std::to_string(l), lh, lw);
      push("cD" + std::to_string(l), lh, lw);
    }
    pyr.coeff.assign(offset, 0.0);
  }

  std::vector<double> grid(static_cast<size_t>(ph) * pw);
  for (int c = 0; c < image.channels; ++c) {
    // Periodic wrap padding keeps the boundary model consistent with the
    // transform's extension.
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        grid[static_cast<size_t>(y) * pw + x] =
            image.at(y % image.height, x % image.width, c);

    int cur_h = ph, cur_w = pw;
    for (int l = 1; l <= levels; ++l) {
      level_forward(grid, pw, cur_h, cur_w);
      cur_h /= 2;
      cur_w /= 2;
      // Quadrant layout after this step: LL in [0,cur_h)x[0,cur_w),
      // HL below, LH right, HH corner. cH carries the detail along
      // height, cV along width.
      size_t base = 1 + 3 * static_cast<size_t>(levels - l);
      const WaveletPyramid::Block& bh = pyr.blocks[base];
      const WaveletPyramid::Block& bv = pyr.blocks[base + 1];
      const WaveletPyramid::Block& bd = pyr.blocks[base + 2];
      for (int y = 0; y < cur_h; ++y)
        for (int x = 0; x < cur_w; ++x) {
          size_t cell = (static_cast<size_t>(y) * cur_w + x) * image.channels +
                        static_cast<size_t>(c);
          pyr.coeff[bh.offset + cell] =
              grid[static_cast<size_t>(y + cur_h) * pw + x];
          pyr.coeff[bv.offset + cell] =
              grid[static_cast<size_t>(y) * pw + (x + cur_w)];
          pyr.coeff[bd.offset + cell] =
              grid[static_cast<size_t>(y + cur_h) * pw + (x + cur_w)];
        }
    }
    const WaveletPyramid::Block& ba = pyr.blocks[0];
    for (int y = 0; y < cur_h; ++y)
      for (int x = 0; x < cur_w; ++x)
        pyr.coeff[ba.offset +
                  (static_cast<size_t>(y) * cur_w + x) * image.channels + c] =
            grid[static_cast<size_t>(y) * pw + x];
  }
  return pyr;
}

TensorImage idwt2(const WaveletPyramid& pyr) {
  if (pyr.levels < 1 || pyr.blocks.size() != 1 + 3 * static_cast<size_t>(pyr.levels))
    fail(Errc::dimension_mismatch, "pyramid block table inconsistent");
  size_t total = 0;
  for (size_t b = 0; b < pyr.blocks.size(); ++b) total += pyr.block_elements(b);
  if (pyr.coeff.size() != total)
    fail(Errc::dimension_mismatch, "pyramid coefficient size mismatch");

  const int ph = pyr.padded_height, pw = pyr.padded_width;
  TensorImage img(pyr.height, pyr.width, pyr.channels);
  std::vector<double> grid(static_cast<size_t>(ph) * pw);

  for (int c = 0; c < pyr.channels; ++c) {
    int cur_h = ph >> pyr.levels, cur_w = pw >> pyr.levels;
    const WaveletPyramid::Block& ba = pyr.blocks[0];
    for (int y = 0; y < cur_h; ++y)
      for (int x = 0; x < cur_w; ++x)
        grid[static_cast<size_t>(y) * pw + x] =
            pyr.coeff[ba.offset +
                      (static_cast<size_t>(y) * cur_w + x) * pyr.channels + c];

    for (int l = pyr.levels; l >= 1; --l) {
      size_t base = 1 + 3 * static_cast<size_t>(pyr.levels - l);
      const WaveletPyramid::Block& bh = pyr.blocks[base];
      const WaveletPyramid::Block& bv = pyr.blocks[base + 1];
      const WaveletPyramid::Block& bd = pyr.blocks[base + 2];
      for (int y = 0; y < cur_h; ++y)
        for (int x = 0; x < cur_w; ++x) {
          size_t cell = (static_cast<size_t>(y) * cur_w + x) * pyr.channels +
                        static_cast<size_t>(c);
          grid[static_cast<size_t>(y + cur_h) * pw + x] =
              pyr.coeff[bh.offset + cell];
          grid[static_cast<size_t>(y) * pw + (x + cur_w)] =
              pyr.coeff[bv.offset + cell];
          grid[static_cast<size_t>(y + cur_h) * pw + (x + cur_w)] =
              pyr.coeff[bd.offset + cell];
        }
      level_inverse(grid, pw, cur_h * 2, cur_w * 2);
      cur_h *= 2;
      cur_w *= 2;
    }

    for (int y = 0; y < pyr.height; ++y)
      for (int x = 0; x < pyr.width; ++x)
        img.at(y, x, c) = grid[static_cast<size_t>(y) * pw + x];
  }
  return img;
}

}  // namespace specband
