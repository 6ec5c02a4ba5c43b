#include "specband/fft.hpp"

#include <cmath>
#include <numbers>

namespace specband {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_radix2(std::vector<cplx>& a, int sign) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Bluestein turns a length-n DFT into a convolution, evaluated with a
// power-of-two FFT of length >= 2n - 1.
void fft_bluestein(std::vector<cplx>& a, int sign) {
  const size_t n = a.size();
  const size_t m = next_pow2(2 * n - 1);

  std::vector<cplx> chirp(n);
  for (size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for large n.
    size_t k2 = (k * k) % (2 * n);
    double ang =
        sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }

  std::vector<cplx> u(m, cplx(0, 0)), v(m, cplx(0, 0));
  for (size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
  v[0] = std::conj(chirp[0]);
  for (size_t k = 1; k < n; ++k) v[k] = v[m - k] = std::conj(chirp[k]);

  fft_radix2(u, -1);
  fft_radix2(v, -1);
  for (size_t k = 0; k < m; ++k) u[k] *= v[k];
  fft_radix2(u, +1);
  double inv_m = 1.0 / static_cast<double>(m);
  for (size_t k = 0; k < n; ++k) a[k] = u[k] * inv_m * chirp[k];
}

// One FFT pass over every row of a height x width complex grid, then the
// caller transposes responsibilities by striding over columns.
void fft_rows(std::vector<cplx>& grid, int height, int width, int sign) {
  std::vector<cplx> row(static_cast<size_t>(width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x)
      row[static_cast<size_t>(x)] = grid[static_cast<size_t>(y) * width + x];
    fft_inplace(row, sign);
    for (int x = 0; x < width; ++x)
      grid[static_cast<size_t>(y) * width + x] = row[static_cast<size_t>(x)];
  }
}

void fft_cols(std::vector<cplx>& grid, int height, int width, int sign) {
  std::vector<cplx> col(static_cast<size_t>(height));
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y)
      col[static_cast<size_t>(y)] = grid[static_cast<size_t>(y) * width + x];
    fft_inplace(col, sign);
    for (int y = 0; y < height; ++y)
      grid[static_cast<size_t>(y) * width + x] = col[static_cast<size_t>(y)];
  }
}

}  // namespace

void fft_inplace(std::vector<cplx>& data, int sign) {
  const size_t n = data.size();
  if (n <= 1) return;
  if (is_pow2(n))
    fft_radix2(data, sign);
  else
    fft_bluestein(data, sign);
}

DftSpectrum dft2(const TensorImage& image) {
  image.validate();
  DftSpectrum s;
  s.height = image.height;
  s.width = image.width;
  s.channels = image.channels;
  s.coeff.resize(image.data.size());

  const double norm =
      1.0 / std::sqrt(static_cast<double>(image.height) * image.width);
  std::vector<cplx> grid(static_cast<size_t>(image.height) * image.width);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        grid[static_cast<size_t>(y) * image.width + x] =
            cplx(image.at(y, x, c), 0.0);
    fft_rows(grid, image.height, image.width, -1);
    fft_cols(grid, image.height, image.width, -1);
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        s.at(y, x, c) = grid[static_cast<size_t>(y) * image.width + x] * norm;
  }
  return s;
}

TensorImage idft2(const DftSpectrum& spectrum) {
  if (spectrum.height <= 0 || spectrum.width <= 0 || spectrum.channels <= 0)
    fail(Errc::dimension_mismatch, "spectrum has non-positive shape");
  if (spectrum.coeff.size() != static_cast<size_t>(spectrum.height) *
                                   spectrum.width * spectrum.channels)
    fail(Errc::dimension_mismatch, "spectrum buffer size mismatch");

  TensorImage img(spectrum.height, spectrum.width, spectrum.channels);
  const double norm =
      1.0 / std::sqrt(static_cast<double>(spectrum.height) * spectrum.width);
  std::vector<cplx> grid(static_cast<size_t>(spectrum.height) *
                         spectrum.width);
  for (int c = 0; c < spectrum.channels; ++c) {
    for (int y = 0; y < spectrum.height; ++y)
      for (int x = 0; x < spectrum.width; ++x)
        grid[static_cast<size_t>(y) * spectrum.width + x] =
            spectrum.at(y, x, c);
    fft_rows(grid, spectrum.height, spectrum.width, +1);
    fft_cols(grid, spectrum.height, spectrum.width, +1);
    for (int y = 0; y < spectrum.height; ++y)
      for (int x = 0; x < spectrum.width; ++x)
        img.at(y, x, c) =
            grid[static_cast<size_t>(y) * spectrum.width + x].real() * norm;
  }
  return img;
}

}  // namespace specband
