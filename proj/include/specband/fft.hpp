#pragma once

#include <complex>
#include <vector>

#include "specband/types.hpp"

namespace specband {

using cplx = std::complex<double>;

// In-place complex FFT of arbitrary length (radix-2 when the length is a
// power of two, Bluestein otherwise). sign = -1 forward, +1 inverse.
// No normalization is applied here; callers pick the convention.
void fft_inplace(std::vector<cplx>& data, int sign);

// Per-channel 2-D spectrum of an image, stored row-major like the spatial
// layout: coeff(u, v, c) = spectrum[(u * width + v) * channels + c].
struct DftSpectrum {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<cplx> coeff;

  cplx& at(int u, int v, int c) {
    return coeff[(static_cast<size_t>(u) * width + v) * channels + c];
  }
  const cplx& at(int u, int v, int c) const {
    return coeff[(static_cast<size_t>(u) * width + v) * channels + c];
  }
};

// Orthonormal 2-D DFT: both directions carry 1/sqrt(height*width) so that
// spatial and spectral energies match.
DftSpectrum dft2(const TensorImage& image);
TensorImage idft2(const DftSpectrum& spectrum);

// Signed frequency index for row-major bin k of an axis of length n:
// 0..n/2 map to themselves, the rest to k - n.
inline int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace specband
