#pragma once

#include <utility>
#include <vector>

#include "specband/fft.hpp"
#include "specband/types.hpp"

namespace specband {

enum class MaskKind { box, butterworth, sinc, phase };

// Real gain per frequency bin of a height x width grid, row-major, shared
// across channels. Gains stay in [0, 1] and are conjugate-symmetric by
// construction (they depend on the signed-frequency radius only).
struct FrequencyMask {
  int height = 0;
  int width = 0;
  MaskKind kind = MaskKind::box;
  std::vector<double> gain;

  double& at(int u, int v) { return gain[static_cast<size_t>(u) * width + v]; }
  double at(int u, int v) const {
    return gain[static_cast<size_t>(u) * width + v];
  }
};

// Radius of bin (u, v) on the signed-frequency grid.
double frequency_radius(int u, int v, int height, int width);

// Box annulus i <= r < i+1.
FrequencyMask radial_band_mask(int height, int width, int index);

enum class PassKind { low, high };

// Scalar Butterworth gain at radius r. Low pass: 1/sqrt(1+(r/cutoff)^2o);
// high pass: reciprocal ratio, 0 at r = 0.
double butterworth_gain(double r, double cutoff, int order, PassKind kind);

FrequencyMask butterworth_mask(int height, int width, double cutoff,
                               int order, PassKind kind);
// Product of a high pass at `low_cut` and a low pass at `high_cut`.
FrequencyMask butterworth_band_mask(int height, int width, double low_cut,
                                    double high_cut, int order);

FrequencyMask sinc_mask(int height, int width, double k);

// Max over Butterworth band masks centered at the given radii.
FrequencyMask random_union_mask(int height, int width,
                                const std::vector<std::pair<double, double>>&
                                    center_width,
                                int order = 5);

// Box radial range [low, high) as a single mask.
FrequencyMask radial_range_mask(int height, int width, double low,
                                double high);

FrequencyMask full_mask(int height, int width);

// Elementwise application to a spectrum (every channel).
void apply_mask(DftSpectrum& spectrum, const FrequencyMask& mask);

// Filter a real image through a mask and return the real result. Checks
// that the imaginary residue stays small, as conjugate symmetry implies.
TensorImage filter_image(const TensorImage& image, const FrequencyMask& mask);

// Phase operator: inside the (hard 0-1) mask either zero the phase or keep
// it, always preserving amplitudes. With zero_phase=false and an all-ones
// mask this is the identity.
TensorImage phase_filter(const TensorImage& image, const FrequencyMask& mask,
                         bool zero_phase);

}  // namespace specband
