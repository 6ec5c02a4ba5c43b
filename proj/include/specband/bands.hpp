#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "specband/spectrum.hpp"
#include "specband/types.hpp"

namespace specband {

enum class Basis { pca, fourier, wavelet };
enum class FilterKind { full, low, high, band, scale, random };
enum class Smoothing { box, butterworth };

const char* basis_name(Basis b);

// A filter over basis indices: PCA component indices, Fourier radial
// frequencies, or wavelet scale-block indices. `band` is the half-open
// range [a, b). Canonical text form, e.g. "fourier:band:30:45:butterworth5",
// "pca:low:500", "wavelet:scale:5"; parsing and printing round-trip.
struct BandSpec {
  Basis basis = Basis::pca;
  FilterKind filter = FilterKind::full;
  double a = 0.0;
  double b = 0.0;
  std::vector<std::pair<double, double>> random_bands;  // (center, width)
  Smoothing smoothing = Smoothing::box;
  int order = 5;

  bool operator==(const BandSpec& other) const = default;

  static BandSpec full(Basis basis);
  static BandSpec low_pass(Basis basis, double index);
  static BandSpec high_pass(Basis basis, double index);
  static BandSpec band_pass(Basis basis, double index, double width);
  static BandSpec range(Basis basis, double lo, double hi);
  static BandSpec scale(double index);
  static BandSpec random_union(
      Basis basis, std::vector<std::pair<double, double>> bands);
};

BandSpec parse_band_spec(const std::string& text);
std::string to_string(const BandSpec& spec);

Smoothing default_smoothing(Basis basis);

// Box membership and smoothed gain of the filter at index/radius r.
bool box_passes(const BandSpec& spec, double r);
double smooth_gain(const BandSpec& spec, double r);

// Everything needed to project onto bands of one basis: shape, the fitted
// PCA spectrum, wavelet levels, and per-index power accounting.
struct BasisData {
  Basis basis = Basis::pca;
  int height = 0;
  int width = 0;
  int channels = 0;
  int levels = 2;                                   // wavelet
  std::shared_ptr<CovarianceSpectrum> spectrum;     // pca
  std::vector<double> power;  // pca: eigenvalues; fourier: per-bin mean
                              // power; wavelet: per-block mean energy

  size_t dim() const {
    return static_cast<size_t>(height) * width * channels;
  }
};

BasisData fit_basis(const std::vector<TensorImage>& samples, Basis basis,
                    int levels = 2, int max_dimension = 16384);

struct BandStats {
  size_t feature_count = 0;
  double power_fraction = 0.0;
};

BandStats band_stats(const BandSpec& spec, const BasisData& basis);

TensorImage project_band(const TensorImage& image, const BandSpec& spec,
                         const BasisData& basis);

LabeledDataset project_dataset(const LabeledDataset& dataset,
                               const BandSpec& spec, const BasisData& basis);

// Largest meaningful index of the spec's band axis: d-1 for PCA, the
// max radius for Fourier, block count - 1 for wavelet.
double max_band_index(const BasisData& basis);

}  // namespace specband
