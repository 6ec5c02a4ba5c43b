#include "specband/masks.hpp"

#include <algorithm>
#include <cmath>

namespace specband {

namespace {

FrequencyMask make_mask(int height, int width, MaskKind kind) {
  if (height <= 0 || width <= 0)
    fail(Errc::dimension_mismatch, "mask grid must be positive");
  FrequencyMask m;
  m.height = height;
  m.width = width;
  m.kind = kind;
  m.gain.assign(static_cast<size_t>(height) * width, 0.0);
  return m;
}

template <typename Fn>
FrequencyMask radial_mask(int height, int width, MaskKind kind, Fn gain_of_r) {
  FrequencyMask m = make_mask(height, width, kind);
  for (int u = 0; u < height; ++u)
    for (int v = 0; v < width; ++v) {
      double g = gain_of_r(frequency_radius(u, v, height, width));
      m.at(u, v) = std::clamp(g, 0.0, 1.0);
    }
  return m;
}

double butterworth_low(double r, double cutoff, int order) {
  return 1.0 / std::sqrt(1.0 + std::pow(r / cutoff, 2.0 * order));
}

double butterworth_high(double r, double cutoff, int order) {
  if (r == 0.0) return 0.0;
  return 1.0 / std::sqrt(1.0 + std::pow(cutoff / r, 2.0 * order));
}

}  // namespace

double butterworth_gain(double r, double cutoff, int order, PassKind kind) {
  if (cutoff <= 0) fail(Errc::invalid_range, "cutoff must be > 0");
  return kind == PassKind::low ? butterworth_low(r, cutoff, order)
                               : butterworth_high(r, cutoff, order);
}

double frequency_radius(int u, int v, int height, int width) {
  double fu = signed_frequency(u, height);
  double fv = signed_frequency(v, width);
  return std::sqrt(fu * fu + fv * fv);
}

FrequencyMask radial_band_mask(int height, int width, int index) {
  if (index < 0) fail(Errc::invalid_range, "radial index must be >= 0");
  return radial_mask(height, width, MaskKind::box, [index](double r) {
    return (r >= index && r < index + 1) ? 1.0 : 0.0;
  });
}

FrequencyMask radial_range_mask(int height, int width, double low,
                                double high) {
  if (low < 0 || high < low)
    fail(Errc::invalid_range, "need 0 <= low <= high");
  return radial_mask(height, width, MaskKind::box, [low, high](double r) {
    return (r >= low && r < high) ? 1.0 : 0.0;
  });
}

FrequencyMask full_mask(int height, int width) {
  FrequencyMask m = make_mask(height, width, MaskKind::box);
  std::fill(m.gain.begin(), m.gain.end(), 1.0);
  return m;
}

FrequencyMask butterworth_mask(int height, int width, double cutoff,
                               int order, PassKind kind) {
  if (cutoff <= 0) fail(Errc::invalid_range, "cutoff must be > 0");
  if (order < 1) fail(Errc::invalid_range, "order must be >= 1");
  return radial_mask(height, width, MaskKind::butterworth,
                     [cutoff, order, kind](double r) {
                       return kind == PassKind::low
                                  ? butterworth_low(r, cutoff, order)
                                  : butterworth_high(r, cutoff, order);
                     });
}

FrequencyMask butterworth_band_mask(int height, int width, double low_cut,
                                    double high_cut, int order) {
  if (high_cut <= 0 || high_cut < low_cut)
    fail(Errc::invalid_range, "need 0 <= low_cut <= high_cut, high_cut > 0");
  return radial_mask(height, width, MaskKind::butterworth,
                     [low_cut, high_cut, order](double r) {
                       double g = butterworth_low(r, high_cut, order);
                       if (low_cut > 0) g *= butterworth_high(r, low_cut, order);
                       return g;
                     });
}

FrequencyMask sinc_mask(int height, int width, double k) {
  if (k <= 0) fail(Errc::invalid_range, "sinc frequency must be > 0");
  return radial_mask(height, width, MaskKind::sinc, [k](double r) {
    if (r == 0.0) return 1.0;
    return std::abs(std::sin(k * r) / (k * r));
  });
}

FrequencyMask random_union_mask(
    int height, int width,
    const std::vector<std::pair<double, double>>& center_width, int order) {
  if (center_width.empty())
    fail(Errc::empty_band_list, "random union needs at least one band");
  FrequencyMask m = make_mask(height, width, MaskKind::butterworth);
  for (const auto& [center, w] : center_width) {
    if (center <= 0 || w <= 0)
      fail(Errc::invalid_range, "band center and width must be > 0");
    double lo = center - w / 2.0;
    double hi = center + w / 2.0;
    FrequencyMask band = butterworth_band_mask(height, width,
                                               std::max(lo, 0.0), hi, order);
    for (size_t i = 0; i < m.gain.size(); ++i)
      m.gain[i] = std::max(m.gain[i], band.gain[i]);
  }
  return m;
}

void apply_mask(DftSpectrum& spectrum, const FrequencyMask& mask) {
  if (spectrum.height != mask.height || spectrum.width != mask.width)
    fail(Errc::dimension_mismatch, "mask grid does not match spectrum");
  for (int u = 0; u < spectrum.height; ++u)
    for (int v = 0; v < spectrum.width; ++v) {
      double g = mask.at(u, v);
      for (int c = 0; c < spectrum.channels; ++c) spectrum.at(u, v, c) *= g;
    }
}

TensorImage filter_image(const TensorImage& image, const FrequencyMask& mask) {
  DftSpectrum s = dft2(image);
  apply_mask(s, mask);
  return idft2(s);
}

TensorImage phase_filter(const TensorImage& image, const FrequencyMask& mask,
                         bool zero_phase) {
  if (image.height != mask.height || image.width != mask.width)
    fail(Errc::dimension_mismatch, "mask grid does not match image");
  DftSpectrum s = dft2(image);
  if (zero_phase) {
    for (int u = 0; u < s.height; ++u)
      for (int v = 0; v < s.width; ++v) {
        if (mask.at(u, v) < 0.5) continue;
        for (int c = 0; c < s.channels; ++c)
          s.at(u, v, c) = cplx(std::abs(s.at(u, v, c)), 0.0);
      }
  }
  return idft2(s);
}

}  // namespace specband
