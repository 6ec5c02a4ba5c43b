#include "specband/bands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "specband/fft.hpp"
#include "specband/masks.hpp"
#include "specband/parallel.hpp"
#include "specband/wavelet.hpp"

namespace specband {

namespace {

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double parse_number(const std::string& tok, const std::string& text) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    fail(Errc::invalid_band_spec, "bad number '" + tok + "' in '" + text + "'");
  }
  if (pos != tok.size())
    fail(Errc::invalid_band_spec, "bad number '" + tok + "' in '" + text + "'");
  if (!std::isfinite(v))
    fail(Errc::invalid_band_spec, "non-finite number in '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

void check_shape(const BandSpec& spec, const BasisData& basis) {
  if (spec.basis != basis.basis)
    fail(Errc::basis_shape_mismatch,
         std::string("spec basis ") + basis_name(spec.basis) +
             " does not match fitted basis " + basis_name(basis.basis));
}

void check_image(const TensorImage& image, const BasisData& basis) {
  if (image.height != basis.height || image.width != basis.width ||
      image.channels != basis.channels)
    fail(Errc::basis_shape_mismatch,
         "image " + std::to_string(image.height) + "x" +
             std::to_string(image.width) + "x" +
             std::to_string(image.channels) + " does not match basis " +
             std::to_string(basis.height) + "x" + std::to_string(basis.width) +
             "x" + std::to_string(basis.channels));
}

double band_gain_butterworth(double r, double lo, double hi, int order) {
  if (hi <= 0) return 0.0;
  double g = butterworth_gain(r, hi, order, PassKind::low);
  if (lo > 0) g *= butterworth_gain(r, lo, order, PassKind::high);
  return g;
}

}  // namespace

const char* basis_name(Basis b) {
  switch (b) {
    case Basis::pca: return "pca";
    case Basis::fourier: return "fourier";
    case Basis::wavelet: return "wavelet";
  }
  return "?";
}

Smoothing default_smoothing(Basis basis) {
  return basis == Basis::fourier ? Smoothing::butterworth : Smoothing::box;
}

BandSpec BandSpec::full(Basis basis) {
  BandSpec s;
  s.basis = basis;
  s.filter = FilterKind::full;
  s.smoothing = default_smoothing(basis);
  return s;
}

BandSpec BandSpec::low_pass(Basis basis, double index) {
  BandSpec s = full(basis);
  s.filter = FilterKind::low;
  s.a = index;
  return s;
}

BandSpec BandSpec::high_pass(Basis basis, double index) {
  BandSpec s = full(basis);
  s.filter = FilterKind::high;
  s.a = index;
  return s;
}

BandSpec BandSpec::range(Basis basis, double lo, double hi) {
  if (hi < lo) fail(Errc::invalid_band_spec, "band range needs lo <= hi");
  BandSpec s = full(basis);
  s.filter = FilterKind::band;
  s.a = lo;
  s.b = hi;
  return s;
}

BandSpec BandSpec::band_pass(Basis basis, double index, double width) {
  if (width < 1) fail(Errc::invalid_band_spec, "band width must be >= 1");
  return range(basis, index, index + width);
}

BandSpec BandSpec::scale(double index) {
  BandSpec s = full(Basis::wavelet);
  s.filter = FilterKind::scale;
  s.a = index;
  return s;
}

BandSpec BandSpec::random_union(
    Basis basis, std::vector<std::pair<double, double>> bands) {
  if (bands.empty()) fail(Errc::empty_band_list, "random union needs bands");
  BandSpec s = full(basis);
  s.filter = FilterKind::random;
  s.random_bands = std::move(bands);
  return s;
}

BandSpec parse_band_spec(const std::string& text) {
  std::vector<std::string> tok = split(text, ':');
  if (tok.size() < 2)
    fail(Errc::invalid_band_spec, "expected basis:filter[...], got '" + text +
                                      "'");

  BandSpec s;
  if (tok[0] == "pca")
    s.basis = Basis::pca;
  else if (tok[0] == "fourier")
    s.basis = Basis::fourier;
  else if (tok[0] == "wavelet")
    s.basis = Basis::wavelet;
  else
    fail(Errc::invalid_band_spec, "unknown basis '" + tok[0] + "'");

  // Optional trailing smoothing token.
  s.smoothing = default_smoothing(s.basis);
  size_t last = tok.size();
  if (tok.back() == "box") {
    s.smoothing = Smoothing::box;
    --last;
  } else if (tok.back().rfind("butterworth", 0) == 0) {
    s.smoothing = Smoothing::butterworth;
    std::string rest = tok.back().substr(11);
    s.order = rest.empty()
                  ? 5
                  : static_cast<int>(parse_number(rest, text));
    if (s.order < 1)
      fail(Errc::invalid_band_spec, "butterworth order must be >= 1");
    --last;
  }

  const std::string& f = tok[1];
  size_t args = last - 2;
  auto need = [&](size_t n) {
    if (args != n)
      fail(Errc::invalid_band_spec, "filter '" + f + "' takes " +
                                        std::to_string(n) + " arguments in '" +
                                        text + "'");
  };
  if (f == "full") {
    need(0);
    s.filter = FilterKind::full;
  } else if (f == "low") {
    need(1);
    s.filter = FilterKind::low;
    s.a = parse_number(tok[2], text);
  } else if (f == "high") {
    need(1);
    s.filter = FilterKind::high;
    s.a = parse_number(tok[2], text);
  } else if (f == "band") {
    need(2);
    s.filter = FilterKind::band;
    s.a = parse_number(tok[2], text);
    s.b = parse_number(tok[3], text);
    if (s.b < s.a)
      fail(Errc::invalid_band_spec, "band range needs lo <= hi in '" + text +
                                        "'");
  } else if (f == "scale") {
    need(1);
    if (s.basis != Basis::wavelet)
      fail(Errc::invalid_band_spec, "scale filter is wavelet-only");
    s.filter = FilterKind::scale;
    s.a = parse_number(tok[2], text);
  } else if (f == "random") {
    if (args < 1)
      fail(Errc::empty_band_list, "random union needs at least one CxW pair");
    s.filter = FilterKind::random;
    for (size_t i = 2; i < last; ++i) {
      std::vector<std::string> pair = split(tok[i], 'x');
      if (pair.size() != 2)
        fail(Errc::invalid_band_spec, "expected CxW pair, got '" + tok[i] +
                                          "'");
      double c = parse_number(pair[0], text);
      double w = parse_number(pair[1], text);
      if (c <= 0 || w <= 0)
        fail(Errc::invalid_band_spec, "band center and width must be > 0");
      s.random_bands.emplace_back(c, w);
    }
  } else {
    fail(Errc::invalid_band_spec, "unknown filter '" + f + "'");
  }
  if (s.a < 0 || s.b < 0)
    fail(Errc::invalid_band_spec, "indices must be >= 0 in '" + text + "'");
  return s;
}

std::string to_string(const BandSpec& spec) {
  std::string out = basis_name(spec.basis);
  switch (spec.filter) {
    case FilterKind::full: out += ":full"; break;
    case FilterKind::low: out += ":low:" + format_number(spec.a); break;
    case FilterKind::high: out += ":high:" + format_number(spec.a); break;
    case FilterKind::band:
      out += ":band:" + format_number(spec.a) + ":" + format_number(spec.b);
      break;
    case FilterKind::scale: out += ":scale:" + format_number(spec.a); break;
    case FilterKind::random:
      out += ":random";
      for (const auto& [c, w] : spec.random_bands)
        out += ":" + format_number(c) + "x" + format_number(w);
      break;
  }
  if (spec.smoothing == Smoothing::butterworth)
    out += ":butterworth" + std::to_string(spec.order);
  else if (default_smoothing(spec.basis) != Smoothing::box)
    out += ":box";
  return out;
}

bool box_passes(const BandSpec& spec, double r) {
  switch (spec.filter) {
    case FilterKind::full: return true;
    case FilterKind::low: return r < spec.a;
    case FilterKind::high: return r >= spec.a;
    case FilterKind::band: return r >= spec.a && r < spec.b;
    case FilterKind::scale: return r >= spec.a && r < spec.a + 1;
    case FilterKind::random:
      for (const auto& [c, w] : spec.random_bands)
        if (r >= c - w / 2.0 && r < c + w / 2.0) return true;
      return false;
  }
  return false;
}

double smooth_gain(const BandSpec& spec, double r) {
  if (spec.smoothing == Smoothing::box) return box_passes(spec, r) ? 1.0 : 0.0;
  switch (spec.filter) {
    case FilterKind::full: return 1.0;
    case FilterKind::low:
      return spec.a <= 0
                 ? 0.0
                 : butterworth_gain(r, spec.a, spec.order, PassKind::low);
    case FilterKind::high:
      return spec.a <= 0
                 ? 1.0
                 : butterworth_gain(r, spec.a, spec.order, PassKind::high);
    case FilterKind::band:
      return band_gain_butterworth(r, spec.a, spec.b, spec.order);
    case FilterKind::scale:
      return band_gain_butterworth(r, spec.a, spec.a + 1, spec.order);
    case FilterKind::random: {
      double g = 0.0;
      for (const auto& [c, w] : spec.random_bands)
        g = std::max(g, band_gain_butterworth(r, c - w / 2.0, c + w / 2.0,
                                              spec.order));
      return g;
    }
  }
  return 0.0;
}

BasisData fit_basis(const std::vector<TensorImage>& samples, Basis basis,
                    int levels, int max_dimension) {
  if (samples.empty()) fail(Errc::empty_dataset, "no samples");
  BasisData data;
  data.basis = basis;
  data.height = samples.front().height;
  data.width = samples.front().width;
  data.channels = samples.front().channels;
  data.levels = levels;

  switch (basis) {
    case Basis::pca: {
      data.spectrum = std::make_shared<CovarianceSpectrum>(
          fit_pca(samples, max_dimension));
      data.power.assign(data.spectrum->eigenvalues.data(),
                        data.spectrum->eigenvalues.data() +
                            data.spectrum->eigenvalues.size());
      break;
    }
    case Basis::fourier: {
      size_t bins = static_cast<size_t>(data.height) * data.width;
      data.power.assign(bins, 0.0);
      for (const TensorImage& img : samples) {
        if (img.height != data.height || img.width != data.width ||
            img.channels != data.channels)
          fail(Errc::dimension_mismatch, "samples have mixed shapes");
        DftSpectrum s = dft2(img);
        for (size_t b = 0; b < bins; ++b)
          for (int c = 0; c < data.channels; ++c)
            data.power[b] += std::norm(s.coeff[b * data.channels + c]);
      }
      for (double& p : data.power) p /= static_cast<double>(samples.size());
      break;
    }
    case Basis::wavelet: {
      WaveletPyramid first = dwt2(samples.front(), levels);
      data.power.assign(first.block_count(), 0.0);
      for (const TensorImage& img : samples) {
        if (img.height != data.height || img.width != data.width ||
            img.channels != data.channels)
          fail(Errc::dimension_mismatch, "samples have mixed shapes");
        WaveletPyramid pyr = dwt2(img, levels);
        for (size_t b = 0; b < pyr.block_count(); ++b) {
          double e = 0.0;
          size_t n = pyr.block_elements(b);
          for (size_t i = 0; i < n; ++i) {
            double v = pyr.coeff[pyr.blocks[b].offset + i];
            e += v * v;
          }
          data.power[b] += e;
        }
      }
      for (double& p : data.power) p /= static_cast<double>(samples.size());
      break;
    }
  }
  return data;
}

double max_band_index(const BasisData& basis) {
  switch (basis.basis) {
    case Basis::pca: return static_cast<double>(basis.dim()) - 1.0;
    case Basis::fourier: {
      double mu = basis.height / 2;
      double mv = basis.width / 2;
      return std::sqrt(mu * mu + mv * mv);
    }
    case Basis::wavelet: return 3.0 * basis.levels;
  }
  return 0.0;
}

BandStats band_stats(const BandSpec& spec, const BasisData& basis) {
  check_shape(spec, basis);
  BandStats st;
  double selected_power = 0.0;
  double total_power = 0.0;

  switch (basis.basis) {
    case Basis::pca: {
      for (size_t i = 0; i < basis.power.size(); ++i) {
        total_power += basis.power[i];
        if (box_passes(spec, static_cast<double>(i))) {
          ++st.feature_count;
          selected_power += basis.power[i];
        }
      }
      break;
    }
    case Basis::fourier: {
      for (int u = 0; u < basis.height; ++u)
        for (int v = 0; v < basis.width; ++v) {
          double p = basis.power[static_cast<size_t>(u) * basis.width + v];
          total_power += p;
          if (box_passes(spec,
                         frequency_radius(u, v, basis.height, basis.width))) {
            st.feature_count += static_cast<size_t>(basis.channels);
            selected_power += p;
          }
        }
      break;
    }
    case Basis::wavelet: {
      TensorImage probe(basis.height, basis.width, basis.channels);
      WaveletPyramid pyr = dwt2(probe, basis.levels);
      for (size_t b = 0; b < pyr.block_count(); ++b) {
        total_power += basis.power[b];
        if (box_passes(spec, static_cast<double>(b))) {
          st.feature_count += pyr.block_elements(b);
          selected_power += basis.power[b];
        }
      }
      break;
    }
  }
  st.power_fraction = total_power > 0 ? selected_power / total_power : 0.0;
  return st;
}

TensorImage project_band(const TensorImage& image, const BandSpec& spec,
                         const BasisData& basis) {
  check_shape(spec, basis);
  check_image(image, basis);

  switch (basis.basis) {
    case Basis::pca: {
      if (!basis.spectrum)
        fail(Errc::basis_shape_mismatch, "PCA basis data has no spectrum");
      const CovarianceSpectrum& sp = *basis.spectrum;
      if (static_cast<size_t>(sp.dim()) != basis.dim())
        fail(Errc::basis_shape_mismatch, "spectrum dimension mismatch");
      Eigen::VectorXd xc = flatten(image) - sp.mean;
      Eigen::VectorXd coefs = sp.eigenvectors.transpose() * xc;
      for (Eigen::Index i = 0; i < coefs.size(); ++i)
        coefs(i) *= smooth_gain(spec, static_cast<double>(i));
      Eigen::VectorXd y = sp.eigenvectors * coefs + sp.mean;
      return unflatten(y, basis.height, basis.width, basis.channels);
    }
    case Basis::fourier: {
      DftSpectrum s = dft2(image);
      for (int u = 0; u < s.height; ++u)
        for (int v = 0; v < s.width; ++v) {
          double g =
              smooth_gain(spec, frequency_radius(u, v, s.height, s.width));
          for (int c = 0; c < s.channels; ++c) s.at(u, v, c) *= g;
        }
      return idft2(s);
    }
    case Basis::wavelet: {
      WaveletPyramid pyr = dwt2(image, basis.levels);
      for (size_t b = 0; b < pyr.block_count(); ++b) {
        double g = smooth_gain(spec, static_cast<double>(b));
        size_t n = pyr.block_elements(b);
        for (size_t i = 0; i < n; ++i)
          pyr.coeff[pyr.blocks[b].offset + i] *= g;
      }
      return idwt2(pyr);
    }
  }
  fail(Errc::invalid_band_spec, "unreachable basis");
}

LabeledDataset project_dataset(const LabeledDataset& dataset,
                               const BandSpec& spec, const BasisData& basis) {
  dataset.validate();
  LabeledDataset out = dataset;
  parallel_for(dataset.samples.size(), [&](size_t i) {
    out.samples[i] = project_band(dataset.samples[i], spec, basis);
  });
  return out;
}

}  // namespace specband
