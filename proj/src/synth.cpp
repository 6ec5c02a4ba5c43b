#include "specband/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "specband/fft.hpp"
#include "specband/rng.hpp"

namespace specband {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd random_orthonormal(int d, uint64_t seed) {
  auto eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = dist(eng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix the sign convention so the result is seed-deterministic only.
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

TensorImage image_from_vector(const Eigen::VectorXd& v, int height, int width,
                              int channels) {
  TensorImage img(height, width, channels);
  for (int i = 0; i < v.size(); ++i) img.data[static_cast<size_t>(i)] = v(i);
  return img;
}

}  // namespace

LabeledDataset synth_digits(const DigitsSpec& spec, uint64_t seed) {
  if (spec.n < 2 || spec.classes < 2)
    fail(Errc::invalid_range, "digits generator needs n >= 2 and >= 2 classes");
  const int d = spec.height * spec.width;
  const int kk = spec.classes;
  const int r = kk - 1;
  if (r > d)
    fail(Errc::invalid_range, "digits generator needs classes - 1 <= dims");
  Eigen::MatrixXd q = random_orthonormal(d, derive_seed(seed, 0x64696731));

  Eigen::VectorXd lambda(d);
  for (int j = 0; j < d; ++j) lambda(j) = std::pow(j + 1.0, -spec.lambda_decay);

  auto eng = make_engine(derive_seed(seed, 0x64696732));
  std::normal_distribution<double> dist(0.0, 1.0);

  // Class-mean frame: column j spans a random direction in class space and
  // claims fraction theta_j of the rank-j variance lambda_j.
  Eigen::MatrixXd frame(r, d);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < d; ++j) frame(i, j) = dist(eng);
  for (int j = 0; j < d; ++j) {
    double theta = std::min(0.85, spec.info_floor +
                                      spec.info_scale *
                                          std::exp(-j / spec.info_efold));
    frame.col(j) *= std::sqrt(theta * lambda(j)) / frame.col(j).norm();
  }

  // The within-class covariance diag(lambda) - frame^T frame must stay
  // positive definite; shrink the planted spread toward the feasible scale
  // when the requested fractions overshoot.
  auto min_residual_eig = [&](double scale) {
    Eigen::MatrixXd w = -scale * (frame.transpose() * frame);
    w.diagonal() += lambda;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
               w, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
  };
  if (min_residual_eig(1.0) < 1e-9) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 50; ++it) {
      double mid = 0.5 * (lo + hi);
      (min_residual_eig(mid) > 1e-9 ? lo : hi) = mid;
    }
    frame *= std::sqrt(lo * 0.98);
  }

  Eigen::MatrixXd within = -(frame.transpose() * frame);
  within.diagonal() += lambda;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(within);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd whalf = es.eigenvectors() *
                          ev.cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();

  // Helmert coordinates place the classes at orthonormal centered points, so
  // the between-class covariance is exactly frame^T frame.
  Eigen::MatrixXd helmert = Eigen::MatrixXd::Zero(kk, r);
  for (int c = 0; c < r; ++c) {
    for (int i = 0; i <= c; ++i) helmert(i, c) = 1.0;
    helmert(c + 1, c) = -(c + 1.0);
    helmert.col(c) /= helmert.col(c).norm();
  }
  Eigen::MatrixXd means = std::sqrt(double(kk)) * helmert * frame;

  LabeledDataset ds;
  ds.num_classes = kk;
  Eigen::VectorXd g(d);
  for (int i = 0; i < spec.n; ++i) {
    int label = i % kk;
    for (int j = 0; j < d; ++j) g(j) = dist(eng);
    Eigen::VectorXd coef = means.row(label).transpose() + whalf * g;
    ds.samples.push_back(
        image_from_vector(q * coef, spec.height, spec.width, 1));
    ds.labels.push_back(label);
  }
  return ds;
}

LabeledDataset synth_blobs(int n, double margin_sigmas, uint64_t seed) {
  if (n < 2) fail(Errc::invalid_range, "blobs generator needs n >= 2");
  const int d = 16;
  auto eng = make_engine(derive_seed(seed, 0x626c6f62));
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd dir(d);
  for (int j = 0; j < d; ++j) dir(j) = dist(eng);
  dir.normalize();

  LabeledDataset ds;
  ds.num_classes = 2;
  for (int i = 0; i < n; ++i) {
    int label = i % 2;
    double center = (label == 0 ? -0.5 : 0.5) * margin_sigmas;
    Eigen::VectorXd x(d);
    // Truncate the along-direction component at 2 sigma so a margin wider
    // than 4 sigma keeps the classes linearly separable.
    do {
      for (int j = 0; j < d; ++j) x(j) = dist(eng);
    } while (std::abs(x.dot(dir)) > 2.0);
    x += center * dir;
    ds.samples.push_back(image_from_vector(x, 4, 4, 1));
    ds.labels.push_back(label);
  }
  return ds;
}

namespace {

// Conjugate-pair representatives ordered by u^2 + silver*v^2 on the signed
// frequency grid; ties cannot occur because the ratio is irrational.
std::vector<std::pair<int, int>> pair_representatives(int height, int width) {
  const double silver = 1.0 + std::sqrt(2.0);
  std::vector<std::pair<int, int>> reps;
  for (int u = 0; u < height; ++u)
    for (int v = 0; v < width; ++v) {
      int nu = (height - u) % height;
      int nv = (width - v) % width;
      if (std::make_pair(nu, nv) < std::make_pair(u, v)) continue;
      reps.emplace_back(u, v);
    }
  std::sort(reps.begin(), reps.end(), [&](const auto& a, const auto& b) {
    double fa = signed_frequency(a.first, height);
    double fb = signed_frequency(a.second, width);
    double ga = signed_frequency(b.first, height);
    double gb = signed_frequency(b.second, width);
    double ka = fa * fa + silver * fb * fb;
    double kb = ga * ga + silver * gb * gb;
    if (ka != kb) return ka < kb;
    return a < b;
  });
  return reps;
}

}  // namespace

std::vector<TensorImage> synth_circulant(int n, int height, int width,
                                         double ratio, uint64_t seed) {
  if (n < 1) fail(Errc::invalid_range, "need at least one sample");
  if (ratio <= 0.0 || ratio >= 1.0)
    fail(Errc::invalid_range, "amplitude ratio must lie in (0, 1)");

  auto reps = pair_representatives(height, width);
  Eigen::MatrixXd amplitude = Eigen::MatrixXd::Zero(height, width);
  for (size_t rank = 0; rank < reps.size(); ++rank) {
    auto [u, v] = reps[rank];
    double a = std::pow(ratio, static_cast<double>(rank));
    amplitude(u, v) = a;
    amplitude((height - u) % height, (width - v) % width) = a;
  }

  auto eng = make_engine(derive_seed(seed, 0x63697263));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<TensorImage> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    DftSpectrum spec;
    spec.height = height;
    spec.width = width;
    spec.channels = 1;
    spec.coeff.assign(static_cast<size_t>(height) * width, cplx{0.0, 0.0});
    for (auto [u, v] : reps) {
      int nu = (height - u) % height;
      int nv = (width - v) % width;
      double a = amplitude(u, v);
      if (nu == u && nv == v) {
        spec.at(u, v, 0) = cplx{a * dist(eng), 0.0};
      } else {
        cplx z{dist(eng) / std::sqrt(2.0), dist(eng) / std::sqrt(2.0)};
        spec.at(u, v, 0) = a * z;
        spec.at(nu, nv, 0) = a * std::conj(z);
      }
    }
    out.push_back(idft2(spec));
  }
  return out;
}

std::vector<TensorImage> synth_spiked(int n, int height, int width,
                                      const std::vector<double>& spikes,
                                      double bulk_sigma, uint64_t seed) {
  const int d = height * width;
  if (static_cast<int>(spikes.size()) > d)
    fail(Errc::invalid_range, "more spikes than dimensions");
  Eigen::MatrixXd q = random_orthonormal(d, derive_seed(seed, 0x7370696b));
  auto eng = make_engine(derive_seed(seed, 0x7370696c));
  std::normal_distribution<double> dist(0.0, 1.0);

  std::vector<TensorImage> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = bulk_sigma * dist(eng);
    for (size_t s = 0; s < spikes.size(); ++s)
      x += std::sqrt(spikes[s]) * dist(eng) * q.col(static_cast<int>(s));
    out.push_back(image_from_vector(x, height, width, 1));
  }
  return out;
}

TensorImage synth_flat(int height, int width, int channels, double level) {
  TensorImage img(height, width, channels);
  std::fill(img.data.begin(), img.data.end(), level);
  return img;
}

TensorImage synth_texture(int height, int width, int channels, uint64_t seed) {
  auto eng = make_engine(derive_seed(seed, 0x74657874));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> freq(0.2, 1.6);
  std::uniform_real_distribution<double> amp(0.4, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);

  TensorImage img(height, width, channels);
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 4; ++k) {
      double a = amp(eng), f = freq(eng), th = angle(eng), ph = phase(eng);
      double fy = f * std::sin(th) / height;
      double fx = f * std::cos(th) / width;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          img.at(y, x, c) +=
              a * std::sin(2.0 * kPi * (fy * y + fx * x) + ph);
    }
  }
  return img;
}

void add_awgn(TensorImage& image, double sigma, uint64_t seed) {
  auto eng = make_engine(derive_seed(seed, 0x6e6f6973));
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& v : image.data) v += dist(eng);
}

LabeledDataset synth_flow_pairs(int n, int height, int width, uint64_t seed) {
  if (n < 1) fail(Errc::invalid_range, "need at least one sample");
  auto eng = make_engine(derive_seed(seed, 0x666c6f77));
  std::uniform_int_distribution<int> shift(-2, 2);

  LabeledDataset ds;
  for (int i = 0; i < n; ++i) {
    TensorImage texture =
        synth_texture(height, width, 1, derive_seed(seed, 0x74657831, i));
    int dx = shift(eng);
    int dy = shift(eng);

    TensorImage pair(height, width, 2);
    DenseTarget target;
    target.values = TensorImage(height, width, 2);
    target.valid.assign(static_cast<size_t>(height) * width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        pair.at(y, x, 0) = texture.at(y, x, 0);
        int sy = ((y - dy) % height + height) % height;
        int sx = ((x - dx) % width + width) % width;
        pair.at(y, x, 1) = texture.at(sy, sx, 0);
        target.values.at(y, x, 0) = dx;
        target.values.at(y, x, 1) = dy;
        if (y < height / 4 && x < width / 4)
          target.valid[static_cast<size_t>(y) * width + x] = 0;
      }
    ds.samples.push_back(std::move(pair));
    ds.dense.push_back(std::move(target));
  }
  return ds;
}

LabeledDataset synth_depth_scenes(int n, int height, int width,
                                  uint64_t seed) {
  if (n < 1) fail(Errc::invalid_range, "need at least one sample");
  LabeledDataset ds;
  for (int i = 0; i < n; ++i) {
    TensorImage depth =
        synth_texture(height, width, 1, derive_seed(seed, 0x64657031, i));
    TensorImage shading(height, width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double gx = 0.5 * (depth.at(y, (x + 1) % width, 0) -
                           depth.at(y, (x - 1 + width) % width, 0));
        double gy = 0.5 * (depth.at((y + 1) % height, x, 0) -
                           depth.at((y - 1 + height) % height, x, 0));
        shading.at(y, x, 0) = 0.8 * gx + 0.6 * gy;
      }

    DenseTarget target;
    target.values = depth;
    target.valid.assign(static_cast<size_t>(height) * width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (y == 0 || x == 0 || y == height - 1 || x == width - 1)
          target.valid[static_cast<size_t>(y) * width + x] = 0;
    ds.samples.push_back(std::move(shading));
    ds.dense.push_back(std::move(target));
  }
  return ds;
}

SlowFastSignal synth_slow_fast(int frames, double slow_hz, double fast_hz,
                               double rate_hz, uint64_t seed) {
  if (frames < 4) fail(Errc::invalid_range, "need at least 4 frames");
  if (slow_hz >= fast_hz)
    fail(Errc::invalid_range, "slow frequency must be below the fast one");
  auto eng = make_engine(derive_seed(seed, 0x736c6f77));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double p1 = phase(eng), p2 = phase(eng);

  SlowFastSignal out;
  out.slow.resize(frames);
  out.fast.resize(frames);
  for (int t = 0; t < frames; ++t) {
    double tau = t / rate_hz;
    out.slow(t) = std::sin(2.0 * kPi * slow_hz * tau + p1);
    out.fast(t) = std::sin(2.0 * kPi * fast_hz * tau + p2);
  }
  Eigen::Matrix2d mix;
  mix << 1.0, 0.8, 0.6, -1.0;
  out.mixed.resize(frames, 2);
  out.mixed.col(0) = mix(0, 0) * out.slow + mix(0, 1) * out.fast;
  out.mixed.col(1) = mix(1, 0) * out.slow + mix(1, 1) * out.fast;
  return out;
}

AudioPairData synth_audio_pair(int clips, int samples, double sample_rate,
                               uint64_t seed) {
  if (clips < 2 || samples < 64)
    fail(Errc::invalid_range, "need >= 2 clips of >= 64 samples");
  AudioPairData out;
  out.sample_rate = sample_rate;

  // Clips are noiseless on purpose: additive broadband noise would be blown
  // up to unit variance by the per-channel normalization in the cochlear
  // front end, flooding the out-of-band channels of each class with fast
  // energy. Variability comes from the random cross-fade and carrier phases.
  auto make_clip = [&](double lo_hz, double hi_hz, uint64_t clip_seed) {
    auto eng = make_engine(clip_seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    double p_alt = phase(eng), p_lo = phase(eng), p_hi = phase(eng);
    std::vector<double> clip(static_cast<size_t>(samples));
    for (int t = 0; t < samples; ++t) {
      double tau = t / sample_rate;
      double c = std::cos(kPi * 2.0 * tau + p_alt);
      double e_lo = c * c;
      clip[static_cast<size_t>(t)] =
          e_lo * std::sin(2.0 * kPi * lo_hz * tau + p_lo) +
          (1.0 - e_lo) * std::sin(2.0 * kPi * hi_hz * tau + p_hi);
    }
    return clip;
  };

  for (int i = 0; i < clips; ++i) {
    out.first.push_back(
        make_clip(900.0, 1800.0, derive_seed(seed, 0x61756431, i)));
    out.second.push_back(
        make_clip(3400.0, 5600.0, derive_seed(seed, 0x61756432, i)));
  }
  return out;
}

}  // namespace specband
