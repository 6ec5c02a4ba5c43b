#include "specband/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "specband/fft.hpp"
#include "specband/parallel.hpp"
#include "specband/rng.hpp"

namespace specband {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kErbQ = 9.26449;
constexpr double kErbMin = 24.7;
constexpr double kGammatoneB = 1.019;

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_rate_inverse(double rate) {
  return (std::pow(10.0, rate / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double hz) { return kErbMin + hz / kErbQ; }

GammatoneBank gammatone_bank(double sample_rate, int n, double f_lo,
                             double f_hi) {
  if (sample_rate <= 0.0)
    fail(Errc::invalid_range, "sample rate must be positive");
  if (n < 1) fail(Errc::invalid_range, "filter count must be >= 1");
  if (f_lo <= 0.0 || f_hi <= f_lo)
    fail(Errc::invalid_range, "need 0 < f_lo < f_hi");

  GammatoneBank bank;
  bank.sample_rate = sample_rate;
  const double nyquist = 0.5 * sample_rate;
  const double r_lo = erb_rate(f_lo);
  const double r_hi = erb_rate(f_hi);

  for (int i = 0; i < n; ++i) {
    double rate = n == 1 ? r_lo : r_lo + (r_hi - r_lo) * i / (n - 1.0);
    double cf = erb_rate_inverse(rate);
    if (cf > nyquist) {
      ++bank.dropped;
      continue;
    }
    const double decay = 2.0 * kPi * kGammatoneB * erb_bandwidth(cf);
    const double t_peak = 3.0 / decay;
    const int len = std::max(
        8, static_cast<int>(std::ceil(sample_rate * (t_peak + 18.0 / decay))));

    GammatoneFilter filt;
    filt.center_hz = cf;
    filt.impulse.resize(static_cast<size_t>(len));
    cplx response = 0.0;
    const double omega = 2.0 * kPi * cf / sample_rate;
    for (int k = 0; k < len; ++k) {
      double t = k / sample_rate;
      double v = t * t * t * std::exp(-decay * t) * std::cos(omega * k);
      filt.impulse[static_cast<size_t>(k)] = v;
      response += v * std::exp(cplx(0.0, -omega * k));
    }
    double gain = std::abs(response);
    if (gain <= 0.0) fail(Errc::invalid_range, "degenerate gammatone channel");
    for (double& v : filt.impulse) v /= gain;
    bank.filters.push_back(std::move(filt));
  }

  if (bank.dropped > 0)
    std::fprintf(stderr,
                 "specband: dropped %d gammatone channels above Nyquist "
                 "(%.1f Hz)\n",
                 bank.dropped, nyquist);
  return bank;
}

std::vector<double> temporal_filter(int n_max) {
  const double a1 = 1.5, b1 = 0.04;
  const double a2 = 1.0, b2 = 0.036;
  auto g = [](double a, double b, double n) {
    return a * n * n * std::exp(-b * n);
  };
  const double peak1 = g(a1, b1, 2.0 / b1);
  const double peak2 = g(a2, b2, 2.0 / b2);
  if (n_max < 1 || g(a1, b1, n_max) > 1e-6 * peak1 ||
      g(a2, b2, n_max) > 1e-6 * peak2)
    fail(Errc::kernel_truncated,
         "n_max = " + std::to_string(n_max) +
             " cuts the temporal kernels above 1e-6 of their peaks");

  std::vector<double> kernel(static_cast<size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n)
    kernel[static_cast<size_t>(n)] = g(a1, b1, n) - g(a2, b2, n);
  return kernel;
}

std::vector<double> convolve_causal(const std::vector<double>& signal,
                                    const std::vector<double>& kernel) {
  if (signal.empty() || kernel.empty())
    fail(Errc::empty_audio, "convolution needs nonempty signal and kernel");
  const size_t n = next_pow2(signal.size() + kernel.size() - 1);
  std::vector<cplx> a(n, 0.0), b(n, 0.0);
  for (size_t i = 0; i < signal.size(); ++i) a[i] = signal[i];
  for (size_t i = 0; i < kernel.size(); ++i) b[i] = kernel[i];
  fft_inplace(a, -1);
  fft_inplace(b, -1);
  for (size_t i = 0; i < n; ++i) a[i] *= b[i];
  fft_inplace(a, +1);
  std::vector<double> out(signal.size());
  for (size_t i = 0; i < signal.size(); ++i)
    out[i] = a[i].real() / static_cast<double>(n);
  return out;
}

Cochleagram cochleagram(const std::vector<double>& audio,
                        double sample_rate) {
  if (audio.empty()) fail(Errc::empty_audio, "cochleagram needs audio samples");
  GammatoneBank bank = gammatone_bank(sample_rate);
  std::vector<double> kernel = temporal_filter(1024);

  Cochleagram out;
  out.sample_rate = sample_rate;
  const int channels = static_cast<int>(bank.filters.size());
  const auto t = static_cast<Eigen::Index>(audio.size());
  out.values.resize(channels, t);
  out.center_hz.resize(static_cast<size_t>(channels));
  out.degenerate.assign(static_cast<size_t>(channels), 0);

  parallel_for(static_cast<size_t>(channels), [&](size_t c) {
    out.center_hz[c] = bank.filters[c].center_hz;
    std::vector<double> y = convolve_causal(audio, bank.filters[c].impulse);
    // Half-wave rectification extracts the channel envelope; the temporal
    // kernel then smooths envelopes instead of cancelling the carrier.
    for (double& v : y) v = std::max(v, 0.0);
    y = convolve_causal(y, kernel);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    double sd = std::sqrt(var);
    auto row = out.values.row(static_cast<Eigen::Index>(c));
    if (sd < 1e-12) {
      out.degenerate[c] = 1;
      row.setZero();
      return;
    }
    for (Eigen::Index i = 0; i < t; ++i)
      row(i) = (y[static_cast<size_t>(i)] - mean) / sd;
  });
  return out;
}

SfaFeatures sfa_fit(const Eigen::MatrixXd& signal, int m) {
  const auto d = signal.rows();
  const auto t = signal.cols();
  if (d < 1 || t < 2 * d)
    fail(Errc::too_few_frames,
         "sfa needs a d x T signal with T >= 2d, got " + std::to_string(d) +
             " x " + std::to_string(t));
  if (m < 1 || m > d) fail(Errc::invalid_range, "sfa needs 1 <= m <= d");
  if (!signal.allFinite())
    fail(Errc::non_finite_loss, "sfa signal has non-finite entries");

  Eigen::VectorXd mean = signal.rowwise().mean();
  Eigen::MatrixXd centered = signal.colwise() - mean;
  Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev(0) <= 1e-12 * std::max(ev(d - 1), 0.0) || ev(0) <= 0.0)
    fail(Errc::rank_deficient_signal,
         "signal covariance is rank deficient; whitening failed");

  Eigen::MatrixXd whiten = ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                           es.eigenvectors().transpose();
  Eigen::MatrixXd z = whiten * centered;
  Eigen::MatrixXd diff = z.rightCols(t - 1) - z.leftCols(t - 1);
  Eigen::MatrixXd dcov =
      diff * diff.transpose() / static_cast<double>(t - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> des(dcov);

  SfaFeatures out;
  out.m = m;
  out.mean = std::move(mean);
  out.weights = whiten.transpose() * des.eigenvectors().leftCols(m);
  out.eigenvalues = des.eigenvalues().head(m);
  return out;
}

Eigen::MatrixXd sfa_transform(const SfaFeatures& features,
                              const Eigen::MatrixXd& signal) {
  if (signal.rows() != features.mean.size())
    fail(Errc::dimension_mismatch,
         "signal dimension does not match the fitted features");
  return features.weights.transpose() * (signal.colwise() - features.mean);
}

namespace {

struct TinyMlp {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

TinyMlp train_tiny_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       uint64_t seed) {
  const auto n = x.rows();
  const auto d = x.cols();
  const int hidden = 5;

  TinyMlp net;
  net.mean = x.colwise().mean();
  net.sd = ((x.rowwise() - net.mean.transpose()).colwise().squaredNorm() /
            static_cast<double>(n))
               .cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j)
    if (net.sd(j) < 1e-12) net.sd(j) = 1.0;
  Eigen::MatrixXd xn =
      (x.rowwise() - net.mean.transpose()).array().rowwise() /
      net.sd.transpose().array();

  auto eng = make_engine(derive_seed(seed, 0x6d6c7032));
  std::normal_distribution<double> dist(0.0, 1.0);
  net.w1.resize(d, hidden);
  double s1 = std::sqrt(2.0 / static_cast<double>(d));
  for (Eigen::Index i = 0; i < d; ++i)
    for (int j = 0; j < hidden; ++j) net.w1(i, j) = s1 * dist(eng);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2.resize(hidden);
  double s2 = std::sqrt(2.0 / hidden);
  for (int j = 0; j < hidden; ++j) net.w2(j) = s2 * dist(eng);
  net.b2 = 0.0;

  Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(d, hidden), vw1 = mw1;
  Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(hidden), vb1 = mb1;
  Eigen::VectorXd mw2 = Eigen::VectorXd::Zero(hidden), vw2 = mw2;
  double mb2 = 0.0, vb2 = 0.0;
  const double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const Eigen::Index batch = 32;

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  int step = 0;
  for (int epoch = 1; epoch <= 200; ++epoch) {
    std::shuffle(order.begin(), order.end(), eng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index nb = std::min(batch, n - start);
      Eigen::MatrixXd xb(nb, d);
      Eigen::VectorXd yb(nb);
      for (Eigen::Index i = 0; i < nb; ++i) {
        xb.row(i) = xn.row(order[static_cast<size_t>(start + i)]);
        yb(i) = y(order[static_cast<size_t>(start + i)]);
      }

      Eigen::MatrixXd h = (xb * net.w1).rowwise() + net.b1.transpose();
      Eigen::MatrixXd relu = h.cwiseMax(0.0);
      Eigen::VectorXd logits = relu * net.w2;
      logits.array() += net.b2;
      Eigen::VectorXd p = (1.0 / (1.0 + (-logits.array()).exp())).matrix();

      Eigen::VectorXd grad_logit = (p - yb) / static_cast<double>(nb);
      Eigen::VectorXd gw2 = relu.transpose() * grad_logit;
      double gb2 = grad_logit.sum();
      Eigen::MatrixXd grad_h =
          (grad_logit * net.w2.transpose()).cwiseProduct(
              (h.array() > 0.0).cast<double>().matrix());
      Eigen::MatrixXd gw1 = xb.transpose() * grad_h;
      Eigen::VectorXd gb1 = grad_h.colwise().sum();

      ++step;
      double corr1 = 1.0 - std::pow(beta1, step);
      double corr2 = 1.0 - std::pow(beta2, step);
      auto adam = [&](auto& m, auto& v, const auto& g, auto& w) {
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        w -= lr * (m / corr1)
                 .cwiseQuotient(((v / corr2).cwiseSqrt().array() + eps)
                                    .matrix());
      };
      adam(mw1, vw1, gw1, net.w1);
      adam(mb1, vb1, gb1, net.b1);
      adam(mw2, vw2, gw2, net.w2);
      mb2 = beta1 * mb2 + (1.0 - beta1) * gb2;
      vb2 = beta2 * vb2 + (1.0 - beta2) * gb2 * gb2;
      net.b2 -= lr * (mb2 / corr1) / (std::sqrt(vb2 / corr2) + eps);
    }
  }
  return net;
}

double tiny_mlp_accuracy(const TinyMlp& net, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y) {
  Eigen::MatrixXd xn =
      (x.rowwise() - net.mean.transpose()).array().rowwise() /
      net.sd.transpose().array();
  Eigen::MatrixXd relu =
      ((xn * net.w1).rowwise() + net.b1.transpose()).cwiseMax(0.0);
  Eigen::VectorXd logits = relu * net.w2;
  logits.array() += net.b2;
  int hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if ((logits(i) > 0.0) == (y(i) > 0.5)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

}  // namespace

PairAccuracy discriminate_pair(const Eigen::MatrixXd& features_a,
                               const Eigen::MatrixXd& features_b, int n_slow,
                               uint64_t seed) {
  if (features_a.cols() < 4 || features_b.cols() < 4)
    fail(Errc::too_few_frames,
         "pair discrimination needs >= 4 frames per stream");
  if (features_a.rows() != features_b.rows())
    fail(Errc::dimension_mismatch, "feature streams disagree on dimension");
  if (n_slow < 1 || n_slow > features_a.rows())
    fail(Errc::invalid_range, "n_slow must be in [1, feature count]");

  const auto ta = features_a.cols();
  const auto tb = features_b.cols();
  const int runs = 5;
  PairAccuracy result;
  result.runs.resize(runs);

  parallel_for(static_cast<size_t>(runs), [&](size_t r) {
    auto eng = make_engine(derive_seed(seed, 0x626f6f74, r));
    std::vector<Eigen::Index> ia(static_cast<size_t>(ta));
    std::vector<Eigen::Index> ib(static_cast<size_t>(tb));
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    std::shuffle(ia.begin(), ia.end(), eng);
    std::shuffle(ib.begin(), ib.end(), eng);
    const auto half_a = ta / 2;
    const auto half_b = tb / 2;

    const auto ntr = half_a + half_b;
    const auto nte = (ta - half_a) + (tb - half_b);
    Eigen::MatrixXd xtr(ntr, n_slow), xte(nte, n_slow);
    Eigen::VectorXd ytr(ntr), yte(nte);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < half_a; ++i, ++row) {
      xtr.row(row) =
          features_a.col(ia[static_cast<size_t>(i)]).head(n_slow).transpose();
      ytr(row) = 0.0;
    }
    for (Eigen::Index i = 0; i < half_b; ++i, ++row) {
      xtr.row(row) =
          features_b.col(ib[static_cast<size_t>(i)]).head(n_slow).transpose();
      ytr(row) = 1.0;
    }
    row = 0;
    for (Eigen::Index i = half_a; i < ta; ++i, ++row) {
      xte.row(row) =
          features_a.col(ia[static_cast<size_t>(i)]).head(n_slow).transpose();
      yte(row) = 0.0;
    }
    for (Eigen::Index i = half_b; i < tb; ++i, ++row) {
      xte.row(row) =
          features_b.col(ib[static_cast<size_t>(i)]).head(n_slow).transpose();
      yte(row) = 1.0;
    }

    TinyMlp net = train_tiny_mlp(xtr, ytr, derive_seed(seed, 0x626f6f74, r));
    result.runs[r] = tiny_mlp_accuracy(net, xte, yte);
  });

  double mean = 0.0;
  for (double v : result.runs) mean += v;
  mean /= runs;
  double var = 0.0;
  for (double v : result.runs) var += (v - mean) * (v - mean);
  var /= (runs - 1);
  double half = 1.96 * std::sqrt(var / runs);
  result.mean = mean;
  result.ci_lo = mean - half;
  result.ci_hi = mean + half;
  return result;
}

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(Errc::bad_magic, path + " is not a RIFF/WAVE file");

  int channels = 0;
  double rate = 0.0;
  int bits = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    uint32_t size = read_u32(bytes.data() + pos + 4);
    const unsigned char* chunk = bytes.data() + pos;
    if (pos + 8 + size > bytes.size())
      fail(Errc::truncated_payload, path + " has a truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(Errc::truncated_payload, "fmt chunk too short");
      uint16_t format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format != 1 || bits != 16)
        fail(Errc::unsupported_dtype,
             path + ": only 16-bit PCM WAV is supported");
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (channels < 1 || rate <= 0.0)
    fail(Errc::bad_magic, path + " is missing a fmt chunk");
  if (data_len == 0) fail(Errc::empty_audio, path + " has no data chunk");

  const size_t stride = static_cast<size_t>(channels) * 2;
  const size_t frames = data_len / stride;
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    const unsigned char* p = bytes.data() + data_off + i * stride;
    auto v = static_cast<int16_t>(p[0] | (p[1] << 8));
    clip.samples[i] = v / 32768.0;
  }
  return clip;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               double sample_rate) {
  if (samples.empty()) fail(Errc::empty_audio, "refusing to write empty WAV");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");

  auto put_u32 = [&](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  const auto rate = static_cast<uint32_t>(std::lround(sample_rate));
  const auto data_len = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);
  put_u16(1);
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_len);
  for (double v : samples) {
    long q = std::lround(std::clamp(v, -1.0, 1.0) * 32768.0);
    q = std::clamp(q, -32768l, 32767l);
    put_u16(static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  if (!out) fail(Errc::io_error, "short write to " + path);
}

}  // namespace specband
