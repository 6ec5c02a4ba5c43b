#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specband/types.hpp"

namespace specband {

struct GammatoneFilter {
  double center_hz = 0.0;
  std::vector<double> impulse;
};

struct GammatoneBank {
  double sample_rate = 0.0;
  int order = 4;
  std::vector<GammatoneFilter> filters;
  int dropped = 0;
};

// ERB-rate scale and its inverse (Glasberg-Moore).
double erb_rate(double hz);
double erb_rate_inverse(double rate);
double erb_bandwidth(double hz);

// 4th-order gammatone impulse responses with ERB-rate-spaced center
// frequencies from f_lo to f_hi inclusive, each normalized to unit peak
// magnitude response. Channels above Nyquist are dropped with a warning on
// stderr and counted in `dropped`.
GammatoneBank gammatone_bank(double sample_rate, int n = 42,
                             double f_lo = 22.9, double f_hi = 20208.0);

// Difference-of-kernels temporal filter g1(n) - g2(n) with
// g(n) = a n^2 e^{-bn}, g1: a=1.5, b=0.04, g2: a=1, b=0.036, over
// n = 0..n_max. n_max must reach the 1e-6 decay point of both kernels.
std::vector<double> temporal_filter(int n_max);

// Causal FFT convolution, truncated to the input length.
std::vector<double> convolve_causal(const std::vector<double>& signal,
                                    const std::vector<double>& kernel);

struct Cochleagram {
  Eigen::MatrixXd values;  // channels x T
  std::vector<double> center_hz;
  double sample_rate = 0.0;
  std::vector<uint8_t> degenerate;
};

Cochleagram cochleagram(const std::vector<double>& audio, double sample_rate);

struct SfaFeatures {
  Eigen::VectorXd mean;         // input mean, d
  Eigen::MatrixXd weights;      // d x m, applied to centered input
  Eigen::VectorXd eigenvalues;  // m, ascending
  int m = 0;
};

// Slow feature analysis on a d x T signal: whiten, eigendecompose the
// covariance of the forward temporal difference, keep the m slowest
// directions. Outputs on the training signal are zero mean, unit variance,
// and decorrelated.
SfaFeatures sfa_fit(const Eigen::MatrixXd& signal, int m);
Eigen::MatrixXd sfa_transform(const SfaFeatures& features,
                              const Eigen::MatrixXd& signal);

struct PairAccuracy {
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> runs;
};

// Trains a 5-hidden-unit ReLU MLP on single-frame slices of the first
// n_slow feature rows, 50-50 stratified split, 5 bootstrap runs; returns
// the mean test accuracy with a normal-approximation 95% CI.
PairAccuracy discriminate_pair(const Eigen::MatrixXd& features_a,
                               const Eigen::MatrixXd& features_b, int n_slow,
                               uint64_t seed);

struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

// PCM 16-bit little-endian WAV. Stereo input keeps the first channel.
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<double>& samples,
               double sample_rate);

}  // namespace specband
