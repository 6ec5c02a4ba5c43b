#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "specband/types.hpp"

namespace specband {

// Seeded generators backing the synthetic: dataset sources. Every generator
// is deterministic in (parameters, seed).

struct DigitsSpec {
  int n = 2000;
  int classes = 10;
  int height = 8;
  int width = 8;
  double lambda_decay = 0.9;
  double info_floor = 0.04;
  double info_scale = 0.6;
  double info_efold = 4.0;
};

// Digits-style classification set with class information planted in every
// eigen-rank: total variance per rank follows (j+1)^-lambda_decay, and the
// class-mean spread claims a per-rank fraction info_floor +
// info_scale*exp(-j/info_efold) of it (rescaled if the residual noise
// covariance would lose positive-definiteness). Every band is informative
// while the head carries the larger share.
LabeledDataset synth_digits(const DigitsSpec& spec, uint64_t seed);

// Two spherical Gaussian blobs separated by margin_sigmas standard
// deviations on 4x4 single-channel images.
LabeledDataset synth_blobs(int n, double margin_sigmas, uint64_t seed);

// Stationary field with exactly circulant covariance: frequency-domain white
// noise shaped by a per-conjugate-pair geometric amplitude profile
// (ratio^rank), so covariance eigenvalues are distinct across pairs.
std::vector<TensorImage> synth_circulant(int n, int height, int width,
                                         double ratio, uint64_t seed);

// Spiked covariance data: a few planted high-variance directions on top of
// an isotropic bulk.
std::vector<TensorImage> synth_spiked(int n, int height, int width,
                                      const std::vector<double>& spikes,
                                      double bulk_sigma, uint64_t seed);

TensorImage synth_flat(int height, int width, int channels, double level);

// Smooth low-frequency sinusoid mixture.
TensorImage synth_texture(int height, int width, int channels, uint64_t seed);

void add_awgn(TensorImage& image, double sigma, uint64_t seed);

// Translating-texture frame pairs: 2 input channels (frame t, frame t+1),
// dense 2-channel constant flow target, a corner rectangle masked invalid.
LabeledDataset synth_flow_pairs(int n, int height, int width, uint64_t seed);

// Shading-from-depth scenes: input is the circular gradient shading of a
// smooth depth map, dense 1-channel depth target, 1-pixel border masked.
LabeledDataset synth_depth_scenes(int n, int height, int width,
                                  uint64_t seed);

struct SlowFastSignal {
  Eigen::MatrixXd mixed;
  Eigen::VectorXd slow;
  Eigen::VectorXd fast;
};

// Two-sinusoid mixture: a slow and a fast source pushed through a fixed
// invertible mixing matrix, rows are time frames.
SlowFastSignal synth_slow_fast(int frames, double slow_hz, double fast_hz,
                               double rate_hz, uint64_t seed);

struct AudioPairData {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  double sample_rate = 16000.0;
};

// Two vocalization-like clip populations. Each clip cross-fades at 2 Hz
// between a pair of carriers with constant total power; the first class
// alternates between 900 and 1800 Hz, the second between 3400 and 5600 Hz.
// Class identity is carried by which cochlear bands host the slow spectral
// alternation, so both slow and fast features are discriminative.
AudioPairData synth_audio_pair(int clips, int samples, double sample_rate,
                               uint64_t seed);

}  // namespace specband
