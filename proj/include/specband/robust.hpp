#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "specband/types.hpp"

namespace specband {

// Noise variance from homogeneous patches: tiles each channel into
// patch x patch blocks, fits a quadratic surface per block, ranks blocks by
// the energy of the fitted structure beyond their mean, and averages the
// fit-residual variance over the lowest quantile. Ranking and value use
// orthogonal components of the block, so the selection does not bias the
// estimate.
double estimate_noise(const TensorImage& image, int patch = 8,
                      double quantile = 0.05);

// Similarity between two orthonormal column sets spanning d-dimensional
// subspaces: ||V1^T V2||_F / sqrt(d), which is 1 for identical subspaces
// and 0 for orthogonal ones. paper_normalization divides by d instead.
double subspace_similarity(const Eigen::MatrixXd& v1,
                           const Eigen::MatrixXd& v2,
                           bool paper_normalization = false);

struct SimilarityMatrix {
  Eigen::MatrixXd values;                        // bands x bands
  std::vector<std::pair<int, int>> band_ranges;  // half-open index ranges
  std::vector<uint64_t> resample_seeds;          // one per resample draw
  size_t resample_size = 0;
  int resamples = 0;
};

// Bootstrap eigenspace stability: draws `resamples` datasets of size n with
// replacement, fits PCA to each, splits eigenvectors into contiguous index
// bands, and averages subspace similarities between all ordered pairs of
// distinct resamples.
SimilarityMatrix bootstrap_stability(const std::vector<TensorImage>& samples,
                                     size_t n, int resamples = 50,
                                     int bands = 10, uint64_t seed = 0);

}  // namespace specband
