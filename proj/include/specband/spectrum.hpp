#pragma once

#include <Eigen/Dense>

#include "specband/types.hpp"

namespace specband {

// Eigendecomposition of a mean-subtracted sample covariance. Eigenvalues
// are sorted non-increasing; eigenvectors are the matching columns.
struct CovarianceSpectrum {
  Eigen::VectorXd mean;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  int dim() const { return static_cast<int>(mean.size()); }
  double total_variance() const { return eigenvalues.sum(); }
};

struct ExplainedVariance {
  double fraction = 0.0;
  bool zero_total = false;  // set when the spectrum has no variance at all
};

struct ConditionNumber {
  double value = 0.0;
  bool infinite = false;  // some eigenvalue below 1e-12 * lambda_max
};

// Flattens every sample to a d-vector, forms Sigma = X X^T / n on centered
// data and eigendecomposes it. d is capped (default 16384) since the dense
// solve is O(d^3); callers with bigger images should subsample or tile.
CovarianceSpectrum fit_pca(const std::vector<TensorImage>& samples,
                           int max_dimension = 16384);

// Same, but on an explicit d x n column-sample matrix.
CovarianceSpectrum fit_pca(const Eigen::MatrixXd& columns,
                           int max_dimension = 16384);

// Cumulative variance fraction of the first `count` eigenvalues,
// count in [0, d].
ExplainedVariance explained_variance(const CovarianceSpectrum& spectrum,
                                     int count);

ConditionNumber condition_number(const CovarianceSpectrum& spectrum);

// Flattened d x n sample matrix (column per sample).
Eigen::MatrixXd dataset_matrix(const std::vector<TensorImage>& samples);

Eigen::VectorXd flatten(const TensorImage& image);
TensorImage unflatten(const Eigen::VectorXd& v, int height, int width,
                      int channels);

}  // namespace specband
