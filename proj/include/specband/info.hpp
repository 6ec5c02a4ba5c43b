#pragma once

#include <Eigen/Dense>
#include <vector>

#include "specband/bands.hpp"
#include "specband/types.hpp"

namespace specband {

// Joint Gaussian over the ordered blocks (X1: d1 dims, X2: d2 dims,
// Y: dy dims). The covariance is over the concatenated vector.
struct GaussianJoint {
  Eigen::MatrixXd cov;
  int d1 = 0;
  int d2 = 0;
  int dy = 0;

  int dim() const { return d1 + d2 + dy; }
  void validate() const;
};

enum class BlockId { x1, x2, y };

// I(A; B) = (ln det S_A + ln det S_B - ln det S_AB) / 2 in nats. Every
// determinant is taken after the same ridge eps = 1e-9 * trace/dim of the
// full joint, so the estimate stays >= 0 and block identities cancel
// exactly even for singular joints.
double gaussian_mi(const GaussianJoint& joint, const std::vector<BlockId>& a,
                   const std::vector<BlockId>& b);

// All in nats. R + U1 = I(X1;Y) and R + U2 = I(X2;Y) hold by construction.
struct PidResult {
  double redundant = 0.0;
  double synergistic = 0.0;
  double unique1 = 0.0;
  double unique2 = 0.0;
  double total = 0.0;
};

PidResult gaussian_pid(const GaussianJoint& joint);

struct KnnMiOptions {
  int k = 3;
  bool lnc = false;
  double alpha = 0.25;  // LNC non-uniformity threshold
  uint64_t seed = 0;    // tie-breaking jitter
};

// Kraskov-style I(X;Y) for continuous X (rows = samples) and categorical
// labels: H(X) - sum_y p(y) H(X|y), each entropy by the k-NN
// (Kozachenko-Leonenko) estimator under the Chebyshev norm. Clamped at 0.
double kraskov_mi(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                  const KnnMiOptions& options = {});

// k-NN differential entropy of a point cloud in nats (exposed for tests).
double knn_entropy(const Eigen::MatrixXd& x, int k, bool lnc, double alpha);

// Coefficient features of one band: box-selected basis coefficients,
// reduced to the max_dims highest-variance dimensions. Rows = samples.
Eigen::MatrixXd band_feature_matrix(const std::vector<TensorImage>& samples,
                                    const BandSpec& spec,
                                    const BasisData& basis, int max_dims = 10);

struct PidMatrix {
  int bands = 0;
  std::vector<PidResult> cells;

  const PidResult& at(int i, int j) const {
    return cells[static_cast<size_t>(i) * bands + j];
  }
  PidResult& at(int i, int j) {
    return cells[static_cast<size_t>(i) * bands + j];
  }
};

// One Gaussian PID per band pair against one-hot labels. Diagonal cells
// use the duplicate-source convention (U = S = 0, R = I).
PidMatrix pid_matrix(const LabeledDataset& dataset,
                     const std::vector<BandSpec>& bands,
                     const BasisData& basis, int max_dims = 10);

double digamma(double x);

}  // namespace specband
