#include "specband/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace specband {

Eigen::MatrixXd dataset_matrix(const std::vector<TensorImage>& samples) {
  if (samples.empty()) fail(Errc::empty_dataset, "no samples");
  const auto& first = samples.front();
  size_t d = first.data.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(d),
                    static_cast<Eigen::Index>(samples.size()));
  for (size_t j = 0; j < samples.size(); ++j) {
    if (!samples[j].same_shape(first))
      fail(Errc::dimension_mismatch, "sample " + std::to_string(j) +
                                         " shape differs from sample 0");
    for (size_t i = 0; i < d; ++i)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          samples[j].data[i];
  }
  return X;
}

Eigen::VectorXd flatten(const TensorImage& image) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(image.data.size()));
  for (size_t i = 0; i < image.data.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = image.data[i];
  return v;
}

TensorImage unflatten(const Eigen::VectorXd& v, int height, int width,
                      int channels) {
  if (v.size() != static_cast<Eigen::Index>(height) * width * channels)
    fail(Errc::dimension_mismatch, "vector length does not match shape");
  TensorImage img(height, width, channels);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    img.data[static_cast<size_t>(i)] = v(i);
  return img;
}

CovarianceSpectrum fit_pca(const Eigen::MatrixXd& columns,
                           int max_dimension) {
  if (columns.cols() == 0) fail(Errc::empty_dataset, "no samples");
  size_t d = static_cast<size_t>(columns.rows());
  if (d == 0) fail(Errc::empty_dataset, "zero-dimensional samples");
  if (d > static_cast<size_t>(max_dimension))
    fail(Errc::dimension_too_large,
         "dimension " + std::to_string(d) + " exceeds limit " +
             std::to_string(max_dimension));

  CovarianceSpectrum s;
  s.mean = columns.rowwise().mean();
  Eigen::MatrixXd centered = columns.colwise() - s.mean;
  Eigen::MatrixXd cov =
      (centered * centered.transpose()) / static_cast<double>(columns.cols());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    fail(Errc::singular_covariance, "eigendecomposition failed to converge");

  // Eigen returns ascending order; flip to descending.
  Eigen::VectorXd evals = solver.eigenvalues().reverse();
  Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

  double lmax = evals.size() > 0 ? std::abs(evals(0)) : 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < 0) {
      if (std::abs(evals(i)) < 1e-10 * lmax || lmax == 0.0)
        evals(i) = 0.0;
      else
        fail(Errc::singular_covariance,
             "covariance has a significantly negative eigenvalue: " +
                 std::to_string(evals(i)));
    }
  }
  s.eigenvalues = std::move(evals);
  s.eigenvectors = std::move(evecs);
  return s;
}

CovarianceSpectrum fit_pca(const std::vector<TensorImage>& samples,
                           int max_dimension) {
  return fit_pca(dataset_matrix(samples), max_dimension);
}

ExplainedVariance explained_variance(const CovarianceSpectrum& spectrum,
                                     int count) {
  int d = spectrum.dim();
  if (count < 0 || count > d)
    fail(Errc::index_out_of_range, "component count " + std::to_string(count) +
                                       " exceeds dimension " +
                                       std::to_string(d));
  double total = spectrum.total_variance();
  ExplainedVariance ev;
  if (total <= 0.0) {
    ev.fraction = 0.0;
    ev.zero_total = true;
    return ev;
  }
  double head = 0.0;
  for (int i = 0; i < count; ++i) head += spectrum.eigenvalues(i);
  ev.fraction = head / total;
  ev.zero_total = false;
  return ev;
}

ConditionNumber condition_number(const CovarianceSpectrum& spectrum) {
  ConditionNumber c;
  int d = spectrum.dim();
  if (d == 0) fail(Errc::empty_dataset, "empty spectrum");
  double lmax = spectrum.eigenvalues(0);
  double lmin = spectrum.eigenvalues(d - 1);
  if (lmin <= 1e-12 * lmax || lmax <= 0.0) {
    c.infinite = true;
    c.value = std::numeric_limits<double>::infinity();
  } else {
    c.infinite = false;
    c.value = lmax / lmin;
  }
  return c;
}

}  // namespace specband
