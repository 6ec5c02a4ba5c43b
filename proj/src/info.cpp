#include "specband/info.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "specband/fft.hpp"
#include "specband/masks.hpp"
#include "specband/parallel.hpp"
#include "specband/rng.hpp"
#include "specband/wavelet.hpp"

namespace specband {

namespace {

std::vector<int> block_indices(const GaussianJoint& joint,
                               const std::vector<BlockId>& blocks) {
  std::vector<int> idx;
  for (BlockId b : blocks) {
    int start = 0, len = 0;
    switch (b) {
      case BlockId::x1: start = 0; len = joint.d1; break;
      case BlockId::x2: start = joint.d1; len = joint.d2; break;
      case BlockId::y: start = joint.d1 + joint.d2; len = joint.dy; break;
    }
    for (int i = 0; i < len; ++i) idx.push_back(start + i);
  }
  return idx;
}

double ridged_logdet(const Eigen::MatrixXd& cov, const std::vector<int>& idx,
                     double eps) {
  Eigen::MatrixXd sub(idx.size(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i)
    for (size_t j = 0; j < idx.size(); ++j) sub(i, j) = cov(idx[i], idx[j]);
  sub.diagonal().array() += eps;
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success)
    fail(Errc::singular_covariance,
         "block covariance not positive definite after ridge");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double joint_ridge(const GaussianJoint& joint) {
  return 1e-9 * joint.cov.trace() / std::max(1, joint.dim());
}

// Chebyshev distance between rows a and b of x.
double chebyshev(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
  return (x.row(a) - x.row(b)).cwiseAbs().maxCoeff();
}

// Local non-uniformity correction for one point: log ratio of the rotated
// neighborhood bounding-box volume to the Chebyshev ball volume, applied
// when the ratio falls below alpha.
double lnc_term(const Eigen::MatrixXd& x, Eigen::Index i,
                const std::vector<Eigen::Index>& neighbors, double radius,
                double alpha) {
  const Eigen::Index d = x.cols();
  const Eigen::Index k = static_cast<Eigen::Index>(neighbors.size());
  Eigen::MatrixXd local(k + 1, d);
  local.row(0) = x.row(i);
  for (Eigen::Index j = 0; j < k; ++j) local.row(j + 1) = x.row(neighbors[j]);
  Eigen::RowVectorXd mean = local.colwise().mean();
  local.rowwise() -= mean;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(local, Eigen::ComputeThinV);
  Eigen::MatrixXd rotated = local * svd.matrixV();

  double log_rect = 0.0;
  for (Eigen::Index c = 0; c < d; ++c) {
    double extent = rotated.col(c).cwiseAbs().maxCoeff();
    if (extent <= 0) return 0.0;
    log_rect += std::log(2.0 * extent);
  }
  double log_ball = d * std::log(2.0 * radius);
  double log_ratio = log_rect - log_ball;
  return log_ratio < std::log(alpha) ? log_ratio : 0.0;
}

}  // namespace

void GaussianJoint::validate() const {
  if (d1 < 0 || d2 < 0 || dy < 0 || dim() <= 0)
    fail(Errc::dimension_mismatch, "joint block dims must be non-negative");
  if (cov.rows() != dim() || cov.cols() != dim())
    fail(Errc::dimension_mismatch,
         "covariance is " + std::to_string(cov.rows()) + "x" +
             std::to_string(cov.cols()) + " but blocks sum to " +
             std::to_string(dim()));
  double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * (1.0 + cov.cwiseAbs().maxCoeff()))
    fail(Errc::singular_covariance, "covariance is not symmetric");
}

double gaussian_mi(const GaussianJoint& joint, const std::vector<BlockId>& a,
                   const std::vector<BlockId>& b) {
  joint.validate();
  std::vector<int> ia = block_indices(joint, a);
  std::vector<int> ib = block_indices(joint, b);
  if (ia.empty() || ib.empty())
    fail(Errc::dimension_mismatch, "empty block in mutual information");
  std::vector<int> iab = ia;
  iab.insert(iab.end(), ib.begin(), ib.end());

  double eps = joint_ridge(joint);
  double la = ridged_logdet(joint.cov, ia, eps);
  double lb = ridged_logdet(joint.cov, ib, eps);
  double lab = ridged_logdet(joint.cov, iab, eps);
  return 0.5 * (la + lb - lab);
}

PidResult gaussian_pid(const GaussianJoint& joint) {
  double i1 = gaussian_mi(joint, {BlockId::x1}, {BlockId::y});
  double i2 = gaussian_mi(joint, {BlockId::x2}, {BlockId::y});
  double itot = gaussian_mi(joint, {BlockId::x1, BlockId::x2}, {BlockId::y});

  PidResult r;
  r.redundant = std::min(i1, i2);
  r.unique1 = i1 - r.redundant;
  r.unique2 = i2 - r.redundant;
  r.synergistic = itot - r.redundant - r.unique1 - r.unique2;
  r.total = itot;
  return r;
}

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  return result;
}

double knn_entropy(const Eigen::MatrixXd& x, int k, bool lnc, double alpha) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < k + 1)
    fail(Errc::too_few_samples, "need at least k+1 points per entropy term");

  double log_sum = 0.0;
  double lnc_sum = 0.0;
  std::vector<std::pair<double, Eigen::Index>> dist(
      static_cast<size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[m++] = {chebyshev(x, i, j), j};
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + k);
    double radius = dist[static_cast<size_t>(k - 1)].first;
    if (radius <= 0)
      fail(Errc::too_few_samples,
           "duplicate points defeat the k-NN estimator; add jitter");
    log_sum += std::log(radius);
    if (lnc) {
      std::vector<Eigen::Index> neighbors(static_cast<size_t>(k));
      for (int j = 0; j < k; ++j) neighbors[static_cast<size_t>(j)] = dist[j].second;
      lnc_sum += lnc_term(x, i, neighbors, radius, alpha);
    }
  }

  double h = digamma(static_cast<double>(n)) - digamma(static_cast<double>(k)) +
             static_cast<double>(d) * std::log(2.0) +
             static_cast<double>(d) / static_cast<double>(n) * log_sum;
  if (lnc) h += lnc_sum / static_cast<double>(n);
  return h;
}

double kraskov_mi(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                  const KnnMiOptions& options) {
  const Eigen::Index n = x.rows();
  if (n != static_cast<Eigen::Index>(labels.size()))
    fail(Errc::dimension_mismatch, "label count does not match sample count");
  if (options.k < 1) fail(Errc::invalid_range, "k must be >= 1");
  if (n < 10 * options.k)
    fail(Errc::too_few_samples, "need n >= 10k, got n = " + std::to_string(n));

  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) fail(Errc::label_out_of_range, "negative label");
    num_classes = std::max(num_classes, y + 1);
  }
  std::vector<std::vector<Eigen::Index>> by_class(
      static_cast<size_t>(num_classes));
  for (Eigen::Index i = 0; i < n; ++i)
    by_class[static_cast<size_t>(labels[static_cast<size_t>(i)])].push_back(i);
  int distinct = 0;
  for (const auto& c : by_class) distinct += !c.empty();
  if (distinct < 2)
    fail(Errc::degenerate_labels, "need at least 2 distinct labels");

  // Deterministic tie-breaking jitter, scaled well below data resolution.
  Eigen::MatrixXd xj = x;
  auto eng = make_engine(derive_seed(options.seed, 0x6b6e6e6dULL));
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (Eigen::Index c = 0; c < xj.cols(); ++c) {
    double spread = std::max(1e-12, xj.col(c).maxCoeff() - xj.col(c).minCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
      xj(i, c) += 1e-10 * spread * unit(eng);
  }

  double h_x = knn_entropy(xj, options.k, options.lnc, options.alpha);
  double h_cond = 0.0;
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    if (static_cast<int>(members.size()) < options.k + 1)
      fail(Errc::too_few_samples,
           "a class has fewer than k+1 samples");
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(members.size()), xj.cols());
    for (size_t r = 0; r < members.size(); ++r)
      sub.row(static_cast<Eigen::Index>(r)) = xj.row(members[r]);
    double p = static_cast<double>(members.size()) / static_cast<double>(n);
    h_cond += p * knn_entropy(sub, options.k, options.lnc, options.alpha);
  }
  return std::max(0.0, h_x - h_cond);
}

Eigen::MatrixXd band_feature_matrix(const std::vector<TensorImage>& samples,
                                    const BandSpec& spec,
                                    const BasisData& basis, int max_dims) {
  if (samples.empty()) fail(Errc::empty_dataset, "no samples");
  if (max_dims < 1) fail(Errc::invalid_range, "max_dims must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());

  // Raw coefficient columns of the box-selected band.
  Eigen::MatrixXd raw;
  switch (basis.basis) {
    case Basis::pca: {
      if (!basis.spectrum)
        fail(Errc::basis_shape_mismatch, "PCA basis data has no spectrum");
      const CovarianceSpectrum& sp = *basis.spectrum;
      std::vector<int> idx;
      for (int i = 0; i < sp.dim(); ++i)
        if (box_passes(spec, static_cast<double>(i))) idx.push_back(i);
      raw.resize(n, static_cast<Eigen::Index>(idx.size()));
      for (Eigen::Index s = 0; s < n; ++s) {
        Eigen::VectorXd xc =
            flatten(samples[static_cast<size_t>(s)]) - sp.mean;
        for (size_t j = 0; j < idx.size(); ++j)
          raw(s, static_cast<Eigen::Index>(j)) =
              sp.eigenvectors.col(idx[j]).dot(xc);
      }
      break;
    }
    case Basis::fourier: {
      std::vector<size_t> bins;
      for (int u = 0; u < basis.height; ++u)
        for (int v = 0; v < basis.width; ++v)
          if (box_passes(spec,
                         frequency_radius(u, v, basis.height, basis.width)))
            bins.push_back(static_cast<size_t>(u) * basis.width + v);
      size_t cols = bins.size() * basis.channels * 2;
      raw.resize(n, static_cast<Eigen::Index>(cols));
      for (Eigen::Index s = 0; s < n; ++s) {
        DftSpectrum sp = dft2(samples[static_cast<size_t>(s)]);
        Eigen::Index c = 0;
        for (size_t b : bins)
          for (int ch = 0; ch < basis.channels; ++ch) {
            const cplx& z = sp.coeff[b * basis.channels + ch];
            raw(s, c++) = z.real();
            raw(s, c++) = z.imag();
          }
      }
      break;
    }
    case Basis::wavelet: {
      WaveletPyramid first = dwt2(samples[0], basis.levels);
      std::vector<std::pair<size_t, size_t>> spans;  // offset, count
      size_t cols = 0;
      for (size_t b = 0; b < first.block_count(); ++b)
        if (box_passes(spec, static_cast<double>(b))) {
          spans.emplace_back(first.blocks[b].offset, first.block_elements(b));
          cols += first.block_elements(b);
        }
      raw.resize(n, static_cast<Eigen::Index>(cols));
      for (Eigen::Index s = 0; s < n; ++s) {
        WaveletPyramid pyr = dwt2(samples[static_cast<size_t>(s)], basis.levels);
        Eigen::Index c = 0;
        for (const auto& [offset, count] : spans)
          for (size_t i = 0; i < count; ++i)
            raw(s, c++) = pyr.coeff[offset + i];
      }
      break;
    }
  }

  if (raw.cols() == 0) return Eigen::MatrixXd(n, 0);
  if (raw.cols() <= max_dims) return raw;

  // Keep the max_dims highest-variance columns, stable order on ties.
  Eigen::RowVectorXd mean = raw.colwise().mean();
  Eigen::VectorXd var =
      (raw.rowwise() - mean).colwise().squaredNorm().transpose() /
      static_cast<double>(n);
  std::vector<Eigen::Index> order(static_cast<size_t>(raw.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return var(a) > var(b);
  });
  order.resize(static_cast<size_t>(max_dims));
  std::sort(order.begin(), order.end());
  Eigen::MatrixXd out(n, max_dims);
  for (int j = 0; j < max_dims; ++j)
    out.col(j) = raw.col(order[static_cast<size_t>(j)]);
  return out;
}

namespace {

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int num_classes) {
  Eigen::MatrixXd y =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                            num_classes);
  for (size_t i = 0; i < labels.size(); ++i)
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return y;
}

GaussianJoint sample_joint(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                           const Eigen::MatrixXd& y) {
  GaussianJoint joint;
  joint.d1 = static_cast<int>(x1.cols());
  joint.d2 = static_cast<int>(x2.cols());
  joint.dy = static_cast<int>(y.cols());
  Eigen::MatrixXd all(x1.rows(), joint.dim());
  all << x1, x2, y;
  Eigen::MatrixXd centered = all.rowwise() - all.colwise().mean();
  joint.cov = centered.transpose() * centered /
              static_cast<double>(all.rows());
  return joint;
}

}  // namespace

PidMatrix pid_matrix(const LabeledDataset& dataset,
                     const std::vector<BandSpec>& bands,
                     const BasisData& basis, int max_dims) {
  dataset.validate();
  if (!dataset.categorical())
    fail(Errc::degenerate_labels, "pid_matrix needs categorical labels");
  if (bands.empty()) fail(Errc::empty_band_list, "no bands given");

  const int b = static_cast<int>(bands.size());
  std::vector<Eigen::MatrixXd> features(static_cast<size_t>(b));
  for (int i = 0; i < b; ++i) {
    features[static_cast<size_t>(i)] =
        band_feature_matrix(dataset.samples, bands[static_cast<size_t>(i)],
                            basis, max_dims);
    if (features[static_cast<size_t>(i)].cols() == 0)
      fail(Errc::empty_band_list,
           "band " + to_string(bands[static_cast<size_t>(i)]) +
               " selects no coefficients");
  }
  Eigen::MatrixXd y = one_hot(dataset.labels, dataset.num_classes);

  PidMatrix grid;
  grid.bands = b;
  grid.cells.resize(static_cast<size_t>(b) * b);
  parallel_for(static_cast<size_t>(b) * b, [&](size_t cell) {
    int i = static_cast<int>(cell) / b;
    int j = static_cast<int>(cell) % b;
    GaussianJoint joint = sample_joint(features[static_cast<size_t>(i)],
                                       features[static_cast<size_t>(j)], y);
    if (i == j) {
      PidResult r;
      r.total = gaussian_mi(joint, {BlockId::x1}, {BlockId::y});
      r.redundant = r.total;
      grid.cells[cell] = r;
    } else {
      grid.cells[cell] = gaussian_pid(joint);
    }
  });
  return grid;
}

}  // namespace specband
