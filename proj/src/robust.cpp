#include "specband/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "specband/parallel.hpp"
#include "specband/rng.hpp"
#include "specband/spectrum.hpp"

namespace specband {

namespace {

constexpr uint64_t kBootSalt = 0x62747374;

// Orthonormal basis of the quadratic surface space {1, x, y, x^2, xy, y^2}
// over a patch grid, via Gram-Schmidt on the monomials.
Eigen::MatrixXd quadratic_basis(int patch) {
  const int npix = patch * patch;
  Eigen::MatrixXd raw(npix, 6);
  for (int y = 0; y < patch; ++y)
    for (int x = 0; x < patch; ++x) {
      int r = y * patch + x;
      double cx = x - 0.5 * (patch - 1);
      double cy = y - 0.5 * (patch - 1);
      raw(r, 0) = 1.0;
      raw(r, 1) = cx;
      raw(r, 2) = cy;
      raw(r, 3) = cx * cx;
      raw(r, 4) = cx * cy;
      raw(r, 5) = cy * cy;
    }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q = qr.householderQ();
  return q.leftCols(6);
}

}  // namespace

double estimate_noise(const TensorImage& image, int patch, double quantile) {
  if (patch < 3) fail(Errc::invalid_range, "patch must be at least 3");
  if (quantile <= 0.0 || quantile > 1.0)
    fail(Errc::invalid_range, "quantile must be in (0, 1]");
  if (image.height < patch || image.width < patch)
    fail(Errc::image_too_small,
         "image " + std::to_string(image.height) + "x" +
             std::to_string(image.width) + " is below the patch size " +
             std::to_string(patch));

  const Eigen::MatrixXd basis = quadratic_basis(patch);
  const int npix = patch * patch;
  const int by = image.height / patch;
  const int bx = image.width / patch;

  std::vector<std::pair<double, double>> blocks;  // (score, residual var)
  Eigen::VectorXd v(npix);
  for (int c = 0; c < image.channels; ++c)
    for (int i = 0; i < by; ++i)
      for (int j = 0; j < bx; ++j) {
        for (int y = 0; y < patch; ++y)
          for (int x = 0; x < patch; ++x)
            v(y * patch + x) = image.at(i * patch + y, j * patch + x, c);
        Eigen::VectorXd coef = basis.transpose() * v;
        double total = v.squaredNorm();
        double fit = coef.squaredNorm();
        double mean_part = coef(0) * coef(0);
        double structure = fit - mean_part;
        double residual = (total - fit) / (npix - 6);
        blocks.emplace_back(structure, residual);
      }

  std::sort(blocks.begin(), blocks.end());
  size_t keep = static_cast<size_t>(
      std::ceil(quantile * static_cast<double>(blocks.size())));
  keep = std::clamp(keep, size_t{1}, blocks.size());
  double sum = 0.0;
  for (size_t i = 0; i < keep; ++i) sum += blocks[i].second;
  return sum / static_cast<double>(keep);
}

double subspace_similarity(const Eigen::MatrixXd& v1,
                           const Eigen::MatrixXd& v2,
                           bool paper_normalization) {
  if (v1.rows() != v2.rows() || v1.cols() != v2.cols())
    fail(Errc::dimension_mismatch,
         "subspace similarity needs matching shapes, got " +
             std::to_string(v1.rows()) + "x" + std::to_string(v1.cols()) +
             " vs " + std::to_string(v2.rows()) + "x" +
             std::to_string(v2.cols()));
  const auto d = v1.cols();
  if (d < 1) fail(Errc::invalid_range, "subspaces must have at least 1 column");
  for (const auto* v : {&v1, &v2}) {
    Eigen::MatrixXd gram = v->transpose() * (*v);
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > 1e-6)
      fail(Errc::not_orthonormal, "subspace columns are not orthonormal");
  }
  double fro = (v1.transpose() * v2).norm();
  return paper_normalization ? fro / static_cast<double>(d)
                             : fro / std::sqrt(static_cast<double>(d));
}

SimilarityMatrix bootstrap_stability(const std::vector<TensorImage>& samples,
                                     size_t n, int resamples, int bands,
                                     uint64_t seed) {
  if (samples.empty()) fail(Errc::empty_dataset, "no samples to resample");
  if (n < 1 || n > samples.size())
    fail(Errc::invalid_range, "resample size must be in [1, dataset size]");
  if (resamples < 2)
    fail(Errc::invalid_range, "need at least 2 resamples to compare");

  std::vector<uint64_t> draw_seeds(static_cast<size_t>(resamples));
  for (size_t r = 0; r < draw_seeds.size(); ++r)
    draw_seeds[r] = derive_seed(seed, kBootSalt, r);

  std::vector<CovarianceSpectrum> fits(static_cast<size_t>(resamples));
  parallel_for(static_cast<size_t>(resamples), [&](size_t r) {
    auto eng = make_engine(draw_seeds[r]);
    std::uniform_int_distribution<size_t> pick(0, samples.size() - 1);
    std::vector<TensorImage> draw;
    draw.reserve(n);
    for (size_t i = 0; i < n; ++i) draw.push_back(samples[pick(eng)]);
    fits[r] = fit_pca(draw);
  });

  const auto d = fits[0].eigenvectors.cols();
  if (bands < 1 || bands > d)
    fail(Errc::invalid_range, "band count must be in [1, dimension]");

  SimilarityMatrix out;
  out.resample_seeds = std::move(draw_seeds);
  out.resample_size = n;
  out.resamples = resamples;
  const auto width = d / bands;
  for (int b = 0; b < bands; ++b) {
    int lo = b * static_cast<int>(width);
    int hi = b == bands - 1 ? static_cast<int>(d)
                            : lo + static_cast<int>(width);
    out.band_ranges.emplace_back(lo, hi);
  }

  out.values = Eigen::MatrixXd::Zero(bands, bands);
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < resamples; ++r)
    for (int s = 0; s < resamples; ++s)
      if (r != s) pairs.emplace_back(r, s);

  std::vector<Eigen::MatrixXd> cells(pairs.size());
  parallel_for(pairs.size(), [&](size_t p) {
    const auto [r, s] = pairs[p];
    Eigen::MatrixXd cell(bands, bands);
    for (int i = 0; i < bands; ++i)
      for (int j = 0; j < bands; ++j) {
        auto [ilo, ihi] = out.band_ranges[static_cast<size_t>(i)];
        auto [jlo, jhi] = out.band_ranges[static_cast<size_t>(j)];
        const auto vi =
            fits[static_cast<size_t>(r)].eigenvectors.middleCols(ilo,
                                                                 ihi - ilo);
        const auto vj =
            fits[static_cast<size_t>(s)].eigenvectors.middleCols(jlo,
                                                                 jhi - jlo);
        double fro = (vi.transpose() * vj).norm();
        cell(i, j) = fro / std::sqrt(static_cast<double>(
                               std::min(ihi - ilo, jhi - jlo)));
      }
    cells[p] = cell;
  });
  for (const auto& cell : cells) out.values += cell;
  out.values /= static_cast<double>(pairs.size());
  return out;
}

}  // namespace specband
