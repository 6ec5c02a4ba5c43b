#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "specband/rng.hpp"
#include "specband/robust.hpp"
#include "specband/spectrum.hpp"
#include "specband/synth.hpp"

using namespace specband;

namespace {

Eigen::MatrixXd random_orthonormal_cols(int rows, int cols, uint64_t seed) {
  auto eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = dist(eng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

}  // namespace

TEST_CASE("noise estimate recovers injected variance on flat images") {
  double sum = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    TensorImage img = synth_flat(64, 64, 1, 10.0);
    add_awgn(img, 2.0, seed);
    sum += estimate_noise(img);
  }
  double mean = sum / 20.0;
  CHECK(mean > 3.6);
  CHECK(mean < 4.4);
}

TEST_CASE("noiseless smooth surfaces score as clean") {
  TensorImage grad(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      grad.at(y, x, 0) = 2.0 + 0.3 * x + 0.7 * y + 0.01 * x * y;
  CHECK(estimate_noise(grad) < 0.01);
}

TEST_CASE("noise estimate scales with squared intensity") {
  TensorImage img = synth_flat(64, 64, 1, 0.0);
  add_awgn(img, 1.5, 3);
  double base = estimate_noise(img);
  TensorImage scaled = img;
  for (auto& v : scaled.data) v *= 3.0;
  double big = estimate_noise(scaled);
  CHECK(big == doctest::Approx(9.0 * base).epsilon(1e-9));
}

TEST_CASE("noise estimate survives textured content") {
  double sum = 0.0;
  for (uint64_t seed = 100; seed < 120; ++seed) {
    TensorImage img = synth_texture(64, 64, 1, seed);
    add_awgn(img, 1.0, seed + 1000);
    sum += estimate_noise(img);
  }
  double mean = sum / 20.0;
  CHECK(mean > 0.8);
  CHECK(mean < 1.2);
}

TEST_CASE("noise estimate rejects undersized images") {
  TensorImage tiny = synth_flat(4, 4, 1, 0.0);
  try {
    estimate_noise(tiny);
    FAIL("expected ImageTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::image_too_small);
  }
  try {
    estimate_noise(synth_flat(16, 16, 1, 0.0), 8, 0.0);
    FAIL("expected InvalidRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_range);
  }
}

TEST_CASE("identical subspaces score 1 under any rotation") {
  Eigen::MatrixXd v = random_orthonormal_cols(20, 5, 7);
  CHECK(subspace_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::MatrixXd q = random_orthonormal_cols(5, 5, 8);
  Eigen::MatrixXd rotated = v * q;
  CHECK(subspace_similarity(v, rotated) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(subspace_similarity(rotated, v) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("orthogonal subspaces score 0") {
  Eigen::MatrixXd big = random_orthonormal_cols(16, 8, 9);
  Eigen::MatrixXd v1 = big.leftCols(4);
  Eigen::MatrixXd v2 = big.rightCols(4);
  CHECK(subspace_similarity(v1, v2) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("similarity is rotation-invariant on both sides") {
  Eigen::MatrixXd v1 = random_orthonormal_cols(24, 6, 10);
  Eigen::MatrixXd v2 = random_orthonormal_cols(24, 6, 11);
  double base = subspace_similarity(v1, v2);
  for (uint64_t s = 0; s < 3; ++s) {
    Eigen::MatrixXd q1 = random_orthonormal_cols(6, 6, 100 + s);
    Eigen::MatrixXd q2 = random_orthonormal_cols(6, 6, 200 + s);
    CHECK(std::abs(subspace_similarity(v1 * q1, v2 * q2) - base) < 1e-9);
  }
}

TEST_CASE("random subspace similarity matches its expectation") {
  const int ambient = 24, d = 6, draws = 100;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    Eigen::MatrixXd v1 =
        random_orthonormal_cols(ambient, d, 1000 + 2 * static_cast<uint64_t>(i));
    Eigen::MatrixXd v2 =
        random_orthonormal_cols(ambient, d, 1001 + 2 * static_cast<uint64_t>(i));
    double s = subspace_similarity(v1, v2);
    sum += s * s;
    sumsq += s * s * s * s;
  }
  double mean = sum / draws;
  double var = sumsq / draws - mean * mean;
  double se = std::sqrt(var / draws);
  double expected = static_cast<double>(d) / ambient;
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("paper normalization differs by sqrt d") {
  Eigen::MatrixXd v = random_orthonormal_cols(12, 4, 14);
  double ours = subspace_similarity(v, v);
  double paper = subspace_similarity(v, v, true);
  CHECK(paper == doctest::Approx(ours / 2.0).epsilon(1e-12));
}

TEST_CASE("similarity rejects bad inputs") {
  Eigen::MatrixXd v = random_orthonormal_cols(10, 3, 15);
  Eigen::MatrixXd skewed = v;
  skewed.col(0) *= 1.1;
  try {
    subspace_similarity(v, skewed);
    FAIL("expected NotOrthonormal");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_orthonormal);
  }
  Eigen::MatrixXd other = random_orthonormal_cols(10, 4, 16);
  try {
    subspace_similarity(v, other);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
}

TEST_CASE("a fit compared with itself has unit diagonal bands") {
  std::vector<TensorImage> data = synth_spiked(200, 4, 4, {8.0, 5.0}, 1.0, 21);
  CovarianceSpectrum fit = fit_pca(data);
  for (int b = 0; b < 4; ++b) {
    Eigen::MatrixXd band = fit.eigenvectors.middleCols(4 * b, 4);
    CHECK(subspace_similarity(band, band) ==
          doctest::Approx(1.0).epsilon(1e-9));
    for (int other = 0; other < 4; ++other) {
      if (other == b) continue;
      Eigen::MatrixXd ob = fit.eigenvectors.middleCols(4 * other, 4);
      CHECK(subspace_similarity(band, ob) ==
            doctest::Approx(0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("spiked data keeps its head band stable") {
  std::vector<double> spikes = {60.0, 52.0, 45.0, 39.0,
                                34.0, 29.0, 25.0, 21.0};
  std::vector<TensorImage> data = synth_spiked(500, 8, 8, spikes, 0.4, 33);
  SimilarityMatrix sim = bootstrap_stability(data, 400, 8, 8, 5);

  REQUIRE(sim.values.rows() == 8);
  CHECK(sim.resamples == 8);
  CHECK(sim.resample_size == 400);
  REQUIRE(sim.resample_seeds.size() == 8);
  for (size_t a = 0; a < sim.resample_seeds.size(); ++a)
    for (size_t b = a + 1; b < sim.resample_seeds.size(); ++b)
      CHECK(sim.resample_seeds[a] != sim.resample_seeds[b]);
  CHECK(sim.band_ranges.front() == std::pair<int, int>{0, 8});
  CHECK(sim.band_ranges.back() == std::pair<int, int>{56, 64});

  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(sim.values(i, j) >= -1e-12);
      CHECK(sim.values(i, j) <= 1.0 + 1e-9);
      CHECK(std::abs(sim.values(i, j) - sim.values(j, i)) < 1e-9);
    }

  double head = sim.values(0, 0);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) CHECK(head > sim.values(i, j));
  CHECK(head > sim.values(7, 7));
  CHECK(head > 0.9);
}

TEST_CASE("isotropic data prefers neither end of the spectrum") {
  // Edge bands of a sorted sample spectrum are mildly more stable than
  // mid-spectrum bands even without structure (wider eigenvalue gaps at
  // the edges), so the isotropy statement is symmetry, not flatness.
  auto eng = make_engine(44);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd band_mean = Eigen::VectorXd::Zero(4);
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    std::vector<TensorImage> data;
    for (int i = 0; i < 240; ++i) {
      TensorImage img(4, 4, 1);
      for (auto& v : img.data) v = dist(eng);
      data.push_back(img);
    }
    SimilarityMatrix sim =
        bootstrap_stability(data, 200, 6, 4, 900 + static_cast<uint64_t>(s));
    for (int b = 0; b < 4; ++b) band_mean(b) += sim.values(b, b);
  }
  band_mean /= seeds;
  CHECK(std::abs(band_mean(0) - band_mean(3)) < 0.05);
  CHECK(std::abs(band_mean(1) - band_mean(2)) < 0.05);
  CHECK(band_mean.maxCoeff() - band_mean.minCoeff() < 0.2);
}

TEST_CASE("bootstrap stability validates its arguments") {
  std::vector<TensorImage> data = synth_spiked(50, 4, 4, {3.0}, 1.0, 70);
  try {
    bootstrap_stability(data, 100, 8, 4, 0);
    FAIL("expected InvalidRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_range);
  }
  try {
    bootstrap_stability({}, 10, 8, 4, 0);
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_dataset);
  }
}
