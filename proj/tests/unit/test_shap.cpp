#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "specband/probes.hpp"
#include "specband/rng.hpp"
#include "specband/shap.hpp"
#include "specband/synth.hpp"

using namespace specband;

namespace {

std::vector<double> random_game_table(int b, uint64_t seed) {
  auto eng = make_engine(seed);
  std::uniform_real_distribution<double> unif(-1.0, 2.0);
  std::vector<double> table(size_t{1} << b);
  for (auto& v : table) v = unif(eng);
  return table;
}

CoalitionGame table_game(int b, const std::vector<double>& table) {
  return CoalitionGame(b, [&table](uint32_t mask) { return table[mask]; });
}

// Independent oracle: the Shapley value as an average of marginal
// contributions over every permutation of the players.
std::vector<double> permutation_oracle(int b, const std::vector<double>& v) {
  std::vector<int> perm(static_cast<size_t>(b));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> phi(static_cast<size_t>(b), 0.0);
  size_t count = 0;
  do {
    uint32_t mask = 0;
    for (int player : perm) {
      uint32_t with = mask | (uint32_t{1} << player);
      phi[static_cast<size_t>(player)] += v[with] - v[mask];
      mask = with;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& p : phi) p /= static_cast<double>(count);
  return phi;
}

double sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_CASE("shapley_exact matches the permutation oracle") {
  for (uint64_t seed : {11u, 12u, 13u}) {
    auto table = random_game_table(7, seed);
    auto oracle = permutation_oracle(7, table);
    CoalitionGame game = table_game(7, table);
    ShapResult r = shapley_exact(game);
    REQUIRE(r.phi.size() == 7);
    for (int i = 0; i < 7; ++i)
      CHECK(r.phi[static_cast<size_t>(i)] ==
            doctest::Approx(oracle[static_cast<size_t>(i)]).epsilon(1e-9));
    CHECK(sum(r.phi) ==
          doctest::Approx(r.full_value - r.base_value).epsilon(1e-9));
  }
}

TEST_CASE("shapley_exact additive game") {
  const double c[3] = {1.0, 2.0, 3.0};
  CoalitionGame game(3, [&c](uint32_t mask) {
    double v = 0;
    for (int i = 0; i < 3; ++i)
      if (mask & (1u << i)) v += c[i];
    return v;
  });
  ShapResult r = shapley_exact(game);
  CHECK(r.phi[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.phi[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.phi[2] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("shapley_exact symmetric game") {
  CoalitionGame game(4, [](uint32_t mask) {
    double s = std::popcount(mask);
    return s * s;
  });
  ShapResult r = shapley_exact(game);
  for (double phi : r.phi) CHECK(phi == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("shapley_exact null player gets zero") {
  // Player 2 never changes the value.
  CoalitionGame game(4, [](uint32_t mask) {
    uint32_t active = mask & ~(1u << 2);
    return static_cast<double>(std::popcount(active)) * 1.5 +
           ((active & 1u) ? 0.7 : 0.0);
  });
  ShapResult r = shapley_exact(game);
  CHECK(std::abs(r.phi[2]) < 1e-9);
}

TEST_CASE("shapley_exact rejects too many players") {
  try {
    CoalitionGame game(13, [](uint32_t) { return 0.0; });
    shapley_exact(game);
    FAIL("expected TooManyPlayers");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_many_players);
  }
}

TEST_CASE("kernel_shap with every coalition matches exact enumeration") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto table = random_game_table(8, 100 + seed);
    CoalitionGame g1 = table_game(8, table);
    CoalitionGame g2 = table_game(8, table);
    ShapResult exact = shapley_exact(g1);
    ShapResult kernel = kernel_shap(g2, 256, seed);
    for (int i = 0; i < 8; ++i)
      CHECK(std::abs(kernel.phi[static_cast<size_t>(i)] -
                     exact.phi[static_cast<size_t>(i)]) < 1e-6);
  }
}

TEST_CASE("kernel_shap efficiency holds for any m and seed") {
  auto table = random_game_table(8, 7);
  for (int m : {18, 30, 64, 200}) {
    for (uint64_t seed : {0u, 5u, 9u}) {
      CoalitionGame game = table_game(8, table);
      ShapResult r = kernel_shap(game, m, seed);
      CHECK(std::abs(sum(r.phi) - (r.full_value - r.base_value)) < 1e-9);
    }
  }
}

TEST_CASE("kernel_shap recovers an additive game at minimal sample count") {
  const double c[5] = {0.3, -1.2, 2.0, 0.05, 0.9};
  for (uint64_t seed : {1u, 2u, 3u}) {
    CoalitionGame game(5, [&c](uint32_t mask) {
      double v = 0.25;
      for (int i = 0; i < 5; ++i)
        if (mask & (1u << i)) v += c[i];
      return v;
    });
    ShapResult r = kernel_shap(game, 12, seed);
    for (int i = 0; i < 5; ++i)
      CHECK(r.phi[static_cast<size_t>(i)] ==
            doctest::Approx(c[i]).epsilon(1e-6));
  }
}

TEST_CASE("kernel_shap error improves as the sample budget doubles") {
  auto table = random_game_table(8, 42);
  CoalitionGame g = table_game(8, table);
  ShapResult exact = shapley_exact(g);

  auto mean_abs_err = [&](int m) {
    double total = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
      CoalitionGame game = table_game(8, table);
      ShapResult r = kernel_shap(game, m, 900 + seed);
      for (int i = 0; i < 8; ++i)
        total += std::abs(r.phi[static_cast<size_t>(i)] -
                          exact.phi[static_cast<size_t>(i)]);
    }
    return total / (5.0 * 8.0);
  };

  double e1 = mean_abs_err(24);
  double e2 = mean_abs_err(48);
  double e3 = mean_abs_err(96);
  double e4 = mean_abs_err(192);
  CHECK(e2 <= e1);
  CHECK(e3 <= e2);
  CHECK(e4 <= e3);
  CHECK(e4 < 0.3 * e1);
}

TEST_CASE("kernel_shap is deterministic per seed") {
  auto table = random_game_table(6, 3);
  CoalitionGame g1 = table_game(6, table);
  CoalitionGame g2 = table_game(6, table);
  ShapResult a = kernel_shap(g1, 20, 77);
  ShapResult b = kernel_shap(g2, 20, 77);
  for (int i = 0; i < 6; ++i)
    CHECK(a.phi[static_cast<size_t>(i)] == b.phi[static_cast<size_t>(i)]);
}

TEST_CASE("kernel_shap rejects undersized budgets") {
  auto table = random_game_table(6, 4);
  CoalitionGame game = table_game(6, table);
  try {
    kernel_shap(game, 13, 0);
    FAIL("expected InvalidRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_range);
  }
}

TEST_CASE("coalition game caches and logs evaluations") {
  std::atomic<int> calls{0};
  CoalitionGame game(4, [&calls](uint32_t mask) {
    calls.fetch_add(1);
    return static_cast<double>(std::popcount(mask));
  });
  CHECK(game.value(0b1010) == 2.0);
  CHECK(game.value(0b1010) == 2.0);
  CHECK(calls.load() == 1);
  CHECK(game.evaluations() == 1);

  shapley_exact(game);
  CHECK(game.evaluations() == 16);
  auto log = game.evaluation_log();
  CHECK(log.size() == 16);
  CHECK(log.front().first == 0u);
  CHECK(log.back().first == 0b1111u);
}

namespace {

// Classification set whose labels depend only on the coefficient of one
// eigendirection, placed so that it falls inside the second PCA band.
LabeledDataset single_band_labels(int n, uint64_t seed, bool shuffle_labels) {
  const int d = 16;
  auto eng = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = dist(eng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();

  Eigen::VectorXd scale(d);
  for (int j = 0; j < d; ++j) scale(j) = std::pow(2.5, -0.5 * j);

  LabeledDataset ds;
  ds.num_classes = 2;
  while (static_cast<int>(ds.samples.size()) < n) {
    Eigen::VectorXd c(d);
    for (int j = 0; j < d; ++j) c(j) = scale(j) * dist(eng);
    if (std::abs(c(4)) < 0.5 * scale(4)) continue;
    Eigen::VectorXd x = q * c;
    TensorImage img(4, 4, 1);
    for (int j = 0; j < d; ++j) img.data[static_cast<size_t>(j)] = x(j);
    ds.samples.push_back(img);
    ds.labels.push_back(c(4) > 0.0 ? 1 : 0);
  }
  if (shuffle_labels) {
    auto shuf = make_engine(derive_seed(seed, 0x70657273));
    std::shuffle(ds.labels.begin(), ds.labels.end(), shuf);
  }
  return ds;
}

std::vector<BandSpec> pca_partition(int d, int bands) {
  std::vector<BandSpec> specs;
  int width = d / bands;
  for (int i = 0; i < bands; ++i) {
    int lo = i * width;
    int hi = (i == bands - 1) ? d : lo + width;
    specs.push_back(BandSpec::range(Basis::pca, lo, hi));
  }
  return specs;
}

}  // namespace

TEST_CASE("band attribution concentrates on the informative band") {
  LabeledDataset data = single_band_labels(800, 77, false);
  BasisData basis = fit_basis(data.samples, Basis::pca);
  std::vector<BandSpec> bands = pca_partition(16, 5);

  BandShapOptions options;
  options.exact = true;
  options.seed = 5;
  ShapResult result = band_shap(data, bands, basis, {}, options);

  REQUIRE(result.phi.size() == 5);
  double total = std::accumulate(result.phi.begin(), result.phi.end(), 0.0);
  CHECK(total > 0.2);
  CHECK(result.phi[1] >= 0.9 * total);
  CHECK(std::abs(total - (result.full_value - result.base_value)) < 1e-9);
  CHECK(result.evaluation_log.size() == 32);
}

TEST_CASE("band attribution vanishes when labels are shuffled") {
  LabeledDataset data = single_band_labels(800, 78, true);
  BasisData basis = fit_basis(data.samples, Basis::pca);
  std::vector<BandSpec> bands = pca_partition(16, 5);

  BandShapOptions options;
  options.exact = true;
  options.seed = 5;
  ShapResult result = band_shap(data, bands, basis, {}, options);

  double chance_sd = std::sqrt(0.25 / 100.0);
  for (double phi : result.phi) CHECK(std::abs(phi) < 2.0 * chance_sd);
}

TEST_CASE("head band earns the largest attribution on digits") {
  DigitsSpec spec;
  spec.n = 800;
  LabeledDataset data = synth_digits(spec, 17);
  BasisData basis = fit_basis(data.samples, Basis::pca);
  std::vector<BandSpec> bands = pca_partition(64, 10);

  BandShapOptions options;
  options.m = 160;
  options.seed = 3;
  ShapResult result = band_shap(data, bands, basis, {}, options);

  REQUIRE(result.phi.size() == 10);
  size_t best = 0;
  for (size_t i = 1; i < result.phi.size(); ++i)
    if (result.phi[i] > result.phi[best]) best = i;
  CHECK(best == 0);
}

TEST_CASE("band attribution rejects a non-partition") {
  LabeledDataset data = single_band_labels(120, 79, false);
  BasisData basis = fit_basis(data.samples, Basis::pca);
  std::vector<BandSpec> bands = pca_partition(16, 5);
  bands.pop_back();
  try {
    band_shap(data, bands, basis, {}, {});
    FAIL("expected InvalidRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_range);
  }
}
