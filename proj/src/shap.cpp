#include "specband/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "specband/bands.hpp"
#include "specband/parallel.hpp"
#include "specband/probes.hpp"
#include "specband/rng.hpp"

namespace specband {

namespace {

constexpr int kMaxExactPlayers = 12;
constexpr int kMaxPlayers = 30;
constexpr int kResampleAttempts = 8;

void check_players(int b) {
  if (b < 1)
    fail(Errc::invalid_range, "player count must be positive, got " +
                                  std::to_string(b));
  if (b > kMaxPlayers)
    fail(Errc::too_many_players,
         "coalition masks support at most " + std::to_string(kMaxPlayers) +
             " players, got " + std::to_string(b));
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Weighted least squares over sampled coalitions with the efficiency
// constraint eliminated by substitution. Rows are strict non-empty subsets.
ShapResult solve_constrained(int b, const std::vector<uint32_t>& masks,
                             const std::vector<double>& weights,
                             const std::vector<double>& values, double v_empty,
                             double v_full) {
  ShapResult result;
  result.base_value = v_empty;
  result.full_value = v_full;
  const double delta = v_full - v_empty;

  if (b == 1) {
    result.phi = {delta};
    return result;
  }

  const int rows = static_cast<int>(masks.size());
  const int cols = b - 1;
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd y(rows);
  for (int r = 0; r < rows; ++r) {
    const uint32_t mask = masks[static_cast<size_t>(r)];
    const double sw = std::sqrt(weights[static_cast<size_t>(r)]);
    const double zb = (mask >> (b - 1)) & 1u ? 1.0 : 0.0;
    for (int i = 0; i < cols; ++i) {
      double zi = (mask >> i) & 1u ? 1.0 : 0.0;
      a(r, i) = sw * (zi - zb);
    }
    y(r) = sw * (values[static_cast<size_t>(r)] - v_empty - zb * delta);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols)
    fail(Errc::degenerate_design,
         "sampled coalition design is rank-deficient");

  Eigen::VectorXd reduced = qr.solve(y);
  result.phi.assign(static_cast<size_t>(b), 0.0);
  double head_sum = 0.0;
  for (int i = 0; i < cols; ++i) {
    result.phi[static_cast<size_t>(i)] = reduced(i);
    head_sum += reduced(i);
  }
  result.phi[static_cast<size_t>(b - 1)] = delta - head_sum;
  result.residual_rms =
      rows > 0 ? std::sqrt((a * reduced - y).squaredNorm() / rows) : 0.0;
  return result;
}

}  // namespace

CoalitionGame::CoalitionGame(int players, std::function<double(uint32_t)> value)
    : players_(players), fn_(std::move(value)) {
  check_players(players);
  if (!fn_) fail(Errc::config_error, "coalition game needs a value function");
}

double CoalitionGame::value(uint32_t mask) {
  mask &= full_mask();
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
  }
  double v = fn_(mask);
  std::lock_guard<std::mutex> lock(mu_);
  cache_[mask] = v;
  return v;
}

size_t CoalitionGame::evaluations() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

std::vector<std::pair<uint32_t, double>> CoalitionGame::evaluation_log()
    const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::pair<uint32_t, double>> log(cache_.begin(), cache_.end());
  std::sort(log.begin(), log.end());
  return log;
}

ShapResult shapley_exact(CoalitionGame& game) {
  const int b = game.players();
  if (b > kMaxExactPlayers)
    fail(Errc::too_many_players,
         "exact enumeration handles at most " +
             std::to_string(kMaxExactPlayers) + " players, got " +
             std::to_string(b));

  const size_t total = size_t{1} << b;
  std::vector<double> vals(total);
  parallel_for(total, [&](size_t mask) {
    vals[mask] = game.value(static_cast<uint32_t>(mask));
  });

  std::vector<double> weight(static_cast<size_t>(b));
  const double bfact = factorial(b);
  for (int s = 0; s < b; ++s)
    weight[static_cast<size_t>(s)] = factorial(s) * factorial(b - s - 1) / bfact;

  ShapResult result;
  result.phi.assign(static_cast<size_t>(b), 0.0);
  for (size_t mask = 0; mask < total; ++mask) {
    const int s = std::popcount(static_cast<uint32_t>(mask));
    for (int i = 0; i < b; ++i) {
      if (mask & (size_t{1} << i)) continue;
      result.phi[static_cast<size_t>(i)] +=
          weight[static_cast<size_t>(s)] *
          (vals[mask | (size_t{1} << i)] - vals[mask]);
    }
  }
  result.base_value = vals[0];
  result.full_value = vals[total - 1];
  result.coalitions_evaluated = total;
  result.evaluation_log = game.evaluation_log();
  return result;
}

ShapResult kernel_shap(CoalitionGame& game, int m, uint64_t seed) {
  const int b = game.players();
  if (m < 2 * b + 2)
    fail(Errc::invalid_range, "kernel_shap needs m >= 2b+2 = " +
                                  std::to_string(2 * b + 2) + ", got " +
                                  std::to_string(m));

  const double v_empty = game.value(0);
  const double v_full = game.value(game.full_mask());
  if (b == 1) {
    ShapResult r = solve_constrained(1, {}, {}, {}, v_empty, v_full);
    r.coalitions_evaluated = game.evaluations();
    r.evaluation_log = game.evaluation_log();
    return r;
  }

  const double interior =
      b >= 31 ? std::numeric_limits<double>::infinity()
              : static_cast<double>((uint64_t{1} << b) - 2);
  std::vector<uint32_t> masks;
  std::vector<double> weights;

  if (static_cast<double>(m - 2) >= interior) {
    // Every strict non-empty coalition once, with its exact kernel weight.
    for (uint32_t mask = 1; mask < game.full_mask(); ++mask) {
      const int s = std::popcount(mask);
      double choose = 1.0;
      for (int i = 0; i < s; ++i)
        choose = choose * (b - i) / (i + 1);
      masks.push_back(mask);
      weights.push_back((b - 1.0) / (choose * s * (b - s)));
    }
    std::vector<double> values(masks.size());
    parallel_for(masks.size(),
                 [&](size_t i) { values[i] = game.value(masks[i]); });
    ShapResult r =
        solve_constrained(b, masks, weights, values, v_empty, v_full);
    r.coalitions_evaluated = game.evaluations();
    r.evaluation_log = game.evaluation_log();
    return r;
  }

  // Size distribution of the Shapley kernel, then paired subset draws.
  std::vector<double> size_cdf(static_cast<size_t>(b - 1));
  double acc = 0.0;
  for (int s = 1; s < b; ++s) {
    acc += 1.0 / (static_cast<double>(s) * (b - s));
    size_cdf[static_cast<size_t>(s - 1)] = acc;
  }
  for (auto& c : size_cdf) c /= acc;

  for (int attempt = 0; attempt < kResampleAttempts; ++attempt) {
    auto eng = make_engine(derive_seed(seed, 0x73686170, attempt));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> order(static_cast<size_t>(b));
    std::iota(order.begin(), order.end(), 0);

    std::unordered_map<uint32_t, double> counts;
    int drawn = 0;
    const int budget = m - 2;
    while (drawn < budget) {
      double u = unif(eng);
      int s = 1;
      while (s < b - 1 && u > size_cdf[static_cast<size_t>(s - 1)]) ++s;
      std::shuffle(order.begin(), order.end(), eng);
      uint32_t mask = 0;
      for (int i = 0; i < s; ++i)
        mask |= uint32_t{1} << order[static_cast<size_t>(i)];
      counts[mask] += 1.0;
      ++drawn;
      if (drawn < budget) {
        counts[game.full_mask() & ~mask] += 1.0;
        ++drawn;
      }
    }

    masks.clear();
    for (const auto& [mask, count] : counts) masks.push_back(mask);
    std::sort(masks.begin(), masks.end());
    weights.clear();
    for (uint32_t mask : masks) weights.push_back(counts[mask]);

    std::vector<double> values(masks.size());
    parallel_for(masks.size(),
                 [&](size_t i) { values[i] = game.value(masks[i]); });
    try {
      ShapResult r =
          solve_constrained(b, masks, weights, values, v_empty, v_full);
      r.coalitions_evaluated = game.evaluations();
      r.evaluation_log = game.evaluation_log();
      return r;
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_design ||
          attempt == kResampleAttempts - 1)
        throw;
    }
  }
  fail(Errc::degenerate_design, "resampling failed to produce a full-rank design");
}

namespace {

constexpr uint64_t kBandProbeSalt = 0x62736870;

LabeledDataset union_projection(const std::vector<LabeledDataset>& projected,
                                uint32_t mask) {
  int first = std::countr_zero(mask);
  LabeledDataset out = projected[static_cast<size_t>(first)];
  for (int i = first + 1; i < 32; ++i) {
    if (!(mask & (1u << i))) continue;
    const LabeledDataset& part = projected[static_cast<size_t>(i)];
    for (size_t s = 0; s < out.samples.size(); ++s) {
      auto& dst = out.samples[s].data;
      const auto& src = part.samples[s].data;
      for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  return out;
}

}  // namespace

ShapResult band_shap(const LabeledDataset& dataset,
                     const std::vector<BandSpec>& bands,
                     const BasisData& basis, const ProbeConfig& probe,
                     const BandShapOptions& options) {
  dataset.validate();
  const int b = static_cast<int>(bands.size());
  if (b < 1) fail(Errc::invalid_range, "band attribution needs >= 1 band");
  if (b > kMaxPlayers)
    fail(Errc::too_many_players,
         "band attribution supports at most " + std::to_string(kMaxPlayers) +
             " bands");
  for (const BandSpec& spec : bands)
    if (spec.basis != basis.basis)
      fail(Errc::dimension_mismatch, "band basis does not match the fitted basis");

  bool all_box = true;
  for (const BandSpec& spec : bands)
    if (spec.smoothing != Smoothing::box) all_box = false;
  if (all_box) {
    size_t total = 0;
    for (const BandSpec& spec : bands)
      total += band_stats(spec, basis).feature_count;
    size_t dim = band_stats(BandSpec::full(basis.basis), basis).feature_count;
    if (total != dim)
      fail(Errc::invalid_range, "bands must partition the basis");
  }

  SplitIndices split =
      dataset.categorical()
          ? stratified_split(dataset.labels, probe.test_fraction, options.seed)
          : train_test_split(dataset.size(), probe.test_fraction,
                             options.seed);
  LabeledDataset train = subset(dataset, split.train);
  LabeledDataset test = subset(dataset, split.test);

  std::vector<LabeledDataset> ptrain(bands.size()), ptest(bands.size());
  parallel_for(bands.size(), [&](size_t i) {
    ptrain[i] = project_dataset(train, bands[i], basis);
    ptest[i] = project_dataset(test, bands[i], basis);
  });

  Metric metric = default_metric(dataset);
  double empty_value = 0.0;
  if (dataset.categorical()) {
    std::vector<int> counts(static_cast<size_t>(train.num_classes), 0);
    for (int y : train.labels) ++counts[static_cast<size_t>(y)];
    int top = *std::max_element(counts.begin(), counts.end());
    empty_value = double(top) / double(train.labels.size());
  } else {
    const TensorImage& shape = train.dense[0].values;
    ProbeModel mean_model;
    mean_model.kind = ProbeKind::ridge;
    size_t d = train.samples[0].data.size();
    size_t t = shape.data.size();
    mean_model.feat_mean = Eigen::VectorXd::Zero(static_cast<int>(d));
    mean_model.feat_std = Eigen::VectorXd::Ones(static_cast<int>(d));
    mean_model.w1 = Eigen::MatrixXd::Zero(static_cast<int>(d),
                                          static_cast<int>(t));
    mean_model.b1 = Eigen::VectorXd::Zero(static_cast<int>(t));
    for (const DenseTarget& target : train.dense)
      for (size_t j = 0; j < t; ++j) mean_model.b1(static_cast<int>(j)) +=
          target.values.data[j];
    mean_model.b1 /= double(train.dense.size());
    mean_model.target_dim = shape.height * shape.width;
    mean_model.target_channels = shape.channels;
    empty_value = -evaluate(mean_model, test, metric);
  }

  bool categorical = dataset.categorical();
  CoalitionGame game(b, [&, metric, categorical,
                         empty_value](uint32_t mask) -> double {
    if (mask == 0) return empty_value;
    LabeledDataset ctrain = union_projection(ptrain, mask);
    LabeledDataset ctest = union_projection(ptest, mask);
    ProbeModel model = train_probe(
        ctrain, probe, derive_seed(options.seed, kBandProbeSalt, mask));
    double v = evaluate(model, ctest, metric);
    return categorical ? v : -v;
  });

  if (options.exact ||
      (b <= kMaxExactPlayers && (1 << b) <= options.m))
    return shapley_exact(game);
  return kernel_shap(game, options.m, options.seed);
}

}  // namespace specband
