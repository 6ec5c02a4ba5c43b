#include "specband/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "specband/parallel.hpp"
#include "specband/rng.hpp"
#include "specband/spectrum.hpp"

namespace specband {

namespace {

constexpr uint64_t kSplitSalt = 0x73706c69;
constexpr uint64_t kProbeSalt = 0x70726f62;

Eigen::MatrixXd normalize_with(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& std) {
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

Eigen::MatrixXd one_hot_matrix(const std::vector<int>& labels, int k) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(labels.size()), k);
  for (size_t i = 0; i < labels.size(); ++i)
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return y;
}

// Row-wise softmax with the usual max-shift for stability.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double cross_entropy(const Eigen::MatrixXd& z, const std::vector<int>& labels) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    loss += lse - z(r, labels[static_cast<size_t>(r)]);
  }
  return loss / static_cast<double>(z.rows());
}

void check_finite_loss(double loss) {
  if (!std::isfinite(loss))
    fail(Errc::non_finite_loss, "training loss became non-finite");
}

void train_logistic(ProbeModel& model, const Eigen::MatrixXd& xn,
                    const std::vector<int>& labels) {
  const int n = static_cast<int>(xn.rows());
  const int d = static_cast<int>(xn.cols());
  const int k = model.num_classes;
  const double lambda = model.config.l2;

  Eigen::MatrixXd y = one_hot_matrix(labels, k);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);

  auto loss_at = [&](const Eigen::MatrixXd& wc, const Eigen::VectorXd& bc) {
    Eigen::MatrixXd z = (xn * wc).rowwise() + bc.transpose();
    return cross_entropy(z, labels) + 0.5 * lambda * wc.squaredNorm();
  };

  double lr = 1.0;
  double loss = loss_at(w, b);
  check_finite_loss(loss);
  for (int iter = 0; iter < model.config.max_iters; ++iter) {
    Eigen::MatrixXd z = (xn * w).rowwise() + b.transpose();
    Eigen::MatrixXd diff = softmax_rows(z) - y;
    Eigen::MatrixXd gw = xn.transpose() * diff / n + lambda * w;
    Eigen::VectorXd gb = diff.colwise().sum().transpose() / n;
    double gnorm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
    if (gnorm < model.config.grad_tol) break;

    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      Eigen::MatrixXd wn = w - lr * gw;
      Eigen::VectorXd bn = b - lr * gb;
      double cand = loss_at(wn, bn);
      check_finite_loss(cand);
      if (cand <= loss) {
        w = std::move(wn);
        b = std::move(bn);
        loss = cand;
        lr = std::min(lr * 1.1, 1e3);
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
  }
  model.w1 = std::move(w);
  model.b1 = std::move(b);
}

void train_mlp(ProbeModel& model, const Eigen::MatrixXd& xn,
               const std::vector<int>& labels, uint64_t seed) {
  const int n = static_cast<int>(xn.rows());
  const int d = static_cast<int>(xn.cols());
  const int h = model.config.mlp_hidden;
  const int k = model.num_classes;

  auto eng = make_engine(derive_seed(seed, 0x6d6c70));
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd w1(d, h), w2(h, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < h; ++j) w1(i, j) = dist(eng) * std::sqrt(2.0 / d);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < k; ++j) w2(i, j) = dist(eng) * std::sqrt(2.0 / h);
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(k);

  Eigen::MatrixXd y = one_hot_matrix(labels, k);
  Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(d, h), vw1 = mw1;
  Eigen::MatrixXd mw2 = Eigen::MatrixXd::Zero(h, k), vw2 = mw2;
  Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(h), vb1 = mb1;
  Eigen::VectorXd mb2 = Eigen::VectorXd::Zero(k), vb2 = mb2;

  const double lr = model.config.mlp_lr;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  auto adam = [&](auto& param, auto& m, auto& v, const auto& grad, int t) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v.array().matrix() +
        (1.0 - beta2) * grad.array().square().matrix();
    double c1 = 1.0 - std::pow(beta1, t);
    double c2 = 1.0 - std::pow(beta2, t);
    param.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };

  for (int epoch = 1; epoch <= model.config.mlp_epochs; ++epoch) {
    Eigen::MatrixXd a1 = ((xn * w1).rowwise() + b1.transpose()).cwiseMax(0.0);
    Eigen::MatrixXd z2 = (a1 * w2).rowwise() + b2.transpose();
    check_finite_loss(cross_entropy(z2, labels));

    Eigen::MatrixXd dz2 = (softmax_rows(z2) - y) / n;
    Eigen::MatrixXd gw2 = a1.transpose() * dz2;
    Eigen::VectorXd gb2 = dz2.colwise().sum().transpose();
    Eigen::MatrixXd da1 =
        (dz2 * w2.transpose()).cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
    Eigen::MatrixXd gw1 = xn.transpose() * da1;
    Eigen::VectorXd gb1 = da1.colwise().sum().transpose();

    adam(w1, mw1, vw1, gw1, epoch);
    adam(b1, mb1, vb1, gb1, epoch);
    adam(w2, mw2, vw2, gw2, epoch);
    adam(b2, mb2, vb2, gb2, epoch);
  }
  model.w1 = std::move(w1);
  model.b1 = std::move(b1);
  model.w2 = std::move(w2);
  model.b2 = std::move(b2);
}

void train_ridge(ProbeModel& model, const Eigen::MatrixXd& xn,
                 const LabeledDataset& train) {
  const int n = static_cast<int>(xn.rows());
  const int d = static_cast<int>(xn.cols());
  const TensorImage& t0 = train.dense.front().values;
  const int tdim = t0.height * t0.width * t0.channels;
  model.target_dim = tdim;
  model.target_channels = t0.channels;

  Eigen::MatrixXd y(n, tdim);
  for (int i = 0; i < n; ++i) {
    const auto& values = train.dense[static_cast<size_t>(i)].values;
    if (values.height != t0.height || values.width != t0.width ||
        values.channels != t0.channels)
      fail(Errc::dimension_mismatch, "dense targets must share one shape");
    y.row(i) = flatten(values).transpose();
  }

  Eigen::VectorXd ymean = y.colwise().mean();
  Eigen::MatrixXd yc = y.rowwise() - ymean.transpose();
  Eigen::MatrixXd gram = xn.transpose() * xn / n;
  const double lambda = model.config.ridge_lambda;
  if (lambda <= 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < d)
      fail(Errc::singular_ridge_system,
           "unregularized normal equations are singular");
  }
  Eigen::MatrixXd lhs = gram + lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(lhs);
  if (llt.info() != Eigen::Success)
    fail(Errc::singular_ridge_system, "ridge normal equations not PD");
  model.w1 = llt.solve(xn.transpose() * yc / n);
  model.b1 = ymean;
  if (!model.w1.allFinite())
    fail(Errc::singular_ridge_system, "ridge solution is non-finite");
}

}  // namespace

const char* probe_kind_name(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::logistic: return "logistic";
    case ProbeKind::mlp: return "mlp";
    case ProbeKind::ridge: return "ridge";
  }
  return "?";
}

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::mae: return "mae";
    case Metric::aee: return "aee";
  }
  return "?";
}

ProbeKind parse_probe_kind(const std::string& text) {
  if (text == "logistic") return ProbeKind::logistic;
  if (text == "mlp") return ProbeKind::mlp;
  if (text == "ridge") return ProbeKind::ridge;
  fail(Errc::config_error, "unknown probe kind '" + text + "'");
}

Metric parse_metric(const std::string& text) {
  if (text == "accuracy") return Metric::accuracy;
  if (text == "mae") return Metric::mae;
  if (text == "aee") return Metric::aee;
  fail(Errc::config_error, "unknown metric '" + text + "'");
}

Eigen::MatrixXd ProbeModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != feat_mean.size())
    fail(Errc::dimension_mismatch,
         "probe expects " + std::to_string(feat_mean.size()) +
             " features, got " + std::to_string(x.cols()));
  Eigen::MatrixXd xn = normalize_with(x, feat_mean, feat_std);
  if (kind == ProbeKind::mlp) {
    Eigen::MatrixXd a1 = ((xn * w1).rowwise() + b1.transpose()).cwiseMax(0.0);
    return (a1 * w2).rowwise() + b2.transpose();
  }
  return (xn * w1).rowwise() + b1.transpose();
}

std::vector<int> ProbeModel::predict_labels(const Eigen::MatrixXd& x) const {
  if (num_classes < 2)
    fail(Errc::metric_target_mismatch, "probe has no class outputs");
  Eigen::MatrixXd z = predict(x);
  std::vector<int> out(static_cast<size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index best = 0;
    z.row(r).maxCoeff(&best);
    out[static_cast<size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

SplitIndices train_test_split(size_t n, double test_fraction, uint64_t seed) {
  if (n < 2) fail(Errc::too_few_samples, "need at least 2 samples to split");
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    fail(Errc::invalid_range, "test fraction must lie in (0, 1)");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  auto eng = make_engine(derive_seed(seed, kSplitSalt));
  std::shuffle(order.begin(), order.end(), eng);
  size_t test_count = static_cast<size_t>(
      std::lround(test_fraction * static_cast<double>(n)));
  test_count = std::clamp<size_t>(test_count, 1, n - 1);
  SplitIndices split;
  split.test.assign(order.begin(),
                    order.begin() + static_cast<ptrdiff_t>(test_count));
  split.train.assign(order.begin() + static_cast<ptrdiff_t>(test_count),
                     order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitIndices stratified_split(const std::vector<int>& labels,
                              double test_fraction, uint64_t seed) {
  if (labels.size() < 2)
    fail(Errc::too_few_samples, "need at least 2 samples to split");
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    fail(Errc::invalid_range, "test fraction must lie in (0, 1)");
  int k = 0;
  for (int label : labels) k = std::max(k, label + 1);
  std::vector<std::vector<size_t>> byclass(static_cast<size_t>(k));
  for (size_t i = 0; i < labels.size(); ++i)
    byclass[static_cast<size_t>(labels[i])].push_back(i);

  SplitIndices split;
  for (size_t c = 0; c < byclass.size(); ++c) {
    auto& members = byclass[c];
    if (members.empty()) continue;
    auto eng = make_engine(derive_seed(seed, kSplitSalt, c));
    std::shuffle(members.begin(), members.end(), eng);
    size_t test_count = static_cast<size_t>(std::lround(
        test_fraction * static_cast<double>(members.size())));
    if (members.size() > 1)
      test_count = std::clamp<size_t>(test_count, 1, members.size() - 1);
    else
      test_count = 0;
    for (size_t i = 0; i < members.size(); ++i)
      (i < test_count ? split.test : split.train).push_back(members[i]);
  }
  if (split.train.empty() || split.test.empty())
    fail(Errc::too_few_samples, "split produced an empty side");
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

LabeledDataset subset(const LabeledDataset& dataset,
                      const std::vector<size_t>& indices) {
  LabeledDataset out;
  out.num_classes = dataset.num_classes;
  for (size_t i : indices) {
    out.samples.push_back(dataset.samples.at(i));
    if (!dataset.labels.empty()) out.labels.push_back(dataset.labels.at(i));
    if (!dataset.dense.empty()) out.dense.push_back(dataset.dense.at(i));
  }
  return out;
}

Eigen::MatrixXd design_matrix(const std::vector<TensorImage>& samples) {
  if (samples.empty()) fail(Errc::empty_dataset, "no samples");
  const auto& first = samples.front();
  const int d = first.height * first.width * first.channels;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), d);
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].same_shape(first))
      fail(Errc::dimension_mismatch, "samples must share one shape");
    x.row(static_cast<Eigen::Index>(i)) = flatten(samples[i]).transpose();
  }
  return x;
}

ProbeModel train_probe(const LabeledDataset& train, const ProbeConfig& config,
                       uint64_t seed) {
  train.validate();
  const bool classification = train.categorical();
  if (classification) {
    if (train.num_classes < 2)
      fail(Errc::degenerate_labels, "need at least 2 classes");
    if (config.kind == ProbeKind::ridge)
      fail(Errc::metric_target_mismatch,
           "ridge probe needs dense targets, got categorical labels");
  } else {
    if (train.dense.size() != train.samples.size())
      fail(Errc::metric_target_mismatch, "dense targets missing");
    if (config.kind != ProbeKind::ridge)
      fail(Errc::metric_target_mismatch,
           "classification probe needs categorical labels");
  }

  Eigen::MatrixXd x = design_matrix(train.samples);
  ProbeModel model;
  model.kind = config.kind;
  model.config = config;
  model.seed = seed;
  model.num_classes = classification ? train.num_classes : 0;
  model.feat_mean = x.colwise().mean();
  Eigen::VectorXd var = (x.rowwise() - model.feat_mean.transpose())
                            .array()
                            .square()
                            .colwise()
                            .mean();
  model.feat_std = var.array().sqrt();
  for (Eigen::Index i = 0; i < model.feat_std.size(); ++i)
    if (model.feat_std(i) < 1e-12) model.feat_std(i) = 1.0;

  Eigen::MatrixXd xn = normalize_with(x, model.feat_mean, model.feat_std);
  switch (config.kind) {
    case ProbeKind::logistic:
      train_logistic(model, xn, train.labels);
      break;
    case ProbeKind::mlp:
      train_mlp(model, xn, train.labels, seed);
      break;
    case ProbeKind::ridge:
      train_ridge(model, xn, train);
      break;
  }
  return model;
}

Metric default_metric(const LabeledDataset& dataset) {
  if (dataset.categorical()) return Metric::accuracy;
  if (!dataset.dense.empty() && dataset.dense.front().values.channels == 2)
    return Metric::aee;
  return Metric::mae;
}

double evaluate(const ProbeModel& model, const LabeledDataset& data,
                Metric metric) {
  data.validate();
  if (metric == Metric::accuracy) {
    if (!data.categorical() || model.num_classes < 2)
      fail(Errc::metric_target_mismatch,
           "accuracy needs categorical labels and a classification probe");
    Eigen::MatrixXd x = design_matrix(data.samples);
    std::vector<int> pred = model.predict_labels(x);
    size_t correct = 0;
    for (size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
  }

  if (data.dense.size() != data.samples.size() || model.target_dim == 0)
    fail(Errc::metric_target_mismatch,
         "dense metric needs dense targets and a regression probe");
  const TensorImage& t0 = data.dense.front().values;
  if (t0.height * t0.width * t0.channels != model.target_dim)
    fail(Errc::metric_target_mismatch, "target shape mismatch");
  if (metric == Metric::aee && t0.channels != 2)
    fail(Errc::metric_target_mismatch, "aee needs 2-channel targets");

  Eigen::MatrixXd x = design_matrix(data.samples);
  Eigen::MatrixXd pred = model.predict(x);
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < data.dense.size(); ++i) {
    const DenseTarget& target = data.dense[i];
    const auto& values = target.values;
    for (int yy = 0; yy < values.height; ++yy)
      for (int xx = 0; xx < values.width; ++xx) {
        if (!target.pixel_valid(yy, xx)) continue;
        if (metric == Metric::mae) {
          for (int c = 0; c < values.channels; ++c) {
            int col = (yy * values.width + xx) * values.channels + c;
            total += std::abs(pred(static_cast<Eigen::Index>(i), col) -
                              values.at(yy, xx, c));
            ++count;
          }
        } else {
          int col = (yy * values.width + xx) * 2;
          double d0 = pred(static_cast<Eigen::Index>(i), col) -
                      values.at(yy, xx, 0);
          double d1 = pred(static_cast<Eigen::Index>(i), col + 1) -
                      values.at(yy, xx, 1);
          total += std::sqrt(d0 * d0 + d1 * d1);
          ++count;
        }
      }
  }
  if (count == 0)
    fail(Errc::metric_target_mismatch, "no valid pixels to score");
  return total / static_cast<double>(count);
}

namespace {

std::vector<TensorImage> project_all(const std::vector<TensorImage>& samples,
                                     const BandSpec& spec,
                                     const BasisData& basis) {
  std::vector<TensorImage> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i)
    out[i] = project_band(samples[i], spec, basis);
  return out;
}

}  // namespace

SweepReport band_predictivity_sweep(const LabeledDataset& dataset,
                                    const std::vector<BandSpec>& specs,
                                    const ProbeConfig& config, uint64_t seed,
                                    int levels) {
  dataset.validate();
  SplitIndices split =
      dataset.categorical()
          ? stratified_split(dataset.labels, config.test_fraction, seed)
          : train_test_split(dataset.size(), config.test_fraction, seed);
  LabeledDataset train = subset(dataset, split.train);
  LabeledDataset test = subset(dataset, split.test);

  // One basis per family, fit on the training split only.
  std::array<std::shared_ptr<BasisData>, 3> bases;
  auto basis_for = [&](Basis b) -> const BasisData& {
    auto& slot = bases[static_cast<size_t>(b)];
    if (!slot)
      slot = std::make_shared<BasisData>(fit_basis(train.samples, b, levels));
    return *slot;
  };
  for (const BandSpec& spec : specs) basis_for(spec.basis);

  Metric metric = default_metric(dataset);
  SweepReport report;
  report.rows.resize(specs.size());
  parallel_for(specs.size(), [&](size_t i) {
    const BandSpec& spec = specs[i];
    const BasisData& basis = basis_for(spec.basis);
    LabeledDataset ptrain = train;
    ptrain.samples = project_all(train.samples, spec, basis);
    LabeledDataset ptest = test;
    ptest.samples = project_all(test.samples, spec, basis);

    ProbeModel probe =
        train_probe(ptrain, config, derive_seed(seed, kProbeSalt, i));
    BandStats stats = band_stats(spec, basis);
    SweepRow& row = report.rows[i];
    row.band = to_string(spec);
    row.metric = metric_name(metric);
    row.value = evaluate(probe, ptest, metric);
    row.feature_count = stats.feature_count;
    row.power_fraction = stats.power_fraction;
    row.seed = seed;
  });
  return report;
}

SweepReport band_sensitivity_sweep(const ProbeModel& model,
                                   const LabeledDataset& train,
                                   const LabeledDataset& test,
                                   const std::vector<BandSpec>& specs,
                                   const BasisData& basis,
                                   const ProbeConfig& config) {
  test.validate();
  Metric metric = default_metric(test);
  const bool dense = !test.categorical();
  if (dense) train.validate();

  std::vector<std::vector<SweepRow>> groups(specs.size());
  parallel_for(specs.size(), [&](size_t i) {
    const BandSpec& spec = specs[i];
    LabeledDataset ptest = test;
    ptest.samples = project_all(test.samples, spec, basis);
    BandStats stats = band_stats(spec, basis);

    SweepRow row;
    row.band = to_string(spec);
    row.metric = metric_name(metric);
    row.value = evaluate(model, ptest, metric);
    row.feature_count = stats.feature_count;
    row.power_fraction = stats.power_fraction;
    row.seed = model.seed;
    groups[i].push_back(row);

    if (dense) {
      LabeledDataset ptrain = train;
      ptrain.samples = project_all(train.samples, spec, basis);
      ProbeModel banded =
          train_probe(ptrain, config, derive_seed(model.seed, kProbeSalt, i));
      SweepRow diff = row;
      diff.metric = std::string(metric_name(metric)) + "_differential";
      diff.value = row.value - evaluate(banded, ptest, metric);
      groups[i].push_back(diff);
    }
  });

  SweepReport report;
  for (auto& rows : groups)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  return report;
}

}  // namespace specband
