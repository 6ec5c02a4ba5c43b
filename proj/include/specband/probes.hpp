#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specband/bands.hpp"
#include "specband/types.hpp"

namespace specband {

enum class ProbeKind { logistic, mlp, ridge };
enum class Metric { accuracy, mae, aee };

const char* probe_kind_name(ProbeKind kind);
const char* metric_name(Metric metric);
ProbeKind parse_probe_kind(const std::string& text);
Metric parse_metric(const std::string& text);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::logistic;
  double l2 = 1e-4;
  double ridge_lambda = 1e-4;
  int max_iters = 2000;
  double grad_tol = 1e-5;
  int mlp_hidden = 32;
  int mlp_epochs = 200;
  double mlp_lr = 1e-3;
  double test_fraction = 0.25;
};

struct ProbeModel {
  ProbeKind kind = ProbeKind::logistic;
  Eigen::VectorXd feat_mean;
  Eigen::VectorXd feat_std;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  int num_classes = 0;
  int target_dim = 0;
  int target_channels = 0;
  uint64_t seed = 0;
  ProbeConfig config;

  // Logits for classification, flattened target values for regression.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
  std::vector<int> predict_labels(const Eigen::MatrixXd& x) const;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

SplitIndices train_test_split(size_t n, double test_fraction, uint64_t seed);
SplitIndices stratified_split(const std::vector<int>& labels,
                              double test_fraction, uint64_t seed);
LabeledDataset subset(const LabeledDataset& dataset,
                      const std::vector<size_t>& indices);

Eigen::MatrixXd design_matrix(const std::vector<TensorImage>& samples);

ProbeModel train_probe(const LabeledDataset& train, const ProbeConfig& config,
                       uint64_t seed);
double evaluate(const ProbeModel& model, const LabeledDataset& data,
                Metric metric);
Metric default_metric(const LabeledDataset& dataset);

struct SweepRow {
  std::string band;
  std::string metric;
  double value = 0.0;
  int feature_count = 0;
  double power_fraction = 0.0;
  uint64_t seed = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

SweepReport band_predictivity_sweep(const LabeledDataset& dataset,
                                    const std::vector<BandSpec>& specs,
                                    const ProbeConfig& config, uint64_t seed,
                                    int levels = 2);

SweepReport band_sensitivity_sweep(const ProbeModel& model,
                                   const LabeledDataset& train,
                                   const LabeledDataset& test,
                                   const std::vector<BandSpec>& specs,
                                   const BasisData& basis,
                                   const ProbeConfig& config);

}  // namespace specband
