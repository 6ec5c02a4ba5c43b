#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "specband/bands.hpp"
#include "specband/types.hpp"

namespace specband {

// A cooperative game over band subsets. Coalitions are bit masks over the
// player indices; evaluations are cached so repeated queries are free and
// concurrent queries race benignly (the value function is deterministic).
class CoalitionGame {
 public:
  CoalitionGame(int players, std::function<double(uint32_t)> value);

  int players() const { return players_; }
  uint32_t full_mask() const { return (uint32_t{1} << players_) - 1; }
  double value(uint32_t mask);
  size_t evaluations() const;
  std::vector<std::pair<uint32_t, double>> evaluation_log() const;

 private:
  int players_;
  std::function<double(uint32_t)> fn_;
  mutable std::mutex mu_;
  std::unordered_map<uint32_t, double> cache_;
};

struct ShapResult {
  std::vector<double> phi;
  double base_value = 0.0;
  double full_value = 0.0;
  double residual_rms = 0.0;
  size_t coalitions_evaluated = 0;
  std::vector<std::pair<uint32_t, double>> evaluation_log;
};

ShapResult shapley_exact(CoalitionGame& game);
ShapResult kernel_shap(CoalitionGame& game, int m, uint64_t seed);

struct BandShapOptions {
  int m = 64;
  uint64_t seed = 0;
  bool exact = false;
  int max_dims = 10;
};

struct ProbeConfig;

ShapResult band_shap(const LabeledDataset& dataset,
                     const std::vector<BandSpec>& bands,
                     const BasisData& basis, const ProbeConfig& probe,
                     const BandShapOptions& options);

}  // namespace specband
