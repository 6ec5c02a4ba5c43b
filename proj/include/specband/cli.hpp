#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specband/types.hpp"

namespace specband {

// One key=value line of a config file, grouped under the nearest preceding
// [section] header ("" before the first header). Order and duplicates are
// preserved so parse -> print -> parse is exact.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;

  bool operator==(const ConfigEntry&) const = default;
};

struct ExperimentConfig {
  std::vector<ConfigEntry> entries;

  bool operator==(const ExperimentConfig&) const = default;

  const std::string* find(const std::string& section,
                          const std::string& key) const;
  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  uint64_t get_u64(const std::string& section, const std::string& key,
                   uint64_t fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<std::string> get_all(const std::string& section,
                                   const std::string& key) const;

  // Replaces the first matching entry or appends a new one.
  void set(const std::string& section, const std::string& key,
           const std::string& value);

  std::string command() const { return get_or("", "command", ""); }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config(const std::string& path);
std::string print_config(const ExperimentConfig& config);

// 3073-byte records: one label byte then 32x32x3 pixels in channel-planar
// order, rescaled to [0,1] and reordered to H x W x C.
LabeledDataset load_cifar_binary(const std::string& path);

// Resolves the [dataset] section (cifar-binary | tensor-container |
// synthetic:<generator>) into an image dataset.
LabeledDataset load_dataset(const ExperimentConfig& config);

// Writes content to a temp file in the target directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);

// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
int exit_code_for(Errc code);

// One-line JSON error record for stderr.
std::string error_record(const Error& error);

// Dispatches config.command() and writes the reports, the resolved config,
// and long-format plot data into the output directory. Throws Error.
void run_experiment(const ExperimentConfig& config);

}  // namespace specband
