#include "specband/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "specband/audio.hpp"
#include "specband/bands.hpp"
#include "specband/info.hpp"
#include "specband/parallel.hpp"
#include "specband/probes.hpp"
#include "specband/rng.hpp"
#include "specband/robust.hpp"
#include "specband/shap.hpp"
#include "specband/spectrum.hpp"
#include "specband/synth.hpp"
#include "specband/tensor_io.hpp"

namespace specband {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int64_t to_i64(const std::string& value, const std::string& what) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    fail(Errc::config_error, what + " is not an integer: '" + value + "'");
  return v;
}

uint64_t to_u64(const std::string& value, const std::string& what) {
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || value.front() == '-')
    fail(Errc::config_error,
         what + " is not an unsigned integer: '" + value + "'");
  return v;
}

double to_f64(const std::string& value, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    fail(Errc::config_error, what + " is not a number: '" + value + "'");
  return v;
}

std::string key_name(const std::string& section, const std::string& key) {
  return section.empty() ? key : "[" + section + "] " + key;
}

}  // namespace

const std::string* ExperimentConfig::find(const std::string& section,
                                          const std::string& key) const {
  for (const auto& e : entries)
    if (e.section == section && e.key == key) return &e.value;
  return nullptr;
}

bool ExperimentConfig::has(const std::string& section,
                           const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ExperimentConfig::get(const std::string& section,
                                  const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v)
    fail(Errc::config_error, "missing config key " + key_name(section, key));
  return *v;
}

std::string ExperimentConfig::get_or(const std::string& section,
                                     const std::string& key,
                                     const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

int ExperimentConfig::get_int(const std::string& section,
                              const std::string& key, int fallback) const {
  const std::string* v = find(section, key);
  return v ? static_cast<int>(to_i64(*v, key_name(section, key))) : fallback;
}

uint64_t ExperimentConfig::get_u64(const std::string& section,
                                   const std::string& key,
                                   uint64_t fallback) const {
  const std::string* v = find(section, key);
  return v ? to_u64(*v, key_name(section, key)) : fallback;
}

double ExperimentConfig::get_double(const std::string& section,
                                    const std::string& key,
                                    double fallback) const {
  const std::string* v = find(section, key);
  return v ? to_f64(*v, key_name(section, key)) : fallback;
}

bool ExperimentConfig::get_bool(const std::string& section,
                                const std::string& key, bool fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(Errc::config_error,
       key_name(section, key) + " is not a boolean: '" + *v + "'");
}

std::vector<std::string> ExperimentConfig::get_all(
    const std::string& section, const std::string& key) const {
  std::vector<std::string> values;
  for (const auto& e : entries)
    if (e.section == section && e.key == key) values.push_back(e.value);
  return values;
}

void ExperimentConfig::set(const std::string& section, const std::string& key,
                           const std::string& value) {
  for (auto& e : entries)
    if (e.section == section && e.key == key) {
      e.value = value;
      return;
    }
  if (section.empty()) {
    auto it = std::find_if(
        entries.begin(), entries.end(),
        [](const ConfigEntry& e) { return !e.section.empty(); });
    entries.insert(it, {section, key, value});
    return;
  }
  size_t pos = entries.size();
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].section == section) pos = i + 1;
  entries.insert(entries.begin() + static_cast<ptrdiff_t>(pos),
                 {section, key, value});
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::string section;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        fail(Errc::config_error,
             "unterminated section header at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        fail(Errc::config_error,
             "empty section name at line " + std::to_string(lineno));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error,
           "expected key = value at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      fail(Errc::config_error, "empty key at line " + std::to_string(lineno));
    config.entries.push_back({section, key, value});
  }
  return config;
}

ExperimentConfig read_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::config_error, "cannot read config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

std::string print_config(const ExperimentConfig& config) {
  std::string out;
  std::string current;
  for (const auto& e : config.entries) {
    if (e.section != current) {
      if (e.section.empty())
        fail(Errc::config_error, "top-level keys must precede sections");
      if (!out.empty()) out += "\n";
      out += "[" + e.section + "]\n";
      current = e.section;
    }
    out += e.key + " = " + e.value + "\n";
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io_error, "cannot open " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) fail(Errc::io_error, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    fail(Errc::io_error,
         "rename failed for " + target.string() + ": " + ec.message());
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::unknown_command:
    case Errc::config_error:
    case Errc::invalid_band_spec:
    case Errc::empty_band_list:
    case Errc::invalid_range:
    case Errc::index_out_of_range:
    case Errc::too_many_players:
      return 2;
    case Errc::all_zero_spectrum:
    case Errc::singular_covariance:
    case Errc::non_finite_loss:
    case Errc::singular_ridge_system:
    case Errc::rank_deficient_signal:
    case Errc::degenerate_design:
    case Errc::not_orthonormal:
    case Errc::kernel_truncated:
      return 4;
    default:
      return 3;
  }
}

std::string error_record(const Error& error) {
  json j;
  j["schema"] = 1;
  j["error"] = {{"code", errc_name(error.code())},
                {"exit", exit_code_for(error.code())},
                {"message", error.what()}};
  return j.dump();
}

LabeledDataset load_cifar_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open " + path);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(f),
                                   std::istreambuf_iterator<char>()};
  constexpr size_t kRecord = 3073;
  if (bytes.empty()) fail(Errc::empty_dataset, path + " has no records");
  if (bytes.size() % kRecord != 0)
    fail(Errc::bad_record_length,
         path + " length " + std::to_string(bytes.size()) +
             " is not a multiple of 3073");
  size_t n = bytes.size() / kRecord;
  LabeledDataset data;
  data.num_classes = 10;
  for (size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecord;
    int label = rec[0];
    if (label > 9)
      fail(Errc::label_out_of_range,
           "record " + std::to_string(i) + " has label " +
               std::to_string(label));
    data.labels.push_back(label);
    TensorImage img(32, 32, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          img.at(y, x, c) = rec[1 + c * 1024 + y * 32 + x] / 255.0;
    data.samples.push_back(std::move(img));
  }
  return data;
}

namespace {

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    values.push_back(to_f64(item, what));
  }
  if (values.empty()) fail(Errc::config_error, what + " is an empty list");
  return values;
}

LabeledDataset container_dataset(const ExperimentConfig& config) {
  Container c = read_container(config.get("dataset", "path"));
  if (c.dims.size() != 4)
    fail(Errc::dimension_mismatch,
         "tensor-container datasets must be rank-4 (n, height, width, "
         "channels), got rank " +
             std::to_string(c.dims.size()));
  size_t n = c.dims[0];
  int h = static_cast<int>(c.dims[1]);
  int w = static_cast<int>(c.dims[2]);
  int ch = static_cast<int>(c.dims[3]);
  LabeledDataset data;
  size_t stride = static_cast<size_t>(h) * w * ch;
  for (size_t i = 0; i < n; ++i) {
    TensorImage img(h, w, ch);
    std::copy_n(c.values.begin() + static_cast<ptrdiff_t>(i * stride), stride,
                img.data.begin());
    data.samples.push_back(std::move(img));
  }
  if (config.has("dataset", "labels_path")) {
    Container lc = read_container(config.get("dataset", "labels_path"));
    if (lc.dims.size() != 1 || lc.dims[0] != n)
      fail(Errc::dimension_mismatch,
           "labels container must be rank-1 with one entry per sample");
    int max_label = 0;
    for (double v : lc.values) {
      int y = static_cast<int>(v);
      data.labels.push_back(y);
      max_label = std::max(max_label, y);
    }
    data.num_classes = config.get_int("dataset", "classes", max_label + 1);
  }
  return data;
}

LabeledDataset synthetic_dataset(const ExperimentConfig& config,
                                 const std::string& generator,
                                 uint64_t seed) {
  if (generator == "digits") {
    DigitsSpec spec;
    spec.n = config.get_int("dataset", "n", spec.n);
    spec.classes = config.get_int("dataset", "classes", spec.classes);
    spec.height = config.get_int("dataset", "height", spec.height);
    spec.width = config.get_int("dataset", "width", spec.width);
    spec.lambda_decay =
        config.get_double("dataset", "lambda_decay", spec.lambda_decay);
    spec.info_floor =
        config.get_double("dataset", "info_floor", spec.info_floor);
    spec.info_scale =
        config.get_double("dataset", "info_scale", spec.info_scale);
    spec.info_efold =
        config.get_double("dataset", "info_efold", spec.info_efold);
    return synth_digits(spec, seed);
  }
  if (generator == "blobs")
    return synth_blobs(config.get_int("dataset", "n", 400),
                       config.get_double("dataset", "margin", 5.0), seed);
  if (generator == "flow-pairs")
    return synth_flow_pairs(config.get_int("dataset", "n", 200),
                            config.get_int("dataset", "height", 16),
                            config.get_int("dataset", "width", 16), seed);
  if (generator == "depth-scenes")
    return synth_depth_scenes(config.get_int("dataset", "n", 200),
                              config.get_int("dataset", "height", 16),
                              config.get_int("dataset", "width", 16), seed);

  LabeledDataset data;
  if (generator == "spiked") {
    std::vector<double> spikes =
        parse_double_list(config.get_or("dataset", "spikes", "8,5,3"),
                          "[dataset] spikes");
    data.samples = synth_spiked(
        config.get_int("dataset", "n", 200),
        config.get_int("dataset", "height", 8),
        config.get_int("dataset", "width", 8), spikes,
        config.get_double("dataset", "bulk_sigma", 1.0), seed);
    return data;
  }
  if (generator == "circulant") {
    data.samples = synth_circulant(config.get_int("dataset", "n", 256),
                                   config.get_int("dataset", "height", 8),
                                   config.get_int("dataset", "width", 8),
                                   config.get_double("dataset", "ratio", 0.8),
                                   seed);
    return data;
  }
  if (generator == "texture" || generator == "flat") {
    int n = config.get_int("dataset", "n", 20);
    int h = config.get_int("dataset", "height", 64);
    int w = config.get_int("dataset", "width", 64);
    int ch = config.get_int("dataset", "channels", 1);
    double level = config.get_double("dataset", "level", 0.0);
    double sigma = config.get_double("dataset", "awgn_sigma", 0.0);
    for (int i = 0; i < n; ++i) {
      uint64_t img_seed = derive_seed(seed, static_cast<uint64_t>(i));
      TensorImage img = generator == "texture"
                            ? synth_texture(h, w, ch, img_seed)
                            : synth_flat(h, w, ch, level);
      if (sigma > 0.0)
        add_awgn(img, sigma,
                 derive_seed(seed, 0x6e6f6973, static_cast<uint64_t>(i)));
      data.samples.push_back(std::move(img));
    }
    return data;
  }
  fail(Errc::config_error, "unknown synthetic generator '" + generator + "'");
}

}  // namespace

LabeledDataset load_dataset(const ExperimentConfig& config) {
  std::string source = config.get("dataset", "source");
  uint64_t seed = config.get_u64("", "seed", 0);
  LabeledDataset data;
  if (source == "cifar-binary") {
    data = load_cifar_binary(config.get("dataset", "path"));
  } else if (source == "tensor-container") {
    data = container_dataset(config);
  } else if (source.rfind("synthetic:", 0) == 0) {
    std::string generator = source.substr(10);
    if (generator == "audio-pair" || generator == "slow-fast")
      fail(Errc::config_error,
           "source '" + source + "' is only valid for the sfa command");
    data = synthetic_dataset(config, generator, seed);
  } else if (source == "wav") {
    fail(Errc::config_error, "wav sources are only valid for the sfa command");
  } else {
    fail(Errc::config_error, "unknown dataset source '" + source + "'");
  }
  data.validate();
  return data;
}

namespace {

struct RunContext {
  const ExperimentConfig& config;
  fs::path out;
  uint64_t seed = 0;
  std::vector<std::array<std::string, 3>> long_rows;

  void add_long(const std::string& series, double x, double y) {
    long_rows.push_back({series, fmt_g(x), fmt_g(y)});
  }
  void write_text(const std::string& name, const std::string& content) const {
    write_file_atomic((out / name).string(), content);
  }
  void write_json(const std::string& name, const json& j) const {
    write_text(name, j.dump(2) + "\n");
  }
  json base_json() const {
    json j;
    j["schema"] = 1;
    j["command"] = config.get_or("", "command", "");
    j["seed"] = seed;
    return j;
  }
};

std::vector<BandSpec> band_list(const ExperimentConfig& config) {
  std::vector<BandSpec> specs;
  for (const auto& text : config.get_all("bands", "spec"))
    specs.push_back(parse_band_spec(text));
  if (specs.empty())
    fail(Errc::empty_band_list, "config section [bands] has no spec entries");
  return specs;
}

Basis single_basis(const std::vector<BandSpec>& specs) {
  for (const auto& spec : specs)
    if (spec.basis != specs.front().basis)
      fail(Errc::config_error,
           "all band specs must share one basis for this command");
  return specs.front().basis;
}

ProbeConfig probe_config(const ExperimentConfig& config) {
  ProbeConfig pc;
  pc.kind = parse_probe_kind(config.get_or("probe", "kind", "logistic"));
  pc.l2 = config.get_double("probe", "l2", pc.l2);
  pc.ridge_lambda = config.get_double("probe", "ridge_lambda",
                                      pc.ridge_lambda);
  pc.max_iters = config.get_int("probe", "max_iters", pc.max_iters);
  pc.grad_tol = config.get_double("probe", "grad_tol", pc.grad_tol);
  pc.mlp_hidden = config.get_int("probe", "mlp_hidden", pc.mlp_hidden);
  pc.mlp_epochs = config.get_int("probe", "mlp_epochs", pc.mlp_epochs);
  pc.mlp_lr = config.get_double("probe", "mlp_lr", pc.mlp_lr);
  pc.test_fraction =
      config.get_double("probe", "test_fraction", pc.test_fraction);
  return pc;
}

void require_targets(const LabeledDataset& data, const std::string& command) {
  if (!data.categorical() && data.dense.empty())
    fail(Errc::degenerate_labels,
         "the " + command + " command needs a labeled dataset");
}

std::string sweep_csv(const SweepReport& report) {
  std::string csv = "band,metric,value,feature_count,power_fraction,seed\n";
  for (const auto& row : report.rows) {
    csv += row.band + "," + row.metric + "," + fmt_g(row.value) + "," +
           std::to_string(row.feature_count) + "," +
           fmt_g(row.power_fraction) + "," + std::to_string(row.seed) + "\n";
  }
  return csv;
}

json sweep_json(RunContext& ctx, const SweepReport& report) {
  json j = ctx.base_json();
  json rows = json::array();
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const SweepRow& row = report.rows[i];
    rows.push_back({{"band", row.band},
                    {"metric", row.metric},
                    {"value", row.value},
                    {"feature_count", row.feature_count},
                    {"power_fraction", row.power_fraction},
                    {"seed", row.seed}});
    ctx.add_long(row.metric, static_cast<double>(i), row.value);
  }
  j["rows"] = rows;
  return j;
}

void cmd_spectrum(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  int max_dimension =
      ctx.config.get_int("spectrum", "max_dimension", 16384);
  CovarianceSpectrum spectrum = fit_pca(data.samples, max_dimension);
  double total = spectrum.total_variance();

  std::string csv = "index,eigenvalue,explained_variance\n";
  json eigenvalues = json::array();
  double cum = 0.0;
  for (int i = 0; i < spectrum.dim(); ++i) {
    double ev = spectrum.eigenvalues(i);
    cum += ev;
    double frac = total > 0.0 ? cum / total : 0.0;
    csv += std::to_string(i) + "," + fmt_g(ev) + "," + fmt_g(frac) + "\n";
    eigenvalues.push_back(ev);
    ctx.add_long("eigenvalue", i, ev);
    ctx.add_long("explained_variance", i, frac);
  }
  ctx.write_text("spectrum.csv", csv);

  json j = ctx.base_json();
  j["dim"] = spectrum.dim();
  j["total_variance"] = total;
  j["eigenvalues"] = eigenvalues;
  ctx.write_json("spectrum.json", j);
}

void cmd_bands(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  std::vector<BandSpec> specs = band_list(ctx.config);
  int levels = ctx.config.get_int("bands", "levels", 2);

  std::map<Basis, BasisData> bases;
  for (const auto& spec : specs)
    if (!bases.count(spec.basis))
      bases[spec.basis] = fit_basis(data.samples, spec.basis, levels);

  std::string csv = "band,feature_count,power_fraction\n";
  json rows = json::array();
  for (size_t i = 0; i < specs.size(); ++i) {
    BandStats stats = band_stats(specs[i], bases[specs[i].basis]);
    std::string name = to_string(specs[i]);
    csv += name + "," + std::to_string(stats.feature_count) + "," +
           fmt_g(stats.power_fraction) + "\n";
    rows.push_back({{"band", name},
                    {"feature_count", stats.feature_count},
                    {"power_fraction", stats.power_fraction}});
    ctx.add_long("feature_count", static_cast<double>(i),
                 static_cast<double>(stats.feature_count));
    ctx.add_long("power_fraction", static_cast<double>(i),
                 stats.power_fraction);
  }
  ctx.write_text("bands.csv", csv);

  json j = ctx.base_json();
  j["rows"] = rows;
  ctx.write_json("bands.json", j);
}

void cmd_predictivity(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  require_targets(data, "predictivity");
  std::vector<BandSpec> specs = band_list(ctx.config);
  int levels = ctx.config.get_int("bands", "levels", 2);
  SweepReport report = band_predictivity_sweep(data, specs,
                                               probe_config(ctx.config),
                                               ctx.seed, levels);
  ctx.write_text("predictivity.csv", sweep_csv(report));
  ctx.write_json("predictivity.json", sweep_json(ctx, report));
}

void cmd_sensitivity(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  require_targets(data, "sensitivity");
  std::vector<BandSpec> specs = band_list(ctx.config);
  Basis basis_kind = single_basis(specs);
  int levels = ctx.config.get_int("bands", "levels", 2);
  ProbeConfig pc = probe_config(ctx.config);

  SplitIndices split =
      data.categorical()
          ? stratified_split(data.labels, pc.test_fraction, ctx.seed)
          : train_test_split(data.size(), pc.test_fraction, ctx.seed);
  LabeledDataset train = subset(data, split.train);
  LabeledDataset test = subset(data, split.test);
  ProbeModel model = train_probe(train, pc, ctx.seed);
  BasisData basis = fit_basis(train.samples, basis_kind, levels);
  SweepReport report =
      band_sensitivity_sweep(model, train, test, specs, basis, pc);
  ctx.write_text("sensitivity.csv", sweep_csv(report));
  ctx.write_json("sensitivity.json", sweep_json(ctx, report));
}

void cmd_mi(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  if (!data.categorical())
    fail(Errc::degenerate_labels,
         "the mi command needs categorical labels");
  std::vector<BandSpec> specs = band_list(ctx.config);
  int levels = ctx.config.get_int("bands", "levels", 2);
  int max_dims = ctx.config.get_int("mi", "max_dims", 10);
  KnnMiOptions options;
  options.k = ctx.config.get_int("mi", "k", options.k);
  options.lnc = ctx.config.get_bool("mi", "lnc", options.lnc);
  options.alpha = ctx.config.get_double("mi", "alpha", options.alpha);
  options.seed = ctx.seed;

  std::map<Basis, BasisData> bases;
  for (const auto& spec : specs)
    if (!bases.count(spec.basis))
      bases[spec.basis] = fit_basis(data.samples, spec.basis, levels);

  SweepReport report;
  for (const auto& spec : specs) {
    const BasisData& basis = bases[spec.basis];
    Eigen::MatrixXd x =
        band_feature_matrix(data.samples, spec, basis, max_dims);
    BandStats stats = band_stats(spec, basis);
    SweepRow row;
    row.band = to_string(spec);
    row.metric = "mi_nats";
    row.value = kraskov_mi(x, data.labels, options);
    row.feature_count = static_cast<int>(stats.feature_count);
    row.power_fraction = stats.power_fraction;
    row.seed = ctx.seed;
    report.rows.push_back(row);
  }
  ctx.write_text("mi.csv", sweep_csv(report));
  ctx.write_json("mi.json", sweep_json(ctx, report));
}

void cmd_pid(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  if (!data.categorical())
    fail(Errc::degenerate_labels,
         "the pid command needs categorical labels");
  std::vector<BandSpec> specs = band_list(ctx.config);
  Basis basis_kind = single_basis(specs);
  int levels = ctx.config.get_int("bands", "levels", 2);
  int max_dims = ctx.config.get_int("pid", "max_dims", 10);
  BasisData basis = fit_basis(data.samples, basis_kind, levels);
  PidMatrix grid = pid_matrix(data, specs, basis, max_dims);

  std::string csv = "band_i,band_j,R,S,U1,U2,I\n";
  json cells = json::array();
  for (int i = 0; i < grid.bands; ++i)
    for (int j2 = 0; j2 < grid.bands; ++j2) {
      const PidResult& cell = grid.at(i, j2);
      std::string bi = to_string(specs[static_cast<size_t>(i)]);
      std::string bj = to_string(specs[static_cast<size_t>(j2)]);
      csv += bi + "," + bj + "," + fmt_g(cell.redundant) + "," +
             fmt_g(cell.synergistic) + "," + fmt_g(cell.unique1) + "," +
             fmt_g(cell.unique2) + "," + fmt_g(cell.total) + "\n";
      cells.push_back({{"band_i", bi},
                       {"band_j", bj},
                       {"R", cell.redundant},
                       {"S", cell.synergistic},
                       {"U1", cell.unique1},
                       {"U2", cell.unique2},
                       {"I", cell.total}});
      double x = static_cast<double>(i) * grid.bands + j2;
      ctx.add_long("R", x, cell.redundant);
      ctx.add_long("S", x, cell.synergistic);
      ctx.add_long("U1", x, cell.unique1);
      ctx.add_long("U2", x, cell.unique2);
      ctx.add_long("I", x, cell.total);
    }
  ctx.write_text("pid.csv", csv);

  json j = ctx.base_json();
  j["bands"] = grid.bands;
  j["cells"] = cells;
  ctx.write_json("pid.json", j);
}

void cmd_shap(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  require_targets(data, "shap");
  std::vector<BandSpec> specs = band_list(ctx.config);
  Basis basis_kind = single_basis(specs);
  int levels = ctx.config.get_int("bands", "levels", 2);
  BasisData basis = fit_basis(data.samples, basis_kind, levels);

  BandShapOptions options;
  options.m = ctx.config.get_int("shap", "m", options.m);
  options.exact = ctx.config.get_bool("shap", "exact", options.exact);
  options.max_dims = ctx.config.get_int("shap", "max_dims", options.max_dims);
  options.seed = ctx.seed;
  ShapResult result =
      band_shap(data, specs, basis, probe_config(ctx.config), options);

  std::string csv = "band,phi\n";
  json phi = json::array();
  for (size_t i = 0; i < result.phi.size(); ++i) {
    csv += to_string(specs[i]) + "," + fmt_g(result.phi[i]) + "\n";
    phi.push_back({{"band", to_string(specs[i])}, {"phi", result.phi[i]}});
    ctx.add_long("phi", static_cast<double>(i), result.phi[i]);
  }
  ctx.write_text("shap.csv", csv);

  json j = ctx.base_json();
  j["phi"] = phi;
  j["base_value"] = result.base_value;
  j["full_value"] = result.full_value;
  j["residual_rms"] = result.residual_rms;
  j["coalitions_evaluated"] = result.coalitions_evaluated;
  json log = json::array();
  for (const auto& [mask, value] : result.evaluation_log)
    log.push_back({{"coalition", mask}, {"value", value}});
  j["evaluation_log"] = log;
  ctx.write_json("shap.json", j);
}

std::vector<double> matrix_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> values;
  values.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  return values;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = a.array() - a.mean();
  Eigen::VectorXd y = b.array() - b.mean();
  double denom = std::sqrt(x.squaredNorm() * y.squaredNorm());
  return denom > 0.0 ? x.dot(y) / denom : 0.0;
}

void write_sfa_report(RunContext& ctx, const SfaFeatures& features, json j) {
  std::string csv = "feature,slowness\n";
  json slowness = json::array();
  for (int i = 0; i < features.m; ++i) {
    csv += std::to_string(i) + "," + fmt_g(features.eigenvalues(i)) + "\n";
    slowness.push_back(features.eigenvalues(i));
    ctx.add_long("slowness", i, features.eigenvalues(i));
  }
  ctx.write_text("sfa.csv", csv);
  j["m"] = features.m;
  j["slowness"] = slowness;
  ctx.write_json("sfa.json", std::move(j));
}

void cmd_sfa(RunContext& ctx) {
  std::string source = ctx.config.get("dataset", "source");

  if (source == "wav") {
    AudioClip clip = read_wav(ctx.config.get("dataset", "path"));
    Cochleagram coch = cochleagram(clip.samples, clip.sample_rate);
    if (ctx.config.get_bool("sfa", "save_cochleagram", false))
      write_container((ctx.out / "cochleagram.srt").string(),
                      {static_cast<uint32_t>(coch.values.rows()),
                       static_cast<uint32_t>(coch.values.cols())},
                      Dtype::f64, matrix_row_major(coch.values));
    int d = static_cast<int>(coch.values.rows());
    int m = ctx.config.get_int("sfa", "m", std::min(d, 16));
    SfaFeatures features = sfa_fit(coch.values, m);
    json j = ctx.base_json();
    j["sample_rate"] = coch.sample_rate;
    j["channels"] = d;
    j["frames"] = coch.values.cols();
    write_sfa_report(ctx, features, std::move(j));
    return;
  }

  if (source == "synthetic:slow-fast") {
    SlowFastSignal sig = synth_slow_fast(
        ctx.config.get_int("dataset", "frames", 4000),
        ctx.config.get_double("dataset", "slow_hz", 1.0),
        ctx.config.get_double("dataset", "fast_hz", 100.0),
        ctx.config.get_double("dataset", "rate_hz", 1000.0), ctx.seed);
    Eigen::MatrixXd signal = sig.mixed.transpose();
    int d = static_cast<int>(signal.rows());
    int m = ctx.config.get_int("sfa", "m", d);
    SfaFeatures features = sfa_fit(signal, m);
    Eigen::MatrixXd outputs = sfa_transform(features, signal);
    json j = ctx.base_json();
    j["slow_correlation"] =
        pearson(outputs.row(0).transpose(), sig.slow);
    write_sfa_report(ctx, features, std::move(j));
    return;
  }

  if (source == "synthetic:audio-pair") {
    AudioPairData pair = synth_audio_pair(
        ctx.config.get_int("dataset", "clips", 12),
        ctx.config.get_int("dataset", "samples", 9600),
        ctx.config.get_double("dataset", "sample_rate", 16000.0), ctx.seed);
    size_t total = pair.first.size() + pair.second.size();
    std::vector<Eigen::MatrixXd> grams(total);
    parallel_for(total, [&](size_t i) {
      const auto& clip = i < pair.first.size()
                             ? pair.first[i]
                             : pair.second[i - pair.first.size()];
      grams[i] = cochleagram(clip, pair.sample_rate).values;
    });

    auto hstack = [](const Eigen::MatrixXd* begin, size_t count) {
      Eigen::Index cols = 0;
      for (size_t i = 0; i < count; ++i) cols += begin[i].cols();
      Eigen::MatrixXd out(begin[0].rows(), cols);
      Eigen::Index at = 0;
      for (size_t i = 0; i < count; ++i) {
        out.middleCols(at, begin[i].cols()) = begin[i];
        at += begin[i].cols();
      }
      return out;
    };
    Eigen::MatrixXd frames_a = hstack(grams.data(), pair.first.size());
    Eigen::MatrixXd frames_b =
        hstack(grams.data() + pair.first.size(), pair.second.size());
    Eigen::MatrixXd all(frames_a.rows(), frames_a.cols() + frames_b.cols());
    all << frames_a, frames_b;

    int d = static_cast<int>(all.rows());
    int m = ctx.config.get_int("sfa", "m", std::min(d, 16));
    SfaFeatures features = sfa_fit(all, m);
    int n_slow = std::min(ctx.config.get_int("sfa", "n_slow", 5), m);
    PairAccuracy acc = discriminate_pair(sfa_transform(features, frames_a),
                                         sfa_transform(features, frames_b),
                                         n_slow, ctx.seed);

    std::string pair_csv = "n_slow,accuracy,ci_lo,ci_hi\n";
    pair_csv += std::to_string(n_slow) + "," + fmt_g(acc.mean) + "," +
                fmt_g(acc.ci_lo) + "," + fmt_g(acc.ci_hi) + "\n";
    ctx.write_text("pair.csv", pair_csv);
    ctx.add_long("pair_accuracy", n_slow, acc.mean);

    json j = ctx.base_json();
    j["pair"] = {{"n_slow", n_slow},
                 {"accuracy", acc.mean},
                 {"ci_lo", acc.ci_lo},
                 {"ci_hi", acc.ci_hi},
                 {"runs", acc.runs}};
    write_sfa_report(ctx, features, std::move(j));
    return;
  }

  fail(Errc::config_error,
       "the sfa command needs a wav, synthetic:slow-fast, or "
       "synthetic:audio-pair source");
}

void cmd_noise(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  int patch = ctx.config.get_int("noise", "patch", 8);
  double quantile = ctx.config.get_double("noise", "quantile", 0.05);

  std::vector<double> estimates(data.size());
  parallel_for(data.size(), [&](size_t i) {
    estimates[i] = estimate_noise(data.samples[i], patch, quantile);
  });

  std::string csv = "index,sigma2\n";
  double sum = 0.0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    csv += std::to_string(i) + "," + fmt_g(estimates[i]) + "\n";
    ctx.add_long("sigma2", static_cast<double>(i), estimates[i]);
    sum += estimates[i];
  }
  ctx.write_text("noise.csv", csv);

  json j = ctx.base_json();
  j["patch"] = patch;
  j["quantile"] = quantile;
  j["mean_sigma2"] = sum / static_cast<double>(estimates.size());
  j["sigma2"] = estimates;
  ctx.write_json("noise.json", j);
}

void cmd_boot_sim(RunContext& ctx) {
  LabeledDataset data = load_dataset(ctx.config);
  size_t n = ctx.config.get_u64("boot", "resample_n", data.size());
  int resamples = ctx.config.get_int("boot", "resamples", 50);
  int bands = ctx.config.get_int("boot", "bands", 10);
  SimilarityMatrix sim =
      bootstrap_stability(data.samples, n, resamples, bands, ctx.seed);

  std::vector<std::string> names;
  for (const auto& [lo, hi] : sim.band_ranges)
    names.push_back(to_string(BandSpec::range(Basis::pca, lo, hi)));

  std::string csv = "band_i,band_j,similarity\n";
  json values = json::array();
  for (int i = 0; i < bands; ++i) {
    json row = json::array();
    for (int j2 = 0; j2 < bands; ++j2) {
      csv += names[static_cast<size_t>(i)] + "," +
             names[static_cast<size_t>(j2)] + "," +
             fmt_g(sim.values(i, j2)) + "\n";
      row.push_back(sim.values(i, j2));
      ctx.add_long("similarity", static_cast<double>(i) * bands + j2,
                   sim.values(i, j2));
    }
    values.push_back(row);
  }
  ctx.write_text("boot-sim.csv", csv);

  json j = ctx.base_json();
  j["bands"] = names;
  j["resample_size"] = sim.resample_size;
  j["resamples"] = sim.resamples;
  j["resample_seeds"] = sim.resample_seeds;
  j["values"] = values;
  ctx.write_json("boot-sim.json", j);
}

}  // namespace

void run_experiment(const ExperimentConfig& input) {
  ExperimentConfig config = input;
  if (!config.has("", "seed")) config.set("", "seed", "0");
  if (!config.has("", "out")) config.set("", "out", "out");
  if (config.has("", "threads")) {
    int threads = config.get_int("", "threads", 0);
    if (threads > 0) set_thread_count(threads);
  }

  const std::string command = config.command();
  using Handler = void (*)(RunContext&);
  static const std::pair<const char*, Handler> kCommands[] = {
      {"spectrum", cmd_spectrum},   {"bands", cmd_bands},
      {"predictivity", cmd_predictivity}, {"sensitivity", cmd_sensitivity},
      {"mi", cmd_mi},               {"pid", cmd_pid},
      {"shap", cmd_shap},           {"sfa", cmd_sfa},
      {"noise", cmd_noise},         {"boot-sim", cmd_boot_sim},
  };
  Handler handler = nullptr;
  for (const auto& [name, fn] : kCommands)
    if (command == name) handler = fn;
  if (!handler)
    fail(Errc::unknown_command, "unknown command '" + command + "'");

  RunContext ctx{config, fs::path(config.get("", "out")),
                 config.get_u64("", "seed", 0)};
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec)
    fail(Errc::io_error,
         "cannot create output directory " + ctx.out.string());

  ctx.write_text("config.txt", print_config(config));
  handler(ctx);

  std::string long_csv = "series,x,y\n";
  for (const auto& row : ctx.long_rows)
    long_csv += row[0] + "," + row[1] + "," + row[2] + "\n";
  ctx.write_text("long.csv", long_csv);
}

}  // namespace specband
