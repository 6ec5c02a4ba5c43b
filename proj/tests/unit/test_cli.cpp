#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "specband/bands.hpp"
#include "specband/cli.hpp"
#include "specband/info.hpp"
#include "specband/synth.hpp"
#include "specband/tensor_io.hpp"

using namespace specband;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("specband_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parse and print round-trip exactly") {
  const std::string text =
      "# experiment\n"
      "command = spectrum\n"
      "seed = 42\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:spiked\n"
      "n = 64\n"
      "\n"
      "[bands]\n"
      "spec = pca:band:0:8\n"
      "spec = pca:band:8:16\n";
  ExperimentConfig config = parse_config(text);
  CHECK(config.command() == "spectrum");
  CHECK(config.get_u64("", "seed", 0) == 42);
  CHECK(config.get("dataset", "source") == "synthetic:spiked");
  CHECK(config.get_all("bands", "spec") ==
        std::vector<std::string>{"pca:band:0:8", "pca:band:8:16"});

  std::string printed = print_config(config);
  CHECK(parse_config(printed) == config);
  CHECK(print_config(parse_config(printed)) == printed);
}

TEST_CASE("config tolerates messy spacing and comments") {
  ExperimentConfig config = parse_config(
      "  command=mi  \n"
      "; alt comment\n"
      "[ probe ]\n"
      "  kind   =  mlp\n"
      "note = a=b=c\n");
  CHECK(config.command() == "mi");
  CHECK(config.get("probe", "kind") == "mlp");
  CHECK(config.get("probe", "note") == "a=b=c");
}

TEST_CASE("config rejects malformed lines") {
  for (const char* bad : {"just words\n", "[unterminated\n", "[]\n",
                          " = value\n"}) {
    try {
      parse_config(bad);
      FAIL("expected ConfigError for: ", bad);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config_error);
    }
  }
}

TEST_CASE("config accessors validate types") {
  ExperimentConfig config = parse_config("[a]\nx = hello\n");
  try {
    config.get_int("a", "x", 0);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
  try {
    config.get("a", "missing");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
  CHECK(config.get_int("a", "missing", 7) == 7);
  CHECK(config.get_bool("a", "missing", true));
}

TEST_CASE("config set replaces or inserts in the right place") {
  ExperimentConfig config = parse_config(
      "command = pid\n[dataset]\nsource = synthetic:blobs\n");
  config.set("", "seed", "9");
  config.set("dataset", "source", "synthetic:digits");
  config.set("dataset", "n", "100");
  config.set("probe", "kind", "ridge");

  CHECK(print_config(config) ==
        "command = pid\n"
        "seed = 9\n"
        "\n"
        "[dataset]\n"
        "source = synthetic:digits\n"
        "n = 100\n"
        "\n"
        "[probe]\n"
        "kind = ridge\n");
}

TEST_CASE("cifar records decode to planar-to-interleaved floats") {
  fs::path dir = scratch_dir("cifar");
  fs::path file = dir / "batch.bin";
  std::vector<unsigned char> bytes(2 * 3073, 0);
  bytes[0] = 7;
  bytes[1] = 255;                    // record 0: R(0,0)
  bytes[1 + 1024] = 128;             // record 0: G(0,0)
  bytes[1 + 2048 + 33] = 51;         // record 0: B(1,1)
  bytes[3073] = 0;
  bytes[3073 + 1 + 32] = 17;         // record 1: R(1,0)
  std::ofstream(file, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));

  LabeledDataset data = load_cifar_binary(file.string());
  REQUIRE(data.size() == 2);
  CHECK(data.num_classes == 10);
  CHECK(data.labels == std::vector<int>{7, 0});
  CHECK(data.samples[0].at(0, 0, 0) == 255.0 / 255.0);
  CHECK(data.samples[0].at(0, 0, 1) == 128.0 / 255.0);
  CHECK(data.samples[0].at(1, 1, 2) == 51.0 / 255.0);
  CHECK(data.samples[0].at(2, 2, 0) == 0.0);
  CHECK(data.samples[1].at(1, 0, 0) == 17.0 / 255.0);
  fs::remove_all(dir);
}

TEST_CASE("cifar loader rejects malformed files") {
  fs::path dir = scratch_dir("cifar_bad");
  fs::path truncated = dir / "trunc.bin";
  std::ofstream(truncated, std::ios::binary).write("abc", 3);
  try {
    load_cifar_binary(truncated.string());
    FAIL("expected BadRecordLength");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::bad_record_length);
  }

  fs::path badlabel = dir / "label.bin";
  std::vector<char> bytes(3073, 0);
  bytes[0] = 10;
  std::ofstream(badlabel, std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  try {
    load_cifar_binary(badlabel.string());
    FAIL("expected LabelOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::label_out_of_range);
  }
  fs::remove_all(dir);
}

TEST_CASE("tensor-container datasets round trip with labels") {
  fs::path dir = scratch_dir("container");
  std::vector<double> values;
  for (int i = 0; i < 3 * 2 * 2 * 1; ++i) values.push_back(0.5 * i);
  write_container((dir / "imgs.srt").string(), {3, 2, 2, 1}, Dtype::f64,
                  values);
  write_container((dir / "labels.srt").string(), {3}, Dtype::u8,
                  {1.0, 0.0, 2.0});

  ExperimentConfig config = parse_config(
      "[dataset]\nsource = tensor-container\n");
  config.set("dataset", "path", (dir / "imgs.srt").string());
  config.set("dataset", "labels_path", (dir / "labels.srt").string());
  LabeledDataset data = load_dataset(config);
  REQUIRE(data.size() == 3);
  CHECK(data.labels == std::vector<int>{1, 0, 2});
  CHECK(data.num_classes == 3);
  CHECK(data.samples[1].at(0, 0, 0) == 2.0);
  CHECK(data.samples[2].at(1, 1, 0) == 5.5);

  write_container((dir / "bad.srt").string(), {4, 4}, Dtype::f64,
                  std::vector<double>(16, 0.0));
  config.set("dataset", "path", (dir / "bad.srt").string());
  try {
    load_dataset(config);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("atomic writes leave no temp file behind") {
  fs::path dir = scratch_dir("atomic");
  fs::path target = dir / "report.csv";
  write_file_atomic(target.string(), "a,b\n1,2\n");
  CHECK(slurp(target) == "a,b\n1,2\n");
  write_file_atomic(target.string(), "replaced\n");
  CHECK(slurp(target) == "replaced\n");
  int files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir))
    ++files;
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("exit codes partition the error space") {
  CHECK(exit_code_for(Errc::unknown_command) == 2);
  CHECK(exit_code_for(Errc::config_error) == 2);
  CHECK(exit_code_for(Errc::invalid_band_spec) == 2);
  CHECK(exit_code_for(Errc::bad_record_length) == 3);
  CHECK(exit_code_for(Errc::io_error) == 3);
  CHECK(exit_code_for(Errc::empty_dataset) == 3);
  CHECK(exit_code_for(Errc::non_finite_loss) == 4);
  CHECK(exit_code_for(Errc::rank_deficient_signal) == 4);

  Error err(Errc::unknown_command, "unknown command 'frobnicate'");
  std::string record = error_record(err);
  CHECK(record.find("\"schema\":1") != std::string::npos);
  CHECK(record.find("\"exit\":2") != std::string::npos);
  CHECK(record.find("frobnicate") != std::string::npos);
}

TEST_CASE("spectrum run reports non-increasing eigenvalues") {
  fs::path dir = scratch_dir("spectrum_run");
  ExperimentConfig config = parse_config(
      "command = spectrum\n"
      "seed = 5\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:spiked\n"
      "n = 10\n"
      "height = 4\n"
      "width = 4\n"
      "spikes = 6,3\n");
  config.set("", "out", (dir / "run").string());
  run_experiment(config);

  auto rows = csv_rows(slurp(dir / "run" / "spectrum.csv"));
  REQUIRE(rows.size() == 17);
  CHECK(rows[0] ==
        std::vector<std::string>{"index", "eigenvalue", "explained_variance"});
  double prev = std::stod(rows[1][1]);
  for (size_t i = 2; i < rows.size(); ++i) {
    double ev = std::stod(rows[i][1]);
    CHECK(ev <= prev + 1e-15);
    prev = ev;
  }
  CHECK(std::stod(rows.back()[2]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fs::exists(dir / "run" / "config.txt"));
  CHECK(fs::exists(dir / "run" / "long.csv"));
  CHECK(fs::exists(dir / "run" / "spectrum.json"));
  fs::remove_all(dir);
}

TEST_CASE("pid run matches the library grid") {
  fs::path dir = scratch_dir("pid_run");
  ExperimentConfig config = parse_config(
      "command = pid\n"
      "seed = 9\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:digits\n"
      "n = 300\n"
      "classes = 3\n"
      "\n"
      "[bands]\n"
      "spec = pca:band:0:8\n"
      "spec = pca:band:8:64\n");
  config.set("", "out", (dir / "run").string());
  run_experiment(config);

  DigitsSpec spec;
  spec.n = 300;
  spec.classes = 3;
  LabeledDataset data = synth_digits(spec, 9);
  std::vector<BandSpec> bands = {parse_band_spec("pca:band:0:8"),
                                 parse_band_spec("pca:band:8:64")};
  BasisData basis = fit_basis(data.samples, Basis::pca, 2);
  PidMatrix grid = pid_matrix(data, bands, basis, 10);

  nlohmann::json j =
      nlohmann::json::parse(slurp(dir / "run" / "pid.json"));
  CHECK(j["schema"] == 1);
  REQUIRE(j["cells"].size() == 4);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      const auto& cell = j["cells"][static_cast<size_t>(i * 2 + k)];
      const PidResult& want = grid.at(i, k);
      CHECK(cell["R"].get<double>() == doctest::Approx(want.redundant));
      CHECK(cell["S"].get<double>() == doctest::Approx(want.synergistic));
      CHECK(cell["U1"].get<double>() == doctest::Approx(want.unique1));
      CHECK(cell["U2"].get<double>() == doctest::Approx(want.unique2));
      CHECK(cell["I"].get<double>() == doctest::Approx(want.total));
    }

  auto rows = csv_rows(slurp(dir / "run" / "pid.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"band_i", "band_j", "R", "S",
                                            "U1", "U2", "I"});
  CHECK(std::stod(rows[1][2]) == doctest::Approx(grid.at(0, 0).redundant));
  fs::remove_all(dir);
}

TEST_CASE("reruns with the same config are byte-identical") {
  fs::path dir = scratch_dir("rerun");
  ExperimentConfig config = parse_config(
      "command = predictivity\n"
      "seed = 13\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:digits\n"
      "n = 240\n"
      "classes = 3\n"
      "\n"
      "[bands]\n"
      "spec = pca:band:0:8\n"
      "spec = pca:band:8:64\n");
  config.set("", "out", (dir / "a").string());
  run_experiment(config);
  config.set("", "out", (dir / "b").string());
  run_experiment(config);
  CHECK(slurp(dir / "a" / "predictivity.csv") ==
        slurp(dir / "b" / "predictivity.csv"));
  CHECK(slurp(dir / "a" / "long.csv") == slurp(dir / "b" / "long.csv"));
  fs::remove_all(dir);
}

TEST_CASE("sensitivity and bands runs write their reports") {
  fs::path dir = scratch_dir("sens_run");
  ExperimentConfig config = parse_config(
      "command = sensitivity\n"
      "seed = 3\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:digits\n"
      "n = 240\n"
      "classes = 3\n"
      "\n"
      "[bands]\n"
      "spec = pca:full\n"
      "spec = pca:low:8\n");
  config.set("", "out", (dir / "run").string());
  run_experiment(config);
  auto rows = csv_rows(slurp(dir / "run" / "sensitivity.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "pca:full");
  CHECK(std::stod(rows[2][2]) <= std::stod(rows[1][2]) + 1e-12);

  config.set("", "command", "bands");
  config.set("", "out", (dir / "bands").string());
  run_experiment(config);
  auto brows = csv_rows(slurp(dir / "bands" / "bands.csv"));
  REQUIRE(brows.size() == 3);
  CHECK(brows[1][1] == "64");
  CHECK(std::stod(brows[1][2]) == doctest::Approx(1.0).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("sfa run on the slow-fast mixture recovers the slow source") {
  fs::path dir = scratch_dir("sfa_run");
  ExperimentConfig config = parse_config(
      "command = sfa\n"
      "seed = 11\n"
      "\n"
      "[dataset]\n"
      "source = synthetic:slow-fast\n"
      "frames = 3000\n"
      "slow_hz = 1\n"
      "fast_hz = 80\n"
      "rate_hz = 1000\n");
  config.set("", "out", (dir / "run").string());
  run_experiment(config);

  nlohmann::json j = nlohmann::json::parse(slurp(dir / "run" / "sfa.json"));
  CHECK(std::abs(j["slow_correlation"].get<double>()) > 0.99);
  auto rows = csv_rows(slurp(dir / "run" / "sfa.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[1][1]) <= std::stod(rows[2][1]));
  fs::remove_all(dir);
}

TEST_CASE("unknown commands and wrong sources fail with typed errors") {
  ExperimentConfig config = parse_config("command = frobnicate\n");
  try {
    run_experiment(config);
    FAIL("expected UnknownCommand");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_command);
  }

  fs::path dir = scratch_dir("wrong_source");
  ExperimentConfig wav = parse_config(
      "command = spectrum\n[dataset]\nsource = wav\npath = x.wav\n");
  wav.set("", "out", (dir / "run").string());
  try {
    run_experiment(wav);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
  fs::remove_all(dir);
}
