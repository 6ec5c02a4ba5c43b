#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "specband/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"band-resolved analysis of images and audio"};
  app.name("specband");
  std::string command;
  std::string config_path;
  std::string seed_text;
  std::string out;
  int threads = 0;
  app.add_option("command", command,
                 "spectrum | bands | predictivity | sensitivity | mi | pid | "
                 "shap | sfa | noise | boot-sim");
  app.add_option("--config", config_path, "experiment config file")
      ->required();
  app.add_option("--seed", seed_text, "override the config seed");
  app.add_option("--out", out, "override the output directory");
  app.add_option("--threads", threads, "worker thread count");
  CLI11_PARSE(app, argc, argv);

  try {
    specband::ExperimentConfig config = specband::read_config(config_path);
    if (!command.empty()) config.set("", "command", command);
    if (!seed_text.empty()) config.set("", "seed", seed_text);
    if (!out.empty()) config.set("", "out", out);
    if (threads > 0) config.set("", "threads", std::to_string(threads));
    specband::run_experiment(config);
  } catch (const specband::Error& e) {
    std::fprintf(stderr, "%s\n", specband::error_record(e).c_str());
    return specband::exit_code_for(e.code());
  } catch (const std::exception& e) {
    specband::Error wrapped(specband::Errc::non_finite_loss, e.what());
    std::fprintf(stderr, "%s\n", specband::error_record(wrapped).c_str());
    return 4;
  }
  return 0;
}
