#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "sapr/cli/config.hpp"
#include "sapr/cli/presets.hpp"
#include "sapr/cli/report.hpp"

namespace {

constexpr int kConfigError = 2;

int print_config_error(const sapr::cli::ConfigError& e, const std::string& source) {
  for (const auto& d : e.diagnostics()) std::cerr << d.format(source) << '\n';
  return kConfigError;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"sapr: separable phase retrieval and multi-reference alignment experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", config_path, "config file")->required();

  auto* list = app.add_subcommand("presets", "list preset experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  if (list->parsed()) {
    for (const auto& p : sapr::cli::presets()) {
      std::cout << std::left << std::setw(24) << p.name << std::setw(10) << sapr::cli::to_string(p.command)
                << p.claim << '\n';
      std::cout << std::string(24, ' ') << "defaults: " << p.parameters.dump() << '\n';
    }
    return 0;
  }

  sapr::cli::ExperimentConfig config;
  try {
    config = sapr::cli::load_config(config_path);
  } catch (const sapr::cli::ConfigError& e) {
    return print_config_error(e, config_path);
  }

  if (validate->parsed()) {
    std::cout << config_path << ": ok (command " << sapr::cli::to_string(config.command)
              << (config.preset.empty() ? "" : ", preset " + config.preset) << ")\n";
    std::cout << config.parameters.dump(2) << '\n';
    return 0;
  }

  if (!out_dir.empty()) config.output_dir = out_dir;
  try {
    const auto report = sapr::cli::run(config, threads);
    const auto files = sapr::cli::write_report(report, config.output_dir);
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
    if (!report.summary.empty()) std::cout << "summary: " << report.summary.dump() << '\n';
    if (!report.flags.empty()) std::cout << "flags: " << report.flags.dump() << '\n';
  } catch (const sapr::cli::ConfigError& e) {
    return print_config_error(e, config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
