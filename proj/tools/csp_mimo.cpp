// Command-line front end: csp-mimo <kind> --config <path> [options]
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "csp_mimo/cli.hpp"

namespace {

std::size_t default_threads() {
  if (const char* env = std::getenv("CSP_MIMO_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "csp-mimo: ignoring invalid CSP_MIMO_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed-domain MIMO radar detection and estimation simulator"};
  std::string kind;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out_dir = ".";
  std::size_t threads = 0;
  std::vector<std::string> sets;
  bool print_config = false;

  app.add_option("kind", kind, "Experiment: roc, estimate, mismatch, resolvability, cr-match, single-run")
      ->required()
      ->check(CLI::IsMember(csp::cli::kKinds));
  app.add_option("--config", config_path, "Flat key = value config file (absent keys take defaults)");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--trials", trials, "Override the Monte Carlo trial count");
  app.add_option("--out", out_dir, "Output directory for CSV and manifest files");
  app.add_option("--threads", threads, "Worker threads (default: CSP_MIMO_THREADS or hardware concurrency)");
  app.add_option("--set", sets, "Extra key=value assignments applied after the config file");
  app.add_flag("--print-config", print_config, "Print the fully resolved config and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    csp::cli::ExperimentSpec spec =
        config_path.empty() ? csp::cli::parse_config_text("") : csp::cli::parse_config_file(config_path);
    spec.kind = kind;
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw csp::cli::ConfigError("--set expects key=value, got '" + kv + "'");
      csp::cli::set_value(spec, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) spec.config.seed = *seed;
    if (trials) spec.trials = *trials;
    spec.output = out_dir;
    csp::cli::validate(spec);
    if (print_config) {
      std::cout << csp::cli::emit_config(spec);
      return 0;
    }
    csp::RunOptions opts;
    opts.threads = threads > 0 ? threads : default_threads();
    for (const auto& path : csp::cli::run(spec, opts)) std::cout << path.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "csp-mimo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
