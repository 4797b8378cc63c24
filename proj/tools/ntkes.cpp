#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ntkes/errors.hpp"
#include "ntkes/experiment.hpp"
#include "ntkes/parallel.hpp"

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Options {
  std::string config;
  std::string out;
  bool overwrite = false;
  bool paper_scale = false;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
  cmd->add_flag("--overwrite", o.overwrite, "replace existing report files");
  cmd->add_flag("--paper-scale", o.paper_scale, "simulate only: d=50, n=100..1000, m=n^2");
  cmd->add_option("--threads", o.threads, "worker threads (default: NTKES_THREADS or 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "overrides the config seed");
}

unsigned resolve_threads(const Options& o) {
  if (o.threads) return *o.threads;
  if (const char* env = std::getenv("NTKES_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ntkes::ConfigError(std::string("NTKES_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

int run(const std::string& command, const Options& o) {
  ntkes::ExperimentConfig cfg = ntkes::load_config(o.config);
  if (ntkes::to_string(cfg.experiment) != command) {
    throw ntkes::ConfigError("config describes experiment '" + std::string(ntkes::to_string(cfg.experiment)) +
                             "' but the '" + command + "' command was given");
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.paper_scale && cfg.experiment != ntkes::ExperimentKind::simulate) {
    throw ntkes::ConfigError("--paper-scale applies to simulate only");
  }
  ntkes::set_thread_count(resolve_threads(o));

  ntkes::RunOptions options;
  options.paper_scale = o.paper_scale;
  options.log = [](const std::string& line) { std::cerr << line << '\n'; };
  const ntkes::ExperimentReport report = ntkes::run_experiment(cfg, options);
  for (const auto& path : ntkes::write_report(report, cfg.output_dir, o.overwrite)) {
    std::cout << path.string() << '\n';
  }
  for (const auto& [name, value] : report.slopes) std::cout << "slope " << name << " = " << value << '\n';
  for (const auto& [name, ok] : report.checks) std::cout << "check " << name << ": " << (ok ? "pass" : "FAIL") << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ntkes: early-stopped two-layer ReLU network experiments"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"simulate", "rate-sweep", "edr", "tracking"}) add_common(app.add_subcommand(name), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  std::string command = app.get_subcommands().front()->get_name();
  if (command == "rate-sweep") command = "rate_sweep";
  try {
    return run(command, o);
  } catch (const ntkes::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ntkes::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ntkes::InvalidDataset& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ntkes::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ntkes::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kNumerical;
  }
}
