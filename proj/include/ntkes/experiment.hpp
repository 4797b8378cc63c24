#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntkes/ntk_kernel.hpp"

namespace ntkes {

enum class ExperimentKind { simulate, rate_sweep, edr, tracking };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(BiasMode mode);

struct TargetSpec {
  enum class Kind { linear, rkhs, power_law_spectrum };
  Kind kind = Kind::linear;

  // linear: s; empty means s is drawn uniformly from the sphere.
  std::vector<double> direction;
  // rkhs: explicit centers, or `num_centers` random sphere centers.
  std::vector<std::vector<double>> centers;
  std::size_t num_centers = 0;
  // rkhs: empty means N(0, 1/k) coefficients.
  std::vector<double> coefficients;
  // power_law_spectrum: lambda_j = scale * j^{-exponent}.
  double exponent = 2.0;
  double scale = 1.0;

  bool operator==(const TargetSpec&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::simulate;
  std::size_t d = 0;
  std::vector<std::size_t> n_list;
  // Empty means m = n^2. For simulate an explicit list pairs with n_list;
  // for tracking it is the width ladder applied to every n.
  std::vector<std::size_t> m_list;
  double eta = 0.1;
  double sigma0 = 0.1;
  double kappa = 1.0;
  std::size_t T_max = 600;
  std::uint64_t seed = 0;
  BiasMode mode = BiasMode::biased;
  TargetSpec target;
  std::string output_dir = "ntkes_out";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parse of a JSON config. Unknown, duplicate or ill-typed keys throw
/// ConfigError naming the key and its line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The config as JSON accepted by parse_config.
std::string config_json(const ExperimentConfig& cfg);

/// Widths trained for sample size n.
std::vector<std::size_t> widths_for(const ExperimentConfig& cfg, std::size_t n);

/// Applies the paper-scale simulation setup: d = 50, n = 100..1000, m = n^2.
void apply_paper_scale(ExperimentConfig& cfg);

struct RunRecord {
  std::size_t n = 0;
  std::optional<std::size_t> m;
  bool failed = false;
  std::string error;

  std::optional<std::size_t> t_hat_empirical;
  std::optional<std::size_t> T_hat_theory;
  bool T_hat_saturated = false;
  std::optional<double> eps_hat_sq;
  std::optional<double> ratio;
  std::optional<double> risk_at_stop;
  std::optional<bool> u_shaped;
  std::optional<std::size_t> truncation;

  std::vector<double> train_loss;  // index = step
  std::vector<double> test_risk;

  std::optional<double> edr_slope;
  std::optional<double> nn_kgd_gap;
  std::optional<double> decomposition_sup_error;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr int kSchemaVersion = 1;

struct ExperimentReport {
  int schema_version = kSchemaVersion;
  ExperimentConfig config;
  bool paper_scale = false;
  std::vector<RunRecord> records;
  std::map<std::string, double> slopes;
  std::map<std::string, bool> checks;
  double wall_clock_seconds = 0.0;

  bool operator==(const ExperimentReport&) const = default;
};

struct RunOptions {
  bool paper_scale = false;
  std::function<void(const std::string&)> log;
};

/// Runs the configured experiment. Divergence for one n marks that record as
/// failed and the run continues.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// report.json contents.
std::string report_json(const ExperimentReport& report);
ExperimentReport parse_report(std::string_view text);

/// Writes report.json, summary.csv and one curve CSV per record with a curve.
/// Throws IoError if a target file exists and `overwrite` is false.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                                bool overwrite);

/// File name of the curve CSV for a record.
std::string curve_file_name(const RunRecord& record);

}  // namespace ntkes
