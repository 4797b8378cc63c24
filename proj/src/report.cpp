#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ntkes/errors.hpp"
#include "ntkes/experiment.hpp"

namespace ntkes {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <class T>
std::optional<T> optional_from(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

ordered_json record_json(const RunRecord& r) {
  ordered_json j;
  j["n"] = r.n;
  j["m"] = optional_json(r.m);
  j["failed"] = r.failed;
  j["error"] = r.error;
  j["t_hat_empirical"] = optional_json(r.t_hat_empirical);
  j["T_hat_theory"] = optional_json(r.T_hat_theory);
  j["T_hat_saturated"] = r.T_hat_saturated;
  j["eps_hat_sq"] = optional_json(r.eps_hat_sq);
  j["ratio"] = optional_json(r.ratio);
  j["risk_at_stop"] = optional_json(r.risk_at_stop);
  j["u_shaped"] = optional_json(r.u_shaped);
  j["truncation"] = optional_json(r.truncation);
  j["edr_slope"] = optional_json(r.edr_slope);
  j["nn_kgd_gap"] = optional_json(r.nn_kgd_gap);
  j["decomposition_sup_error"] = optional_json(r.decomposition_sup_error);
  j["curve_file"] = r.test_risk.empty() ? ordered_json(nullptr) : ordered_json(curve_file_name(r));
  j["train_loss"] = r.train_loss;
  j["test_risk"] = r.test_risk;
  return j;
}

RunRecord record_from(const ordered_json& j) {
  RunRecord r;
  r.n = j.at("n").get<std::size_t>();
  r.m = optional_from<std::size_t>(j, "m");
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.t_hat_empirical = optional_from<std::size_t>(j, "t_hat_empirical");
  r.T_hat_theory = optional_from<std::size_t>(j, "T_hat_theory");
  r.T_hat_saturated = j.at("T_hat_saturated").get<bool>();
  r.eps_hat_sq = optional_from<double>(j, "eps_hat_sq");
  r.ratio = optional_from<double>(j, "ratio");
  r.risk_at_stop = optional_from<double>(j, "risk_at_stop");
  r.u_shaped = optional_from<bool>(j, "u_shaped");
  r.truncation = optional_from<std::size_t>(j, "truncation");
  r.edr_slope = optional_from<double>(j, "edr_slope");
  r.nn_kgd_gap = optional_from<double>(j, "nn_kgd_gap");
  r.decomposition_sup_error = optional_from<double>(j, "decomposition_sup_error");
  r.train_loss = j.at("train_loss").get<std::vector<double>>();
  r.test_risk = j.at("test_risk").get<std::vector<double>>();
  return r;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return fmt(*v);
  } else {
    return std::to_string(*v);
  }
}

std::string summary_csv(const ExperimentReport& report) {
  std::string out = "n,m,t_hat_empirical,T_hat_theory,eps_hat_sq,ratio,risk_at_stop\n";
  for (const RunRecord& r : report.records) {
    out += std::to_string(r.n) + "," + field(r.m) + "," + field(r.t_hat_empirical) + "," + field(r.T_hat_theory) +
           "," + field(r.eps_hat_sq) + "," + field(r.ratio) + "," + field(r.risk_at_stop) + "\n";
  }
  return out;
}

std::string curve_csv(const RunRecord& r) {
  std::string out = "step,train_loss,test_risk\n";
  for (std::size_t t = 0; t < r.test_risk.size(); ++t) {
    out += std::to_string(t) + "," + (t < r.train_loss.size() ? fmt(r.train_loss[t]) : "") + "," +
           fmt(r.test_risk[t]) + "\n";
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

}  // namespace

std::string curve_file_name(const RunRecord& record) {
  std::string name = "curve_n" + std::to_string(record.n);
  if (record.m) name += "_m" + std::to_string(*record.m);
  return name + ".csv";
}

std::string report_json(const ExperimentReport& report) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["config"] = ordered_json::parse(config_json(report.config));
  j["paper_scale"] = report.paper_scale;
  ordered_json records = ordered_json::array();
  for (const RunRecord& r : report.records) records.push_back(record_json(r));
  j["records"] = std::move(records);
  j["slopes"] = ordered_json::object();
  for (const auto& [k, v] : report.slopes) j["slopes"][k] = v;
  j["checks"] = ordered_json::object();
  for (const auto& [k, v] : report.checks) j["checks"][k] = v;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j.dump(2) + "\n";
}

ExperimentReport parse_report(std::string_view text) {
  try {
    const ordered_json j = ordered_json::parse(text.begin(), text.end());
    ExperimentReport report;
    report.schema_version = j.at("schema_version").get<int>();
    if (report.schema_version != kSchemaVersion) {
      throw InvalidDataset("unsupported report schema_version " + std::to_string(report.schema_version));
    }
    report.config = parse_config(j.at("config").dump());
    report.paper_scale = j.at("paper_scale").get<bool>();
    for (const auto& r : j.at("records")) report.records.push_back(record_from(r));
    for (const auto& [k, v] : j.at("slopes").items()) report.slopes[k] = v.get<double>();
    for (const auto& [k, v] : j.at("checks").items()) report.checks[k] = v.get<bool>();
    report.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidDataset(std::string("malformed report: ") + e.what());
  }
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                                                bool overwrite) {
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  files.emplace_back(dir / "report.json", report_json(report));
  files.emplace_back(dir / "summary.csv", summary_csv(report));
  for (const RunRecord& r : report.records) {
    if (!r.test_risk.empty()) files.emplace_back(dir / curve_file_name(r), curve_csv(r));
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  if (!overwrite) {
    for (const auto& [path, _] : files) {
      if (std::filesystem::exists(path)) {
        throw IoError(path.string() + " already exists (pass the overwrite flag to replace it)");
      }
    }
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [path, contents] : files) {
    write_atomic(path, contents);
    written.push_back(path);
  }
  return written;
}

}  // namespace ntkes
