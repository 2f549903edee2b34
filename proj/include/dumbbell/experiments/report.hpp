#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "dumbbell/error.hpp"
#include "dumbbell/experiments/config.hpp"

namespace dumbbell::experiments {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

struct Verdict {
  std::string name;
  std::string threshold;  // human-readable, e.g. "<= 0.05" or "in [0.40, 0.60]"
  double measured = 0.0;
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw Error("table '" + name + "': row width mismatch");
    rows.push_back(std::move(row));
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // shortest of %.15g / %.17g that round-trips
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Verdicts, tables, scalars and timings of one scenario run.
class Report {
public:
  explicit Report(const ScenarioConfig& cfg) : config_(experiments::to_json(cfg)), scenario_(cfg.scenario) {}

  const std::string& scenario() const { return scenario_; }

  void verdict(std::string name, std::string threshold, double measured, bool pass) {
    verdicts_.push_back({std::move(name), std::move(threshold), measured, pass});
  }
  void at_most(const std::string& name, double measured, double bound) {
    verdict(name, "<= " + format_number(bound), measured, measured <= bound);
  }
  void at_least(const std::string& name, double measured, double bound) {
    verdict(name, ">= " + format_number(bound), measured, measured >= bound);
  }
  void within(const std::string& name, double measured, double lo, double hi) {
    verdict(name, "in [" + format_number(lo) + ", " + format_number(hi) + "]", measured, measured >= lo && measured <= hi);
  }
  void equals(const std::string& name, double measured, double expected) {
    verdict(name, "== " + format_number(expected), measured, measured == expected);
  }

  Table& table(const std::string& name, std::vector<std::string> columns) {
    tables_.push_back({name, std::move(columns), {}});
    return tables_.back();
  }
  const Table* find_table(const std::string& name) const {
    for (const auto& t : tables_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  void scalar(const std::string& key, double v) { scalars_[key] = json_number(v); }
  void note(const std::string& key, Json v) { scalars_[key] = std::move(v); }
  void artifact(const std::string& key, std::string text) { artifacts_[key] = std::move(text); }
  void timing(const std::string& stage, double seconds) { timings_[stage] = seconds; }
  void error(const std::string& stage, const std::string& message) {
    error_ = Json{{"stage", stage}, {"message", message}};
    verdict("stage:" + stage, "completes without error", std::nan(""), false);
  }

  const std::vector<Verdict>& verdicts() const { return verdicts_; }
  const std::deque<Table>& tables() const { return tables_; }
  bool has_error() const { return !error_.is_null(); }

  bool all_pass() const {
    for (const auto& v : verdicts_) {
      if (!v.pass) return false;
    }
    return true;
  }

  const Verdict* find_verdict(const std::string& name) const {
    for (const auto& v : verdicts_) {
      if (v.name == name) return &v;
    }
    return nullptr;
  }

  Json to_json(bool with_timings = true) const {
    Json j;
    j["scenario"] = scenario_;
    j["config"] = config_;
    j["versions"] = versions();
    Json vs = Json::array();
    for (const auto& v : verdicts_) {
      vs.push_back(Json{{"name", v.name}, {"threshold", v.threshold}, {"measured", json_number(v.measured)},
                        {"verdict", v.pass ? "PASS" : "FAIL"}});
    }
    j["verdicts"] = vs;
    j["all_pass"] = all_pass();
    j["scalars"] = scalars_.is_null() ? Json::object() : scalars_;
    Json ts = Json::object();
    for (const auto& t : tables_) {
      Json rows = Json::array();
      for (const auto& r : t.rows) {
        Json row = Json::array();
        for (double v : r) row.push_back(json_number(v));
        rows.push_back(row);
      }
      ts[t.name] = Json{{"columns", t.columns}, {"rows", rows}};
    }
    j["tables"] = ts;
    if (!artifacts_.is_null()) j["artifacts"] = artifacts_;
    if (!error_.is_null()) j["error"] = error_;
    if (with_timings) j["timings"] = timings_.is_null() ? Json::object() : timings_;
    return j;
  }

  /// Serialized report without the timing block; byte-identical for a fixed config.
  std::string canonical() const { return to_json(false).dump(2); }

  /// Writes <out>/<scenario>.json and one RFC-4180 CSV per table.
  std::vector<std::string> write(const std::filesystem::path& out) const {
    std::filesystem::create_directories(out);
    std::vector<std::string> written;
    const auto json_path = out / (scenario_ + ".json");
    std::ofstream js(json_path);
    if (!js) throw Error("cannot write " + json_path.string());
    js << to_json(true).dump(2) << '\n';
    written.push_back(json_path.string());
    for (const auto& t : tables_) {
      const auto path = out / (scenario_ + "_" + t.name + ".csv");
      std::ofstream cs(path);
      if (!cs) throw Error("cannot write " + path.string());
      write_csv(cs, t);
      written.push_back(path.string());
    }
    return written;
  }

  static void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_field(t.columns[c]);
    os << "\r\n";
    for (const auto& r : t.rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << format_number(r[c]);
      os << "\r\n";
    }
  }

private:
  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }

  // JSON has no NaN or infinity; they are written as strings.
  static Json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
  }

  static Json versions() {
    Json v;
    v["dumbbell"] = kVersion;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                         "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    return v;
  }

  Json config_;
  std::string scenario_;
  std::vector<Verdict> verdicts_;
  std::deque<Table> tables_;
  Json scalars_;
  Json artifacts_;
  Json timings_;
  Json error_;
};

}  // namespace dumbbell::experiments
