#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dumbbell/error.hpp"

namespace dumbbell::experiments {

namespace detail {

inline std::string column_text(const nlohmann::ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

inline std::filesystem::path write_columns(const nlohmann::ordered_json& report, const std::string& table,
                                           const std::vector<std::string>& columns, const std::filesystem::path& path) {
  const auto& tables = report.at("tables");
  if (!tables.contains(table)) throw Error("report has no '" + table + "' table");
  const auto& t = tables.at(table);
  std::vector<std::size_t> pick;
  const auto names = t.at("columns").get<std::vector<std::string>>();
  for (const auto& c : columns) {
    const auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw Error("table '" + table + "' has no column '" + c + "'");
    pick.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? " " : "") << columns[k];
  out << '\n';
  for (const auto& row : t.at("rows")) {
    for (std::size_t k = 0; k < pick.size(); ++k) out << (k ? " " : "") << column_text(row.at(pick[k]));
    out << '\n';
  }
  return path;
}

}  // namespace detail

/// Whitespace-separated plot data from a report: loglog (epsilon, lambda1),
/// profile (rho, u, h, hbar) or surface (nodal polygon soup).
inline std::filesystem::path emit_plot_data(const nlohmann::ordered_json& report, const std::string& kind,
                                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string scenario = report.value("scenario", std::string("report"));
  const auto path = out_dir / (scenario + "_" + kind + ".dat");
  if (kind == "loglog") return detail::write_columns(report, "sweep", {"epsilon", "lambda1"}, path);
  if (kind == "profile") return detail::write_columns(report, "profile", {"rho", "u", "h", "hbar"}, path);
  if (kind == "surface") {
    if (!report.contains("artifacts") || !report.at("artifacts").contains("surface")) {
      throw Error("report has no nodal surface");
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << report.at("artifacts").at("surface").get<std::string>();
    return path;
  }
  throw Error("unknown plot kind '" + kind + "' (expected loglog, profile or surface)");
}

inline nlohmann::ordered_json load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  return nlohmann::ordered_json::parse(in);
}

}  // namespace dumbbell::experiments
