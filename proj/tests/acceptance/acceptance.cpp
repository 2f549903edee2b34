// Runs the shipped configs and prints one PASS/FAIL line per acceptance
// criterion. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dumbbell/experiments/scenarios.hpp"

namespace ex = dumbbell::experiments;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string config_path(const std::string& name) { return std::string(DUMBBELL_CONFIG_DIR) + "/" + name + ".cfg"; }

std::string describe(const ex::Verdict& v) {
  return v.name + "=" + ex::format_number(v.measured) + " (" + v.threshold + ")";
}

// All named verdicts present and passing, no stage error.
Outcome verdicts(const ex::Report& rep, const std::vector<std::string>& names) {
  Outcome out{!rep.has_error(), ""};
  for (const auto& name : names) {
    const ex::Verdict* v = rep.find_verdict(name);
    if (!v) {
      out.pass = false;
      out.detail += name + " missing; ";
      continue;
    }
    out.pass = out.pass && v->pass;
    out.detail += describe(*v) + "; ";
  }
  return out;
}

Outcome everything(const ex::Report& rep) {
  Outcome out{rep.all_pass() && !rep.verdicts().empty(), ""};
  for (const auto& v : rep.verdicts()) {
    if (!v.pass) out.detail += "FAILED " + describe(v) + "; ";
  }
  if (out.detail.empty()) out.detail = std::to_string(rep.verdicts().size()) + " verdicts pass";
  return out;
}

class Runner {
public:
  const ex::Report& get(const std::string& name) {
    auto it = reports_.find(name);
    if (it != reports_.end()) return it->second;
    const auto cfg = ex::load_config(config_path(name));
    const auto t0 = std::chrono::steady_clock::now();
    ex::Report rep = ex::run_scenario(cfg, ex::resolve_workers(std::nullopt, cfg.workers));
    seconds_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return reports_.emplace(name, std::move(rep)).first->second;
  }
  double seconds(const std::string& name) const { return seconds_.at(name); }

private:
  std::map<std::string, ex::Report> reports_;
  std::map<std::string, double> seconds_;
};

}  // namespace

int main() {
  Runner runner;
  struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "eigenvalue scaling",
       [&] {
         auto out = verdicts(runner.get("scaling"), {"slope_fem", "slope_oracle"});
         const double t = runner.seconds("scaling");
         out.pass = out.pass && t < 300.0;
         out.detail += "runtime=" + ex::format_number(std::round(t * 10) / 10) + "s (< 300)";
         return out;
       }},
      {2, "min-max sandwich", [&] { return verdicts(runner.get("scaling"), {"sandwich_max_lambda1_minus_bound"}); }},
      {3, "spectral gap", [&] { return everything(runner.get("gap")); }},
      {4, "plateaus", [&] { return everything(runner.get("plateau")); }},
      {5, "collar convergence", [&] { return everything(runner.get("collar")); }},
      {6, "harmonic model", [&] { return everything(runner.get("harmonic")); }},
      {7, "volume preservation", [&] { return verdicts(runner.get("scaling"), {"volume_relative_error"}); }},
      {8, "nodal verdicts", [&] { return everything(runner.get("nodal")); }},
      {9, "oracle equivalence", [&] { return everything(runner.get("oracle_compare")); }},
      {10, "mollification", [&] { return everything(runner.get("mollify")); }},
      {11, "morse benchmark", [&] { return everything(runner.get("morse")); }},
      {12, "determinism",
       [&] {
         const auto& first = runner.get("scaling");
         auto cfg = ex::load_config(config_path("scaling"));
         const auto again = ex::run_scenario(cfg, 2);
         const bool same = first.canonical() == again.canonical();
         return Outcome{same, same ? "repeat run with 2 workers is byte-identical" : "reports differ"};
       }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    failed += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.title << ": " << out.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed;
}
