// Acceptance driver: runs the suite config, re-derives every criterion from
// the run records with the tolerances below, and prints one line per
// criterion.

#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"
#include "distgeom/fit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef DISTGEOM_CONFIG_DIR
#define DISTGEOM_CONFIG_DIR "configs"
#endif

using namespace distgeom;
using nlohmann::json;

namespace {

constexpr double kConeRelTol = 0.02;
constexpr double kConeSeconds = 300.0;
constexpr double kDecayTol = 0.3;
constexpr double kVacuumSlope = 1.0;
constexpr double kVacuumFraction = 1e-4;
constexpr double kCompatRelTol = 0.01;
constexpr double kEmbedSlopeTol = 0.2;
constexpr double kDeltaSlope = -2.0;
constexpr double kDeltaSlopeTol = 0.2;
constexpr int kMinCommutePairs = 3;

// Criteria expected to fail; see the README.
const std::set<int> kKnownFailures = {2};

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

const RunRecord& find_run(const SuiteRecord& s, const std::string& name) {
  for (const RunRecord& r : s.runs)
    if (r.name == name) return r;
  throw Error("suite has no run named " + name);
}

std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

Outcome cone_weight_criterion(const SuiteRecord& s, const std::map<std::string, double>& seconds) {
  Outcome o{true, ""};
  for (const char* name : {"cone_A05", "cone_A08", "cone_A095"}) {
    const RunRecord& r = find_run(s, name);
    const double a = r.results["A"].get<double>();
    double worst = 0.0;
    for (const json& suite : r.results["associations"]) {
      const double target = suite["target"].get<double>();
      const double expect = 4.0 * M_PI * (1.0 - a) * suite["psi_at_origin"].get<double>();
      if (std::abs(target - expect) > 1e-12 * std::abs(expect)) o.passed = false;
      for (const json& rep : suite["reports"]) {
        const double err = std::abs(rep["extrapolated_limit"].get<double>() - expect) / std::abs(expect);
        worst = std::max(worst, err);
        if (!rep["failures"].empty()) o.passed = false;
      }
    }
    const double secs = seconds.at(name);
    if (worst > kConeRelTol || secs > kConeSeconds) o.passed = false;
    o.detail += "A=" + fmt(a) + " rel_err=" + fmt(worst) + " time=" + fmt(secs) + "s; ";
  }
  return o;
}

Outcome decay_criterion(const SuiteRecord& s) {
  const RunRecord& r = find_run(s, "cone_A08_diag");
  if (!r.results.contains("decay")) return {false, "no decay profile"};
  const json& d = r.results["decay"];
  const double ia = d["inner"]["alpha"].get<double>();
  const double oa = d["outer"]["alpha"].get<double>();
  const double ob = d["outer"]["beta"].get<double>();
  const bool ok = std::abs(ia + 2.0) <= kDecayTol && std::abs(oa - 1.0) <= kDecayTol && std::abs(ob + 3.0) <= kDecayTol;
  return {ok, "inner alpha=" + fmt(ia) + " outer alpha=" + fmt(oa) + " beta=" + fmt(ob)};
}

Outcome vacuum_criterion(const SuiteRecord& s) {
  const RunRecord& r = find_run(s, "compat_flat");
  Outcome o{true, ""};
  double min_slope = 1e300, worst_ratio = 0.0;
  for (const json& rep : r.results["associations"]) {
    std::vector<double> e = doubles(rep["eps"]), p = doubles(rep["pairings"]);
    for (double& v : p) v = std::abs(v);
    min_slope = std::min(min_slope, fit_loglog(e, p).slope);
  }
  for (const Check& c : r.checks)
    if (c.name.rfind("vacuum_terminal/", 0) == 0)
      worst_ratio = std::max(worst_ratio, c.detail["terminal"].get<double>() / c.detail["curvature_scale"].get<double>());
  o.passed = min_slope >= kVacuumSlope && worst_ratio <= kVacuumFraction && !r.results["associations"].empty();
  o.detail = "min slope=" + fmt(min_slope) + " terminal/scale=" + fmt(worst_ratio);
  return o;
}

Outcome compat_criterion(const SuiteRecord& s) {
  Outcome o{true, ""};
  for (const char* name : {"compat_conformal", "compat_sphere"}) {
    double worst = 0.0;
    for (const json& rep : find_run(s, name).results["associations"]) {
      const double oracle = rep["oracle"].get<double>();
      worst = std::max(worst, std::abs(rep["extrapolated_limit"].get<double>() - oracle) / std::abs(oracle));
    }
    if (worst > kCompatRelTol) o.passed = false;
    o.detail += std::string(name) + " rel_err=" + fmt(worst) + "; ";
  }
  return o;
}

Outcome embed_criterion(const SuiteRecord& s) {
  Outcome o{true, ""};
  std::set<int> seen;
  for (const json& c : find_run(s, "embed").results["cases"]) {
    const std::string choice = c["choice"].get<std::string>();
    const int q = std::stoi(choice.substr(1, choice.find('/') - 1));
    const double slope = fit_loglog(doubles(c["eps"]), doubles(c["sup_difference"])).slope;
    seen.insert(q);
    if (slope < q + 1.0 - kEmbedSlopeTol) o.passed = false;
    o.detail += c["field"].get<std::string>() + "/" + choice + " slope=" + fmt(slope) + "; ";
  }
  if (!seen.count(0) || !seen.count(2)) o.passed = false;
  return o;
}

Outcome delta_net_criterion(const SuiteRecord& s) {
  Outcome o{true, ""};
  const json& fields = find_run(s, "delta_net").results["fields"];
  for (const json& f : fields) {
    if (f["tests"].size() < 3) o.passed = false;
    double worst = 0.0;
    bool shrinks = true;
    for (const json& t : f["tests"]) {
      const double target = t["target"].get<double>();
      for (const json& rep : t["reports"]) {
        worst = std::max(worst, std::abs(rep["extrapolated_limit"].get<double>() - target) / std::max(1e-12, std::abs(target)));
        if (rep["verdict"] != "associated" || !(rep["convergence"]["slope"].get<double>() > 0.0)) o.passed = false;
      }
      const std::vector<double> spread = doubles(t["spread"]);
      for (std::size_t i = spread.size() - 3; i < spread.size(); ++i)
        if (!(spread[i] < spread[i - 1])) shrinks = false;
    }
    if (!shrinks) o.passed = false;
    o.detail += f["field"].get<std::string>() + " rel_err=" + fmt(worst) + (shrinks ? " spread shrinks; " : " spread grows; ");
  }
  if (fields.size() < 2) o.passed = false;
  return o;
}

Outcome commute_criterion(const SuiteRecord& s) {
  const RunRecord& r = find_run(s, "commute");
  std::map<std::string, bool> cases;
  bool sigma_ok = false, sigma_seen = false;
  for (const Check& c : r.checks) {
    if (c.name.rfind("sigma_equality/", 0) == 0) {
      sigma_seen = true;
      sigma_ok = c.passed;
      continue;
    }
    if (c.name.rfind("association", 0) != 0) continue;
    const std::string label = c.name.substr(c.name.find('/') + 1, c.name.find('/', c.name.find('/') + 1) - c.name.find('/') - 1);
    auto it = cases.emplace(label, true).first;
    it->second = it->second && c.passed;
  }
  int passing = 0;
  for (const auto& [label, ok] : cases) passing += ok ? 1 : 0;
  const bool ok = sigma_seen && sigma_ok && passing >= kMinCommutePairs && passing == static_cast<int>(cases.size());
  return {ok, std::to_string(passing) + "/" + std::to_string(cases.size()) + " pairs associated, sigma equality " +
                  (sigma_ok ? "holds" : "fails")};
}

Outcome exponent_criterion(const SuiteRecord& s) {
  Outcome o{true, ""};
  int products = 0;
  bool delta_seen = false;
  for (const json& c : find_run(s, "exponents").results["cases"]) {
    const std::string q = c["quantity"].get<std::string>();
    const std::string v = c["verdict"].get<std::string>();
    const double slope = c["fit"]["slope"].get<double>();
    if (q == "delta") {
      delta_seen = true;
      if (std::abs(slope - kDeltaSlope) > kDeltaSlopeTol) o.passed = false;
      o.detail += "delta slope=" + fmt(slope) + "; ";
    } else if (q.rfind("iota_minus_sigma_q", 0) == 0) {
      const int kq = std::stoi(q.substr(18));
      int order = -2;
      if (v == "negligible_to_all_orders") order = 1 << 20;
      else if (v.rfind("negligible_to_order(", 0) == 0) order = std::stoi(v.substr(20));
      if (order < kq + 1) o.passed = false;
      o.detail += q + " " + v + "; ";
    } else if (q.find("_times_") != std::string::npos) {
      ++products;
      if (v.rfind("moderate", 0) != 0 && v.rfind("negligible", 0) != 0) o.passed = false;
      o.detail += q + " " + v + "; ";
    }
  }
  if (!delta_seen || products < 2) o.passed = false;
  return o;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const std::filesystem::path dir = argc > 1 ? argv[1] : DISTGEOM_CONFIG_DIR;
    const std::filesystem::path out =
        argc > 2 ? std::filesystem::path(argv[2]) : std::filesystem::temp_directory_path() / "distgeom_acceptance";
    const Config cfg = load_config(dir / "suite.toml");

    std::map<std::string, double> seconds;
    const auto observe = [&](const RunRecord& r, double secs) {
      seconds[r.name] = secs;
      std::cout << "  ran " << r.name << " in " << fmt(secs) << " s" << std::endl;
    };
    std::cout << "suite pass 1" << std::endl;
    const SuiteRecord first = run_suite(cfg, {}, observe);
    std::filesystem::remove_all(out);
    write_suite(first, out / "run1", "json");

    std::map<int, Outcome> results;
    results[1] = cone_weight_criterion(first, seconds);
    results[2] = decay_criterion(first);
    results[3] = vacuum_criterion(first);
    results[4] = compat_criterion(first);
    results[5] = embed_criterion(first);
    results[6] = delta_net_criterion(first);
    results[7] = commute_criterion(first);
    results[8] = exponent_criterion(first);

    std::cout << "suite pass 2" << std::endl;
    const SuiteRecord second = run_suite(load_config(dir / "suite.toml"), {}, observe);
    write_suite(second, out / "run2", "json");
    const auto a = read_dir(out / "run1");
    const auto b = read_dir(out / "run2");
    int differing = 0;
    for (const auto& [name, text] : a)
      if (!b.count(name) || b.at(name) != text) ++differing;
    results[9] = {first.config_hash == second.config_hash && a.size() == b.size() && differing == 0,
                  std::to_string(a.size()) + " JSON files, " + std::to_string(differing) + " differ, hash " +
                      first.config_hash.substr(0, 16)};

    bool ok = true;
    for (const auto& [n, r] : results) {
      const bool known = kKnownFailures.count(n) > 0;
      std::cout << "criterion " << n << ": " << (r.passed ? "PASS" : "FAIL") << (known && !r.passed ? " (known failure)" : "")
                << " | " << r.detail << "\n";
      if (!r.passed && !known) ok = false;
    }
    std::cout << (ok ? "acceptance: OK" : "acceptance: FAILED") << std::endl;
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance error: " << e.what() << "\n";
    return 1;
  }
}
