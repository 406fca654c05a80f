#pragma once

#include "distgeom/asymptotics.hpp"
#include "distgeom/calculus.hpp"
#include "distgeom/config.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace distgeom {

/// Command-line overrides of the [net] table.
struct NetOverride {
  std::optional<double> eps0;
  std::optional<double> ratio;
  std::optional<int> levels;

  bool empty() const { return !eps0 && !ratio && !levels; }
  EpsNet apply(EpsNet net) const;
};

/// One pass/fail expectation of a run. Non-gating checks are reported but
/// do not change the run verdict.
struct Check {
  std::string name;
  bool passed = false;
  bool gating = true;
  nlohmann::json detail;
};

/// Result of one experiment. Contains no wall-clock data, so identical
/// configs give bit-identical JSON.
struct RunRecord {
  std::string experiment;
  std::string name;
  std::string config_hash;
  nlohmann::json config;
  nlohmann::json results;
  std::vector<Check> checks;
  /// CSV tables by name.
  std::map<std::string, std::string> tables;

  bool passed() const;
  const Check* check(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// 4 pi (1 - A), the delta weight of the cone scalar curvature density.
double cone_weight(double a);

/// The trace-free cone matrix m_ab (eigenvalues +-1 off the origin).
void cone_m(const Point& y, std::span<double> out);

/// Cone metric g = 1/2 (1 + A^2) sigma(delta) + 1/2 (1 - A^2) iota(m) on
/// the chart (the A = 1 case is sigma(delta) alone).
GeneralizedMetric cone_metric(const Chart& chart, double a, EmbeddingQuadrature quad = {});

/// The smoothing choices of a config ([[choices]] with kernel_q and
/// transport = "identity" | "flat_frame"); defaults to q = 0 with the
/// identity when absent.
std::vector<SmoothingChoice> choices_from_config(const Config& cfg, const Chart& chart);
SmoothingChoice make_choice(const Chart& chart, int q, const std::string& transport, double shear = 0.1);

/// Test densities of a config ([[psi]] with kind = "bump" | "plateau" and
/// optional tensor components).
std::vector<TestDensity> densities_from_config(const Config& cfg, int dim, Valence valence);

EpsNet net_from_config(const Config& cfg, const NetOverride& ov, const std::string& table = "net");

RunRecord run_cone(const Config& cfg, const NetOverride& ov = {});
RunRecord run_compatibility(const Config& cfg, const NetOverride& ov = {});
RunRecord run_commutation(const Config& cfg, const NetOverride& ov = {});
/// Delta-net association of embedded rough fields against their oracle
/// pairings, across several smoothing choices.
RunRecord run_association(const Config& cfg, const NetOverride& ov = {});
/// Embedding consistency |iota(f) - f| and a grid dump of iota(f).
RunRecord run_embedding(const Config& cfg, const NetOverride& ov = {});
/// Moderateness / negligibility exponents of the corpus.
RunRecord run_exponents(const Config& cfg, const NetOverride& ov = {});
/// Curvature grids of a metric spec.
RunRecord run_curvature(const Config& cfg, const NetOverride& ov = {});

/// Dispatches on the config's `experiment` field.
RunRecord run_experiment(const Config& cfg, const NetOverride& ov = {});

struct SuiteRecord {
  std::string name;
  /// Hash over the suite file and every referenced config.
  std::string config_hash;
  std::vector<RunRecord> runs;
  std::vector<Check> checks;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Called after each run with its wall-clock seconds.
using RunObserver = std::function<void(const RunRecord&, double)>;

/// Runs every config listed in `runs` (paths relative to the suite file)
/// and the cross-run checks (cone linearity in 1 - A).
SuiteRecord run_suite(const Config& cfg, const NetOverride& ov = {}, const RunObserver& observer = {});

/// Writes <name>.json or <name>_<table>.csv files into `dir`; returns the
/// paths written.
std::vector<std::filesystem::path> write_record(const RunRecord& r, const std::filesystem::path& dir,
                                                const std::string& format);
std::vector<std::filesystem::path> write_suite(const SuiteRecord& s, const std::filesystem::path& dir,
                                               const std::string& format);

}  // namespace distgeom
