#pragma once

#include "distgeom/embedding.hpp"
#include "distgeom/fit.hpp"
#include "distgeom/kernels.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace distgeom {

inline constexpr int kReportSchemaVersion = 1;

/// Richardson extrapolation of values P_k at eps_k = eps0 * ratio^k under
/// P = L + C eps^p. With no order given, p is estimated from consecutive
/// difference ratios and used when the last three estimates agree within
/// 0.2; otherwise p = 1.
struct RichardsonResult {
  double limit = 0.0;
  double order = 1.0;
  bool auto_detected = false;
  /// |limit - P_last|, a rough error scale.
  double correction = 0.0;
};
RichardsonResult richardson(std::span<const double> eps, std::span<const double> values,
                            std::optional<double> order = std::nullopt);

/// Graded quadrature of a representative against a test density; cells are
/// refined down to min_cell_factor * eps near the field's focus points and
/// planes.
struct PairingOptions {
  int order = 8;
  double min_cell_factor = 0.25;
  double grading = 1.0;
  int base_cells = 6;
  unsigned threads = 0;
};
double pair_field(const TensorField& rep, const TestDensity& psi, const Focus& focus, double eps,
                  const PairingOptions& opts = {});
/// Pairing of a smooth (closed-form) field by plain graded quadrature.
double pair_smooth(const TensorField& f, const TestDensity& psi, int order = 10, int cells = 8);

struct ScalingVerdict {
  enum class Kind { moderate, negligible, inconclusive };
  Kind kind = Kind::inconclusive;
  /// N for moderate(N), m for negligible_to_order(m); -1 with negligible
  /// means every tested value was exactly zero.
  int order = 0;
  std::string to_string() const;
};

struct ScalingOptions {
  double slope_tolerance = 0.2;
  double residual_cutoff = 0.5;
  int samples_per_axis = 5;
  /// Extra samples per axis on [-eps, eps]^n around each focus point in K;
  /// 0 disables them.
  int focus_samples = 9;
  unsigned threads = 0;
};

/// The tested expression L_{X_1} ... L_{X_l} d^V T.
struct ScalingTest {
  Variation variation;
  std::vector<VectorField> lie;
  std::string label;
};

struct ScalingReport {
  std::string quantity;
  EpsNet net;
  std::vector<double> eps;
  std::vector<double> sup_norms;
  LogLogFit fit;
  ScalingVerdict verdict;
  nlohmann::json to_json() const;
};

/// moderate(N) with N = max(0, ceil(-slope - tol)) unless the slope reaches
/// 1 - tol, which gives negligible_to_order(floor(slope + tol));
/// inconclusive when the fit residual exceeds the cutoff.
ScalingVerdict classify_slope(const LogLogFit& fit, const ScalingOptions& opts = {});

/// Frame-norm (Frobenius) sup over a grid on K of the tested expression at
/// each eps of the net, with a log-log slope fit.
ScalingReport scaling_exponent(const GeneralizedField& t, const SmoothingChoice& choice, const Box& k,
                               const EpsNet& net, const ScalingTest& test = {}, const ScalingOptions& opts = {});

/// Sup over a grid on K of |a - b| (Frobenius), for consistency checks of
/// two smooth fields.
double sup_difference(const TensorField& a, const TensorField& b, const Box& k, int samples_per_axis = 5);

/// Successive pairing differences at or below this fraction of
/// max(1, |P|) count as converged (stationary sequences).
inline constexpr double kStationaryTolerance = 1e-8;

struct AssociationOptions {
  double abs_tol = 1e-3;
  double rel_tol = 0.02;
  std::optional<double> richardson_order;
  PairingOptions pairing;
  double slope_tolerance = 0.2;
};

struct AssociationReport {
  enum class Verdict { associated, not_associated, inconclusive };
  std::string quantity;
  std::string choice;
  std::string test_density;
  std::vector<double> eps;
  std::vector<double> pairings;
  /// eps values whose evaluation failed, with the error message.
  std::vector<std::pair<double, std::string>> failures;
  /// Log-log fit of |P_k - P_{k+1}| against eps_k.
  LogLogFit convergence;
  RichardsonResult extrapolated;
  std::optional<double> target;
  Verdict verdict = Verdict::inconclusive;
  nlohmann::json to_json() const;
};

std::string to_string(AssociationReport::Verdict v);

struct AssociationSuite {
  std::vector<AssociationReport> reports;
  /// max - min of the pairings across choices, per eps.
  std::vector<double> spread;
  /// Spread strictly decreasing over the last four levels.
  bool spread_shrinks = false;
  bool all_associated() const;
  nlohmann::json to_json() const;
};

/// Pairings per eps per choice, extrapolation and verdicts. Associated iff
/// |limit - target| <= abs_tol + rel_tol |target| and the successive
/// differences shrink (positive slope) or are stationary. Without a target the
/// verdict is inconclusive unless the pairings converge (then associated,
/// with the limit reported).
AssociationSuite associate(const GeneralizedField& t, const TestDensity& psi, std::optional<double> target,
                           const std::vector<SmoothingChoice>& choices, const EpsNet& net,
                           const AssociationOptions& opts = {});

/// Per-eps evaluation of a pairing functional (for quantities that are not a
/// single generalized field paired with a density).
AssociationReport associate_values(const std::string& quantity, const std::string& choice, const std::string& psi,
                                   const std::function<double(double)>& pairing, std::optional<double> target,
                                   const EpsNet& net, const AssociationOptions& opts = {});

struct DecaySample {
  double eps = 0.0;
  double r = 0.0;
  double value = 0.0;
};

struct RegimeFit {
  double r0 = 0.0;
  PowerLaw2Fit inner;
  PowerLaw2Fit outer;
};

struct DecayProfile {
  std::vector<DecaySample> samples;
  /// Fit at the configured R0.
  RegimeFit fit;
  /// Fits for the R0 sensitivity sweep.
  std::vector<RegimeFit> sensitivity;
  nlohmann::json to_json() const;
};

struct DecayOptions {
  double r0 = 2.0;
  std::vector<double> r0_sweep{1.0, 2.0, 3.0, 4.0};
  int angles = 16;
  unsigned threads = 0;
};

/// Samples max |T_eps| over circles of the given radii around `center` and
/// fits C eps^alpha r^beta separately for r < eps R0 and r > eps R0.
DecayProfile decay_profile(const GeneralizedField& t, const SmoothingChoice& choice, const Point& center,
                           std::span<const double> radii, const EpsNet& net, const DecayOptions& opts = {});
RegimeFit fit_regimes(const std::vector<DecaySample>& samples, double r0);

/// CSV rendering helpers (header line plus rows).
std::string to_csv(const ScalingReport& r);
std::string to_csv(const AssociationReport& r);
std::string to_csv(const DecayProfile& r);

}  // namespace distgeom
