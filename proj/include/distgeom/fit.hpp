#pragma once

#include <span>
#include <vector>

namespace distgeom {

/// Least-squares fit of log|y| = intercept + slope * log x.
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Largest absolute deviation of a point from the line, in log units.
  double residual = 0.0;
  double r2 = 1.0;
  /// Number of points used (zeros are skipped).
  int points = 0;
  /// Every y was exactly zero.
  bool exact_zero = false;
};

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Two-variable fit log|v| = log C + alpha log a + beta log b.
struct PowerLaw2Fit {
  double log_c = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  int points = 0;
  /// Too few points or a rank-deficient design.
  bool sparse = false;
};

PowerLaw2Fit fit_power_law2(std::span<const double> a, std::span<const double> b,
                            std::span<const double> v);

}  // namespace distgeom
