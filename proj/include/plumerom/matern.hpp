#pragma once

#include <array>
#include <cmath>
#include <span>

namespace plumerom {

inline constexpr double kSqrt5 = 2.23606797749978969640917;

/// Anisotropic distance sqrt(sum_i ((a_i - b_i) / lambda_i)^2).
inline double ard_distance(std::span<const double, 4> a, std::span<const double, 4> b,
                           std::span<const double, 4> lengthscales) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double t = (a[i] - b[i]) / lengthscales[i];
    s += t * t;
  }
  return std::sqrt(s);
}

/// Matern nu = 5/2 covariance at scaled distance d.
inline double matern52(double d, double signal_var) {
  const double sd = kSqrt5 * d;
  return signal_var * (1.0 + sd + sd * sd / 3.0) * std::exp(-sd);
}

/// d k / d log(lambda_i) divided by (delta_i / lambda_i)^2; finite at d = 0.
inline double matern52_lengthscale_factor(double d, double signal_var) {
  const double sd = kSqrt5 * d;
  return signal_var * (5.0 / 3.0) * (1.0 + sd) * std::exp(-sd);
}

}  // namespace plumerom
