#pragma once

// Uncertain input space of the dispersion problem: bounds and marginals of
// the four parameters (reference velocity, roughness, source position and
// height), Halton designs, and the neutral log-law inlet quantities.

#include <array>
#include <cstdint>
#include <vector>

namespace plumerom {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Closed rectangle in the (x_src, z_src) plane.
struct ExclusionBox {
  Interval x{0.0, 1.2};
  Interval z{-0.2, 1.2};

  bool contains(double xs, double zs) const { return x.contains(xs) && z.contains(zs); }
};

struct ParameterSpace {
  Interval u_zc{3.0, 9.0};      // m/s, uniform
  Interval z0{1e-3, 1e-1};      // m, log-uniform
  Interval x_src{-3.5, 3.5};    // m, uniform
  Interval z_src{0.2, 2.0};     // m, uniform
  ExclusionBox exclusion{};
  double z_c = 10.0;            // reference height, m
  double kappa = 0.41;          // von Karman constant

  /// Throws ConfigError when an interval is degenerate or z0 is not positive.
  void validate() const;
};

/// Dimension order used everywhere: u_zc, z0, x_src, z_src.
using UnitPoint = std::array<double, 4>;

struct PhysicalParams {
  double u_zc = 0.0;
  double z0 = 0.0;
  double x_src = 0.0;
  double z_src = 0.0;
};

struct ParameterSample {
  UnitPoint unit{};
  PhysicalParams physical{};
  std::uint64_t index = 0;  // Halton index, 0 when not drawn from the sequence
  bool rejected = false;    // source falls inside the exclusion box
};

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);

/// Halton point with the first `dim` primes as bases. index >= 1, dim in [1, 4].
std::vector<double> halton_point(std::uint64_t index, int dim);

ParameterSample to_physical(const UnitPoint& unit, const ParameterSpace& space);
UnitPoint to_unit(const PhysicalParams& phys, const ParameterSpace& space);

/// True when every coordinate lies inside its interval (exclusion box ignored).
bool in_bounds(const PhysicalParams& phys, const ParameterSpace& space);

/// u_tau = kappa * u_zc / log(1 + z_c / z0).
double friction_velocity(double u_zc, double z0, double z_c, double kappa);

/// Mean streamwise velocity u(z) = (u_tau / kappa) * log(1 + z / z0).
double inlet_profile(double z, double u_tau, double z0, double kappa);

struct InletStatistics {
  double mean_u_tau = 0.0;
  double mean_u_zc = 0.0;
  double std_u_zc = 0.0;
  double mean_z0 = 0.0;
  double std_z0 = 0.0;
};

/// Monte Carlo moments of the inlet marginals (u_zc uniform, z0 log-uniform),
/// drawn with a counter-based generator keyed by `seed`.
InletStatistics inlet_statistics(const ParameterSpace& space, std::uint64_t n_mc,
                                 std::uint64_t seed);

/// E[u_tau] used to normalize the fields.
double reference_velocity(const ParameterSpace& space, std::uint64_t n_mc = 100000,
                          std::uint64_t seed = 0);

struct Design {
  std::vector<ParameterSample> samples;
  std::uint64_t start_index = 1;
  std::uint64_t next_index = 1;  // first Halton index not consumed
  std::uint64_t skipped = 0;     // indices rejected by the exclusion box
};

/// Consume the Halton sequence from `start_index` until `n` admissible samples
/// are collected. Rejected indices are skipped, never resampled.
Design design(const ParameterSpace& space, std::size_t n, std::uint64_t start_index = 1);

}  // namespace plumerom
