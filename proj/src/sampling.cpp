#include "plumerom/sampling.hpp"

#include <cmath>
#include <string>

#include "plumerom/errors.hpp"
#include "plumerom/random.hpp"

namespace plumerom {

namespace {

constexpr std::array<unsigned, 4> kPrimes{2, 3, 5, 7};

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw ConfigError(std::string("degenerate interval for ") + name);
  }
}

double lerp(const Interval& iv, double u) { return iv.lo + u * iv.width(); }

}  // namespace

void ParameterSpace::validate() const {
  check_interval(u_zc, "u_zc");
  check_interval(z0, "z0");
  check_interval(x_src, "x_src");
  check_interval(z_src, "z_src");
  check_interval(exclusion.x, "exclusion.x");
  check_interval(exclusion.z, "exclusion.z");
  if (z0.lo <= 0.0) throw ConfigError("z0 bounds must be strictly positive");
  if (u_zc.lo <= 0.0) throw ConfigError("u_zc bounds must be strictly positive");
  if (z_c <= 0.0 || kappa <= 0.0) throw ConfigError("z_c and kappa must be positive");
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= base;
  }
  return result;
}

std::vector<double> halton_point(std::uint64_t index, int dim) {
  if (index == 0) throw ConfigError("Halton index must be >= 1");
  if (dim < 1 || dim > 4) throw ConfigError("Halton dimension must be in [1, 4]");
  std::vector<double> p(dim);
  for (int d = 0; d < dim; ++d) p[d] = radical_inverse(index, kPrimes[d]);
  return p;
}

ParameterSample to_physical(const UnitPoint& unit, const ParameterSpace& space) {
  for (double u : unit) {
    if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("unit coordinates must lie in [0, 1]");
  }
  ParameterSample s;
  s.unit = unit;
  s.physical.u_zc = lerp(space.u_zc, unit[0]);
  const double la = std::log(space.z0.lo);
  const double lb = std::log(space.z0.hi);
  s.physical.z0 = std::exp(la + unit[1] * (lb - la));
  s.physical.x_src = lerp(space.x_src, unit[2]);
  s.physical.z_src = lerp(space.z_src, unit[3]);
  s.rejected = space.exclusion.contains(s.physical.x_src, s.physical.z_src);
  return s;
}

UnitPoint to_unit(const PhysicalParams& p, const ParameterSpace& space) {
  const double la = std::log(space.z0.lo);
  const double lb = std::log(space.z0.hi);
  return {(p.u_zc - space.u_zc.lo) / space.u_zc.width(),
          (std::log(p.z0) - la) / (lb - la),
          (p.x_src - space.x_src.lo) / space.x_src.width(),
          (p.z_src - space.z_src.lo) / space.z_src.width()};
}

bool in_bounds(const PhysicalParams& p, const ParameterSpace& space) {
  return space.u_zc.contains(p.u_zc) && space.z0.contains(p.z0) &&
         space.x_src.contains(p.x_src) && space.z_src.contains(p.z_src);
}

double friction_velocity(double u_zc, double z0, double z_c, double kappa) {
  if (!(z0 > 0.0) || !(z_c > 0.0)) throw std::domain_error("friction_velocity: z0 and z_c must be > 0");
  if (!(u_zc > 0.0)) throw std::domain_error("friction_velocity: u_zc must be > 0");
  return kappa * u_zc / std::log1p(z_c / z0);
}

double inlet_profile(double z, double u_tau, double z0, double kappa) {
  if (!(z >= 0.0)) throw std::domain_error("inlet_profile: z must be >= 0");
  if (!(z0 > 0.0)) throw std::domain_error("inlet_profile: z0 must be > 0");
  return u_tau / kappa * std::log1p(z / z0);
}

InletStatistics inlet_statistics(const ParameterSpace& space, std::uint64_t n_mc,
                                 std::uint64_t seed) {
  if (n_mc == 0) throw ConfigError("n_mc must be >= 1");
  const double la = std::log(space.z0.lo);
  const double lb = std::log(space.z0.hi);
  // Welford accumulators keep the summation order fixed.
  double m_tau = 0.0, m_u = 0.0, s_u = 0.0, m_z = 0.0, s_z = 0.0;
  for (std::uint64_t i = 0; i < n_mc; ++i) {
    const double u = lerp(space.u_zc, counter_uniform(seed, 2 * i));
    const double z0 = std::exp(la + counter_uniform(seed, 2 * i + 1) * (lb - la));
    const double tau = friction_velocity(u, z0, space.z_c, space.kappa);
    const double k = static_cast<double>(i + 1);
    m_tau += (tau - m_tau) / k;
    const double du = u - m_u;
    m_u += du / k;
    s_u += du * (u - m_u);
    const double dz = z0 - m_z;
    m_z += dz / k;
    s_z += dz * (z0 - m_z);
  }
  InletStatistics st;
  st.mean_u_tau = m_tau;
  st.mean_u_zc = m_u;
  st.mean_z0 = m_z;
  if (n_mc > 1) {
    st.std_u_zc = std::sqrt(s_u / static_cast<double>(n_mc - 1));
    st.std_z0 = std::sqrt(s_z / static_cast<double>(n_mc - 1));
  }
  return st;
}

double reference_velocity(const ParameterSpace& space, std::uint64_t n_mc, std::uint64_t seed) {
  return inlet_statistics(space, n_mc, seed).mean_u_tau;
}

Design design(const ParameterSpace& space, std::size_t n, std::uint64_t start_index) {
  if (n == 0) throw ConfigError("design size must be >= 1");
  if (start_index == 0) throw ConfigError("Halton index must be >= 1");
  Design d;
  d.start_index = start_index;
  d.samples.reserve(n);
  std::uint64_t idx = start_index;
  while (d.samples.size() < n) {
    const auto h = halton_point(idx, 4);
    ParameterSample s = to_physical({h[0], h[1], h[2], h[3]}, space);
    s.index = idx;
    ++idx;
    if (s.rejected) {
      ++d.skipped;
      continue;
    }
    d.samples.push_back(s);
  }
  d.next_index = idx;
  return d;
}

}  // namespace plumerom
