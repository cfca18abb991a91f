#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "plumerom/errors.hpp"
#include "plumerom/random.hpp"
#include "plumerom/sampling.hpp"

using namespace plumerom;

namespace {

// Digit-reversal written independently of the library: collect base-b digits
// of the index, then read them back as a fraction.
double radical_inverse_oracle(std::uint64_t index, unsigned base) {
  std::vector<unsigned> digits;
  while (index > 0) {
    digits.push_back(static_cast<unsigned>(index % base));
    index /= base;
  }
  double v = 0.0;
  double scale = 1.0 / base;
  for (unsigned d : digits) {
    v += d * scale;
    scale /= base;
  }
  return v;
}

// E[u_tau] by composite Simpson over log z0, times kappa * E[u_zc].
double mean_friction_velocity_quadrature(const ParameterSpace& s) {
  const double a = std::log(s.z0.lo), b = std::log(s.z0.hi);
  const int n = 20000;
  const double h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = a + i * h;
    const double f = 1.0 / std::log(1.0 + s.z_c / std::exp(t));
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * f;
  }
  const double mean_inv_log = acc * h / 3.0 / (b - a);
  return s.kappa * 0.5 * (s.u_zc.lo + s.u_zc.hi) * mean_inv_log;
}

double star_discrepancy_1d(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(x[i] - (2.0 * i + 1.0) / (2.0 * n)));
  }
  return 1.0 / (2.0 * n) + worst;
}

}  // namespace

TEST_CASE("halton points") {
  CHECK(halton_point(1, 1)[0] == 0.5);
  CHECK(halton_point(2, 1)[0] == 0.25);
  CHECK(halton_point(3, 1)[0] == 0.75);
  const auto p = halton_point(1, 2);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(halton_point(0, 1), ConfigError);
  CHECK_THROWS_AS(halton_point(1, 5), ConfigError);

  const unsigned bases[4] = {2, 3, 5, 7};
  for (std::uint64_t i = 1; i < 3000; i += 7) {
    const auto h = halton_point(i, 4);
    for (int d = 0; d < 4; ++d) CHECK(h[d] == doctest::Approx(radical_inverse_oracle(i, bases[d])).epsilon(1e-14));
  }
}

TEST_CASE("halton discrepancy shrinks by orders of magnitude") {
  for (int d = 0; d < 4; ++d) {
    double prev = 1.0;
    for (int n : {16, 256, 4096}) {
      std::vector<double> x;
      for (int i = 1; i <= n; ++i) x.push_back(halton_point(i, 4)[d]);
      const double disc = star_discrepancy_1d(x);
      CHECK(disc < prev / 5.0);
      prev = disc;
    }
  }
}

TEST_CASE("unit to physical mapping") {
  const ParameterSpace s;
  CHECK(to_physical({0.2, 0.5, 0.1, 0.1}, s).physical.z0 == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(to_physical({0.0, 0.5, 0.1, 0.1}, s).physical.u_zc == 3.0);
  CHECK(to_physical({1.0, 0.5, 0.1, 0.1}, s).physical.u_zc == 9.0);

  const ParameterSample in_box = to_physical({0.3, 0.3, 0.5, 0.5}, s);
  CHECK(in_box.physical.x_src == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(in_box.physical.z_src == doctest::Approx(1.1));
  CHECK(in_box.rejected);
  CHECK_FALSE(to_physical({0.3, 0.3, 0.1, 0.5}, s).rejected);
  CHECK_THROWS_AS(to_physical({1.1, 0.3, 0.1, 0.5}, s), ConfigError);
}

TEST_CASE("unit/physical round trip and monotonicity") {
  const ParameterSpace s;
  for (std::uint64_t i = 1; i < 500; ++i) {
    const auto h = halton_point(i, 4);
    const UnitPoint u{h[0], h[1], h[2], h[3]};
    const UnitPoint back = to_unit(to_physical(u, s).physical, s);
    for (int d = 0; d < 4; ++d) CHECK(back[d] == doctest::Approx(u[d]).epsilon(1e-12));
  }
  for (int d = 0; d < 4; ++d) {
    UnitPoint u{0.5, 0.5, 0.1, 0.9};
    double prev = -1e300;
    for (int k = 0; k <= 100; ++k) {
      u[d] = k / 100.0;
      const PhysicalParams p = to_physical(u, s).physical;
      const double v[4] = {p.u_zc, p.z0, p.x_src, p.z_src};
      CHECK(v[d] > prev);
      prev = v[d];
    }
  }
}

TEST_CASE("parameter space validation") {
  ParameterSpace s;
  CHECK_NOTHROW(s.validate());
  s.z0 = {0.0, 0.1};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ParameterSpace{};
  s.u_zc = {5.0, 5.0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("friction velocity and inlet profile") {
  CHECK(friction_velocity(5.78, 2.79e-2, 10.0, 0.41) == doctest::Approx(0.4027).epsilon(2e-4));
  CHECK(friction_velocity(9.0, 1e-3, 10.0, 0.41) == doctest::Approx(0.4006).epsilon(2e-4));
  CHECK(friction_velocity(2 * 5.78, 2.79e-2, 10.0, 0.41) ==
        doctest::Approx(2 * friction_velocity(5.78, 2.79e-2, 10.0, 0.41)).epsilon(1e-15));
  CHECK_THROWS_AS(friction_velocity(5.0, 0.0, 10.0, 0.41), std::domain_error);
  CHECK_THROWS_AS(friction_velocity(5.0, 0.01, -1.0, 0.41), std::domain_error);

  CHECK(inlet_profile(0.0, 0.4, 0.01, 0.41) == 0.0);
  CHECK(inlet_profile(1.0, 0.4027, 2.79e-2, 0.41) == doctest::Approx(3.54243).epsilon(1e-5));
  CHECK_THROWS_AS(inlet_profile(-0.1, 0.4, 0.01, 0.41), std::domain_error);
  for (double u : {3.0, 5.78, 9.0}) {
    for (double z0 : {1e-3, 2.79e-2, 1e-1}) {
      const double tau = friction_velocity(u, z0, 10.0, 0.41);
      CHECK(inlet_profile(10.0, tau, z0, 0.41) == doctest::Approx(u).epsilon(1e-12));
    }
  }
}

TEST_CASE("reference velocity and inlet statistics") {
  const ParameterSpace s;
  const auto t0 = std::chrono::steady_clock::now();
  const InletStatistics st = inlet_statistics(s, 100000, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 5.0);
  const double oracle = mean_friction_velocity_quadrature(s);
  CHECK(st.mean_u_tau == doctest::Approx(oracle).epsilon(0.003 / oracle));
  CHECK(std::abs(st.mean_u_tau - 0.3703) < 0.003);
  CHECK(std::abs(st.mean_z0 - 0.0215) < 0.001);
  CHECK(std::abs(st.std_z0 - 0.025) < 0.002);
  CHECK(std::abs(st.std_u_zc - 1.732) < 0.02);
  CHECK(reference_velocity(s, 100000, 0) == st.mean_u_tau);
  CHECK(reference_velocity(s, 1000, 7) == reference_velocity(s, 1000, 7));

  // Single draw: the mean is that draw's friction velocity.
  const std::uint64_t seed = 42;
  const double u = 3.0 + 6.0 * counter_uniform(seed, 0);
  const double z0 = std::exp(std::log(1e-3) + counter_uniform(seed, 1) * (std::log(1e-1) - std::log(1e-3)));
  CHECK(reference_velocity(s, 1, seed) == doctest::Approx(friction_velocity(u, z0, 10.0, 0.41)).epsilon(1e-14));
  CHECK_THROWS_AS(reference_velocity(s, 0, 0), ConfigError);
}

TEST_CASE("halton design skips the exclusion box") {
  const ParameterSpace s;
  const Design one = design(s, 1, 1);
  REQUIRE(one.samples.size() == 1);
  CHECK(one.samples[0].index == 1);  // (0.5, 1/3, 0.2, 1/7) maps outside the box
  CHECK(design(s, 1, 1).samples[0].unit == one.samples[0].unit);

  const Design d = design(s, 750, 1);
  REQUIRE(d.samples.size() == 750);
  CHECK(d.next_index == 1 + 750 + d.skipped);
  CHECK(d.skipped > 0);
  std::uint64_t prev = 0;
  for (const auto& smp : d.samples) {
    CHECK(smp.index > prev);
    prev = smp.index;
    CHECK_FALSE(smp.rejected);
    CHECK_FALSE(s.exclusion.contains(smp.physical.x_src, smp.physical.z_src));
    CHECK(in_bounds(smp.physical, s));
    const auto h = halton_point(smp.index, 4);
    for (int k = 0; k < 4; ++k) CHECK(smp.unit[k] == h[k]);
  }

  // Extending a design continues where the previous one stopped.
  const Design head = design(s, 300, 1);
  const Design tail = design(s, 450, head.next_index);
  for (std::size_t i = 0; i < 450; ++i) CHECK(tail.samples[i].index == d.samples[300 + i].index);
  CHECK(head.skipped + tail.skipped == d.skipped);
}
