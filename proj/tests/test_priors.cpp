#include <doctest.h>

#include <cmath>
#include <random>

#include "plumerom/errors.hpp"
#include "plumerom/priors.hpp"
#include "plumerom/rom.hpp"
#include "support.hpp"

using namespace plumerom;

TEST_CASE("gamma from mode and mean") {
  const GammaPrior g = gamma_from_mode_mean(0.01, 0.5);
  CHECK(g.rate == doctest::Approx(1.0 / 0.49).epsilon(1e-14));
  CHECK(g.rate == doctest::Approx(2.0408).epsilon(1e-4));
  CHECK(g.shape == doctest::Approx(1.0204).epsilon(1e-4));
  CHECK(g.mode() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(g.mean() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(gamma_from_mode_mean(0.5, 0.5), ConfigError);
  CHECK_THROWS_AS(gamma_from_mode_mean(0.0, 0.5), ConfigError);
}

TEST_CASE("gamma from mode and variance") {
  const GammaPrior g = gamma_from_mode_variance(1.0, 1.0);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(g.rate == doctest::Approx(phi).epsilon(1e-14));
  CHECK(g.shape == doctest::Approx(phi * phi).epsilon(1e-14));
  for (double mode : {1e-3, 0.01, 0.3, 1.0, 4.0}) {
    for (double var : {0.01, 1.0, 10.0}) {
      const GammaPrior h = gamma_from_mode_variance(mode, var);
      CHECK(h.shape > 1.0);
      CHECK(h.mode() == doctest::Approx(mode).epsilon(1e-10));
      CHECK(h.variance() == doctest::Approx(var).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(gamma_from_mode_variance(-1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(gamma_from_mode_variance(1.0, 0.0), ConfigError);
}

TEST_CASE("power-law fit") {
  std::vector<double> exact;
  for (int l = 1; l <= 100; ++l) exact.push_back(2.16e-4 * std::pow(l, 0.93));
  const PowerLaw p = fit_noise_power_law(exact);
  CHECK(std::abs(p.prefactor - 2.16e-4) <= 1e-10);
  CHECK(std::abs(p.exponent - 0.93) <= 1e-10);
  CHECK(p(10.0) == doctest::Approx(2.16e-4 * std::pow(10.0, 0.93)).epsilon(1e-9));

  const PowerLaw flat = fit_noise_power_law(std::vector<double>(12, 0.02));
  CHECK(flat.exponent == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flat.prefactor == doctest::Approx(0.02).epsilon(1e-12));

  std::vector<double> scaled = exact;
  for (double& v : scaled) v *= 10.0;
  const PowerLaw s = fit_noise_power_law(scaled);
  CHECK(s.prefactor == doctest::Approx(10.0 * p.prefactor).epsilon(1e-10));
  CHECK(s.exponent == doctest::Approx(p.exponent).epsilon(1e-10));

  // zeros are skipped; the mode index of the remaining entries is kept
  std::vector<double> gaps = exact;
  gaps[4] = gaps[9] = 0.0;
  CHECK(fit_noise_power_law(gaps).exponent == doctest::Approx(0.93).epsilon(1e-10));
  CHECK_THROWS_AS(fit_noise_power_law({0.0, 0.0, 1.0, 2.0}), DataError);
  CHECK_THROWS_AS(fit_noise_power_law(std::vector<double>(5, 0.0)), DataError);
}

TEST_CASE("noise estimate from paired projections") {
  const Eigen::MatrixXd snaps = testing::random_matrix(80, 40, 1);
  const ReducedBasis b = fit_pod(snaps, 6);

  const NoiseEstimate zero = estimate_noise(b, snaps, snaps);
  for (double v : zero.per_mode) CHECK(v == 0.0);
  CHECK_FALSE(zero.fitted);

  // independent perturbations of variance v in each window give s^2 ~ v
  const int n = 1000;
  const double v = 0.04;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd k(6, n), e1(6, n), e2(6, n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < 6; ++l) {
      k(l, j) = g(rng);
      e1(l, j) = std::sqrt(v) * g(rng);
      e2(l, j) = std::sqrt(v) * g(rng);
    }
  }
  const NoiseEstimate est = estimate_noise(b, reconstruct_all(b, k + e1), reconstruct_all(b, k + e2));
  for (double s : est.per_mode) CHECK(std::abs(s - v) <= 0.2 * v);
  CHECK(est.fitted);

  CHECK_THROWS_AS(estimate_noise(b, snaps, snaps.leftCols(10)), DataError);
  CHECK_THROWS_AS(estimate_noise(b, snaps.leftCols(1), snaps.leftCols(1)), DataError);
}

TEST_CASE("prior construction") {
  const PowerLaw fit{2.16e-4, 0.93};
  const PriorSet p1 = build_priors(1, fit);
  const PriorSet p100 = build_priors(100, fit);
  CHECK(p1.lengthscales[2].mode() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p100.lengthscales[2].mode() == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(p100.lengthscales[3].mode() == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(p100.lengthscales[0].mode() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p100.lengthscales[1].mode() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p1.signal.mean == 1.0);
  CHECK(p1.signal.variance == 0.03);
  CHECK(p1.noise.mean() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p1.noise.mode() == doctest::Approx(2.16e-4).epsilon(1e-9));
  CHECK_FALSE(p1.noise_mode_capped);

  const Hyperparameters start = p100.start_point();
  CHECK(start.noise_var == doctest::Approx(fit(100.0)).epsilon(1e-9));
  CHECK(start.signal_var == 1.0);
  CHECK(start.lengthscales[2] == doctest::Approx(0.01).epsilon(1e-10));

  for (int l = 1; l <= 200; ++l) {
    const PriorSet p = build_priors(l, PowerLaw{0.01, 1.0});
    for (const auto& g : p.lengthscales) {
      CHECK(g.shape > 1.0);
      CHECK(g.mode() > 0.0);
    }
    CHECK(p.noise.mode() <= p.noise.mean());
    CHECK(std::isfinite(p.noise.log_pdf(p.noise.mode())));
    CHECK(p.noise_mode_capped == (0.01 * l > 0.45));
  }
  CHECK(build_priors(60, PowerLaw{0.01, 1.0}).noise.mode() == doctest::Approx(0.45).epsilon(1e-12));
  CHECK_THROWS_AS(build_priors(0, fit), ConfigError);
  CHECK_THROWS_AS(build_priors(1, PowerLaw{0.0, 1.0}), ConfigError);
}

TEST_CASE("surrogate calibration statistics") {
  const SnapshotSet set = generate_dataset(ParameterSpace{}, 750, Grid{}, Channel::mean_concentration, 0);
  const DatasetSplit parts = split(set);
  const ReducedBasis b = fit_pod(parts.train.fields, 100);

  const CoefficientMoments train = coefficient_moments(b, parts.train.fields);
  CHECK(train.mean.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((train.variance.array() - 1.0).abs().maxCoeff() <= 1e-6);

  // 53 calibration snapshots: the leading modes sit in the band
  const CoefficientMoments calib = coefficient_moments(b, parts.calibration.fields);
  for (int l = 0; l < 30; ++l) {
    CHECK(std::abs(calib.mean[l]) <= 0.3);
    CHECK(std::abs(calib.variance[l] - 1.0) <= 0.5);
  }
  // 225 test snapshots: every mode does
  const CoefficientMoments test = coefficient_moments(b, parts.test.fields);
  for (int l = 0; l < 100; ++l) {
    CHECK(std::abs(test.mean[l]) <= 0.3);
    CHECK(std::abs(test.variance[l] - 1.0) <= 0.5);
  }

  const NoiseEstimate noise = estimate_noise(b, parts.calibration);
  REQUIRE(noise.fitted);
  for (double v : noise.per_mode) CHECK(v >= 0.0);
  CHECK(noise.fit.exponent > 0.0);
  MESSAGE("noise power law: a = " << noise.fit.prefactor << ", b = " << noise.fit.exponent);
  CHECK(noise.fit.prefactor > 2.16e-5);
  CHECK(noise.fit.prefactor < 2.16e-3);
}
