#include <doctest.h>

#include <cmath>

#include <omp.h>

#include "plumerom/kernels.hpp"
#include "plumerom/matern.hpp"
#include "support.hpp"

using namespace plumerom;

namespace {

// General Matern covariance with the modified Bessel function of the second kind.
double matern_bessel(double d, double rho, double nu) {
  if (d == 0.0) return rho;
  const double t = std::sqrt(2.0 * nu) * d;
  return rho * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(t, nu) * std::cyl_bessel_k(nu, t);
}

kernels::MaternArd params() { return {1.3, {0.4, 0.9, 0.25, 0.6}}; }

}  // namespace

TEST_CASE("ard distance") {
  const std::array<double, 4> o{0, 0, 0, 0}, a{1, 0, 0, 0}, b{0.3, -0.2, 0.5, 0.1}, ones{1, 1, 1, 1};
  CHECK(ard_distance(b, b, ones) == 0.0);
  CHECK(ard_distance(o, b, ones) == doctest::Approx(std::sqrt(0.09 + 0.04 + 0.25 + 0.01)));
  CHECK(ard_distance(o, a, std::array<double, 4>{2, 1, 1, 1}) == 0.5);
}

TEST_CASE("matern 5/2 closed form") {
  CHECK(matern52(0.0, 2.5) == 2.5);
  CHECK(matern52(1.0, 1.0) == doctest::Approx((1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0))).epsilon(1e-15));
  CHECK(matern52(1.0, 1.0) == doctest::Approx(0.523994).epsilon(1e-6));
  for (double d : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    CHECK(std::abs(matern52(d, 1.7) - matern_bessel(d, 1.7, 2.5)) <= 1e-10);
  }
  // lengthscale factor: d k / d log(lambda) for a single active dimension
  const double lam = 0.7, delta = 0.45, h = 1e-6;
  auto k_of = [&](double loglam) { return matern52(delta / std::exp(loglam), 1.0); };
  const double fd = (k_of(std::log(lam) + h) - k_of(std::log(lam) - h)) / (2 * h);
  const double an = matern52_lengthscale_factor(delta / lam, 1.0) * (delta / lam) * (delta / lam);
  CHECK(an == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("gram matrix properties") {
  const Eigen::MatrixXd x = testing::random_unit_inputs(60, 1);
  Eigen::MatrixXd k;
  kernels::serial::gram(x, params(), k);
  CHECK(k.rows() == 60);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.diagonal().minCoeff() == 1.3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * k.trace());

  // stationarity: shifting every input leaves the kernel unchanged
  Eigen::MatrixXd shifted = x;
  shifted.rowwise() += Eigen::RowVector4d(0.3, -1.2, 7.0, 0.01);
  Eigen::MatrixXd ks;
  kernels::serial::gram(shifted, params(), ks);
  CHECK((ks - k).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd c;
  kernels::serial::cross(x, x, params(), c);
  CHECK((c - k).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("openmp kernels are bit-identical to the serial reference") {
  const auto p = params();
  for (int n : {1, 7, 64, 257}) {
    const Eigen::MatrixXd x = testing::random_unit_inputs(n, n);
    const Eigen::MatrixXd y = testing::random_unit_inputs(n + 5, n + 1);
    const Eigen::MatrixXd w = testing::random_matrix(n, n, n + 2);
    for (int threads : {1, 2, 3, 8}) {
      omp_set_num_threads(threads);
      Eigen::MatrixXd ks, ko, cs, co;
      kernels::serial::gram(x, p, ks);
      kernels::omp::gram(x, p, ko);
      CHECK(ks == ko);
      kernels::serial::cross(y, x, p, cs);
      kernels::omp::cross(y, x, p, co);
      CHECK(cs == co);
      CHECK(kernels::serial::lengthscale_contraction(x, p, w) == kernels::omp::lengthscale_contraction(x, p, w));
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("lengthscale contraction matches finite differences") {
  const Eigen::MatrixXd x = testing::random_unit_inputs(25, 9);
  const Eigen::MatrixXd w = testing::random_matrix(25, 25, 10);
  const auto p = params();
  const auto an = kernels::serial::lengthscale_contraction(x, p, w);
  const double h = 1e-5;
  for (int d = 0; d < 4; ++d) {
    auto plus = p, minus = p;
    plus.lengthscales[d] *= std::exp(h);
    minus.lengthscales[d] *= std::exp(-h);
    Eigen::MatrixXd kp, km;
    kernels::serial::gram(x, plus, kp);
    kernels::serial::gram(x, minus, km);
    const double fd = (w.cwiseProduct(kp - km)).sum() / (2 * h);
    CHECK(an[d] == doctest::Approx(fd).epsilon(1e-6));
  }
}
