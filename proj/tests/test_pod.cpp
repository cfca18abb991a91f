#include <doctest.h>

#include <cmath>
#include <random>

#include "plumerom/errors.hpp"
#include "plumerom/plume.hpp"
#include "plumerom/pod.hpp"
#include "plumerom/rom.hpp"
#include "support.hpp"

using namespace plumerom;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// Snapshots with a decaying spectrum: a few smooth patterns plus small noise.
Eigen::MatrixXd structured(int nodes, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd k(nodes, n);
  for (int j = 0; j < n; ++j) {
    const double a = g(rng), b = g(rng), c = g(rng);
    for (int i = 0; i < nodes; ++i) {
      const double x = static_cast<double>(i) / nodes;
      k(i, j) = 2.0 + 3.0 * a * std::sin(3.0 * x) + 1.5 * b * std::cos(7.0 * x) + 0.5 * c * x * x + 0.05 * g(rng);
    }
  }
  return k;
}

// Mean correlation of map values a given number of cells apart along one axis.
double lag_correlation(const Grid& g, const Eigen::VectorXd& m, int lag, bool along_x) {
  double sxy = 0.0, sxx = 0.0, syy = 0.0, sx = 0.0, sy = 0.0;
  int n = 0;
  for (int iz = 0; iz < g.nz; ++iz) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const int jx = along_x ? ix + lag : ix;
      const int jz = along_x ? iz : iz + lag;
      if (jx >= g.nx || jz >= g.nz) continue;
      const double a = m[g.node(ix, iz)], b = m[g.node(jx, jz)];
      if (std::isnan(a) || std::isnan(b)) continue;
      sx += a;
      sy += b;
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
      ++n;
    }
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  return cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
}

double correlation_length(const Grid& g, const Eigen::VectorXd& m, bool along_x) {
  const double step = along_x ? g.dx() : g.dz();
  const int max_lag = along_x ? g.nx - 1 : g.nz - 1;
  for (int lag = 1; lag < max_lag; ++lag) {
    if (lag_correlation(g, m, lag, along_x) < 0.5) return lag * step;
  }
  return max_lag * step;
}

}  // namespace

TEST_CASE("center and scale") {
  const Eigen::MatrixXd k = structured(30, 8, 1);
  const CenteredSnapshots c = center_scale(k);
  CHECK(c.scaled.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
  const Eigen::MatrixXd back = (c.scaled * std::sqrt(7.0)).colwise() + c.mean;
  CHECK((back - k).norm() <= 1e-12 * k.norm());

  Eigen::MatrixXd same(5, 2);
  same.col(0) = vec({1, 2, 3, 4, 5});
  same.col(1) = same.col(0);
  CHECK(center_scale(same).scaled.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(center_scale(Eigen::MatrixXd::Ones(5, 1)), DataError);
}

TEST_CASE("basis matches a dense eigendecomposition") {
  const Eigen::MatrixXd k = structured(30, 8, 2);
  const ReducedBasis b = fit_pod(k, 7);
  const CenteredSnapshots c = center_scale(k);
  const Eigen::MatrixXd cov = c.scaled * c.scaled.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  for (int l = 0; l < 7; ++l) {
    const double oracle = es.eigenvalues()[29 - l];
    CHECK(std::abs(b.eigenvalues[l] - oracle) <= 1e-8 * std::max(1.0, oracle));
    CHECK(std::abs(std::abs(b.modes.col(l).dot(es.eigenvectors().col(29 - l))) - 1.0) <= 1e-8);
    const Eigen::VectorXd r = cov * b.modes.col(l) - b.eigenvalues[l] * b.modes.col(l);
    CHECK(r.norm() <= 1e-6 * b.eigenvalues[l]);
  }
  CHECK((b.modes.transpose() * b.modes - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() <= 1e-8);
  for (int l = 1; l < 7; ++l) CHECK(b.eigenvalues[l] <= b.eigenvalues[l - 1]);
  CHECK(b.total_variance == doctest::Approx(cov.trace()).epsilon(1e-12));
  CHECK(cumulative_variance(b).back() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((b.node_variance - cov.diagonal()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("mode signs are canonical") {
  const Eigen::MatrixXd k = structured(50, 20, 3);
  const ReducedBasis a = fit_pod(k, 5);
  const ReducedBasis b = fit_pod(k, 5);
  CHECK(a.modes == b.modes);
  CHECK(a.id() == b.id());
  for (int l = 0; l < 5; ++l) {
    Eigen::Index i = 0;
    a.modes.col(l).cwiseAbs().maxCoeff(&i);
    CHECK(a.modes(i, l) > 0.0);
  }
  CHECK(fit_pod(k, 4).id() != a.id());
  CHECK((fit_pod(-k, 5).modes - a.modes).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("rank-one ensemble") {
  Eigen::VectorXd pattern = vec({0.0, 1.0, 2.0, -1.0, 0.5, 3.0, 0.0, 1.5});
  Eigen::MatrixXd k(8, 6);
  const double amp[6] = {0.3, -1.2, 2.0, 0.7, -0.4, 1.1};
  for (int j = 0; j < 6; ++j) k.col(j) = amp[j] * pattern;
  const ReducedBasis b = fit_pod(k, 1);
  CHECK(b.spectrum.size() >= 2);
  CHECK(b.spectrum[1] / b.spectrum[0] <= 1e-10);
  CHECK_THROWS_AS(fit_pod(k, 3), ConfigError);

  const Eigen::VectorXd corr = correlation_map(b, 1);
  for (int i = 0; i < 8; ++i) {
    if (pattern[i] == 0.0) {
      CHECK(std::isnan(corr[i]));
    } else {
      CHECK(std::abs(std::abs(corr[i]) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("correlations over the full spectrum sum to one") {
  const Eigen::MatrixXd k = testing::random_matrix(20, 12, 4);
  const ReducedBasis b = fit_pod(k, 11);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(20);
  for (int l = 1; l <= 11; ++l) {
    const Eigen::VectorXd c = correlation_map(b, l);
    CHECK(c.cwiseAbs().maxCoeff() <= 1.0);
    sum += c.cwiseAbs2();
  }
  CHECK((sum.array() - 1.0).abs().maxCoeff() <= 1e-10);
  CHECK_THROWS_AS(correlation_map(b, 12), ConfigError);
}

TEST_CASE("whitened projection and reconstruction") {
  const Eigen::MatrixXd k = structured(60, 25, 5);
  const ReducedBasis b = fit_pod(k, 24);
  CHECK(project(b, b.mean_field).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((reconstruct(b, Eigen::VectorXd::Zero(24)) - b.mean_field).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd coeff = testing::random_matrix(24, 1, 6);
  CHECK((project(b, reconstruct(b, coeff)) - coeff).cwiseAbs().maxCoeff() <= 1e-8);

  const Eigen::MatrixXd kc = project_all(b, k);
  for (int l = 0; l < 24; ++l) {
    const double mean = kc.row(l).mean();
    const double var = (kc.row(l).array() - mean).square().sum() / 24.0;
    CHECK(std::abs(mean) <= 1e-8);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
  CHECK((project_all(b, k).col(3) - project(b, k.col(3))).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((reconstruct_all(b, kc) - k).norm() <= 1e-8 * k.norm());
  CHECK_THROWS_AS(project(b, Eigen::VectorXd::Zero(59)), DataError);
  CHECK_THROWS_AS(reconstruct(b, Eigen::VectorXd::Zero(3)), DataError);
}

TEST_CASE("truncation error equals the discarded variance") {
  const Eigen::MatrixXd k = structured(60, 25, 7);
  const ReducedBasis full = fit_pod(k, 24);
  const std::vector<double> q = cumulative_variance(full);
  for (int L : {1, 2, 3, 5, 10, 20}) {
    const ReducedBasis b = truncate(full, L);
    const double residual = (reconstruct_all(b, project_all(b, k)) - k).squaredNorm();
    const double discarded = full.spectrum.tail(full.spectrum.size() - L).sum();
    CHECK(residual / 24.0 == doctest::Approx(discarded).epsilon(1e-8));
    CHECK(1.0 - residual / 24.0 / full.total_variance == doctest::Approx(q[L - 1]).epsilon(1e-8));

    // variance-weighted local Q2 of the self-reconstruction is the explained variance
    const EvaluationReport r = evaluate_projection(b, k);
    CHECK(std::abs(r.q2_global - q[L - 1]) <= 1e-8);
  }
  CHECK_THROWS_AS(truncate(full, 25), ConfigError);
}

TEST_CASE("cumulative variance") {
  const auto flat = cumulative_variance(Eigen::VectorXd::Constant(8, 2.0));
  for (int L = 1; L <= 8; ++L) CHECK(flat[L - 1] == doctest::Approx(L / 8.0).epsilon(1e-15));
  const auto q = cumulative_variance(vec({5.0, 3.0, 1.0, 0.5, 0.5}));
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] >= q[i - 1]);
  CHECK(q.back() == 1.0);
}

TEST_CASE("kaiser rule") {
  CHECK(kaiser_rule(vec({4, 2, 1, 1})) == 2);
  CHECK(kaiser_rule(Eigen::VectorXd::Constant(9, 0.3)) == 9);
  CHECK(kaiser_rule(vec({4, 2, 1, 1}), 0.4) == 4);
  CHECK_THROWS_AS(kaiser_rule(vec({1, 2}), 0.0), ConfigError);
}

TEST_CASE("elbow rule") {
  Eigen::VectorXd geo(12);
  for (int l = 0; l < 12; ++l) geo[l] = std::pow(2.0, -(l + 1));
  const ElbowResult g = elbow_rule(geo);
  CHECK_FALSE(g.found);
  CHECK(g.L == 12);

  const ElbowResult e = elbow_rule(vec({10, 6, 5, 4.8, 1}));
  CHECK(e.found);
  CHECK(e.L == 3);

  // convex throughout: second differences 89, 0.5, 0.4 never change sign
  CHECK_FALSE(elbow_rule(vec({100, 10, 9, 8.5, 8.4})).found);

  // zero second differences are skipped when looking for the sign change
  const ElbowResult z = elbow_rule(vec({5, 4, 3, 2, 0.5, 0.4}));
  CHECK(z.found);
  CHECK(z.L == 4);
  CHECK_THROWS_AS(elbow_rule(vec({1, 2})), ConfigError);
}

TEST_CASE("randomized backend agrees with the thin SVD") {
  const Eigen::MatrixXd k = structured(400, 120, 8);
  PodOptions ro;
  ro.backend = SvdBackend::randomized;
  ro.seed = 3;
  const ReducedBasis r = fit_pod(k, 3, ro);
  const ReducedBasis t = fit_pod(k, 3);
  for (int l = 0; l < 3; ++l) {
    CHECK(r.eigenvalues[l] == doctest::Approx(t.eigenvalues[l]).epsilon(1e-6));
    CHECK(std::abs(r.modes.col(l).dot(t.modes.col(l))) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(fit_pod(k, 3, ro).modes == r.modes);
}

TEST_CASE("leading mode of the surrogate is a large horizontally elongated structure") {
  const SnapshotSet set = generate_dataset(ParameterSpace{}, 200, Grid{}, Channel::mean_concentration, 0);
  const ReducedBasis b = fit_pod(set.fields, 5);
  const Eigen::VectorXd corr = correlation_map(b, 1);
  const double lx = correlation_length(set.grid, corr, true);
  const double lz = correlation_length(set.grid, corr, false);
  MESSAGE("mode 1 correlation lengths: x " << lx << " m, z " << lz << " m");
  CHECK(lx > 2.0);
  CHECK(lx > lz);
}
