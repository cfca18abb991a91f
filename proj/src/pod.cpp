#include "plumerom/pod.hpp"

#include <algorithm>
#include <Eigen/SVD>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <string>

#include "plumerom/errors.hpp"
#include "plumerom/random.hpp"

namespace plumerom {

namespace {

void canonicalize_signs(Eigen::MatrixXd& modes) {
  for (Eigen::Index l = 0; l < modes.cols(); ++l) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < modes.rows(); ++i) {
      const double a = std::abs(modes(i, l));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (modes(arg, l) < 0.0) modes.col(l) *= -1.0;
  }
}

struct Decomposition {
  Eigen::MatrixXd u;
  Eigen::VectorXd singular;
};

Decomposition thin_svd(const Eigen::MatrixXd& s) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU);
  return {svd.matrixU(), svd.singularValues()};
}

// Range finder with power iterations, then an exact SVD of the small projection.
Decomposition randomized_svd(const Eigen::MatrixXd& s, int rank, const PodOptions& opts) {
  const Eigen::Index k = std::min<Eigen::Index>(rank + opts.oversampling, std::min(s.rows(), s.cols()));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd omega(s.cols(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < s.cols(); ++i) omega(i, j) = normal(rng);
  }
  auto orth = [](const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols()));
  };
  Eigen::MatrixXd q = orth(s * omega);
  for (int it = 0; it < opts.power_iterations; ++it) {
    const Eigen::MatrixXd z = orth(s.transpose() * q);
    q = orth(s * z);
  }
  const Eigen::MatrixXd b = q.transpose() * s;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  return {q * svd.matrixU(), svd.singularValues()};
}

template <class T>
void hash_bytes(std::uint64_t& h, const T* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

void check_basis_vector(const ReducedBasis& b, Eigen::Index n, const char* what) {
  if (n != b.nodes()) throw DataError(std::string(what) + ": grid size does not match the basis");
}

}  // namespace

std::uint64_t ReducedBasis::id() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_bytes(h, eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size()));
  hash_bytes(h, mean_field.data(), static_cast<std::size_t>(mean_field.size()));
  hash_bytes(h, modes.data(), static_cast<std::size_t>(modes.size()));
  hash_bytes(h, &n_train, 1);
  return h;
}

CenteredSnapshots center_scale(const Eigen::MatrixXd& snapshots) {
  const Eigen::Index n = snapshots.cols();
  if (n < 2) throw DataError("POD needs at least 2 snapshots");
  CenteredSnapshots c;
  c.mean = snapshots.rowwise().mean();
  c.scaled = (snapshots.colwise() - c.mean) / std::sqrt(static_cast<double>(n - 1));
  return c;
}

ReducedBasis fit_pod(const Eigen::MatrixXd& snapshots, int L, const PodOptions& opts) {
  const Eigen::Index n = snapshots.cols();
  const Eigen::Index nh = snapshots.rows();
  if (n < 2) throw DataError("POD needs at least 2 snapshots");
  const Eigen::Index max_rank = std::min(nh, n - 1);
  if (L < 1 || L > max_rank) {
    throw ConfigError("number of modes must be in [1, " + std::to_string(max_rank) + "]");
  }

  const CenteredSnapshots c = center_scale(snapshots);
  const bool randomized = opts.backend == SvdBackend::randomized ||
                          (opts.backend == SvdBackend::automatic && n > opts.randomized_threshold);
  Decomposition dec = randomized ? randomized_svd(c.scaled, L, opts) : thin_svd(c.scaled);

  ReducedBasis b;
  b.n_train = static_cast<int>(n);
  b.mean_field = c.mean;
  b.node_variance = c.scaled.rowwise().squaredNorm();
  b.total_variance = c.scaled.squaredNorm();
  const Eigen::Index kept = std::min<Eigen::Index>(dec.singular.size(), max_rank);
  b.spectrum = dec.singular.head(kept).array().square();
  b.eigenvalues = b.spectrum.head(L);
  // numerical rank: singular values above max(N_h, N) * eps * s_1
  const double rank_tol = static_cast<double>(std::max(nh, n)) * std::numeric_limits<double>::epsilon() *
                          std::sqrt(b.spectrum[0]);
  if (!(std::sqrt(b.eigenvalues[L - 1]) > rank_tol)) {
    throw ConfigError("requested modes exceed the numerical rank of the snapshots");
  }
  b.modes = dec.u.leftCols(L);
  canonicalize_signs(b.modes);

  const double vmax = b.node_variance.maxCoeff();
  b.active.resize(static_cast<std::size_t>(nh));
  for (Eigen::Index i = 0; i < nh; ++i) {
    b.active[i] = b.node_variance[i] > kMaskRelativeThreshold * vmax ? 1 : 0;
  }
  return b;
}

ReducedBasis truncate(const ReducedBasis& basis, int L) {
  if (L < 1 || L > basis.size()) throw ConfigError("truncation outside the basis size");
  ReducedBasis b = basis;
  b.modes = basis.modes.leftCols(L);
  b.eigenvalues = basis.eigenvalues.head(L);
  return b;
}

Eigen::VectorXd project(const ReducedBasis& basis, const Eigen::VectorXd& field) {
  check_basis_vector(basis, field.size(), "project");
  Eigen::VectorXd k = basis.modes.transpose() * (field - basis.mean_field);
  return k.array() / basis.eigenvalues.array().sqrt();
}

Eigen::MatrixXd project_all(const ReducedBasis& basis, const Eigen::MatrixXd& fields) {
  check_basis_vector(basis, fields.rows(), "project");
  Eigen::MatrixXd k = basis.modes.transpose() * (fields.colwise() - basis.mean_field);
  return basis.eigenvalues.array().sqrt().inverse().matrix().asDiagonal() * k;
}

Eigen::VectorXd reconstruct(const ReducedBasis& basis, const Eigen::VectorXd& k) {
  if (k.size() != basis.size()) throw DataError("reconstruct: coefficient count does not match the basis");
  const Eigen::VectorXd weighted = basis.eigenvalues.array().sqrt() * k.array();
  return basis.mean_field + basis.modes * weighted;
}

Eigen::MatrixXd reconstruct_all(const ReducedBasis& basis, const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != basis.size()) throw DataError("reconstruct: coefficient count does not match the basis");
  const Eigen::MatrixXd weighted = basis.eigenvalues.array().sqrt().matrix().asDiagonal() * coeffs;
  Eigen::MatrixXd out = basis.modes * weighted;
  out.colwise() += basis.mean_field;
  return out;
}

std::vector<double> cumulative_variance(const Eigen::VectorXd& spectrum, double total) {
  std::vector<double> q(static_cast<std::size_t>(spectrum.size()));
  double acc = 0.0;
  for (Eigen::Index l = 0; l < spectrum.size(); ++l) {
    acc += spectrum[l];
    q[l] = acc / total;
  }
  return q;
}

std::vector<double> cumulative_variance(const Eigen::VectorXd& spectrum) {
  return cumulative_variance(spectrum, spectrum.sum());
}

std::vector<double> cumulative_variance(const ReducedBasis& basis) {
  return cumulative_variance(basis.spectrum, basis.total_variance);
}

int kaiser_rule(const Eigen::VectorXd& eigenvalues, double fraction) {
  if (!(fraction > 0.0)) throw ConfigError("Kaiser fraction must be positive");
  if (eigenvalues.size() == 0) return 0;
  const double threshold = fraction * eigenvalues.mean();
  int L = 0;
  for (Eigen::Index l = 0; l < eigenvalues.size(); ++l) {
    if (eigenvalues[l] >= threshold) L = static_cast<int>(l + 1);
  }
  return L;
}

ElbowResult elbow_rule(const Eigen::VectorXd& s) {
  const Eigen::Index m = s.size();
  if (m < 3) throw ConfigError("elbow rule needs at least 3 eigenvalues");
  auto second = [&](Eigen::Index l) { return s[l] - 2.0 * s[l + 1] + s[l + 2]; };
  double prev = second(0);
  for (Eigen::Index l = 1; l + 2 < m; ++l) {
    const double cur = second(l);
    if ((cur > 0.0 && prev < 0.0) || (cur < 0.0 && prev > 0.0)) return {static_cast<int>(l + 1), true};
    if (cur != 0.0) prev = cur;
  }
  return {static_cast<int>(m), false};
}

Eigen::VectorXd correlation_map(const ReducedBasis& basis, int l) {
  if (l < 1 || l > basis.size()) throw ConfigError("mode index outside the basis");
  const double sigma = basis.eigenvalues[l - 1];
  Eigen::VectorXd corr(basis.nodes());
  for (Eigen::Index j = 0; j < basis.nodes(); ++j) {
    if (!basis.active[j]) {
      corr[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double c = std::sqrt(sigma / basis.node_variance[j]) * basis.modes(j, l - 1);
    if (std::abs(c) > 1.0) {
      if (std::abs(c) - 1.0 > 1e-6) throw NumericalError("correlation exceeds 1 beyond round-off");
      c = c > 0.0 ? 1.0 : -1.0;
    }
    corr[j] = c;
  }
  return corr;
}

}  // namespace plumerom
