#pragma once

// Snapshot POD: centering/scaling, truncated decomposition of the scaled
// snapshot matrix, whitened projection and its inverse, variance bookkeeping,
// truncation heuristics and mode/grid correlation maps.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace plumerom {

struct CenteredSnapshots {
  Eigen::VectorXd mean;
  Eigen::MatrixXd scaled;  // column i = (K_i - mean) / sqrt(N - 1)
};

/// Throws DataError for fewer than 2 snapshots.
CenteredSnapshots center_scale(const Eigen::MatrixXd& snapshots);

enum class SvdBackend { automatic, thin, randomized };

struct PodOptions {
  SvdBackend backend = SvdBackend::automatic;
  int randomized_threshold = 1000;  // automatic switches to randomized above this N
  int oversampling = 10;
  int power_iterations = 2;
  std::uint64_t seed = 0;
};

struct ReducedBasis {
  Eigen::VectorXd mean_field;
  Eigen::MatrixXd modes;          // N_h x L, orthonormal columns
  Eigen::VectorXd eigenvalues;    // L, non-increasing, positive
  Eigen::VectorXd spectrum;       // every computed eigenvalue (>= L entries)
  double total_variance = 0.0;    // sum of all eigenvalues = ||S||_F^2
  int n_train = 0;
  Eigen::VectorXd node_variance;  // unbiased per-node variance of the training snapshots
  std::vector<std::uint8_t> active;  // node_variance > 1e-14 * max

  int size() const { return static_cast<int>(modes.cols()); }
  Eigen::Index nodes() const { return mean_field.size(); }
  /// Content hash of the basis (eigenvalues, mean and mode bits).
  std::uint64_t id() const;
};

inline constexpr double kMaskRelativeThreshold = 1e-14;

/// Fit an L-mode basis. Requires 1 <= L <= min(N_h, N - 1) and the L-th
/// singular value above the numerical rank tolerance. Mode signs are fixed so
/// the largest-magnitude entry of each mode is positive.
ReducedBasis fit_pod(const Eigen::MatrixXd& snapshots, int L, const PodOptions& opts = {});

/// First L modes of an existing basis.
ReducedBasis truncate(const ReducedBasis& basis, int L);

/// Whitened coefficients k = Sigma^-1/2 Psi^T (field - mean). The eigenvalues
/// belong to the 1/sqrt(N-1)-scaled matrix, so training coefficients have
/// zero mean and unit variance.
Eigen::VectorXd project(const ReducedBasis& basis, const Eigen::VectorXd& field);
/// Column-wise projection of N_h x M fields to L x M coefficients.
Eigen::MatrixXd project_all(const ReducedBasis& basis, const Eigen::MatrixXd& fields);

/// field = mean + sum_l sqrt(sigma_l) k_l psi_l.
Eigen::VectorXd reconstruct(const ReducedBasis& basis, const Eigen::VectorXd& k);
Eigen::MatrixXd reconstruct_all(const ReducedBasis& basis, const Eigen::MatrixXd& coeffs);

/// Q^2(L) = sum_{l<=L} sigma_l / total for L = 1..spectrum.size().
std::vector<double> cumulative_variance(const Eigen::VectorXd& spectrum, double total);
std::vector<double> cumulative_variance(const Eigen::VectorXd& spectrum);
std::vector<double> cumulative_variance(const ReducedBasis& basis);

/// Largest L with sigma_L >= fraction * mean(sigma).
int kaiser_rule(const Eigen::VectorXd& eigenvalues, double fraction = 0.7);

struct ElbowResult {
  int L = 0;
  bool found = false;  // false: no sign change, L is the full length
};

/// Smallest L whose second difference sigma_L - 2 sigma_{L+1} + sigma_{L+2}
/// differs in sign from the preceding one. Needs at least 3 eigenvalues.
ElbowResult elbow_rule(const Eigen::VectorXd& eigenvalues);

/// Correlation between mode l (1-based) and the grid values; NaN on masked nodes.
Eigen::VectorXd correlation_map(const ReducedBasis& basis, int l);

}  // namespace plumerom
