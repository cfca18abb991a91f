#pragma once

// POD/GPR reduced-order model: contiguous dataset splits, per-mode GP
// training (MLL, MAP or frozen prior modes), prediction through the inverse
// POD map and the Q^2 evaluation suite.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "plumerom/gpr.hpp"
#include "plumerom/plume.hpp"
#include "plumerom/pod.hpp"
#include "plumerom/priors.hpp"

namespace plumerom {

enum class TrainingMethod { mll, map, prior_only };

std::string to_string(TrainingMethod m);
/// Accepts "mll", "map" and "prior".
TrainingMethod method_from_string(const std::string& s);

struct SplitFractions {
  double train = 0.63;
  double calibration = 0.07;
  double test = 0.30;

  bool operator==(const SplitFractions&) const = default;
};

/// Positions (column indices) of each subset in the dataset.
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> calibration;
  std::vector<int> test;
};

/// Contiguous split. Train and test sizes are floored, calibration takes the remainder.
/// Throws ConfigError on bad fractions and DataError when a subset is empty.
SplitIndices split_indices(std::size_t n, const SplitFractions& fractions = {});

struct DatasetSplit {
  SnapshotSet train;
  SnapshotSet calibration;
  SnapshotSet test;
  SplitIndices positions;
};

DatasetSplit split(const SnapshotSet& dataset, const SplitFractions& fractions = {});

/// FNV-1a hash of the Halton indices of a subset.
std::uint64_t split_hash(const SnapshotSet& subset);

struct SplitManifest {
  std::vector<std::uint64_t> train;        // Halton indices
  std::vector<std::uint64_t> calibration;
  std::vector<std::uint64_t> test;
  std::uint64_t train_hash = 0;
  std::uint64_t calibration_hash = 0;
  std::uint64_t test_hash = 0;
  bool gp_uses_calibration = false;        // GP targets include the calibration subset
};

struct Normalization {
  double u_tau_ref = 0.0;
  double obstacle_height = 1.0;
  double source_rate = 1.0;
};

struct ModeTraining {
  Hyperparameters theta;
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  int restarts = 0;
  bool converged = true;
  std::string stop_reason;
  double seconds = 0.0;  // wall time, kept out of the model file
};

struct PriorsAudit {
  bool available = false;
  NoiseEstimate noise;
  PriorOptions options;
  std::vector<PriorSet> per_mode;
};

struct TrainOptions {
  int L = 10;
  TrainingMethod method = TrainingMethod::map;
  std::uint64_t seed = 0;
  int restarts = 15;
  int jobs = 0;                          // <= 0: OpenMP default
  bool gp_uses_calibration = false;      // fit GPs on train + calibration
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  PriorOptions priors;
  PodOptions pod;
};

struct RomModel {
  ReducedBasis basis;
  std::vector<GpModel> gps;
  TrainingMethod method = TrainingMethod::map;
  Normalization normalization;
  SplitManifest split;
  PriorsAudit priors;
  std::vector<ModeTraining> training;
  ParameterSpace space;
  Grid grid;
  Channel channel = Channel::mean_concentration;
  std::vector<double> train_q2_per_mode;
  double train_q2_global = 0.0;

  int L() const { return basis.size(); }
  /// Noise-to-signal ratio s^2 / rho per mode.
  std::vector<double> noise_to_signal() const;
};

/// Fit POD on `train`, calibrate priors on `calibration` and train one GP per mode.
RomModel train(const SnapshotSet& train, const SnapshotSet& calibration, const TrainOptions& opts);

struct Prediction {
  Eigen::VectorXd field;
  Eigen::VectorXd coeff_mean;
  Eigen::VectorXd coeff_var;
};

/// Throws ConfigError for parameters outside the space or inside the exclusion box.
Prediction predict(const RomModel& model, const PhysicalParams& mu);
Prediction predict_unit(const RomModel& model, const UnitPoint& unit);

/// GP means for unit-cube inputs (one row each), L x M.
Eigen::MatrixXd predict_coefficients(const RomModel& model, const Eigen::MatrixXd& unit_inputs, int jobs = 0);

/// Negative concentrations zeroed, for display only.
Eigen::VectorXd presentation_field(const Eigen::VectorXd& field);

enum class DatasetTag { train, test };
std::string to_string(DatasetTag t);

struct EvaluationReport {
  std::vector<double> q2_per_mode;   // NaN where undefined
  Eigen::VectorXd q2_local;          // NaN on masked nodes
  double q2_global = 0.0;
  DatasetTag tag = DatasetTag::test;
  std::uint64_t split_hash = 0;
  std::uint64_t train_hash = 0;
  int n_snapshots = 0;
};

/// 1 - |t - p|^2 / |t - mean(t)|^2; NaN when t is constant.
double q2_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& prediction);

/// Row-wise Q^2 of L x M coefficient matrices.
std::vector<double> q2_per_mode(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction);

/// Node-wise Q^2 of N_h x M fields; NaN where the node variance of `truth`
/// is at most 1e-14 times its maximum.
Eigen::VectorXd q2_local(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction);

/// Sum of w_i Q^2_i with w proportional to node_variance over the defined entries.
double q2_global(const Eigen::VectorXd& q2_local, const Eigen::VectorXd& node_variance);

/// Evaluate against `data`. For a test tag, any overlap with the training
/// split is rejected with DataError.
EvaluationReport evaluate(const RomModel& model, const SnapshotSet& data, DatasetTag tag, int jobs = 0);

/// Same metrics with the GPs bypassed: the coefficients are the exact projections.
EvaluationReport evaluate_projection(const ReducedBasis& basis, const Eigen::MatrixXd& fields);

struct RobustnessOptions {
  std::vector<int> train_sizes{50, 100, 472};
  std::vector<int> L_grid;  // empty: every L up to 0.9 * size - 1
  TrainOptions train;       // L is ignored
  SplitFractions fractions;
  double pod_fraction = 0.9;
};

struct RobustnessRow {
  int size = 0;
  int n_pod = 0;
  int L_opt = 0;
  double q2_global = 0.0;
  double seconds = 0.0;
  std::vector<int> L_values;
  std::vector<double> q2_by_L;
  std::vector<double> q2_per_mode;  // at the largest L trained
};

/// For each size s: POD on the first floor(0.9 s) training snapshots, GPs on
/// all s, priors from the full calibration subset, evaluation on the fixed
/// test subset at every L of the grid.
std::vector<RobustnessRow> robustness_sweep(const SnapshotSet& dataset, const RobustnessOptions& opts);

}  // namespace plumerom
