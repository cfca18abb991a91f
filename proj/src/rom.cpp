#include "plumerom/rom.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <set>

#include "plumerom/errors.hpp"
#include "plumerom/random.hpp"

namespace plumerom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int thread_count(int jobs) { return jobs > 0 ? jobs : omp_get_max_threads(); }

std::vector<std::uint64_t> halton_indices(const SnapshotSet& s) {
  std::vector<std::uint64_t> out;
  out.reserve(s.size());
  for (const auto& p : s.samples) out.push_back(p.index);
  return out;
}

std::uint64_t hash_indices(const std::vector<std::uint64_t>& idx) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t v : idx) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

SnapshotSet concatenate(const SnapshotSet& a, const SnapshotSet& b) {
  if (b.size() == 0) return a;
  SnapshotSet out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  out.fields.resize(a.fields.rows(), a.fields.cols() + b.fields.cols());
  out.fields << a.fields, b.fields;
  if (a.has_half_window() && b.has_half_window()) {
    out.half_fields.resize(a.half_fields.rows(), a.half_fields.cols() + b.half_fields.cols());
    out.half_fields << a.half_fields, b.half_fields;
  } else {
    out.half_fields.resize(0, 0);
  }
  return out;
}

void check_compatible(const SnapshotSet& a, const SnapshotSet& b) {
  if (b.size() == 0) return;
  if (!(a.grid == b.grid) || a.channel != b.channel) {
    throw DataError("snapshot subsets come from different grids or channels");
  }
}

// Core training routine. POD on `pod_set`; GP targets on pod_set + gp_extra;
// priors from `prior_set`.
RomModel train_parts(const SnapshotSet& pod_set, const SnapshotSet& gp_extra, const SnapshotSet& prior_set,
                     const TrainOptions& opts) {
  check_compatible(pod_set, gp_extra);
  check_compatible(pod_set, prior_set);
  const int n_pod = static_cast<int>(pod_set.size());
  if (n_pod < 2) throw DataError("training needs at least 2 snapshots");
  if (opts.L < 1 || opts.L > n_pod - 1) {
    throw ConfigError("L must be in [1, " + std::to_string(n_pod - 1) + "] for " + std::to_string(n_pod) +
                      " training snapshots");
  }
  const bool needs_priors = opts.method != TrainingMethod::mll;

  RomModel model;
  model.method = opts.method;
  model.space = pod_set.space;
  model.grid = pod_set.grid;
  model.channel = pod_set.channel;
  model.normalization = {pod_set.settings.u_tau_ref, pod_set.settings.obstacle_height,
                         pod_set.settings.source_rate};

  // The noise law needs at least 3 modes even when fewer are kept.
  const int max_rank = static_cast<int>(std::min<Eigen::Index>(pod_set.fields.rows(), n_pod - 1));
  const int L_fit = std::min(std::max(opts.L, 3), max_rank);
  const ReducedBasis wide = fit_pod(pod_set.fields, L_fit, opts.pod);
  model.basis = L_fit == opts.L ? wide : truncate(wide, opts.L);
  const int L = opts.L;

  model.priors.options = opts.priors;
  if (prior_set.size() >= 2 && prior_set.has_half_window()) {
    model.priors.noise = estimate_noise(wide, prior_set);
    model.priors.available = model.priors.noise.fitted;
  }
  if (needs_priors && !model.priors.available) {
    throw DataError("calibration subset cannot support a noise power-law fit");
  }
  if (model.priors.available) {
    for (int l = 1; l <= L; ++l) model.priors.per_mode.push_back(build_priors(l, model.priors.noise.fit, opts.priors));
  }

  const SnapshotSet gp_set = concatenate(pod_set, gp_extra);
  const Eigen::MatrixXd inputs = gp_set.unit_inputs();
  const Eigen::MatrixXd targets = project_all(model.basis, gp_set.fields);

  model.split.train = halton_indices(pod_set);
  model.split.calibration = halton_indices(prior_set);
  model.split.train_hash = hash_indices(model.split.train);
  model.split.calibration_hash = hash_indices(model.split.calibration);
  model.split.gp_uses_calibration = gp_extra.size() > 0;

  model.gps.resize(static_cast<std::size_t>(L));
  model.training.resize(static_cast<std::size_t>(L));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(L));

#pragma omp parallel for schedule(dynamic) num_threads(thread_count(opts.jobs))
  for (int l = 0; l < L; ++l) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const Eigen::VectorXd y = targets.row(l).transpose();
      ModeTraining& info = model.training[l];
      Hyperparameters theta;
      if (opts.method == TrainingMethod::prior_only) {
        theta = model.priors.per_mode[l].start_point();
        info.stop_reason = "fixed at prior modes";
        info.objective = log_posterior(inputs, y, theta, model.priors.per_mode[l], false).value;
      } else {
        OptimizationResult r;
        if (opts.method == TrainingMethod::mll) {
          MllOptions mo;
          mo.n_restarts = opts.restarts;
          mo.seed = combine_seed({opts.seed, static_cast<std::uint64_t>(l + 1)});
          mo.max_iterations = opts.max_iterations;
          mo.gradient_tolerance = opts.gradient_tolerance;
          r = optimize_mll(inputs, y, mo);
        } else {
          MapOptions mo;
          mo.max_iterations = opts.max_iterations;
          mo.gradient_tolerance = opts.gradient_tolerance;
          r = optimize_map(inputs, y, model.priors.per_mode[l], mo);
        }
        theta = r.theta;
        info.objective = r.objective;
        info.iterations = r.total_iterations;
        info.evaluations = r.total_evaluations;
        info.restarts = static_cast<int>(r.trajectories.size());
        info.converged = r.trajectories[r.best_trajectory].converged;
        info.stop_reason = r.trajectories[r.best_trajectory].stop_reason;
      }
      info.theta = theta;
      model.gps[l] = GpModel::fit(inputs, y, theta);
      info.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } catch (...) {
      errors[l] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const EvaluationReport self = evaluate(model, pod_set, DatasetTag::train, opts.jobs);
  model.train_q2_per_mode = self.q2_per_mode;
  model.train_q2_global = self.q2_global;
  return model;
}

// Global Q^2 after each truncation level, from rank-one residual updates.
std::vector<double> q2_global_by_truncation(const ReducedBasis& basis, const Eigen::MatrixXd& truth,
                                            const Eigen::MatrixXd& coeffs, const std::vector<int>& levels) {
  Eigen::MatrixXd residual = truth.colwise() - basis.mean_field;
  const Eigen::VectorXd truth_mean = truth.rowwise().mean();
  const Eigen::VectorXd denom = (truth.colwise() - truth_mean).rowwise().squaredNorm();
  const double dmax = denom.maxCoeff();
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(truth.rows());
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    if (denom[i] > kMaskRelativeThreshold * dmax) {
      weight[i] = basis.node_variance[i];
      wsum += weight[i];
    }
  }
  std::vector<double> out;
  int done = 0;
  for (int L : levels) {
    for (; done < L; ++done) {
      residual.noalias() -= std::sqrt(basis.eigenvalues[done]) * basis.modes.col(done) * coeffs.row(done);
    }
    const Eigen::VectorXd res = residual.rowwise().squaredNorm();
    double q = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      if (weight[i] > 0.0) q += weight[i] * (1.0 - res[i] / denom[i]);
    }
    out.push_back(q / wsum);
  }
  return out;
}

}  // namespace

std::string to_string(TrainingMethod m) {
  switch (m) {
    case TrainingMethod::mll: return "mll";
    case TrainingMethod::map: return "map";
    case TrainingMethod::prior_only: return "prior";
  }
  return "map";
}

TrainingMethod method_from_string(const std::string& s) {
  if (s == "mll") return TrainingMethod::mll;
  if (s == "map") return TrainingMethod::map;
  if (s == "prior" || s == "prior_only") return TrainingMethod::prior_only;
  throw ConfigError("unknown training method '" + s + "' (expected mll, map or prior)");
}

std::string to_string(DatasetTag t) { return t == DatasetTag::train ? "train" : "test"; }

SplitIndices split_indices(std::size_t n, const SplitFractions& f) {
  if (f.train < 0.0 || f.calibration < 0.0 || f.test < 0.0 ||
      std::abs(f.train + f.calibration + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be nonnegative and sum to 1");
  }
  const auto count = [n](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_train = count(f.train);
  const std::size_t n_test = count(f.test);
  if (n_train + n_test > n) throw ConfigError("split fractions exceed the dataset");
  const std::size_t n_calib = n - n_train - n_test;
  if (n_train == 0 || n_calib == 0 || n_test == 0) {
    throw DataError("split of " + std::to_string(n) + " snapshots leaves an empty subset (" +
                    std::to_string(n_train) + ", " + std::to_string(n_calib) + ", " + std::to_string(n_test) + ")");
  }
  SplitIndices s;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_calib ? s.calibration : s.test);
    dst.push_back(static_cast<int>(i));
  }
  return s;
}

DatasetSplit split(const SnapshotSet& dataset, const SplitFractions& fractions) {
  DatasetSplit d;
  d.positions = split_indices(dataset.size(), fractions);
  d.train = dataset.subset(d.positions.train);
  d.calibration = dataset.subset(d.positions.calibration);
  d.test = dataset.subset(d.positions.test);
  return d;
}

std::uint64_t split_hash(const SnapshotSet& subset) { return hash_indices(halton_indices(subset)); }

std::vector<double> RomModel::noise_to_signal() const {
  std::vector<double> r;
  for (const auto& gp : gps) r.push_back(gp.theta().noise_var / gp.theta().signal_var);
  return r;
}

RomModel train(const SnapshotSet& train_set, const SnapshotSet& calibration, const TrainOptions& opts) {
  const SnapshotSet none = train_set.subset({});
  return train_parts(train_set, opts.gp_uses_calibration ? calibration : none, calibration, opts);
}

Eigen::MatrixXd predict_coefficients(const RomModel& model, const Eigen::MatrixXd& unit_inputs, int jobs) {
  const int L = model.L();
  Eigen::MatrixXd out(L, unit_inputs.rows());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(jobs))
  for (int l = 0; l < L; ++l) out.row(l) = model.gps[l].predict_mean(unit_inputs).transpose();
  return out;
}

Prediction predict(const RomModel& model, const PhysicalParams& mu) {
  if (!in_bounds(mu, model.space)) throw ConfigError("parameters outside the training space");
  if (model.space.exclusion.contains(mu.x_src, mu.z_src)) {
    throw ConfigError("source position lies inside the obstacle exclusion box");
  }
  const UnitPoint u = to_unit(mu, model.space);
  Eigen::MatrixXd x(1, 4);
  for (int d = 0; d < 4; ++d) x(0, d) = u[d];
  Prediction p;
  p.coeff_mean.resize(model.L());
  p.coeff_var.resize(model.L());
  for (int l = 0; l < model.L(); ++l) {
    const Posterior post = model.gps[l].posterior(x);
    p.coeff_mean[l] = post.mean[0];
    p.coeff_var[l] = std::max(post.cov(0, 0), 0.0);
  }
  p.field = reconstruct(model.basis, p.coeff_mean);
  return p;
}

Prediction predict_unit(const RomModel& model, const UnitPoint& unit) {
  return predict(model, to_physical(unit, model.space).physical);
}

Eigen::VectorXd presentation_field(const Eigen::VectorXd& field) { return field.cwiseMax(0.0); }

double q2_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& prediction) {
  if (truth.size() != prediction.size()) throw DataError("Q2: size mismatch");
  const double denom = (truth.array() - truth.mean()).square().sum();
  if (!(denom > 0.0)) return kNaN;
  return 1.0 - (truth - prediction).squaredNorm() / denom;
}

std::vector<double> q2_per_mode(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols()) {
    throw DataError("Q2: coefficient shapes differ");
  }
  std::vector<double> q(static_cast<std::size_t>(truth.rows()));
  for (Eigen::Index l = 0; l < truth.rows(); ++l) {
    q[l] = q2_score(truth.row(l).transpose(), prediction.row(l).transpose());
  }
  return q;
}

Eigen::VectorXd q2_local(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
  if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols()) {
    throw DataError("Q2: field shapes differ");
  }
  if (truth.cols() < 2) throw DataError("Q2 needs at least 2 snapshots");
  const Eigen::VectorXd mean = truth.rowwise().mean();
  const Eigen::VectorXd denom = (truth.colwise() - mean).rowwise().squaredNorm();
  const Eigen::VectorXd res = (truth - prediction).rowwise().squaredNorm();
  const double dmax = denom.maxCoeff();
  Eigen::VectorXd q(truth.rows());
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    q[i] = denom[i] > kMaskRelativeThreshold * dmax ? 1.0 - res[i] / denom[i] : kNaN;
  }
  return q;
}

double q2_global(const Eigen::VectorXd& local, const Eigen::VectorXd& node_variance) {
  if (local.size() != node_variance.size()) throw DataError("Q2: weight size mismatch");
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < local.size(); ++i) {
    if (!std::isnan(local[i])) wsum += node_variance[i];
  }
  if (!(wsum > 0.0)) return kNaN;
  double q = 0.0;
  for (Eigen::Index i = 0; i < local.size(); ++i) {
    if (!std::isnan(local[i])) q += (node_variance[i] / wsum) * local[i];
  }
  return q;
}

EvaluationReport evaluate(const RomModel& model, const SnapshotSet& data, DatasetTag tag, int jobs) {
  if (data.fields.rows() != model.basis.nodes()) throw DataError("dataset grid does not match the model");
  if (data.channel != model.channel) throw DataError("dataset channel does not match the model");
  EvaluationReport r;
  r.tag = tag;
  r.n_snapshots = static_cast<int>(data.size());
  r.split_hash = split_hash(data);
  r.train_hash = model.split.train_hash;
  if (tag == DatasetTag::test) {
    if (r.split_hash == r.train_hash) throw DataError("test split hash equals the training split hash");
    std::set<std::uint64_t> used(model.split.train.begin(), model.split.train.end());
    if (model.split.gp_uses_calibration) used.insert(model.split.calibration.begin(), model.split.calibration.end());
    for (const auto& s : data.samples) {
      if (used.count(s.index) != 0) throw DataError("test snapshots overlap the training data");
    }
  }
  const Eigen::MatrixXd k_true = project_all(model.basis, data.fields);
  const Eigen::MatrixXd k_pred = predict_coefficients(model, data.unit_inputs(), jobs);
  r.q2_per_mode = q2_per_mode(k_true, k_pred);
  r.q2_local = q2_local(data.fields, reconstruct_all(model.basis, k_pred));
  r.q2_global = q2_global(r.q2_local, model.basis.node_variance);
  return r;
}

EvaluationReport evaluate_projection(const ReducedBasis& basis, const Eigen::MatrixXd& fields) {
  EvaluationReport r;
  r.tag = DatasetTag::train;
  r.n_snapshots = static_cast<int>(fields.cols());
  const Eigen::MatrixXd k = project_all(basis, fields);
  r.q2_per_mode = q2_per_mode(k, k);
  r.q2_local = q2_local(fields, reconstruct_all(basis, k));
  r.q2_global = q2_global(r.q2_local, basis.node_variance);
  return r;
}

std::vector<RobustnessRow> robustness_sweep(const SnapshotSet& dataset, const RobustnessOptions& opts) {
  const DatasetSplit parts = split(dataset, opts.fractions);
  std::vector<RobustnessRow> rows;
  for (int size : opts.train_sizes) {
    if (size < 10) throw ConfigError("robustness train sizes must be at least 10");
    if (size > static_cast<int>(parts.train.size())) {
      throw ConfigError("train size " + std::to_string(size) + " exceeds the training subset");
    }
    const auto t0 = std::chrono::steady_clock::now();
    RobustnessRow row;
    row.size = size;
    row.n_pod = static_cast<int>(std::floor(opts.pod_fraction * size));
    const int L_cap = row.n_pod - 1;
    if (opts.L_grid.empty()) {
      for (int L = 1; L <= L_cap; ++L) row.L_values.push_back(L);
    } else {
      for (int L : opts.L_grid) {
        if (L >= 1 && L <= L_cap) row.L_values.push_back(L);
      }
      std::sort(row.L_values.begin(), row.L_values.end());
      row.L_values.erase(std::unique(row.L_values.begin(), row.L_values.end()), row.L_values.end());
    }
    if (row.L_values.empty()) throw ConfigError("no admissible L for train size " + std::to_string(size));

    std::vector<int> pod_pos(static_cast<std::size_t>(row.n_pod)), extra_pos;
    for (int i = 0; i < row.n_pod; ++i) pod_pos[i] = i;
    for (int i = row.n_pod; i < size; ++i) extra_pos.push_back(i);
    TrainOptions to = opts.train;
    to.L = row.L_values.back();
    const RomModel model =
        train_parts(parts.train.subset(pod_pos), parts.train.subset(extra_pos), parts.calibration, to);

    const Eigen::MatrixXd k_true = project_all(model.basis, parts.test.fields);
    const Eigen::MatrixXd k_pred = predict_coefficients(model, parts.test.unit_inputs(), to.jobs);
    row.q2_per_mode = q2_per_mode(k_true, k_pred);
    row.q2_by_L = q2_global_by_truncation(model.basis, parts.test.fields, k_pred, row.L_values);
    const auto best = std::max_element(row.q2_by_L.begin(), row.q2_by_L.end());
    row.L_opt = row.L_values[static_cast<std::size_t>(best - row.q2_by_L.begin())];
    row.q2_global = *best;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace plumerom
