#include "plumerom/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "plumerom/errors.hpp"
#include "plumerom/kernels.hpp"
#include "plumerom/optimize.hpp"
#include "plumerom/random.hpp"

namespace plumerom {

namespace {

constexpr double kJitter = 1e-8;

kernels::MaternArd kernel_params(const Hyperparameters& th) { return {th.signal_var, th.lengthscales}; }

// Cholesky of r(U,U) + s^2 I with the single-jitter policy.
Eigen::LLT<Eigen::MatrixXd> factorize(Eigen::MatrixXd ky, bool& jitter) {
  Eigen::LLT<Eigen::MatrixXd> llt(ky);
  jitter = false;
  if (llt.info() != Eigen::Success) {
    ky.diagonal().array() += kJitter;
    llt.compute(ky);
    jitter = true;
    if (llt.info() != Eigen::Success) {
      throw NumericalError("covariance matrix not positive definite after jitter");
    }
  }
  return llt;
}

void check_shapes(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  if (inputs.cols() != 4) throw DataError("GP inputs must have 4 columns");
  if (inputs.rows() != targets.size()) throw DataError("GP inputs/targets size mismatch");
  if (inputs.rows() == 0) throw DataError("GP needs at least one training point");
}

Eigen::VectorXd log_bound(const Hyperparameters& h) { return h.to_log(); }

}  // namespace

Eigen::VectorXd Hyperparameters::to_log() const {
  Eigen::VectorXd t(kNumHyper);
  t << std::log(noise_var), std::log(signal_var), std::log(lengthscales[0]), std::log(lengthscales[1]),
      std::log(lengthscales[2]), std::log(lengthscales[3]);
  return t;
}

Hyperparameters Hyperparameters::from_log(const Eigen::VectorXd& t) {
  Hyperparameters h;
  h.noise_var = std::exp(t[0]);
  h.signal_var = std::exp(t[1]);
  for (int d = 0; d < 4; ++d) h.lengthscales[d] = std::exp(t[2 + d]);
  return h;
}

double GammaPrior::log_pdf(double x) const {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double GaussianPrior::log_pdf(double x) const {
  const double r = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
}

PriorSet PriorSet::make_flat() {
  PriorSet p;
  p.flat = true;
  return p;
}

Hyperparameters PriorSet::start_point() const {
  Hyperparameters h;
  h.noise_var = noise.mode();
  h.signal_var = signal.mean;
  for (int d = 0; d < 4; ++d) h.lengthscales[d] = lengthscales[d].mode();
  return h;
}

double PriorSet::log_density(const Hyperparameters& th, Eigen::VectorXd* grad_log) const {
  if (flat) return 0.0;
  double v = noise.log_pdf(th.noise_var) + signal.log_pdf(th.signal_var);
  for (int d = 0; d < 4; ++d) v += lengthscales[d].log_pdf(th.lengthscales[d]);
  if (grad_log != nullptr) {
    // chain rule: d/d log x = x * d/dx
    (*grad_log)[0] += noise.dlog_pdf(th.noise_var) * th.noise_var;
    (*grad_log)[1] += signal.dlog_pdf(th.signal_var) * th.signal_var;
    for (int d = 0; d < 4; ++d) {
      (*grad_log)[2 + d] += lengthscales[d].dlog_pdf(th.lengthscales[d]) * th.lengthscales[d];
    }
  }
  return v;
}

namespace {

// Factorization shared by the value and the gradient.
struct LikelihoodState {
  Eigen::MatrixXd k;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
  double value = 0.0;
  bool jitter = false;
};

LikelihoodState likelihood_state(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                 const Hyperparameters& theta) {
  check_shapes(inputs, targets);
  const Eigen::Index n = inputs.rows();
  LikelihoodState st;
  kernels::omp::gram(inputs, kernel_params(theta), st.k);
  Eigen::MatrixXd ky = st.k;
  ky.diagonal().array() += theta.noise_var;
  st.llt = factorize(std::move(ky), st.jitter);
  st.alpha = st.llt.solve(targets);
  const Eigen::MatrixXd& lmat = st.llt.matrixLLT();
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet_half += std::log(lmat(i, i));
  st.value = -0.5 * targets.dot(st.alpha) - logdet_half - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return st;
}

// Ky^-1 = L^-T L^-1. L^-1 is built column block by column block, skipping the
// zero upper part, and the product is a symmetric rank update.
Eigen::MatrixXd inverse_from_cholesky(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::MatrixXd& lmat = llt.matrixLLT();
  const Eigen::Index n = lmat.rows();
  constexpr Eigen::Index kBlock = 64;
  Eigen::MatrixXd linv = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; j += kBlock) {
    const Eigen::Index nb = std::min(kBlock, n - j);
    auto block = linv.block(j, j, n - j, nb);
    block.topRows(nb).setIdentity();
    lmat.bottomRightCorner(n - j, n - j).triangularView<Eigen::Lower>().solveInPlace(block);
  }
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
  inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  inv.triangularView<Eigen::StrictlyUpper>() = inv.transpose();
  return inv;
}

// dL/dt = 1/2 tr((alpha alpha^T - Ky^-1) dKy/dt)
Eigen::VectorXd likelihood_gradient(const Eigen::MatrixXd& inputs, const Hyperparameters& theta,
                                    const LikelihoodState& st) {
  Eigen::MatrixXd w = inverse_from_cholesky(st.llt);
  w = st.alpha * st.alpha.transpose() - w;
  Eigen::VectorXd g(kNumHyper);
  g[0] = 0.5 * theta.noise_var * w.trace();
  g[1] = 0.5 * (w.array() * st.k.array()).sum();
  const auto ls = kernels::omp::lengthscale_contraction(inputs, kernel_params(theta), w);
  for (int d = 0; d < 4; ++d) g[2 + d] = 0.5 * ls[d];
  return g;
}

}  // namespace

LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                        const Hyperparameters& theta, bool with_gradient) {
  const LikelihoodState st = likelihood_state(inputs, targets, theta);
  LikelihoodValue out;
  out.value = st.value;
  out.jitter_applied = st.jitter;
  if (with_gradient) out.gradient = likelihood_gradient(inputs, theta, st);
  return out;
}

LikelihoodValue log_posterior(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                              const Hyperparameters& theta, const PriorSet& priors, bool with_gradient) {
  LikelihoodValue out = log_marginal_likelihood(inputs, targets, theta, with_gradient);
  out.value += priors.log_density(theta, with_gradient ? &out.gradient : nullptr);
  return out;
}

GpModel GpModel::fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const Hyperparameters& theta) {
  check_shapes(inputs, targets);
  GpModel m;
  m.inputs_ = std::move(inputs);
  m.targets_ = std::move(targets);
  m.theta_ = theta;
  Eigen::MatrixXd ky;
  kernels::omp::gram(m.inputs_, kernel_params(theta), ky);
  ky.diagonal().array() += theta.noise_var;
  m.factor_ = factorize(std::move(ky), m.jitter_);
  m.alpha_ = m.factor_.solve(m.targets_);
  m.fitted_ = true;
  return m;
}

Posterior GpModel::posterior(const Eigen::MatrixXd& test) const {
  if (!fitted_) throw NumericalError("GP model has no factorization");
  if (test.cols() != 4) throw DataError("test inputs must have 4 columns");
  Eigen::MatrixXd ks, kss;
  kernels::omp::cross(test, inputs_, kernel_params(theta_), ks);
  kernels::omp::gram(test, kernel_params(theta_), kss);
  Posterior p;
  p.mean = ks * alpha_;
  const Eigen::MatrixXd v = factor_.matrixL().solve(ks.transpose());
  p.cov = kss - v.transpose() * v;
  p.cov = 0.5 * (p.cov + p.cov.transpose()).eval();
  for (Eigen::Index i = 0; i < p.cov.rows(); ++i) {
    if (p.cov(i, i) < 0.0) p.cov(i, i) = 0.0;
  }
  return p;
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::MatrixXd& test) const {
  if (!fitted_) throw NumericalError("GP model has no factorization");
  Eigen::MatrixXd ks;
  kernels::omp::cross(test, inputs_, kernel_params(theta_), ks);
  return ks * alpha_;
}

Eigen::VectorXd GpModel::predict_variance(const Eigen::MatrixXd& test) const {
  if (!fitted_) throw NumericalError("GP model has no factorization");
  Eigen::MatrixXd ks;
  kernels::omp::cross(test, inputs_, kernel_params(theta_), ks);
  const Eigen::MatrixXd v = factor_.matrixL().solve(ks.transpose());
  Eigen::VectorXd var = (theta_.signal_var - v.colwise().squaredNorm().array()).matrix().transpose();
  return var.cwiseMax(0.0);
}

std::vector<Hyperparameters> mll_starting_points(int n_restarts, std::uint64_t seed) {
  auto log_uniform = [](double u, double lo, double hi) {
    return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  };
  std::vector<Hyperparameters> starts;
  for (int k = 0; k < n_restarts; ++k) {
    const auto c = static_cast<std::uint64_t>(k) * kNumHyper;
    Hyperparameters h;
    h.noise_var = log_uniform(counter_uniform(seed, c), 1e-6, 1.0);
    h.signal_var = log_uniform(counter_uniform(seed, c + 1), 0.1, 2.0);
    for (int d = 0; d < 4; ++d) h.lengthscales[d] = log_uniform(counter_uniform(seed, c + 2 + d), 1e-2, 10.0);
    starts.push_back(h);
  }
  return starts;
}

namespace {

// Maximizes the log posterior (flat priors: the likelihood) from one start;
// infeasible points are +inf for the minimizer. The factorization of the last
// value-only call is reused when the gradient is requested at the same point.
Trajectory run_trajectory(const Hyperparameters& start, const HyperBounds& b, int max_iter, double tol,
                          const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const PriorSet& priors) {
  Trajectory tr;
  tr.start = start;
  Eigen::VectorXd cached_at;
  std::optional<LikelihoodState> cached;
  const ValueFunction value = [&](const Eigen::VectorXd& t) {
    try {
      const Hyperparameters th = Hyperparameters::from_log(t);
      cached.reset();
      cached = likelihood_state(inputs, targets, th);
      cached_at = t;
      return -(cached->value + priors.log_density(th, nullptr));
    } catch (const NumericalError&) {
      cached.reset();
      return std::numeric_limits<double>::infinity();
    }
  };
  const Objective f = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
    try {
      const Hyperparameters th = Hyperparameters::from_log(t);
      if (!cached || cached_at.size() != t.size() || cached_at != t) {
        cached.reset();
        cached = likelihood_state(inputs, targets, th);
        cached_at = t;
      }
      Eigen::VectorXd grad = likelihood_gradient(inputs, th, *cached);
      double v = cached->value;
      v += priors.log_density(th, &grad);
      g = -grad;
      return -v;
    } catch (const NumericalError&) {
      cached.reset();
      g.setZero(t.size());
      return std::numeric_limits<double>::infinity();
    }
  };
  LbfgsOptions lo;
  lo.max_iterations = max_iter;
  lo.gradient_tolerance = tol;
  const LbfgsResult r = minimize_lbfgs(f, value, start.to_log(), log_bound(b.lower), log_bound(b.upper), lo);
  tr.result = Hyperparameters::from_log(r.x);
  tr.objective = -r.value;
  tr.iterations = r.iterations;
  tr.evaluations = r.evaluations;
  tr.converged = r.converged;
  tr.failed = !std::isfinite(r.value);
  tr.stop_reason = r.stop_reason;
  return tr;
}

}  // namespace

OptimizationResult optimize_mll(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                const MllOptions& opts) {
  check_shapes(inputs, targets);
  if (inputs.rows() < 4) throw DataError("MLL optimization needs at least 4 training points");
  if (opts.n_restarts < 1) throw ConfigError("n_restarts must be >= 1");
  const PriorSet flat = PriorSet::make_flat();

  OptimizationResult res;
  bool any = false;
  for (const Hyperparameters& start : mll_starting_points(opts.n_restarts, opts.seed)) {
    Trajectory tr = run_trajectory(start, opts.bounds, opts.max_iterations, opts.gradient_tolerance, inputs, targets, flat);
    res.total_iterations += tr.iterations;
    res.total_evaluations += tr.evaluations;
    if (!tr.failed && (!any || tr.objective > res.objective)) {
      res.objective = tr.objective;
      res.theta = tr.result;
      res.best_trajectory = res.trajectories.size();
      any = true;
    }
    res.trajectories.push_back(std::move(tr));
  }
  if (!any) throw NumericalError("all MLL restarts failed to factorize");
  return res;
}

OptimizationResult optimize_map(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                const PriorSet& priors, const MapOptions& opts) {
  check_shapes(inputs, targets);
  if (inputs.rows() < 4) throw DataError("MAP optimization needs at least 4 training points");
  const Hyperparameters start = opts.start.value_or(priors.start_point());
  Trajectory tr = run_trajectory(start, opts.bounds, opts.max_iterations, opts.gradient_tolerance, inputs, targets, priors);
  if (tr.failed) throw NumericalError("MAP optimization failed to factorize at the start point");
  OptimizationResult res;
  res.theta = tr.result;
  res.objective = tr.objective;
  res.total_iterations = tr.iterations;
  res.total_evaluations = tr.evaluations;
  res.trajectories.push_back(std::move(tr));
  return res;
}

}  // namespace plumerom
