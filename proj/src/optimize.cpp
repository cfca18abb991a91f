#include "plumerom/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace plumerom {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Zero the components that are pinned by an active bound.
Eigen::VectorXd projected(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  Eigen::VectorXd p = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) p[i] = 0.0;
  }
  return p;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& opts) {
  const ValueFunction value = [&f](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    return f(x, g);
  };
  return minimize_lbfgs(f, value, std::move(x0), lower, upper, opts);
}

LbfgsResult minimize_lbfgs(const Objective& f, const ValueFunction& value, Eigen::VectorXd x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const LbfgsOptions& opts) {
  LbfgsResult res;
  Eigen::VectorXd x = clamp(x0, lower, upper);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.projected_gradient_norm = std::numeric_limits<double>::infinity();
    res.stop_reason = "infeasible start";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  int stalls = 0;
  while (true) {
    const Eigen::VectorXd pg = projected(x, g, lower, upper);
    res.projected_gradient_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_gradient_norm < opts.gradient_tolerance) {
      res.converged = true;
      res.stop_reason = "gradient tolerance";
      break;
    }
    if (res.iterations >= opts.max_iterations) {
      res.stop_reason = "iteration limit";
      break;
    }

    // two-loop recursion on the free subspace
    Eigen::VectorXd q = pg;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m), rho(m);
    for (std::size_t k = m; k-- > 0;) {
      rho[k] = 1.0 / y_hist[k].dot(s_hist[k]);
      alpha[k] = rho[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd d = -q;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (pg[i] == 0.0) d[i] = 0.0;
    }
    if (g.dot(d) >= 0.0) {
      s_hist.clear();
      y_hist.clear();
      d = -pg;
    }

    double t = s_hist.empty() ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;
    Eigen::VectorXd xn, gn(x.size());
    double fn = 0.0;
    bool accepted = false;
    const double step_floor = 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    for (int b = 0; b < opts.max_backtracks; ++b) {
      xn = clamp(x + t * d, lower, upper);
      const Eigen::VectorXd step = xn - x;
      if (step.lpNorm<Eigen::Infinity>() <= step_floor) break;
      fn = value(xn);
      ++res.evaluations;
      const double slope = g.dot(step);
      if (std::isfinite(fn) && fn <= fx + opts.armijo * slope) {
        accepted = true;
        break;
      }
      // safeguarded minimizer of the quadratic through f(x), f'(x) and f(xn)
      double shrink = 0.5;
      if (std::isfinite(fn)) {
        const double curvature = fn - fx - slope;
        if (curvature > 0.0) shrink = std::clamp(-slope / (2.0 * curvature), 0.1, 0.5);
      } else {
        shrink = 0.1;
      }
      t *= shrink;
    }
    if (accepted) f(xn, gn);
    if (!accepted) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        ++res.iterations;
        continue;
      }
      res.stop_reason = "line search failed";
      break;
    }

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    stalls = (fx - fn) <= 1e-15 * std::max(1.0, std::abs(fx)) ? stalls + 1 : 0;
    x = xn;
    fx = fn;
    g = gn;
    ++res.iterations;
    if (stalls >= 5) {
      res.projected_gradient_norm = projected(x, g, lower, upper).lpNorm<Eigen::Infinity>();
      res.converged = res.projected_gradient_norm < opts.gradient_tolerance;
      res.stop_reason = "objective stalled";
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace plumerom
