#pragma once

// Row-level bodies shared by the serial and OpenMP kernels.

#include <array>

#include "plumerom/kernels.hpp"
#include "plumerom/matern.hpp"

namespace plumerom::kernels::detail {

inline Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& x, const MaternArd& p) {
  Eigen::MatrixXd s(x.rows(), 4);
  for (int d = 0; d < 4; ++d) s.col(d) = x.col(d) / p.lengthscales[d];
  return s;
}

inline double scaled_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                              Eigen::Index j) {
  double s = 0.0;
  for (int d = 0; d < 4; ++d) {
    const double t = a(i, d) - b(j, d);
    s += t * t;
  }
  return std::sqrt(s);
}

// Lower triangle of row i, mirrored into the upper triangle.
inline void gram_row(const Eigen::MatrixXd& xs, double signal_var, Eigen::Index i,
                     Eigen::MatrixXd& out) {
  out(i, i) = signal_var;
  for (Eigen::Index j = 0; j < i; ++j) {
    const double v = matern52(scaled_distance(xs, i, xs, j), signal_var);
    out(i, j) = v;
    out(j, i) = v;
  }
}

inline void cross_row(const Eigen::MatrixXd& as, const Eigen::MatrixXd& bs, double signal_var,
                      Eigen::Index i, Eigen::MatrixXd& out) {
  for (Eigen::Index j = 0; j < bs.rows(); ++j) {
    out(i, j) = matern52(scaled_distance(as, i, bs, j), signal_var);
  }
}

// Strict lower triangle of row i; symmetry gives the factor 2.
inline std::array<double, 4> contraction_row(const Eigen::MatrixXd& xs, double signal_var,
                                             const Eigen::MatrixXd& w, Eigen::Index i) {
  std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index j = 0; j < i; ++j) {
    std::array<double, 4> d2;
    double r2 = 0.0;
    for (int d = 0; d < 4; ++d) {
      const double t = xs(i, d) - xs(j, d);
      d2[d] = t * t;
      r2 += d2[d];
    }
    const double f = (w(i, j) + w(j, i)) * matern52_lengthscale_factor(std::sqrt(r2), signal_var);
    for (int d = 0; d < 4; ++d) acc[d] += f * d2[d];
  }
  return acc;
}

}  // namespace plumerom::kernels::detail
