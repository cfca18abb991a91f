#pragma once

// Data-parallel hot loops of the GP layer. Each kernel exists twice: a plain
// serial reference and an OpenMP version. Both accumulate in the same order
// (per-row partials summed by row index), so their outputs are bit-identical
// and independent of the thread count.

#include <Eigen/Dense>
#include <array>

namespace plumerom::kernels {

struct MaternArd {
  double signal_var = 1.0;
  std::array<double, 4> lengthscales{1.0, 1.0, 1.0, 1.0};
};

namespace serial {

/// K(i, j) = k(x_i, x_j) over the rows of `x` (N x 4). No noise term.
void gram(const Eigen::MatrixXd& x, const MaternArd& p, Eigen::MatrixXd& out);

/// K(i, j) = k(a_i, b_j).
void cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MaternArd& p,
           Eigen::MatrixXd& out);

/// sum_ij w(i, j) * dK(i, j)/d log(lambda_d) for each input dimension d.
std::array<double, 4> lengthscale_contraction(const Eigen::MatrixXd& x, const MaternArd& p,
                                              const Eigen::MatrixXd& w);

}  // namespace serial

namespace omp {

void gram(const Eigen::MatrixXd& x, const MaternArd& p, Eigen::MatrixXd& out);
void cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MaternArd& p,
           Eigen::MatrixXd& out);
std::array<double, 4> lengthscale_contraction(const Eigen::MatrixXd& x, const MaternArd& p,
                                              const Eigen::MatrixXd& w);

}  // namespace omp

}  // namespace plumerom::kernels
