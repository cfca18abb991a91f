#include <vector>

#include "kernels_rows.hpp"

namespace plumerom::kernels::serial {

void gram(const Eigen::MatrixXd& x, const MaternArd& p, Eigen::MatrixXd& out) {
  const Eigen::MatrixXd xs = detail::scale_inputs(x, p);
  out.resize(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) detail::gram_row(xs, p.signal_var, i, out);
}

void cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const MaternArd& p,
           Eigen::MatrixXd& out) {
  const Eigen::MatrixXd as = detail::scale_inputs(a, p);
  const Eigen::MatrixXd bs = detail::scale_inputs(b, p);
  out.resize(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) detail::cross_row(as, bs, p.signal_var, i, out);
}

std::array<double, 4> lengthscale_contraction(const Eigen::MatrixXd& x, const MaternArd& p,
                                              const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd xs = detail::scale_inputs(x, p);
  std::vector<std::array<double, 4>> rows(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) rows[i] = detail::contraction_row(xs, p.signal_var, w, i);
  std::array<double, 4> total{0.0, 0.0, 0.0, 0.0};
  for (const auto& r : rows) {
    for (int d = 0; d < 4; ++d) total[d] += r[d];
  }
  return total;
}

}  // namespace plumerom::kernels::serial
