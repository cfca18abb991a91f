#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "plumerom/plume.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("plumerom_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline plumerom::Grid small_grid(int nx = 41, int nz = 21) {
  plumerom::Grid g;
  g.nx = nx;
  g.nz = nz;
  return g;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Eigen::MatrixXd random_unit_inputs(int n, unsigned seed) {
  return (random_matrix(n, 4, seed).array() + 1.0) * 0.5;
}

}  // namespace testing
