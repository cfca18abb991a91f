// Serial reference vs OpenMP kernels on a training-set-sized design, plus one
// full likelihood evaluation.

#include <benchmark/benchmark.h>

#include <random>

#include "plumerom/gpr.hpp"
#include "plumerom/kernels.hpp"

namespace {

using namespace plumerom;

Eigen::MatrixXd design(int n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u;
  Eigen::MatrixXd x(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 4; ++d) x(i, d) = u(rng);
  }
  return x;
}

const kernels::MaternArd kParams{1.0, {0.5, 1.2, 0.3, 0.4}};

void BM_GramSerial(benchmark::State& st) {
  const Eigen::MatrixXd x = design(static_cast<int>(st.range(0)));
  Eigen::MatrixXd k;
  for (auto _ : st) {
    kernels::serial::gram(x, kParams, k);
    benchmark::DoNotOptimize(k.data());
  }
}

void BM_GramOmp(benchmark::State& st) {
  const Eigen::MatrixXd x = design(static_cast<int>(st.range(0)));
  Eigen::MatrixXd k;
  for (auto _ : st) {
    kernels::omp::gram(x, kParams, k);
    benchmark::DoNotOptimize(k.data());
  }
}

void BM_ContractionSerial(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Eigen::MatrixXd x = design(n);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::lengthscale_contraction(x, kParams, w));
}

void BM_ContractionOmp(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Eigen::MatrixXd x = design(n);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::lengthscale_contraction(x, kParams, w));
}

void BM_LogMarginalLikelihood(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Eigen::MatrixXd x = design(n);
  const Eigen::VectorXd y = x.col(0).array().sin() + x.col(2).array().square();
  Hyperparameters th{1e-3, 1.0, {0.5, 1.2, 0.3, 0.4}};
  for (auto _ : st) benchmark::DoNotOptimize(log_marginal_likelihood(x, y, th).value);
}

BENCHMARK(BM_GramSerial)->Arg(200)->Arg(472);
BENCHMARK(BM_GramOmp)->Arg(200)->Arg(472);
BENCHMARK(BM_ContractionSerial)->Arg(200)->Arg(472);
BENCHMARK(BM_ContractionOmp)->Arg(200)->Arg(472);
BENCHMARK(BM_LogMarginalLikelihood)->Arg(200)->Arg(472)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
