#include "c2f/forward.hpp"
#include "c2f/rng.hpp"
#include "c2f/schedule.hpp"
#include "c2f/spectral.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace c2f;

DiffusionSchedule make_schedule(int n) {
  return DiffusionSchedule(NoiseSchedule::linear(1000, 1e-4, 0.02),
                           BlurSchedule::make(BlurType::quartic, 0.14, 1000),
                           make_blur_operator(0.4, n));
}

void BM_BuildOperator(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto op = make_blur_operator(0.4, n);
    benchmark::DoNotOptimize(op);
  }
}
BENCHMARK(BM_BuildOperator)->Arg(16)->Arg(64);

void BM_ApplyPower(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto op = make_blur_operator(0.4, n);
  FieldShape shape{2, n};
  RngStream rng(7);
  SpectralField x = SpectralField::from_pixel(op, shape, rng.gauss_matrix(n, n));
  for (auto _ : state) {
    SpectralField y = apply_power(x, 1.7);
    benchmark::DoNotOptimize(y.spectral());
  }
}
BENCHMARK(BM_ApplyPower)->Arg(16)->Arg(64);

void BM_Rotation(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto op = make_blur_operator(0.4, n);
  FieldShape shape{2, n};
  RngStream rng(7);
  Eigen::MatrixXd x = rng.gauss_matrix(n, n);
  for (auto _ : state) {
    Eigen::MatrixXd s = op->to_spectral(x, shape);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Rotation)->Arg(16)->Arg(64);

void BM_MarginalSample(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  DiffusionSchedule s = make_schedule(n);
  FieldShape shape{2, n};
  RngStream rng(7);
  SpectralField x0 =
      SpectralField::from_pixel(s.op(), shape, rng.gauss_matrix(n, n));
  int i = 1;
  for (auto _ : state) {
    ForwardSample fs = marginal_sample(s, x0, i, rng);
    benchmark::DoNotOptimize(fs.state.spectral());
    i = i % 1000 + 1;
  }
}
BENCHMARK(BM_MarginalSample)->Arg(16)->Arg(64);

}  // namespace
