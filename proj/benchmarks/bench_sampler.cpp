#include "c2f/sampler.hpp"
#include "c2f/score.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace c2f;

struct Setup {
  DiffusionSchedule schedule;
  std::shared_ptr<MixtureScoreOracle> oracle;
  FieldShape shape;
};

Setup make_setup(int n, int points) {
  auto op = make_blur_operator(0.4, n);
  DiffusionSchedule s(NoiseSchedule::linear(1000, 1e-4, 0.02),
                      BlurSchedule::make(BlurType::quartic, 0.14, 1000), op);
  FieldShape shape{1, n};
  RngStream rng(11);
  std::vector<SpectralField> data;
  for (int k = 0; k < points; ++k)
    data.push_back(SpectralField::from_pixel(op, shape, rng.gauss_matrix(n, 1)));
  return {s, std::make_shared<MixtureScoreOracle>(s, std::move(data)), shape};
}

void BM_OracleScore(benchmark::State& state) {
  Setup setup = make_setup(8, static_cast<int>(state.range(0)));
  RngStream rng(3);
  SpectralField x = SpectralField::from_pixel(setup.schedule.op(), setup.shape,
                                              rng.gauss_matrix(8, 1));
  int i = 1;
  for (auto _ : state) {
    SpectralField sc = setup.oracle->score(x, i);
    benchmark::DoNotOptimize(sc.spectral());
    i = i % 1000 + 1;
  }
}
BENCHMARK(BM_OracleScore)->Arg(2)->Arg(64)->Arg(512);

void BM_ReverseStep(benchmark::State& state) {
  Setup setup = make_setup(8, 64);
  SamplerConfig cfg{1000, setup.shape, setup.oracle, FinalStepNoise::suppress, false, 5};
  RngStream rng(3);
  SpectralField x = SpectralField::from_pixel(setup.schedule.op(), setup.shape,
                                              rng.gauss_matrix(8, 1));
  int i = 1000;
  for (auto _ : state) {
    SpectralField y = reverse_step_score(cfg, x, i, rng);
    benchmark::DoNotOptimize(y.spectral());
    i = i > 1 ? i - 1 : 1000;
  }
}
BENCHMARK(BM_ReverseStep);

void BM_FullChain(benchmark::State& state) {
  Setup setup = make_setup(4, 2);
  SamplerConfig cfg{1000, setup.shape, setup.oracle, FinalStepNoise::suppress, false, 5};
  for (auto _ : state) {
    Trajectory t = sample_chain(cfg, 0, 1000);
    benchmark::DoNotOptimize(t.frames.back().state.spectral());
  }
}
BENCHMARK(BM_FullChain);

}  // namespace
