#include <benchmark/benchmark.h>

#include "merg/ergodicity.hpp"
#include "merg/laplace.hpp"
#include "merg/spectral.hpp"

namespace {

merg::MarkovModel ar1_model() {
  return merg::MarkovModel::ar1(0.5, merg::NoiseSpec::gaussian(1.0), 2.0,
                                merg::Observable::quadratic());
}

void BM_discretize(benchmark::State& state) {
  const auto model = ar1_model();
  const auto grid = merg::GridSpec::with_n(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(merg::discretize(model, 1.0, grid));
  }
}
BENCHMARK(BM_discretize)->Arg(100)->Arg(400)->Arg(800);

void BM_perron(benchmark::State& state) {
  const auto model = ar1_model();
  const auto op =
      merg::discretize(model, 1.0, merg::GridSpec::with_n(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(merg::perron(op));
  }
}
BENCHMARK(BM_perron)->Arg(100)->Arg(400);

void BM_laplace_mc(benchmark::State& state) {
  const auto model = ar1_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(merg::laplace_mc_curve(
        model, merg::InitialLaw::point(0.0), 0.5, 10,
        static_cast<std::uint64_t>(state.range(0)), 42));
  }
}
BENCHMARK(BM_laplace_mc)->Arg(10000)->Arg(100000);

void BM_solve_nu(benchmark::State& state) {
  const auto pi = merg::DistributionSpec::exponential(1.0);
  const auto model =
      merg::MarkovModel::knudsen(0.7, merg::ResampleU{pi}, pi, merg::Observable::power(1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(merg::solve_nu(model, merg::GridSpec{}, 0.25, 4.0, 1e-8));
  }
}
BENCHMARK(BM_solve_nu);

}  // namespace
