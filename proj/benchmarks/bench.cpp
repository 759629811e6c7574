#include <benchmark/benchmark.h>

#include "dlim/fit.hpp"
#include "dlim/models.hpp"
#include "dlim/simlab.hpp"

using namespace dlim;

namespace {

SimDataset bench_data(int n) {
  Scenario sc{2};
  return simulate_dataset(sc, n, Snr::High, 12345);
}

void crossbasis_build(benchmark::State& state) {
  SimDataset ds = bench_data(static_cast<int>(state.range(0)));
  BasisSpec ts{BasisKind::BSpline, 20, 3, {1.0, 37.0}, BsplineBoundary::Uniform};
  BasisSpec ms{BasisKind::BSpline, 20, 3, {0.0, 1.0}, BsplineBoundary::Uniform};
  for (auto _ : state) {
    CrossBasis cb = build_crossbasis(ds.X, ds.m, ts, ms);
    benchmark::DoNotOptimize(cb.W.data());
  }
}
BENCHMARK(crossbasis_build)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void dlim_fixed_lambda_fit(benchmark::State& state) {
  SimDataset ds = bench_data(1000);
  ModelConfig mc;
  mc.nu_time = 20;
  mc.nu_mod = 20;
  ModelSpec spec = make_model_spec(mc, ds.X, ds.m, ds.Z, ds.y);
  FitOptions opts;
  opts.fixed_lambda = Eigen::VectorXd::Constant(2, 10.0);
  for (auto _ : state) {
    FittedModel fm = fit_penalized(spec, opts);
    benchmark::DoNotOptimize(fm.coef.data());
  }
}
BENCHMARK(dlim_fixed_lambda_fit)->Unit(benchmark::kMillisecond);

void dlim_reml_fit(benchmark::State& state) {
  SimDataset ds = bench_data(1000);
  ModelConfig mc;
  mc.nu_time = 20;
  mc.nu_mod = 20;
  ModelSpec spec = make_model_spec(mc, ds.X, ds.m, ds.Z, ds.y);
  for (auto _ : state) {
    FittedModel fm = fit_penalized(spec);
    benchmark::DoNotOptimize(fm.coef.data());
  }
}
BENCHMARK(dlim_reml_fit)->Unit(benchmark::kMillisecond);

void dlim_warm_refit(benchmark::State& state) {
  SimDataset ds = bench_data(1000);
  ModelConfig mc;
  mc.nu_time = 20;
  mc.nu_mod = 20;
  ModelSpec spec = make_model_spec(mc, ds.X, ds.m, ds.Z, ds.y);
  FittedModel cold = fit_penalized(spec);
  FitOptions warm;
  warm.rho_init = cold.rho;
  warm.grad_tol = 1e-3;
  for (auto _ : state) {
    FittedModel fm = fit_penalized(spec, warm);
    benchmark::DoNotOptimize(fm.coef.data());
  }
}
BENCHMARK(dlim_warm_refit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
