#include <benchmark/benchmark.h>

#include "changeplane/fit.hpp"
#include "changeplane/huber.hpp"
#include "changeplane/simlab.hpp"
#include "changeplane/subgroup_test.hpp"

namespace cp = changeplane;

namespace {

cp::GeneratedData data(cp::Index n, double beta_scale, cp::ErrorDist dist = cp::ErrorDist::pareto21) {
  cp::DgpConfig dgp;
  dgp.n = n;
  dgp.seed = 1;
  dgp.beta_scale = beta_scale;
  dgp.error_dist = dist;
  return cp::gen_dataset(dgp);
}

void BM_HuberAdaptive(benchmark::State& state) {
  const auto gen = data(state.range(0), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp::huber_fit_adaptive(gen.data.X, gen.data.y));
  }
}
BENCHMARK(BM_HuberAdaptive)->Arg(200)->Arg(1000)->Arg(5000);

void BM_SmoothedLossGrad(benchmark::State& state) {
  const auto gen = data(state.range(0), 1.0);
  const cp::KernelSpec spec{cp::KernelKind::sigmoid, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp::smoothed_loss_grad(gen.data, gen.truth, 2.0, spec));
  }
}
BENCHMARK(BM_SmoothedLossGrad)->Arg(200)->Arg(1000)->Arg(5000);

void BM_FitAlternating(benchmark::State& state) {
  const auto gen = data(state.range(0), 1.0);
  cp::FitConfig cfg;
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp::fit_alternating(gen.data, cfg));
  }
}
BENCHMARK(BM_FitAlternating)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_RwastStatistic(benchmark::State& state) {
  const auto gen = data(state.range(0), 0.0);
  const cp::NullFit nf = cp::fit_null(gen.data.X, gen.data.y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp::rwast_statistic(gen.data, nf));
  }
}
BENCHMARK(BM_RwastStatistic)->Arg(200)->Arg(600)->Unit(benchmark::kMicrosecond);

void BM_BootstrapPvalue(benchmark::State& state) {
  const auto gen = data(state.range(0), 0.0);
  cp::TestOptions opt;
  opt.method = static_cast<cp::TestMethod>(state.range(1));
  opt.B = 300;
  opt.sst_grid = 200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cp::bootstrap_pvalue(gen.data, opt, cp::derive_stream(1, 0)));
  }
  state.SetLabel(cp::to_string(opt.method));
}
BENCHMARK(BM_BootstrapPvalue)
    ->Args({200, 0})
    ->Args({200, 2})
    ->Args({400, 0})
    ->Args({400, 2})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
