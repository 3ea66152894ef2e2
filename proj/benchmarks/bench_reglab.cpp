#include <benchmark/benchmark.h>

#include <cmath>

#include "reglab/experiments.hpp"

namespace {

using namespace reglab;

EigenSystem half_step(std::size_t n) {
  std::vector<double> lam(n);
  for (std::size_t k = 0; k < n; ++k) lam[k] = 0.5 * static_cast<double>(k + 1);
  return EigenSystem(std::move(lam));
}

FinalValueProblem bench_problem(std::size_t n, double decay) {
  const auto es = half_step(n);
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = std::exp(-decay * es.eigenvalue(k));
  return manufacture_problem(es, 1.0, SpectralVector(std::move(c)), SourceTerm::zero(n));
}

FinalValueProblem sampled_problem(std::size_t n) {
  const auto es = half_step(n);
  std::vector<ModeFunction> modes(n);
  std::vector<double> samples(129);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = std::sin(0.05 * static_cast<double>(i));
  for (auto& m : modes) m = ModeFunction::sampled(samples, 1.0 / 128.0);
  return FinalValueProblem(es, 1.0, SpectralVector::zeros(n), SourceTerm(std::move(modes)));
}

void BM_AccumulatePsiClosedForm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto es = half_step(n);
  std::vector<ModeFunction> modes(n);
  for (std::size_t k = 0; k < n; ++k) modes[k] = ModeFunction::exponential(1.0, -0.5);
  const FinalValueProblem p(es, 1.0, SpectralVector::zeros(n), SourceTerm(std::move(modes)));
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_psi(p, 0.25));
}
BENCHMARK(BM_AccumulatePsiClosedForm)->Arg(16)->Arg(64);

void BM_AccumulatePsiSampled(benchmark::State& state) {
  const auto p = sampled_problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_psi(p, 0.25));
}
BENCHMARK(BM_AccumulatePsiSampled)->Arg(16)->Arg(64);

void BM_TruncatedSolution(benchmark::State& state) {
  const auto p = bench_problem(static_cast<std::size_t>(state.range(0)), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(truncated_solution(p, 0.0, 8.0));
}
BENCHMARK(BM_TruncatedSolution)->Arg(16)->Arg(64);

void BM_LavrentievSolution(benchmark::State& state) {
  const auto p = bench_problem(static_cast<std::size_t>(state.range(0)), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(lavrentiev_solution(p, 0.0, 1e-3));
}
BENCHMARK(BM_LavrentievSolution)->Arg(16)->Arg(64);

void BM_ChooseBetaGeneral(benchmark::State& state) {
  const auto sc = SourceCondition::exponential(2.0, 4.0);
  double delta = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(choose_beta_general(sc, 0.0, 1.0, delta));
  }
}
BENCHMARK(BM_ChooseBetaGeneral);

void BM_StudyCell(benchmark::State& state) {
  const auto p = bench_problem(64, 2.0);
  const auto sc = SourceCondition::exponential(
      2.0, source_condition_norm(p.truth(0.0), p.eigensystem(),
                                 SourceCondition::exponential(2.0, 1.0), 0.0, 1.0));
  const auto truth = p.truth(0.0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto pd = perturb_data(p, NoiseSpec{1e-4, 0.5, ++seed});
    const auto noisy = p.with_data(pd.phi_tau, pd.source);
    const double beta = choose_beta_general(sc, 0.0, 1.0, 1e-4);
    benchmark::DoNotOptimize(norm(truth - truncated_solution(noisy, 0.0, beta)));
  }
}
BENCHMARK(BM_StudyCell);

void BM_L1TimeNorm(benchmark::State& state) {
  const auto f = SourceTerm({std::vector<ModeFunction>{
      ModeFunction::exponential(1.0, -1.0), ModeFunction::constant(0.5), ModeFunction::zero(),
      ModeFunction::zero()}});
  const auto g = f.with_constant_shift(SpectralVector({1e-3, -1e-3, 5e-4, 0.0}));
  for (auto _ : state) benchmark::DoNotOptimize(l1_time_norm(f, g, 1.0));
}
BENCHMARK(BM_L1TimeNorm);

}  // namespace

BENCHMARK_MAIN();
