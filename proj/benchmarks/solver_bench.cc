#include <random>

#include <benchmark/benchmark.h>

#include "kleinman/banach_geometry.h"
#include "kleinman/certify.h"
#include "kleinman/concave_newton.h"
#include "kleinman/lyapunov.h"
#include "kleinman/problems_io.h"
#include "kleinman/random.h"
#include "kleinman/riccati.h"

namespace kleinman {
namespace {

StateSpaceSystem system_of_size(Eigen::Index n) {
  return admissible_systems(1, n, n, 7).front();
}

void BM_LyapunovSchur(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Eigen::Index n = state.range(0);
  const Matrix a = random_with_abscissa(n, -0.5, rng);
  const SymOperator q = random_psd(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lyapunov(a, q, LyapunovMethod::kSchur));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_LyapunovSchur)->RangeMultiplier(2)->Range(4, 64)->Complexity();

void BM_LyapunovKron(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Eigen::Index n = state.range(0);
  const Matrix a = random_with_abscissa(n, -0.5, rng);
  const SymOperator q = random_psd(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lyapunov(a, q, LyapunovMethod::kKron));
  }
}
BENCHMARK(BM_LyapunovKron)->RangeMultiplier(2)->Range(4, 32);

void BM_NewtonKleinman(benchmark::State& state) {
  const StateSpaceSystem sys = system_of_size(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_riccati(sys));
  }
}
BENCHMARK(BM_NewtonKleinman)->Arg(4)->Arg(8)->Arg(16)->Arg(32)
    ->Unit(benchmark::kMillisecond);

void BM_HamiltonianOracle(benchmark::State& state) {
  const StateSpaceSystem sys = system_of_size(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hamiltonian_oracle(sys));
  }
}
BENCHMARK(BM_HamiltonianOracle)->Arg(4)->Arg(8)->Arg(16)->Arg(32)
    ->Unit(benchmark::kMillisecond);

void BM_HeatDemo(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const double c = heat_shift_for_abscissa(n, 1.0, 5.0);
  const StateSpaceSystem sys = heat_demo(n, c, 1.0, {0}, {n - 1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_riccati(sys));
  }
}
BENCHMARK(BM_HeatDemo)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RegularizedSqrt(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::Index n = state.range(0);
  const SymOperator nm = random_psd(n, n, rng);
  const SymOperator q = random_psd(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_regularized_sqrt(nm, q, 1.0));
  }
}
BENCHMARK(BM_RegularizedSqrt)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_InducedNorm(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Eigen::Index n = state.range(0);
  const Matrix p = random_psd(n, n, rng).matrix();
  const LpSpace space{n, Exponent::finite(3.0)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(induced_norm(p, space));
  }
}
BENCHMARK(BM_InducedNorm)->Arg(4)->Arg(8);

}  // namespace
}  // namespace kleinman

BENCHMARK_MAIN();
