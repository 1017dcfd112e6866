// Serial reference drivers against the OpenMP drivers on the main Monte Carlo
// workloads. Both produce identical counts; only wall time differs.

#include <benchmark/benchmark.h>

#include "qmoney/adversary.hpp"
#include "qmoney/games.hpp"
#include "qmoney/montecarlo.hpp"

using namespace qmoney;

namespace {

template <bool Parallel>
void BM_ProductGame(benchmark::State& state) {
  const auto strat = games::hadamard_strategy();
  const auto k = static_cast<std::size_t>(state.range(0));
  auto trial = [&](std::uint64_t, Rng& rng) { return games::product_game_trial(k, strat, rng); };
  for (auto _ : state) {
    auto e = Parallel ? mc::count_successes(100000, 1, "bench", trial) : mc::count_successes_serial(100000, 1, "bench", trial);
    benchmark::DoNotOptimize(e.successes);
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}

template <adversary::Schedule S>
void BM_EvaluateCounterfeits(benchmark::State& state) {
  money::BankDb db(money::VerParams{24, 6});
  Rng rng(7);
  const auto coin = db.mint(rng);
  const auto [a, b] = adversary::attack_clone_split(coin);
  for (auto _ : state) {
    auto e = adversary::evaluate_counterfeits(db, a, b, 10000, 3, S);
    benchmark::DoNotOptimize(e.successes);
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}

template <adversary::Schedule S>
void BM_AdaptiveAttack(benchmark::State& state) {
  const money::VerParams params{24, 6};
  const auto budget = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto e = adversary::run_attack_experiment(adversary::Strategy::AdaptiveReplay, params, budget, 1000, 5, S);
    benchmark::DoNotOptimize(e.successes);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}

}  // namespace

BENCHMARK(BM_ProductGame<false>)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProductGame<true>)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateCounterfeits<adversary::Schedule::Serial>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateCounterfeits<adversary::Schedule::Parallel>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdaptiveAttack<adversary::Schedule::Serial>)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdaptiveAttack<adversary::Schedule::Parallel>)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
