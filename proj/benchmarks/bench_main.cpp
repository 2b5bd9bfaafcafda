// Hot paths at the reference problem size: 10 faults, 82 alarm symbols,
// 65 training sequences.

#include <benchmark/benchmark.h>

#include <alarmhmm/baseline.hpp>
#include <alarmhmm/diagnoser.hpp>
#include <alarmhmm/hmm.hpp>
#include <alarmhmm/plant_sim.hpp>
#include <alarmhmm/rng.hpp>

using namespace alarmhmm;

namespace {

const ScenarioSets& reference_sets() {
  static const ScenarioSets sets =
      generate_scenario_set(default_graph(), reference_split_counts(), {}, 1);
  return sets;
}

std::vector<LabeledSequence> labeled(const std::vector<Scenario>& scenarios) {
  std::vector<LabeledSequence> out;
  for (const auto& s : scenarios) out.push_back({s.sequence, s.spec.fault});
  return out;
}

std::vector<Symbol> random_obs(std::size_t len, std::size_t n_symbols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Symbol> obs(len);
  for (auto& o : obs) o = rng.next() % n_symbols;
  return obs;
}

void BM_ForwardBackward(benchmark::State& state) {
  const Hmm m = random_model(10, 82, 3);
  const auto obs = random_obs(static_cast<std::size_t>(state.range(0)), 82, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward_backward(m, obs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForwardBackward)->RangeMultiplier(4)->Range(8, 512)->Complexity(benchmark::oN);

void BM_Viterbi(benchmark::State& state) {
  const Hmm m = random_model(10, 82, 3);
  const auto obs = random_obs(static_cast<std::size_t>(state.range(0)), 82, 4);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(m, obs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Viterbi)->RangeMultiplier(4)->Range(8, 512)->Complexity(benchmark::oN);

void BM_KBest(benchmark::State& state) {
  const Hmm m = random_model(10, 82, 3);
  const auto obs = random_obs(40, 82, 4);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(k_best_paths(m, obs, k));
}
BENCHMARK(BM_KBest)->Arg(1)->Arg(2)->Arg(8);

void BM_TrainDiagnoser(benchmark::State& state) {
  const auto train = labeled(reference_sets().train);
  const AlarmSymbolCodebook codebook(kTeMeasurements);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_diagnoser(train, codebook, std::nullopt, FitConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()));
}
BENCHMARK(BM_TrainDiagnoser)->Unit(benchmark::kMillisecond);

void BM_Diagnose(benchmark::State& state) {
  const auto train = labeled(reference_sets().train);
  const auto model =
      train_diagnoser(train, AlarmSymbolCodebook(kTeMeasurements), std::nullopt, FitConfig{}).model;
  const auto& test = reference_sets().test;
  for (auto _ : state) {
    for (const auto& s : test) benchmark::DoNotOptimize(diagnose(model, s.sequence));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(test.size()));
}
BENCHMARK(BM_Diagnose);

void BM_Baseline(benchmark::State& state) {
  const auto train = labeled(reference_sets().train);
  std::vector<AlarmSequence> test;
  for (const auto& s : reference_sets().test) test.push_back(s.sequence);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_and_classify(train, test, 10, 82));
}
BENCHMARK(BM_Baseline)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
