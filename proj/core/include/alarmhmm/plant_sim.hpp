#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alarmhmm/alarm.hpp"
#include "alarmhmm/sequence_io.hpp"

namespace alarmhmm {

// Measurement count of the bundled Tennessee Eastman style graph.
inline constexpr std::size_t kTeMeasurements = 41;

// A group of alarms that fire together some time after the fault starts.
struct PropagationStage {
  std::vector<Symbol> symbols;
  double delay_s = 0.0;   // nominal onset
  double jitter_s = 0.0;  // onset is uniform on delay +/- jitter
};

struct FaultPath {
  std::string name;
  std::vector<PropagationStage> stages;
  // depth_thresholds[k] is the smallest magnitude for which stage k is
  // reached. One entry per stage, non-decreasing, the first one 0.
  std::vector<double> depth_thresholds;

  // Number of stages reached at a magnitude in (0, 1].
  std::size_t depth(double magnitude) const;
};

// Stage-wise fault propagation signatures over a codebook of
// 2 * n_measurements alarm symbols.
struct PropagationGraph {
  std::size_t n_measurements = 0;
  std::vector<FaultPath> faults;

  std::size_t n_symbols() const noexcept { return 2 * n_measurements; }
  std::size_t n_faults() const noexcept { return faults.size(); }

  // Throws DomainError if delays do not strictly increase, thresholds are
  // malformed, a symbol is outside the codebook or repeated within a fault.
  void validate() const;
};

nlohmann::json graph_to_json(const PropagationGraph& graph);
PropagationGraph graph_from_json(const nlohmann::json& doc);

// Ten faults over 41 measurements (82 symbols). Faults 1, 7 and 4, 8 share
// their early stages, and faults 0, 1, 2 share a common prefix, so they are
// hard to tell apart from the first few alarms.
PropagationGraph default_graph();

struct ScenarioSpec {
  FaultIndex fault = 0;
  double magnitude = 1.0;
  std::uint64_t seed = 0;
  double swap_prob = 0.0;  // chance of exchanging each adjacent pair
  double drop_prob = 0.0;  // chance of omitting each symbol after the first stage

  void validate() const;
};

// Deterministic in (graph, spec). Symbols are ordered by perturbed onset,
// ties by symbol, then adjacent pairs with distinct onsets are exchanged with
// probability swap_prob (the onset times stay in place).
AlarmSequence simulate_alarm_sequence(const PropagationGraph& graph, const ScenarioSpec& spec);

struct SplitCounts {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct MagnitudeRange {
  double lo = 0.2;  // exclusive
  double hi = 1.0;  // inclusive
};

struct NoiseConfig {
  double swap_prob = 0.1;
  double drop_prob = 0.05;
};

struct Scenario {
  ScenarioSpec spec;
  AlarmSequence sequence;
};

struct ScenarioSets {
  std::vector<Scenario> train;
  std::vector<Scenario> test;
};

// Per-fault counts matching the 65 training / 42 test split of the reference
// case study.
std::map<FaultIndex, SplitCounts> reference_split_counts();

// Magnitudes and scenario seeds are derived from (base_seed, split, fault,
// replicate), so train and test use disjoint streams.
ScenarioSets generate_scenario_set(const PropagationGraph& graph,
                                   const std::map<FaultIndex, SplitCounts>& per_fault_counts,
                                   MagnitudeRange magnitudes, std::uint64_t base_seed,
                                   NoiseConfig noise = {});

// JSONL records with meta {magnitude, seed, split, replicate}.
std::vector<SequenceRecord> to_records(const std::vector<Scenario>& scenarios,
                                       const std::string& split);

struct TraceConfig {
  double sample_period = 10.0;
  double duration = 4000.0;
  double noise_sigma = 1.0;
  double nominal_level = 50.0;
  // Size of the step applied at each alarm onset, in noise standard deviations.
  double step_sigmas = 10.0;
};

struct SimulatedTraces {
  MeasurementTrace normal;
  MeasurementTrace faulty;
  AlarmSequence sequence;  // the schedule the faulty trace was built from
};

// Step responses plus Gaussian noise: every measurement sits at the nominal
// level; at each scheduled alarm onset the affected measurement steps up (high
// alarm) or down (low alarm) and stays there.
SimulatedTraces simulate_traces(const PropagationGraph& graph, const ScenarioSpec& spec,
                                const TraceConfig& config = {});

}  // namespace alarmhmm
