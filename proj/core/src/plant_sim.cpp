#include "alarmhmm/plant_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "alarmhmm/errors.hpp"
#include "alarmhmm/rng.hpp"

namespace alarmhmm {

using nlohmann::json;

std::size_t FaultPath::depth(double magnitude) const {
  std::size_t d = 0;
  for (double threshold : depth_thresholds) {
    if (magnitude >= threshold) ++d;
  }
  return std::max<std::size_t>(d, 1);
}

void PropagationGraph::validate() const {
  if (n_measurements == 0) throw DomainError("graph needs at least one measurement");
  if (faults.empty()) throw DomainError("graph needs at least one fault");
  for (std::size_t f = 0; f < faults.size(); ++f) {
    const auto& path = faults[f];
    const std::string where = "fault " + std::to_string(f);
    if (path.stages.empty()) throw DomainError(where + " has no stages");
    if (path.depth_thresholds.size() != path.stages.size()) {
      throw DomainError(where + " needs one depth threshold per stage");
    }
    if (path.depth_thresholds.front() != 0.0) {
      throw DomainError(where + ": the first stage must always be reached");
    }
    if (!std::is_sorted(path.depth_thresholds.begin(), path.depth_thresholds.end())) {
      throw DomainError(where + ": depth thresholds must be non-decreasing");
    }
    std::set<Symbol> seen;
    for (std::size_t s = 0; s < path.stages.size(); ++s) {
      const auto& stage = path.stages[s];
      if (stage.symbols.empty()) throw DomainError(where + " has an empty stage");
      if (!(stage.jitter_s >= 0.0)) throw DomainError(where + " has a negative jitter");
      if (s > 0 && !(stage.delay_s > path.stages[s - 1].delay_s)) {
        throw DomainError(where + ": stage delays must strictly increase");
      }
      for (Symbol sym : stage.symbols) {
        if (sym >= n_symbols()) {
          throw DomainError(where + " references symbol " + std::to_string(sym) +
                            " outside the codebook");
        }
        if (!seen.insert(sym).second) {
          throw DomainError(where + " lists symbol " + std::to_string(sym) + " twice");
        }
      }
    }
  }
}

json graph_to_json(const PropagationGraph& graph) {
  json doc;
  doc["format_version"] = "1";
  doc["n_measurements"] = graph.n_measurements;
  json faults = json::array();
  for (const auto& path : graph.faults) {
    json f;
    f["name"] = path.name;
    f["depth_thresholds"] = path.depth_thresholds;
    json stages = json::array();
    for (const auto& stage : path.stages) {
      stages.push_back({{"symbols", stage.symbols},
                        {"delay_s", stage.delay_s},
                        {"jitter_s", stage.jitter_s}});
    }
    f["stages"] = std::move(stages);
    faults.push_back(std::move(f));
  }
  doc["faults"] = std::move(faults);
  return doc;
}

PropagationGraph graph_from_json(const json& doc) {
  PropagationGraph graph;
  try {
    graph.n_measurements = doc.at("n_measurements").get<std::size_t>();
    for (const json& f : doc.at("faults")) {
      FaultPath path;
      path.name = f.value("name", std::string{});
      path.depth_thresholds = f.at("depth_thresholds").get<std::vector<double>>();
      for (const json& s : f.at("stages")) {
        PropagationStage stage;
        stage.symbols = s.at("symbols").get<std::vector<Symbol>>();
        stage.delay_s = s.at("delay_s").get<double>();
        stage.jitter_s = s.at("jitter_s").get<double>();
        path.stages.push_back(std::move(stage));
      }
      graph.faults.push_back(std::move(path));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed propagation graph: ") + e.what());
  }
  try {
    graph.validate();
  } catch (const DomainError& e) {
    throw SchemaError(std::string("invalid propagation graph: ") + e.what());
  }
  return graph;
}

namespace {


// 1-based measurement numbers, as in the plant's tag list.
constexpr Symbol hi(std::size_t xmeas) { return xmeas - 1; }
constexpr Symbol lo(std::size_t xmeas) { return kTeMeasurements + xmeas - 1; }

std::vector<Symbol> join(std::initializer_list<std::vector<Symbol>> parts) {
  std::vector<Symbol> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Alarms that become reachable once the fault magnitude passes threshold.
struct Block {
  std::vector<Symbol> symbols;
  double threshold = 0.0;
};

// Every alarm gets its own stage: onsets advance by kSpacing within a block
// and by an extra kSpacing between blocks, each with +/- kJitter. Neighbouring
// alarms swap often, alarms further apart rarely.
constexpr double kFirstOnset = 100.0;
constexpr double kSpacing = 50.0;
constexpr double kJitter = 60.0;

FaultPath make_fault(std::string name, const std::vector<Block>& blocks) {
  FaultPath path;
  path.name = std::move(name);
  std::size_t k = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (Symbol sym : blocks[b].symbols) {
      const double delay = kFirstOnset + kSpacing * static_cast<double>(k + b);
      path.stages.push_back({{sym}, delay, kJitter});
      path.depth_thresholds.push_back(blocks[b].threshold);
      ++k;
    }
  }
  return path;
}

}  // namespace

PropagationGraph default_graph() {
  // Plant-wide blocks shared by many faults.
  const std::vector<Symbol> reactor_temp{hi(9), hi(21)};
  const std::vector<Symbol> pressures{hi(7), hi(13), hi(16)};
  const std::vector<Symbol> levels{lo(8), lo(12), lo(15)};
  const std::vector<Symbol> purge{hi(10), hi(29), hi(30), hi(31)};
  const std::vector<Symbol> temps{hi(18), hi(11), hi(22)};
  const std::vector<Symbol> recycle{hi(5), hi(20)};
  const std::vector<Symbol> feed_comp{hi(23), hi(24), hi(25)};
  const std::vector<Symbol> product{hi(37), hi(38), hi(39), lo(40), lo(41)};

  PropagationGraph g;
  g.n_measurements = kTeMeasurements;

  // Faults 0, 1 and 2 start with the same reactor temperature and pressure
  // alarms. Faults 1 and 7 share the feed-loop alarms, faults 4 and 8 the
  // reactor pressure and purge alarms.
  g.faults.push_back(make_fault("reactor temperature gauge drift",
                                {{join({reactor_temp, pressures})},
                                 {levels},
                                 {{lo(21), hi(32), hi(33), lo(17)}},
                                 {purge},
                                 {{hi(19), hi(34)}, 0.6}}));
  g.faults.push_back(make_fault("C feed valve stuck",
                                {{join({reactor_temp, pressures})},
                                 {{hi(4), lo(1), lo(4), hi(26), lo(27)}},
                                 {levels},
                                 {purge, 0.35},
                                 {{lo(25), lo(36), lo(37), lo(38)}, 0.5},
                                 {{lo(18), lo(5), lo(19), hi(14)}, 0.7},
                                 {{hi(28), lo(32), lo(33)}, 0.85}}));
  g.faults.push_back(make_fault("E feed valve stuck",
                                {{join({reactor_temp, pressures})},
                                 {levels},
                                 {join({purge, recycle})},
                                 {{lo(3), hi(3), lo(24), lo(26)}},
                                 {join({temps, feed_comp})},
                                 {join({product, {hi(28), hi(35), hi(36), lo(19)}})},
                                 {{hi(1), lo(22), hi(41), lo(35)}, 0.6}}));
  g.faults.push_back(make_fault("D feed valve stuck",
                                {{{lo(2), hi(23), lo(25)}},
                                 {join({pressures, {hi(6)}})},
                                 {join({levels, recycle})},
                                 {join({purge, {hi(32), hi(33)}})},
                                 {join({temps, {lo(23), hi(24)}})},
                                 {join({product, {hi(34), hi(35), hi(36), lo(28)}})},
                                 {{hi(8), lo(10), hi(12), lo(16)}},
                                 {{hi(1), hi(2), lo(6)}, 0.6}}));
  g.faults.push_back(make_fault("reactor pressure gauge negative drift",
                                {{{lo(7), hi(10), lo(13), lo(16), hi(29)}},
                                 {{hi(30), lo(18), lo(11), hi(19), hi(35), hi(36), lo(20)}}}));
  g.faults.push_back(make_fault("separator level gauge negative drift",
                                {{{lo(12), hi(14), lo(17), hi(15), lo(22), hi(11)}},
                                 {{hi(13), hi(16), hi(7), hi(18), lo(14), hi(21)}},
                                 {join({purge, recycle}), 0.35},
                                 {join({feed_comp, {lo(9), hi(26)}}), 0.5},
                                 {join({product, {hi(32), hi(33)}}), 0.7},
                                 {{lo(29), lo(30), lo(31), lo(34), hi(27), hi(28)}, 0.85}}));
  g.faults.push_back(make_fault("condenser cooling water gauge",
                                {{{lo(22), hi(12), lo(11), hi(13), hi(16), lo(14)}},
                                 {{hi(7), hi(10), lo(18), hi(29), hi(30), hi(31), lo(37)}},
                                 {{hi(38), lo(39), hi(20), lo(5)}},
                                 {{hi(40), hi(41)}, 0.5}}));
  g.faults.push_back(make_fault("A feed valve stuck",
                                {{{hi(4), lo(1), lo(4), hi(26)}},
                                 {{lo(23), hi(27), lo(29)}},
                                 {pressures},
                                 {levels},
                                 {join({purge, recycle})},
                                 {join({temps, {hi(32), hi(34)}})},
                                 {join({product, {hi(35), hi(36), lo(10)}})},
                                 {{hi(17), lo(19), lo(6)}, 0.55}}));
  g.faults.push_back(make_fault("purge valve stuck",
                                {{{lo(7), hi(10), lo(13), lo(16), hi(29)}},
                                 {{hi(31), lo(10), lo(30), hi(15), lo(8), lo(12)}},
                                 {{hi(36), hi(37), lo(33)}, 0.6},
                                 {{hi(21), hi(24)}, 0.8}}));
  g.faults.push_back(make_fault("reactor coolant valve stuck",
                                {{{lo(21), lo(9), hi(20), lo(20), hi(6), lo(27)}},
                                 {{hi(8), hi(12), hi(15), lo(10), lo(29), lo(30), lo(31)}},
                                 {{lo(5), lo(18), lo(11), lo(22)}, 0.4},
                                 {{lo(23), lo(24), lo(25), lo(26)}, 0.55},
                                 {{lo(37), lo(38), lo(39), hi(40), hi(41)}, 0.7},
                                 {{lo(32), lo(33), lo(34), lo(35), lo(36), lo(19), lo(28)}, 0.85}}));
  g.validate();
  return g;
}

void ScenarioSpec::validate() const {
  if (!(magnitude > 0.0) || magnitude > 1.0) {
    throw DomainError("fault magnitude must lie in (0, 1]");
  }
  for (double p : {swap_prob, drop_prob}) {
    if (!(p >= 0.0) || p > 1.0) throw DomainError("probabilities must lie in [0, 1]");
  }
}

AlarmSequence simulate_alarm_sequence(const PropagationGraph& graph, const ScenarioSpec& spec) {
  spec.validate();
  if (spec.fault >= graph.n_faults()) {
    throw DomainError("fault " + std::to_string(spec.fault) + " is not in the graph");
  }
  const FaultPath& path = graph.faults[spec.fault];
  const std::size_t depth = std::min(path.depth(spec.magnitude), path.stages.size());

  Rng rng(spec.seed);
  std::vector<std::tuple<double, Symbol>> onsets;
  for (std::size_t s = 0; s < depth; ++s) {
    const auto& stage = path.stages[s];
    for (Symbol sym : stage.symbols) {
      // Both draws are made for every symbol so the stream does not depend on
      // which symbols were dropped.
      const bool drop = rng.bernoulli(spec.drop_prob);
      const double jitter = stage.jitter_s * (2.0 * rng.uniform() - 1.0);
      if (s > 0 && drop) continue;
      onsets.emplace_back(stage.delay_s + jitter, sym);
    }
  }
  std::sort(onsets.begin(), onsets.end());

  AlarmSequence seq;
  seq.fault = spec.fault;
  for (const auto& [time, sym] : onsets) {
    seq.symbols.push_back(sym);
    seq.activation_times.push_back(time);
  }
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    const bool swap = rng.bernoulli(spec.swap_prob);
    if (swap && seq.activation_times[i] < seq.activation_times[i + 1]) {
      std::swap(seq.symbols[i], seq.symbols[i + 1]);
    }
  }
  return seq;
}

std::map<FaultIndex, SplitCounts> reference_split_counts() {
  const std::size_t train[] = {5, 8, 7, 7, 6, 6, 6, 6, 6, 8};
  const std::size_t test[] = {4, 4, 4, 4, 4, 5, 5, 4, 4, 4};
  std::map<FaultIndex, SplitCounts> counts;
  for (FaultIndex f = 0; f < 10; ++f) counts[f] = {train[f], test[f]};
  return counts;
}

namespace {

enum class Split : std::uint64_t { Train = 1, Test = 2 };

Scenario make_scenario(const PropagationGraph& graph, FaultIndex fault, std::size_t replicate,
                       Split split, MagnitudeRange magnitudes, std::uint64_t base_seed,
                       NoiseConfig noise) {
  const std::uint64_t stream =
      derive_seed(base_seed, static_cast<std::uint64_t>(split), fault, replicate);
  Rng rng(stream);
  ScenarioSpec spec;
  spec.fault = fault;
  // u in [0, 1) maps to (lo, hi].
  spec.magnitude = magnitudes.hi - (magnitudes.hi - magnitudes.lo) * rng.uniform();
  spec.seed = rng.next();
  spec.swap_prob = noise.swap_prob;
  spec.drop_prob = noise.drop_prob;
  return {spec, simulate_alarm_sequence(graph, spec)};
}

}  // namespace

ScenarioSets generate_scenario_set(const PropagationGraph& graph,
                                   const std::map<FaultIndex, SplitCounts>& per_fault_counts,
                                   MagnitudeRange magnitudes, std::uint64_t base_seed,
                                   NoiseConfig noise) {
  graph.validate();
  if (!(magnitudes.lo >= 0.0) || !(magnitudes.hi <= 1.0) || !(magnitudes.lo < magnitudes.hi)) {
    throw DomainError("magnitude range must be a non-empty interval within (0, 1]");
  }
  ScenarioSets sets;
  for (const auto& [fault, counts] : per_fault_counts) {
    if (fault >= graph.n_faults()) {
      throw DomainError("fault " + std::to_string(fault) + " is not in the graph");
    }
    if (counts.n_train + counts.n_test == 0) {
      throw DomainError("fault " + std::to_string(fault) + " has no scenarios requested");
    }
    for (std::size_t r = 0; r < counts.n_train; ++r) {
      sets.train.push_back(
          make_scenario(graph, fault, r, Split::Train, magnitudes, base_seed, noise));
    }
    for (std::size_t r = 0; r < counts.n_test; ++r) {
      sets.test.push_back(
          make_scenario(graph, fault, r, Split::Test, magnitudes, base_seed, noise));
    }
  }
  return sets;
}

std::vector<SequenceRecord> to_records(const std::vector<Scenario>& scenarios,
                                       const std::string& split) {
  std::vector<SequenceRecord> out;
  out.reserve(scenarios.size());
  std::map<FaultIndex, std::size_t> replicate;
  for (const auto& s : scenarios) {
    SequenceRecord r;
    r.sequence = s.sequence;
    r.meta = {{"magnitude", s.spec.magnitude},
              {"seed", s.spec.seed},
              {"split", split},
              {"replicate", replicate[s.spec.fault]++}};
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

double gaussian(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

MeasurementTrace noisy_trace(std::size_t n_meas, const TraceConfig& config, Rng& rng) {
  const auto n_samples = static_cast<std::size_t>(std::floor(config.duration / config.sample_period)) + 1;
  MeasurementTrace trace;
  trace.sample_period = config.sample_period;
  trace.values = Matrix(n_samples, n_meas);
  for (std::size_t m = 0; m < n_meas; ++m) trace.meas_ids.push_back("XMEAS" + std::to_string(m + 1));
  for (std::size_t t = 0; t < n_samples; ++t) {
    for (std::size_t m = 0; m < n_meas; ++m) {
      trace.values(t, m) = config.nominal_level + config.noise_sigma * gaussian(rng);
    }
  }
  return trace;
}

}  // namespace

SimulatedTraces simulate_traces(const PropagationGraph& graph, const ScenarioSpec& spec,
                                const TraceConfig& config) {
  if (!(config.sample_period > 0.0) || !(config.duration > 0.0) || !(config.noise_sigma > 0.0)) {
    throw DomainError("trace configuration needs positive period, duration and noise");
  }
  SimulatedTraces out;
  out.sequence = simulate_alarm_sequence(graph, spec);
  const AlarmSymbolCodebook codebook(graph.n_measurements);

  Rng rng(derive_seed(spec.seed, 0x7472616365ULL));
  out.normal = noisy_trace(graph.n_measurements, config, rng);
  out.faulty = noisy_trace(graph.n_measurements, config, rng);

  // A later onset on the same measurement replaces the earlier offset.
  const double step = config.step_sigmas * config.noise_sigma;
  std::vector<double> offset(graph.n_measurements, 0.0);
  std::size_t next = 0;
  for (std::size_t t = 0; t < out.faulty.n_samples(); ++t) {
    const double now = static_cast<double>(t) * config.sample_period;
    while (next < out.sequence.size() && out.sequence.activation_times[next] <= now) {
      const AlarmPoint p = codebook.decode(out.sequence.symbols[next]);
      offset[p.measurement] = p.direction == AlarmDirection::High ? step : -step;
      ++next;
    }
    for (std::size_t m = 0; m < graph.n_measurements; ++m) out.faulty.values(t, m) += offset[m];
  }
  return out;
}

}  // namespace alarmhmm
