#include "alarmhmm/diagnoser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

#include "alarmhmm/errors.hpp"
#include "alarmhmm/model_io.hpp"

namespace alarmhmm {

using nlohmann::json;

std::vector<LabeledSequence> labeled_sequences(const std::vector<SequenceRecord>& records,
                                               bool require_label) {
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& seq = records[i].sequence;
    if (!seq.fault) {
      if (require_label) {
        throw SchemaError("sequence " + std::to_string(i) + " has no fault label");
      }
      continue;
    }
    out.push_back({seq, *seq.fault});
  }
  return out;
}

namespace {

Matrix initial_transition(std::size_t n, const DiagnoserOptions& options) {
  Matrix a(n, n);
  if (n == 1) {
    a(0, 0) = 1.0;
    return a;
  }
  const double self = options.hard_mask
                          ? 1.0 - static_cast<double>(n - 1) * options.mask_off_diagonal
                          : options.self_transition;
  const double off = options.hard_mask ? options.mask_off_diagonal
                                       : (1.0 - self) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = i == j ? self : off;
  }
  return a;
}

void check_options(const DiagnoserOptions& options, std::size_t n) {
  if (!(options.self_transition > 0.0) || options.self_transition > 1.0) {
    throw DomainError("self-transition mass must lie in (0, 1]");
  }
  if (!(options.emission_pseudocount >= 0.0)) {
    throw DomainError("emission pseudocount must be non-negative");
  }
  if (options.hard_mask &&
      (!(options.mask_off_diagonal > 0.0) ||
       static_cast<double>(n - 1) * options.mask_off_diagonal >= 1.0)) {
    throw DomainError("masked off-diagonal transition mass is out of range");
  }
}

}  // namespace

TrainingResult train_diagnoser(std::span<const LabeledSequence> training,
                               const AlarmSymbolCodebook& codebook,
                               const std::optional<std::vector<double>>& priors,
                               const FitConfig& config, const DiagnoserOptions& options,
                               std::vector<std::string> fault_names) {
  config.validate();
  if (training.empty()) throw DomainError("training set is empty");

  FaultIndex max_label = 0;
  for (const auto& s : training) max_label = std::max(max_label, s.fault);
  const std::size_t n = fault_names.empty() ? max_label + 1 : fault_names.size();
  if (max_label >= n) {
    throw DomainError("fault label " + std::to_string(max_label) + " has no name");
  }
  if (fault_names.empty()) {
    for (std::size_t f = 0; f < n; ++f) fault_names.push_back("fault_" + std::to_string(f + 1));
  }
  check_options(options, n);

  const std::size_t m = codebook.size();
  Matrix counts(n, m, 0.0);
  std::vector<std::size_t> per_fault(n, 0);
  std::vector<ObservationSequence> observations;
  observations.reserve(training.size());
  for (std::size_t s = 0; s < training.size(); ++s) {
    const auto& seq = training[s].sequence;
    if (seq.empty()) throw DomainError("training sequence " + std::to_string(s) + " is empty");
    for (Symbol sym : seq.symbols) {
      if (sym >= m) {
        throw UnknownSymbolError("training sequence " + std::to_string(s) + " uses symbol " +
                                 std::to_string(sym) + " outside the codebook");
      }
      counts(training[s].fault, sym) += 1.0;
    }
    ++per_fault[training[s].fault];
    observations.push_back(seq.symbols);
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (per_fault[f] == 0) {
      throw DomainError("fault " + std::to_string(f) + " (" + fault_names[f] +
                        ") has no training sequences");
    }
  }

  Matrix emission(n, m);
  for (std::size_t f = 0; f < n; ++f) {
    double total = 0.0;
    for (double& c : counts.row(f)) {
      c += options.emission_pseudocount;
      total += c;
    }
    for (std::size_t k = 0; k < m; ++k) emission(f, k) = counts(f, k) / total;
  }

  std::vector<double> initial(n, 1.0 / static_cast<double>(n));
  if (priors) {
    if (priors->size() != n) {
      throw DomainError("expected " + std::to_string(n) + " fault priors, got " +
                        std::to_string(priors->size()));
    }
    double sum = 0.0;
    for (double p : *priors) {
      if (!(p >= 0.0)) throw DomainError("fault priors must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DomainError("fault priors must sum to 1");
    for (std::size_t f = 0; f < n; ++f) initial[f] = (*priors)[f] / sum;
  }

  FitConfig fit_config = config;
  if (options.hard_mask) fit_config.update_transition = false;

  Hmm seed_model(initial_transition(n, options), std::move(emission), std::move(initial));
  FitResult fitted = fit(seed_model, observations, fit_config);

  TrainingResult result{
      DiagnoserModel{std::move(fitted.model), std::move(fault_names), codebook, fit_config, options},
      std::move(fitted.log_likelihood_trace), fitted.iterations, fitted.converged, {}};
  const Hmm& hmm = result.model.hmm;
  for (std::size_t f = 0; f < n; ++f) {
    if (hmm.transition(f, f) < 0.5) {
      result.warnings.push_back("self-transition of fault " + std::to_string(f) + " (" +
                                result.model.fault_names[f] + ") dropped to " +
                                format_double(hmm.transition(f, f)));
    }
  }
  return result;
}

StateIndex modal_state(std::span<const StateIndex> states, std::size_t n_states) {
  if (states.empty()) throw DomainError("cannot take the mode of an empty path");
  std::vector<std::size_t> counts(n_states, 0);
  for (StateIndex s : states) {
    if (s >= n_states) throw DomainError("state index out of range");
    ++counts[s];
  }
  return static_cast<StateIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

// Runner-up state of the path: most frequent among the others, if any occur.
std::optional<StateIndex> runner_up_state(std::span<const StateIndex> states, std::size_t n_states,
                                          StateIndex primary) {
  std::vector<std::size_t> counts(n_states, 0);
  for (StateIndex s : states) ++counts[s];
  counts[primary] = 0;
  const auto best = std::max_element(counts.begin(), counts.end());
  if (*best == 0) return std::nullopt;
  return static_cast<StateIndex>(best - counts.begin());
}

}  // namespace

Diagnosis diagnose(const DiagnoserModel& model, std::span<const Symbol> symbols) {
  if (symbols.empty()) throw DomainError("cannot diagnose an empty alarm sequence");
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    if (symbols[t] >= model.codebook.size()) {
      throw UnknownSymbolError("symbol " + std::to_string(symbols[t]) + " at position " +
                               std::to_string(t) + " is not in the codebook");
    }
  }
  const std::size_t n = model.n_faults();
  auto paths = k_best_paths(model.hmm, symbols, 2);

  Diagnosis d;
  d.path = std::move(paths.front());
  d.primary_fault = modal_state(d.path.states, n);
  if (paths.size() > 1) {
    d.second_path = std::move(paths[1]);
    const StateIndex second_mode = modal_state(d.second_path->states, n);
    if (second_mode != d.primary_fault) {
      d.secondary_fault = second_mode;
    } else {
      d.secondary_fault = runner_up_state(d.path.states, n, d.primary_fault);
    }
  } else {
    d.secondary_fault = runner_up_state(d.path.states, n, d.primary_fault);
  }
  return d;
}

AccuracyCurve evaluate_prefix_accuracy(const DiagnoserModel& model,
                                       std::span<const LabeledSequence> test,
                                       std::size_t max_length) {
  if (max_length < 1) throw DomainError("maximum prefix length must be at least 1");
  if (test.empty()) throw DomainError("test set is empty");
  const std::size_t n = model.n_faults();
  for (const auto& s : test) {
    if (s.sequence.empty()) throw DomainError("test sequences must be non-empty");
    if (s.fault >= n) {
      throw DomainError("test label " + std::to_string(s.fault) + " is not a model fault");
    }
  }

  AccuracyCurve curve;
  curve.points.resize(max_length);
  curve.confusion.assign(max_length, CountMatrix(n, n, 0));
  for (const auto& s : test) {
    const auto& symbols = s.sequence.symbols;
    FaultIndex last = 0;
    for (std::size_t p = 1; p <= max_length; ++p) {
      if (p <= symbols.size()) {
        last = diagnose(model, std::span<const Symbol>(symbols).first(p)).primary_fault;
      }
      auto& point = curve.points[p - 1];
      ++point.n_total;
      if (last == s.fault) ++point.n_correct;
      ++curve.confusion[p - 1](s.fault, last);
    }
  }
  for (std::size_t p = 1; p <= max_length; ++p) {
    auto& point = curve.points[p - 1];
    point.prefix_length = p;
    point.accuracy = static_cast<double>(point.n_correct) / static_cast<double>(point.n_total);
  }
  return curve;
}

json diagnoser_to_json(const DiagnoserModel& model) {
  json doc = hmm_to_json(model.hmm);
  json faults = json::array();
  for (std::size_t f = 0; f < model.fault_names.size(); ++f) {
    faults.push_back({{"index", f}, {"name", model.fault_names[f]}});
  }
  doc["faults"] = std::move(faults);
  doc["codebook"] = {{"n_measurements", model.codebook.n_measurements()},
                     {"meas_ids", model.codebook.meas_ids()}};
  const auto& c = model.fit_config;
  const auto& o = model.options;
  doc["training"] = {{"max_iterations", c.max_iterations},
                     {"rel_tol", c.rel_tol},
                     {"emission_floor", c.emission_floor},
                     {"update_transition", c.update_transition},
                     {"seed", c.seed},
                     {"self_transition", o.self_transition},
                     {"emission_pseudocount", o.emission_pseudocount},
                     {"hard_mask", o.hard_mask},
                     {"mask_off_diagonal", o.mask_off_diagonal}};
  return doc;
}

DiagnoserModel diagnoser_from_json(const json& doc) {
  Hmm hmm = hmm_from_json(doc);
  try {
    std::vector<std::string> names;
    const json& faults = doc.at("faults");
    for (std::size_t f = 0; f < faults.size(); ++f) {
      if (faults[f].at("index").get<std::size_t>() != f) {
        throw SchemaError("fault indices must be dense and in order");
      }
      names.push_back(faults[f].at("name").get<std::string>());
    }
    if (names.size() != hmm.n_states()) {
      throw SchemaError("model lists " + std::to_string(names.size()) + " faults but has " +
                        std::to_string(hmm.n_states()) + " states");
    }
    const json& cb = doc.at("codebook");
    AlarmSymbolCodebook codebook(cb.at("meas_ids").get<std::vector<std::string>>());
    if (codebook.n_measurements() != cb.at("n_measurements").get<std::size_t>() ||
        codebook.size() != hmm.n_symbols()) {
      throw SchemaError("codebook size does not match the model's symbol count");
    }
    FitConfig config;
    DiagnoserOptions options;
    if (doc.contains("training")) {
      const json& t = doc.at("training");
      config.max_iterations = t.value("max_iterations", config.max_iterations);
      config.rel_tol = t.value("rel_tol", config.rel_tol);
      config.emission_floor = t.value("emission_floor", config.emission_floor);
      config.update_transition = t.value("update_transition", config.update_transition);
      config.seed = t.value("seed", config.seed);
      options.self_transition = t.value("self_transition", options.self_transition);
      options.emission_pseudocount = t.value("emission_pseudocount", options.emission_pseudocount);
      options.hard_mask = t.value("hard_mask", options.hard_mask);
      options.mask_off_diagonal = t.value("mask_off_diagonal", options.mask_off_diagonal);
    }
    return DiagnoserModel{std::move(hmm), std::move(names), std::move(codebook), config, options};
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed diagnoser model: ") + e.what());
  } catch (const DomainError& e) {
    throw SchemaError(std::string("malformed diagnoser model: ") + e.what());
  }
}

json diagnosis_to_json(const Diagnosis& d, const DiagnoserModel& model) {
  auto fault = [&](FaultIndex f) { return json{{"index", f}, {"name", model.fault_names[f]}}; };
  json out;
  out["primary_fault"] = fault(d.primary_fault);
  out["secondary_fault"] = d.secondary_fault ? fault(*d.secondary_fault) : json(nullptr);
  out["path"] = d.path.states;
  out["path_log_prob"] = d.path.log_prob;
  if (d.second_path) {
    out["second_path"] = d.second_path->states;
    out["second_path_log_prob"] = d.second_path->log_prob;
  } else {
    out["second_path"] = nullptr;
    out["second_path_log_prob"] = nullptr;
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_accuracy_csv(std::ostream& out, const AccuracyCurve& curve) {
  out << "prefix_length,accuracy,n_correct,n_total\n";
  for (const auto& p : curve.points) {
    out << p.prefix_length << ',' << format_double(p.accuracy) << ',' << p.n_correct << ','
        << p.n_total << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const CountMatrix& confusion) {
  out << "true_fault,diagnosed_fault,count\n";
  for (std::size_t i = 0; i < confusion.rows(); ++i) {
    for (std::size_t j = 0; j < confusion.cols(); ++j) {
      out << i << ',' << j << ',' << confusion(i, j) << '\n';
    }
  }
}

}  // namespace alarmhmm
