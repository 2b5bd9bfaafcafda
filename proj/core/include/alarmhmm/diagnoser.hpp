#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alarmhmm/alarm.hpp"
#include "alarmhmm/hmm.hpp"
#include "alarmhmm/matrix.hpp"
#include "alarmhmm/sequence_io.hpp"

namespace alarmhmm {

struct LabeledSequence {
  AlarmSequence sequence;
  FaultIndex fault = 0;
};

// Keeps the records that carry a fault label; throws SchemaError if
// require_label is set and one does not.
std::vector<LabeledSequence> labeled_sequences(const std::vector<SequenceRecord>& records,
                                               bool require_label = true);

struct DiagnoserOptions {
  // Initial self-transition mass; the rest is spread uniformly.
  double self_transition = 0.9;
  // Added to every per-fault symbol count when seeding the emission rows.
  double emission_pseudocount = 0.5;
  // Hold the transition matrix fixed at diagonal 1 - (N-1)c, off-diagonal c.
  bool hard_mask = false;
  double mask_off_diagonal = 1e-3;
};

// Faults are hidden states, alarm symbols are observations. State i is fault i.
struct DiagnoserModel {
  Hmm hmm;
  std::vector<std::string> fault_names;
  AlarmSymbolCodebook codebook;
  FitConfig fit_config;
  DiagnoserOptions options;

  std::size_t n_faults() const noexcept { return hmm.n_states(); }
};

struct TrainingResult {
  DiagnoserModel model;
  std::vector<double> log_likelihood_trace;
  std::size_t iterations = 0;
  bool converged = false;
  // e.g. a fault whose trained self-transition fell below 0.5
  std::vector<std::string> warnings;
};

// Seeds the model from labelled statistics (diagonal-dominant transitions,
// per-fault symbol frequencies, priors or uniform pi), then runs unsupervised
// Baum-Welch on all training sequences pooled.
//
// fault_names, when given, fixes the number of faults; otherwise it is one
// more than the largest label. Every fault needs at least one sequence.
TrainingResult train_diagnoser(std::span<const LabeledSequence> training,
                               const AlarmSymbolCodebook& codebook,
                               const std::optional<std::vector<double>>& priors,
                               const FitConfig& config, const DiagnoserOptions& options = {},
                               std::vector<std::string> fault_names = {});

struct Diagnosis {
  FaultIndex primary_fault = 0;
  std::optional<FaultIndex> secondary_fault;
  StatePath path;
  std::optional<StatePath> second_path;
};

// Most frequent state, lowest index on ties.
StateIndex modal_state(std::span<const StateIndex> states, std::size_t n_states);

Diagnosis diagnose(const DiagnoserModel& model, std::span<const Symbol> symbols);
inline Diagnosis diagnose(const DiagnoserModel& model, const AlarmSequence& sequence) {
  return diagnose(model, sequence.symbols);
}

struct AccuracyPoint {
  std::size_t prefix_length = 0;
  std::size_t n_correct = 0;
  std::size_t n_total = 0;
  double accuracy = 0.0;
};

struct AccuracyCurve {
  std::vector<AccuracyPoint> points;  // prefix lengths 1..L_max
  std::vector<CountMatrix> confusion; // confusion[p-1](true, diagnosed)
};

// A sequence of length l shown a prefix p > l is diagnosed on all l symbols.
AccuracyCurve evaluate_prefix_accuracy(const DiagnoserModel& model,
                                       std::span<const LabeledSequence> test, std::size_t max_length);

nlohmann::json diagnoser_to_json(const DiagnoserModel& model);
DiagnoserModel diagnoser_from_json(const nlohmann::json& doc);

nlohmann::json diagnosis_to_json(const Diagnosis& diagnosis, const DiagnoserModel& model);

// `prefix_length,accuracy,n_correct,n_total`
void write_accuracy_csv(std::ostream& out, const AccuracyCurve& curve);
// `true_fault,diagnosed_fault,count`, every pair in row-major order.
void write_confusion_csv(std::ostream& out, const CountMatrix& confusion);

// Shortest representation that round-trips.
std::string format_double(double value);

}  // namespace alarmhmm
