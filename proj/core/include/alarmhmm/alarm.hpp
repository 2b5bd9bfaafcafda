#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alarmhmm/hmm.hpp"
#include "alarmhmm/matrix.hpp"

namespace alarmhmm {

using FaultIndex = std::size_t;

// Uniformly sampled multivariate measurements; row t is the reading at
// t * sample_period seconds from the start of the trace.
struct MeasurementTrace {
  double sample_period = 1.0;
  Matrix values;  // n_samples x n_measurements
  std::vector<std::string> meas_ids;

  std::size_t n_samples() const noexcept { return values.rows(); }
  std::size_t n_measurements() const noexcept { return values.cols(); }

  // Throws DomainError on a non-positive period, no samples, an id count that
  // does not match the columns, or a non-finite reading.
  void validate() const;
};

// CSV with a `time,<meas_id>...` header; the period is taken from the time
// column, which must be uniformly spaced.
MeasurementTrace read_trace_csv(std::istream& in);
MeasurementTrace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const MeasurementTrace& trace);

enum class AlarmDirection { High, Low };

struct AlarmPoint {
  std::size_t measurement;
  AlarmDirection direction;

  friend bool operator==(const AlarmPoint&, const AlarmPoint&) = default;
};

// Bijection between (measurement, direction) and symbol index. High alarms of
// measurement m map to m, low alarms to m + n_measurements.
class AlarmSymbolCodebook {
 public:
  explicit AlarmSymbolCodebook(std::size_t n_measurements);
  explicit AlarmSymbolCodebook(std::vector<std::string> meas_ids);

  std::size_t n_measurements() const noexcept { return meas_ids_.size(); }
  std::size_t size() const noexcept { return 2 * meas_ids_.size(); }
  const std::vector<std::string>& meas_ids() const noexcept { return meas_ids_; }

  Symbol encode(std::size_t measurement, AlarmDirection direction) const;
  AlarmPoint decode(Symbol symbol) const;
  // e.g. "XMEAS7.high"
  std::string label(Symbol symbol) const;

  friend bool operator==(const AlarmSymbolCodebook&, const AlarmSymbolCodebook&) = default;

 private:
  std::vector<std::string> meas_ids_;
};

struct AlarmLimits {
  std::vector<double> mean;
  std::vector<double> stddev;
  double kappa = 3.0;

  std::size_t n_measurements() const noexcept { return mean.size(); }
  double high(std::size_t m) const { return mean.at(m) + kappa * stddev.at(m); }
  double low(std::size_t m) const { return mean.at(m) - kappa * stddev.at(m); }
};

// Pooled per-measurement sample mean and standard deviation over all traces.
AlarmLimits fit_limits(std::span<const MeasurementTrace> normal_traces, double kappa = 3.0);

// Ordered alarm activations of one scenario. Symbols are pairwise distinct and
// activation times non-decreasing; equal times are ordered by symbol.
struct AlarmSequence {
  std::vector<Symbol> symbols;
  std::vector<double> activation_times;
  std::optional<FaultIndex> fault;

  std::size_t size() const noexcept { return symbols.size(); }
  bool empty() const noexcept { return symbols.empty(); }

  // Throws DomainError when the invariants above do not hold.
  void validate() const;

  friend bool operator==(const AlarmSequence&, const AlarmSequence&) = default;
};

// Emits each (measurement, direction) at most once: at the start of its first
// excursion strictly beyond the limit that lasts at least persist_seconds.
// An excursion of n samples lasts n * sample_period seconds.
AlarmSequence extract_sequence(const MeasurementTrace& trace, const AlarmLimits& limits,
                               const AlarmSymbolCodebook& codebook, double persist_seconds);

}  // namespace alarmhmm
