#include "alarmhmm/alarm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <tuple>

#include "alarmhmm/errors.hpp"

namespace alarmhmm {

void MeasurementTrace::validate() const {
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw DomainError("sample period must be positive");
  }
  if (n_samples() == 0) throw DomainError("trace has no samples");
  if (meas_ids.size() != n_measurements()) {
    throw DomainError("trace has " + std::to_string(n_measurements()) + " columns but " +
                      std::to_string(meas_ids.size()) + " measurement ids");
  }
  for (std::size_t t = 0; t < n_samples(); ++t) {
    for (std::size_t m = 0; m < n_measurements(); ++m) {
      if (!std::isfinite(values(t, m))) {
        throw DomainError("non-finite reading of " + meas_ids[m] + " at sample " +
                          std::to_string(t));
      }
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw SchemaError("line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
  return value;
}

}  // namespace

MeasurementTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("trace CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.front() != "time") {
    throw SchemaError("trace CSV header must be 'time,<meas_id>...'");
  }
  MeasurementTrace trace;
  trace.meas_ids.assign(header.begin() + 1, header.end());
  const std::size_t n_meas = trace.meas_ids.size();

  std::vector<double> times;
  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_meas + 1) {
      throw SchemaError("line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(n_meas + 1));
    }
    times.push_back(parse_number(fields[0], line_no));
    for (std::size_t m = 0; m < n_meas; ++m) flat.push_back(parse_number(fields[m + 1], line_no));
  }
  if (times.empty()) throw SchemaError("trace CSV has no samples");

  trace.values = Matrix(times.size(), n_meas);
  std::copy(flat.begin(), flat.end(), trace.values.data().begin());
  if (times.size() == 1) {
    trace.sample_period = 1.0;
  } else {
    trace.sample_period = times[1] - times[0];
    for (std::size_t t = 1; t < times.size(); ++t) {
      const double step = times[t] - times[t - 1];
      if (std::abs(step - trace.sample_period) > 1e-6 * std::abs(trace.sample_period)) {
        throw SchemaError("trace time column is not uniformly spaced at sample " +
                          std::to_string(t));
      }
    }
  }
  trace.validate();
  return trace;
}

MeasurementTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_trace_csv(in);
}

void write_trace_csv(std::ostream& out, const MeasurementTrace& trace) {
  out << "time";
  for (const auto& id : trace.meas_ids) out << ',' << id;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t t = 0; t < trace.n_samples(); ++t) {
    out << static_cast<double>(t) * trace.sample_period;
    for (double v : trace.values.row(t)) out << ',' << v;
    out << '\n';
  }
}

AlarmSymbolCodebook::AlarmSymbolCodebook(std::size_t n_measurements) {
  if (n_measurements == 0) throw DomainError("codebook needs at least one measurement");
  meas_ids_.reserve(n_measurements);
  for (std::size_t m = 0; m < n_measurements; ++m) {
    meas_ids_.push_back("XMEAS" + std::to_string(m + 1));
  }
}

AlarmSymbolCodebook::AlarmSymbolCodebook(std::vector<std::string> meas_ids)
    : meas_ids_(std::move(meas_ids)) {
  if (meas_ids_.empty()) throw DomainError("codebook needs at least one measurement");
}

Symbol AlarmSymbolCodebook::encode(std::size_t measurement, AlarmDirection direction) const {
  if (measurement >= n_measurements()) {
    throw DomainError("measurement index " + std::to_string(measurement) + " out of range");
  }
  return direction == AlarmDirection::High ? measurement : measurement + n_measurements();
}

AlarmPoint AlarmSymbolCodebook::decode(Symbol symbol) const {
  if (symbol >= size()) {
    throw UnknownSymbolError("symbol " + std::to_string(symbol) + " is not in the codebook of " +
                             std::to_string(size()) + " symbols");
  }
  if (symbol < n_measurements()) return {symbol, AlarmDirection::High};
  return {symbol - n_measurements(), AlarmDirection::Low};
}

std::string AlarmSymbolCodebook::label(Symbol symbol) const {
  const AlarmPoint p = decode(symbol);
  return meas_ids_[p.measurement] + (p.direction == AlarmDirection::High ? ".high" : ".low");
}

AlarmLimits fit_limits(std::span<const MeasurementTrace> normal_traces, double kappa) {
  if (normal_traces.empty()) throw DomainError("fit_limits needs at least one trace");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be non-negative");
  const std::size_t n_meas = normal_traces.front().n_measurements();
  std::size_t n = 0;
  for (const auto& trace : normal_traces) {
    trace.validate();
    if (trace.n_measurements() != n_meas) {
      throw DomainError("normal traces disagree on the number of measurements");
    }
    n += trace.n_samples();
  }
  if (n < 2) throw DomainError("fit_limits needs at least two pooled samples");

  AlarmLimits limits;
  limits.kappa = kappa;
  limits.mean.assign(n_meas, 0.0);
  limits.stddev.assign(n_meas, 0.0);
  for (std::size_t m = 0; m < n_meas; ++m) {
    double sum = 0.0;
    for (const auto& trace : normal_traces) {
      for (std::size_t t = 0; t < trace.n_samples(); ++t) sum += trace.values(t, m);
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& trace : normal_traces) {
      for (std::size_t t = 0; t < trace.n_samples(); ++t) {
        const double d = trace.values(t, m) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw DomainError("measurement " + normal_traces.front().meas_ids[m] +
                        " has zero variance under normal operation");
    }
    limits.mean[m] = mean;
    limits.stddev[m] = sd;
  }
  return limits;
}

void AlarmSequence::validate() const {
  if (activation_times.size() != symbols.size()) {
    throw DomainError("alarm sequence has " + std::to_string(symbols.size()) + " symbols but " +
                      std::to_string(activation_times.size()) + " activation times");
  }
  std::vector<Symbol> sorted(symbols);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("alarm sequence repeats a symbol");
  }
  for (std::size_t i = 1; i < symbols.size(); ++i) {
    const double prev = activation_times[i - 1];
    const double cur = activation_times[i];
    if (cur < prev || (cur == prev && symbols[i] < symbols[i - 1])) {
      throw DomainError("alarm sequence is not ordered by activation time at position " +
                        std::to_string(i));
    }
  }
}

AlarmSequence extract_sequence(const MeasurementTrace& trace, const AlarmLimits& limits,
                               const AlarmSymbolCodebook& codebook, double persist_seconds) {
  trace.validate();
  if (!(persist_seconds >= 0.0)) throw DomainError("persistence time must be non-negative");
  if (trace.n_measurements() != codebook.n_measurements() ||
      limits.n_measurements() != trace.n_measurements() ||
      limits.stddev.size() != trace.n_measurements()) {
    throw DomainError("trace, limits and codebook disagree on the number of measurements");
  }

  // Tolerates rounding in n * period for periods that are not exact binary fractions.
  const double required = persist_seconds * (1.0 - 1e-12);
  std::vector<std::tuple<double, Symbol>> events;
  for (std::size_t m = 0; m < trace.n_measurements(); ++m) {
    for (const AlarmDirection dir : {AlarmDirection::High, AlarmDirection::Low}) {
      const double hi = limits.high(m);
      const double lo = limits.low(m);
      auto beyond = [&](double v) { return dir == AlarmDirection::High ? v > hi : v < lo; };
      std::size_t run = 0;
      for (std::size_t t = 0; t < trace.n_samples(); ++t) {
        run = beyond(trace.values(t, m)) ? run + 1 : 0;
        if (run > 0 && static_cast<double>(run) * trace.sample_period >= required) {
          const std::size_t start = t + 1 - run;
          events.emplace_back(static_cast<double>(start) * trace.sample_period,
                              codebook.encode(m, dir));
          break;
        }
      }
    }
  }
  std::sort(events.begin(), events.end());

  AlarmSequence out;
  out.symbols.reserve(events.size());
  out.activation_times.reserve(events.size());
  for (const auto& [time, symbol] : events) {
    out.symbols.push_back(symbol);
    out.activation_times.push_back(time);
  }
  return out;
}

}  // namespace alarmhmm
