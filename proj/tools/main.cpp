// alarmhmm: simulate -> extract -> train -> diagnose -> evaluate -> baseline -> report
#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <alarmhmm/alarm.hpp>
#include <alarmhmm/baseline.hpp>
#include <alarmhmm/diagnoser.hpp>
#include <alarmhmm/errors.hpp>
#include <alarmhmm/model_io.hpp>
#include <alarmhmm/plant_sim.hpp>
#include <alarmhmm/sequence_io.hpp>

namespace fs = std::filesystem;
using namespace alarmhmm;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kInvalidModel = 4,
  kSchema = 5,
  kUnknownSymbol = 6,
  kDomain = 7,
  kInference = 8,
};

struct Options {
  std::uint64_t seed = 1;
  double persist_t = 300.0;
  double kappa = 3.0;
  std::size_t max_iters = 500;
  double rel_tol = 1e-6;
  std::size_t clusters = 0;  // 0: one per fault seen in training
  std::size_t lmax = 0;      // 0: longest test sequence
  std::vector<std::string> in;
  std::string out;

  std::string graph;
  std::string counts;
  std::string train;
  std::string model;
  std::string evaluate_dir;
  std::string baseline_dir;
  std::vector<std::string> normal;
  std::string symbols;
  std::optional<std::size_t> fault;
  std::vector<double> priors;
  double swap_prob = NoiseConfig{}.swap_prob;
  double drop_prob = NoiseConfig{}.drop_prob;
  double magnitude = 1.0;
  bool traces = false;
  bool hard_mask = false;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw CLI::RequiredError(what);
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

void require_out(const std::string& path) {
  if (path.empty()) throw CLI::RequiredError("--out");
}

std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

fs::path out_dir(const std::string& path) {
  require_out(path);
  fs::create_directories(path);
  return path;
}

PropagationGraph load_graph(const std::string& path) {
  if (path.empty()) return default_graph();
  require_file(path, "--graph");
  try {
    return graph_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

// {"train": [n per fault], "test": [n per fault]}
std::map<FaultIndex, SplitCounts> load_counts(const std::string& path, std::size_t n_faults) {
  if (path.empty()) return reference_split_counts();
  require_file(path, "--counts");
  const auto doc = read_json_file(path);
  std::map<FaultIndex, SplitCounts> counts;
  try {
    const auto train = doc.at("train").get<std::vector<std::size_t>>();
    const auto test = doc.at("test").get<std::vector<std::size_t>>();
    if (train.size() != n_faults || test.size() != n_faults) {
      throw SchemaError(path + ": counts need one entry per fault (" + std::to_string(n_faults) +
                        ")");
    }
    for (FaultIndex f = 0; f < n_faults; ++f) counts[f] = {train[f], test[f]};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return counts;
}

std::vector<SequenceRecord> load_sequences(const std::string& path, const char* what) {
  require_file(path, what);
  return read_sequences_jsonl(fs::path(path));
}

DiagnoserModel load_model(const std::string& path) {
  require_file(path, "--model");
  return diagnoser_from_json(read_json_file(path));
}

int run_simulate(const Options& o) {
  const auto graph = load_graph(o.graph);
  const fs::path dir = out_dir(o.out);
  if (o.traces) {
    if (!o.fault) throw CLI::RequiredError("--fault");
    ScenarioSpec spec{*o.fault, o.magnitude, o.seed, 0.0, 0.0};
    const auto sim = simulate_traces(graph, spec);
    write_text_file(dir / "normal.csv", render([&](auto& os) { write_trace_csv(os, sim.normal); }));
    write_text_file(dir / "faulty.csv", render([&](auto& os) { write_trace_csv(os, sim.faulty); }));
    SequenceRecord schedule{sim.sequence, {{"magnitude", o.magnitude}, {"seed", o.seed}}};
    write_sequences_jsonl(dir / "schedule.jsonl", {schedule});
    return kOk;
  }
  const auto counts = load_counts(o.counts, graph.n_faults());
  const auto sets = generate_scenario_set(graph, counts, MagnitudeRange{}, o.seed,
                                          NoiseConfig{o.swap_prob, o.drop_prob});
  write_sequences_jsonl(dir / "train.jsonl", to_records(sets.train, "train"));
  write_sequences_jsonl(dir / "test.jsonl", to_records(sets.test, "test"));
  return kOk;
}

int run_extract(const Options& o) {
  if (o.in.empty()) throw CLI::RequiredError("--in");
  if (o.normal.empty()) throw CLI::RequiredError("--normal");
  for (const auto& p : o.in) require_file(p, "--in");
  for (const auto& p : o.normal) require_file(p, "--normal");
  require_out(o.out);

  std::vector<MeasurementTrace> normal;
  for (const auto& p : o.normal) normal.push_back(read_trace_csv(fs::path(p)));
  const auto limits = fit_limits(normal, o.kappa);
  const AlarmSymbolCodebook codebook(normal.front().meas_ids);

  std::vector<SequenceRecord> records;
  for (const auto& p : o.in) {
    const auto trace = read_trace_csv(fs::path(p));
    if (trace.meas_ids != normal.front().meas_ids) {
      throw SchemaError(p + ": measurement columns differ from the normal traces");
    }
    SequenceRecord rec;
    rec.sequence = extract_sequence(trace, limits, codebook, o.persist_t);
    if (o.fault) rec.sequence.fault = *o.fault;
    rec.meta = {{"source", fs::path(p).filename().string()},
                {"persist_t", o.persist_t},
                {"kappa", o.kappa}};
    records.push_back(std::move(rec));
  }
  write_sequences_jsonl(fs::path(o.out), records);
  return kOk;
}

int run_train(const Options& o) {
  if (o.in.size() != 1) throw CLI::ValidationError("--in", "train takes exactly one JSONL file");
  const auto records = load_sequences(o.in.front(), "--in");
  require_out(o.out);

  std::vector<std::string> names;
  std::size_t n_meas = kTeMeasurements;
  if (!o.graph.empty()) {
    const auto graph = load_graph(o.graph);
    for (const auto& f : graph.faults) names.push_back(f.name);
    n_meas = graph.n_measurements;
  }
  FitConfig config;
  config.max_iterations = o.max_iters;
  config.rel_tol = o.rel_tol;
  config.seed = o.seed;
  DiagnoserOptions options;
  options.hard_mask = o.hard_mask;
  std::optional<std::vector<double>> priors;
  if (!o.priors.empty()) priors = o.priors;

  const auto training = labeled_sequences(records);
  auto result = train_diagnoser(training, AlarmSymbolCodebook(n_meas), priors, config, options,
                                names);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_text_file(o.out, dump_json(diagnoser_to_json(result.model)));
  return kOk;
}

std::vector<Symbol> parse_symbols(const std::string& text) {
  std::vector<Symbol> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<Symbol>(v));
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--symbols", "not a non-negative integer: '" + tok + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--symbols", "empty sequence");
  return out;
}

int run_diagnose(const Options& o) {
  const auto model = load_model(o.model);
  std::vector<std::vector<Symbol>> inputs;
  if (!o.symbols.empty()) {
    inputs.push_back(parse_symbols(o.symbols));
  } else {
    if (o.in.size() != 1) throw CLI::RequiredError("--in or --symbols");
    for (auto& r : load_sequences(o.in.front(), "--in")) inputs.push_back(r.sequence.symbols);
  }
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["diagnoses"] = nlohmann::json::array();
  for (const auto& symbols : inputs) {
    doc["diagnoses"].push_back(diagnosis_to_json(diagnose(model, symbols), model));
  }
  const std::string text = dump_json(doc);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(o.out, text);
  }
  return kOk;
}

int run_evaluate(const Options& o) {
  const auto model = load_model(o.model);
  if (o.in.size() != 1) throw CLI::RequiredError("--in");
  const auto test = labeled_sequences(load_sequences(o.in.front(), "--in"));
  const fs::path dir = out_dir(o.out);

  std::size_t lmax = o.lmax;
  if (lmax == 0) {
    for (const auto& s : test) lmax = std::max(lmax, s.sequence.size());
  }
  const auto curve = evaluate_prefix_accuracy(model, test, lmax);
  write_text_file(dir / "accuracy.csv", render([&](auto& os) { write_accuracy_csv(os, curve); }));
  write_text_file(dir / "confusion.csv",
                  render([&](auto& os) { write_confusion_csv(os, curve.confusion.back()); }));
  write_text_file(dir / "confusion_by_prefix.csv", render([&](std::ostream& os) {
                    os << "prefix_length,true_fault,diagnosed_fault,count\n";
                    for (std::size_t p = 0; p < curve.confusion.size(); ++p) {
                      const auto& c = curve.confusion[p];
                      for (std::size_t i = 0; i < c.rows(); ++i) {
                        for (std::size_t j = 0; j < c.cols(); ++j) {
                          os << p + 1 << ',' << i << ',' << j << ',' << c(i, j) << '\n';
                        }
                      }
                    }
                  }));
  return kOk;
}

int run_baseline(const Options& o) {
  const auto training = labeled_sequences(load_sequences(o.train, "--train"));
  if (o.in.size() != 1) throw CLI::RequiredError("--in");
  const auto test = labeled_sequences(load_sequences(o.in.front(), "--in"));
  const fs::path dir = out_dir(o.out);

  std::size_t n_meas = kTeMeasurements;
  if (!o.graph.empty()) n_meas = load_graph(o.graph).n_measurements;
  std::size_t clusters = o.clusters;
  if (clusters == 0) {
    std::vector<bool> seen;
    for (const auto& s : training) {
      if (s.fault >= seen.size()) seen.resize(s.fault + 1, false);
      seen[s.fault] = true;
    }
    clusters = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
  }
  std::vector<AlarmSequence> test_seqs;
  for (const auto& s : test) test_seqs.push_back(s.sequence);
  const auto result = cluster_and_classify(training, test_seqs, clusters, 2 * n_meas);

  write_text_file(dir / "predictions.csv", render([&](std::ostream& os) {
                    os << "sequence_id,true_fault,predicted_fault\n";
                    for (std::size_t i = 0; i < test.size(); ++i) {
                      os << i << ',' << test[i].fault << ',' << result.predictions[i] << '\n';
                    }
                  }));
  write_text_file(dir / "dendrogram.csv",
                  render([&](auto& os) { write_dendrogram_csv(os, result.dendrogram); }));
  return kOk;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw SchemaError(path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int run_report(const Options& o) {
  if (o.evaluate_dir.empty()) throw CLI::RequiredError("--evaluate");
  if (o.baseline_dir.empty()) throw CLI::RequiredError("--baseline");
  require_out(o.out);
  const auto acc = read_csv(fs::path(o.evaluate_dir) / "accuracy.csv",
                            "prefix_length,accuracy,n_correct,n_total");
  const auto pred = read_csv(fs::path(o.baseline_dir) / "predictions.csv",
                             "sequence_id,true_fault,predicted_fault");
  if (acc.empty()) throw SchemaError("accuracy.csv has no rows");

  std::size_t base_correct = 0;
  for (const auto& r : pred) {
    if (r.size() != 3) throw SchemaError("predictions.csv: expected 3 columns");
    if (r[1] == r[2]) ++base_correct;
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };

  std::ostringstream os;
  os << "method,prefix_length,accuracy,n_correct,n_total\n";
  for (const auto& r : acc) {
    if (r.size() != 4) throw SchemaError("accuracy.csv: expected 4 columns");
    os << "hmm," << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  }
  os << "baseline,full," << format_double(ratio(base_correct, pred.size())) << ','
     << base_correct << ',' << pred.size() << '\n';
  write_text_file(o.out, os.str());
  return kOk;
}

int fail(int code, const std::string& kind, const std::string& msg) {
  std::string one_line = msg;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::cerr << "error: " << kind << ": " << one_line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alarm-sequence fault diagnosis with discrete HMMs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Output file or directory");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate train/test alarm sequences");
  add_common(simulate);
  simulate->add_option("--graph", o.graph, "Propagation graph JSON (default: bundled graph)");
  simulate->add_option("--counts", o.counts, "Per-fault split counts JSON");
  simulate->add_option("--swap-prob", o.swap_prob, "Adjacent swap probability")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--drop-prob", o.drop_prob, "Symbol drop probability")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_flag("--traces", o.traces, "Write normal/faulty measurement CSVs instead");
  simulate->add_option("--fault", o.fault, "Fault for --traces");
  simulate->add_option("--magnitude", o.magnitude, "Fault magnitude for --traces");

  auto* extract = app.add_subcommand("extract", "Measurement CSVs to alarm sequences");
  add_common(extract);
  extract->add_option("--in", o.in, "Faulty trace CSV(s)");
  extract->add_option("--normal", o.normal, "Normal-operation trace CSV(s)");
  extract->add_option("--persist-t", o.persist_t, "Persistence time in seconds")
      ->check(CLI::NonNegativeNumber);
  extract->add_option("--kappa", o.kappa, "Limit width in standard deviations")
      ->check(CLI::NonNegativeNumber);
  extract->add_option("--fault", o.fault, "Label written on every sequence");

  auto* train = app.add_subcommand("train", "Fit the diagnoser HMM");
  add_common(train);
  train->add_option("--in", o.in, "Training JSONL");
  train->add_option("--graph", o.graph, "Graph JSON for fault names and measurement count");
  train->add_option("--max-iters", o.max_iters, "Baum-Welch iteration cap");
  train->add_option("--rel-tol", o.rel_tol, "Relative log-likelihood tolerance")
      ->check(CLI::PositiveNumber);
  train->add_option("--priors", o.priors, "Initial fault probabilities")->delimiter(',');
  train->add_flag("--hard-mask", o.hard_mask, "Hold transitions at a fixed diagonal mask");

  auto* diag = app.add_subcommand("diagnose", "Diagnose alarm sequences");
  add_common(diag);
  diag->add_option("--model", o.model, "Model JSON");
  diag->add_option("--in", o.in, "Sequences JSONL");
  diag->add_option("--symbols", o.symbols, "Comma-separated symbol indices");

  auto* eval = app.add_subcommand("evaluate", "Prefix-length accuracy and confusion CSVs");
  add_common(eval);
  eval->add_option("--model", o.model, "Model JSON");
  eval->add_option("--in", o.in, "Test JSONL");
  eval->add_option("--lmax", o.lmax, "Longest prefix (default: longest test sequence)");

  auto* base = app.add_subcommand("baseline", "Feature-matrix clustering classifier");
  add_common(base);
  base->add_option("--train", o.train, "Training JSONL");
  base->add_option("--in", o.in, "Test JSONL");
  base->add_option("--graph", o.graph, "Graph JSON for the measurement count");
  base->add_option("--clusters", o.clusters, "Number of clusters (default: faults in training)");

  auto* report = app.add_subcommand("report", "Merge evaluate and baseline outputs");
  add_common(report);
  report->add_option("--evaluate", o.evaluate_dir, "Directory written by evaluate");
  report->add_option("--baseline", o.baseline_dir, "Directory written by baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*simulate) return run_simulate(o);
    if (*extract) return run_extract(o);
    if (*train) return run_train(o);
    if (*diag) return run_diagnose(o);
    if (*eval) return run_evaluate(o);
    if (*base) return run_baseline(o);
    if (*report) return run_report(o);
  } catch (const CLI::Error& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kIo, "io", e.what());
  } catch (const InvalidModelError& e) {
    return fail(kInvalidModel, "invalid_model", e.what());
  } catch (const SchemaError& e) {
    return fail(kSchema, "schema", e.what());
  } catch (const UnknownSymbolError& e) {
    return fail(kUnknownSymbol, "unknown_symbol", e.what());
  } catch (const DomainError& e) {
    return fail(kDomain, "domain", e.what());
  } catch (const InferenceError& e) {
    return fail(kInference, "inference", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "internal", e.what());
  }
  return kFailure;
}
