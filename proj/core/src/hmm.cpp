#include "alarmhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alarmhmm/errors.hpp"
#include "alarmhmm/rng.hpp"

namespace alarmhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_distribution(std::span<const double> p, const std::string& what) {
  if (p.empty()) throw DomainError(what + " is empty");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] >= 0.0) || !std::isfinite(p[k])) {
      throw DomainError(what + " entry " + std::to_string(k) + " is not a probability");
    }
    sum += p[k];
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw DomainError(what + " sums to " + std::to_string(sum) + ", expected 1");
  }
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

Hmm::Hmm(Matrix transition, Matrix emission, std::vector<double> initial)
    : transition_(std::move(transition)),
      emission_(std::move(emission)),
      initial_(std::move(initial)) {
  const std::size_t n = initial_.size();
  if (n == 0) throw DomainError("model needs at least one state");
  if (transition_.rows() != n || transition_.cols() != n) {
    throw DomainError("transition matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (emission_.rows() != n || emission_.cols() == 0) {
    throw DomainError("emission matrix must have " + std::to_string(n) +
                      " rows and at least one column");
  }
  check_distribution(initial_, "initial distribution");
  for (std::size_t i = 0; i < n; ++i) {
    check_distribution(transition_.row(i), "transition row " + std::to_string(i));
    check_distribution(emission_.row(i), "emission row " + std::to_string(i));
  }
}

Hmm Hmm::uniform(std::size_t n_states, std::size_t n_symbols) {
  if (n_states == 0 || n_symbols == 0) throw DomainError("model dimensions must be positive");
  return Hmm(Matrix(n_states, n_states, 1.0 / static_cast<double>(n_states)),
             Matrix(n_states, n_symbols, 1.0 / static_cast<double>(n_symbols)),
             std::vector<double>(n_states, 1.0 / static_cast<double>(n_states)));
}

Hmm random_model(std::size_t n_states, std::size_t n_symbols, std::uint64_t seed) {
  if (n_states == 0 || n_symbols == 0) throw DomainError("model dimensions must be positive");
  Rng rng(seed);
  auto draw_row = [&rng](std::span<double> row) {
    double sum = 0.0;
    for (double& v : row) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (double& v : row) v /= sum;
  };
  Matrix transition(n_states, n_states);
  Matrix emission(n_states, n_symbols);
  std::vector<double> initial(n_states);
  for (std::size_t i = 0; i < n_states; ++i) draw_row(transition.row(i));
  for (std::size_t i = 0; i < n_states; ++i) draw_row(emission.row(i));
  draw_row(initial);
  return Hmm(std::move(transition), std::move(emission), std::move(initial));
}

void check_observations(const Hmm& model, std::span<const Symbol> obs) {
  if (obs.empty()) throw DomainError("observation sequence is empty");
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t] >= model.n_symbols()) {
      throw UnknownSymbolError("symbol " + std::to_string(obs[t]) + " at position " +
                               std::to_string(t) + " is outside the model alphabet of " +
                               std::to_string(model.n_symbols()) + " symbols");
    }
  }
}

namespace {

// Fills scaled_alpha and scale_factors; returns the log-likelihood.
double forward_pass(const Hmm& model, std::span<const Symbol> obs, Matrix& alpha,
                    std::vector<double>& scale) {
  const std::size_t n = model.n_states();
  const std::size_t steps = obs.size();
  alpha = Matrix(steps, n);
  scale.assign(steps, 0.0);

  double ll = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = alpha.row(t);
    for (std::size_t j = 0; j < n; ++j) {
      double prior = 0.0;
      if (t == 0) {
        prior = model.initial()[j];
      } else {
        const auto prev = alpha.row(t - 1);
        for (std::size_t i = 0; i < n; ++i) prior += prev[i] * model.transition(i, j);
      }
      row[j] = prior * model.emission(j, obs[t]);
    }
    double c = 0.0;
    for (double v : row) c += v;
    if (!(c > 0.0)) {
      throw InferenceError("observation at step " + std::to_string(t) +
                               " has zero probability under the model",
                           t);
    }
    for (double& v : row) v /= c;
    scale[t] = c;
    ll += std::log(c);
  }
  return ll;
}

}  // namespace

TrellisResult forward_backward(const Hmm& model, std::span<const Symbol> obs) {
  check_observations(model, obs);
  TrellisResult out;
  out.log_likelihood = forward_pass(model, obs, out.scaled_alpha, out.scale_factors);

  const std::size_t n = model.n_states();
  const std::size_t steps = obs.size();
  out.scaled_beta = Matrix(steps, n);
  for (double& v : out.scaled_beta.row(steps - 1)) v = 1.0;
  for (std::size_t t = steps - 1; t-- > 0;) {
    const auto next = out.scaled_beta.row(t + 1);
    auto row = out.scaled_beta.row(t);
    const double c = out.scale_factors[t + 1];
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        sum += model.transition(i, j) * model.emission(j, obs[t + 1]) * next[j];
      }
      row[i] = sum / c;
    }
  }
  return out;
}

double log_likelihood(const Hmm& model, std::span<const Symbol> obs) {
  check_observations(model, obs);
  Matrix alpha;
  std::vector<double> scale;
  return forward_pass(model, obs, alpha, scale);
}

Posteriors posteriors(const Hmm& model, std::span<const Symbol> obs, const TrellisResult& trellis) {
  const std::size_t n = model.n_states();
  const std::size_t steps = obs.size();
  if (trellis.scaled_alpha.rows() != steps || trellis.scaled_beta.rows() != steps ||
      trellis.scale_factors.size() != steps || trellis.scaled_alpha.cols() != n ||
      trellis.scaled_beta.cols() != n) {
    throw DomainError("trellis dimensions do not match the observation sequence and model");
  }
  check_observations(model, obs);

  Posteriors out;
  out.gamma = Matrix(steps, n);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto a = trellis.scaled_alpha.row(t);
    const auto b = trellis.scaled_beta.row(t);
    auto g = out.gamma.row(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = a[i] * b[i];
      sum += g[i];
    }
    for (double& v : g) v /= sum;
  }

  out.xi.reserve(steps > 0 ? steps - 1 : 0);
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    Matrix x(n, n);
    const auto a = trellis.scaled_alpha.row(t);
    const auto b = trellis.scaled_beta.row(t + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        x(i, j) = a[i] * model.transition(i, j) * model.emission(j, obs[t + 1]) * b[j];
        sum += x(i, j);
      }
    }
    for (double& v : x.data()) v /= sum;
    out.xi.push_back(std::move(x));
  }
  return out;
}

void FitConfig::validate() const {
  if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (!(rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
  if (!(emission_floor >= 0.0) || !std::isfinite(emission_floor)) {
    throw DomainError("emission_floor must be a non-negative number");
  }
}

std::vector<double> floored_normalize(std::span<const double> counts, double floor) {
  const std::size_t m = counts.size();
  if (m == 0) throw DomainError("cannot normalize an empty vector");
  if (floor * static_cast<double>(m) >= 1.0) {
    throw DomainError("probability floor too large for " + std::to_string(m) + " entries");
  }
  std::vector<double> p(m, 0.0);
  std::vector<bool> pinned(m, false);
  std::size_t n_pinned = 0;
  while (true) {
    double free_total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (!pinned[k]) free_total += counts[k];
    }
    if (!(free_total > 0.0)) throw DomainError("cannot normalize a vector without positive mass");
    const double mass = 1.0 - static_cast<double>(n_pinned) * floor;
    bool changed = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (pinned[k]) continue;
      p[k] = mass * counts[k] / free_total;
      if (p[k] < floor) {
        pinned[k] = true;
        p[k] = floor;
        ++n_pinned;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return p;
}

namespace {

struct Accumulators {
  std::vector<double> initial;
  Matrix transition;
  Matrix emission;
  double log_likelihood = 0.0;

  Accumulators(std::size_t n, std::size_t m) : initial(n, 0.0), transition(n, n), emission(n, m) {}
};

Accumulators expectation_step(const Hmm& model, std::span<const ObservationSequence> sequences,
                              std::size_t iteration, const FitObserver& observer) {
  const std::size_t n = model.n_states();
  Accumulators acc(n, model.n_symbols());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& obs = sequences[s];
    const TrellisResult trellis = forward_backward(model, obs);
    const Posteriors post = posteriors(model, obs, trellis);
    if (observer) observer(iteration, s, post);

    acc.log_likelihood += trellis.log_likelihood;
    for (std::size_t i = 0; i < n; ++i) acc.initial[i] += post.gamma(0, i);
    for (const Matrix& x : post.xi) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) acc.transition(i, j) += x(i, j);
      }
    }
    for (std::size_t t = 0; t < obs.size(); ++t) {
      for (std::size_t i = 0; i < n; ++i) acc.emission(i, obs[t]) += post.gamma(t, i);
    }
  }
  return acc;
}

// Row-wise M-step; a row without expected counts keeps its previous value.
Matrix maximize_rows(const Matrix& counts, const Matrix& previous, double floor) {
  Matrix out = previous;
  for (std::size_t i = 0; i < counts.rows(); ++i) {
    const auto row = counts.row(i);
    double total = 0.0;
    for (double v : row) total += v;
    if (!(total > 0.0)) continue;
    const auto p = floored_normalize(row, floor);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

Hmm maximization_step(const Hmm& model, const Accumulators& acc, std::size_t n_sequences,
                      const FitConfig& config) {
  std::vector<double> initial(acc.initial);
  for (double& v : initial) v /= static_cast<double>(n_sequences);
  Matrix transition = config.update_transition
                          ? maximize_rows(acc.transition, model.transition(), config.emission_floor)
                          : model.transition();
  Matrix emission = maximize_rows(acc.emission, model.emission(), config.emission_floor);
  return Hmm(std::move(transition), std::move(emission), std::move(initial));
}

bool improvement_below(double previous, double current, double rel_tol) {
  const double delta = current - previous;
  const double scale = std::abs(previous);
  if (scale == 0.0) return delta <= 0.0;
  return delta / scale < rel_tol;
}

}  // namespace

FitResult fit(const Hmm& initial_model, std::span<const ObservationSequence> sequences,
              const FitConfig& config, const FitObserver& observer) {
  config.validate();
  if (sequences.empty()) throw DomainError("fit needs at least one observation sequence");
  for (const auto& seq : sequences) check_observations(initial_model, seq);

  FitResult result{initial_model, {}, 0, false};
  for (std::size_t iteration = 0;; ++iteration) {
    const Accumulators acc = expectation_step(result.model, sequences, iteration, observer);
    result.log_likelihood_trace.push_back(acc.log_likelihood);
    const auto& trace = result.log_likelihood_trace;
    if (iteration > 0 &&
        improvement_below(trace[trace.size() - 2], trace.back(), config.rel_tol)) {
      result.converged = true;
      break;
    }
    if (iteration == config.max_iterations) break;
    result.model = maximization_step(result.model, acc, sequences.size(), config);
    result.iterations = iteration + 1;
  }
  return result;
}

StatePath viterbi(const Hmm& model, std::span<const Symbol> obs) {
  check_observations(model, obs);
  const std::size_t n = model.n_states();
  const std::size_t steps = obs.size();

  Matrix delta(steps, n);
  BasicMatrix<StateIndex> backpointer(steps, n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    delta(0, i) = safe_log(model.initial()[i]) + safe_log(model.emission(i, obs[0]));
  }
  auto check_column = [&](std::size_t t) {
    const auto row = delta.row(t);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == kNegInf; })) {
      throw InferenceError("no state path explains the observation at step " + std::to_string(t),
                           t);
    }
  };
  check_column(0);

  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double best = kNegInf;
      StateIndex arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = delta(t - 1, i) + safe_log(model.transition(i, j));
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(t, j) = best + safe_log(model.emission(j, obs[t]));
      backpointer(t, j) = arg;
    }
    check_column(t);
  }

  StatePath path;
  path.states.assign(steps, 0);
  const auto last = delta.row(steps - 1);
  const auto best = std::max_element(last.begin(), last.end());  // first maximum
  path.states[steps - 1] = static_cast<StateIndex>(best - last.begin());
  path.log_prob = *best;
  for (std::size_t t = steps - 1; t > 0; --t) {
    path.states[t - 1] = backpointer(t, path.states[t]);
  }
  return path;
}

namespace {

struct ListEntry {
  double score;
  StateIndex prev_state;
  std::size_t prev_rank;
};

bool ranks_before(const ListEntry& a, const ListEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.prev_state != b.prev_state) return a.prev_state < b.prev_state;
  return a.prev_rank < b.prev_rank;
}

}  // namespace

std::vector<StatePath> k_best_paths(const Hmm& model, std::span<const Symbol> obs, std::size_t k) {
  if (k == 0) throw DomainError("k must be at least 1");
  check_observations(model, obs);
  const std::size_t n = model.n_states();
  const std::size_t steps = obs.size();

  // lists[t][j] holds up to k partial paths ending in state j at step t.
  std::vector<std::vector<std::vector<ListEntry>>> lists(
      steps, std::vector<std::vector<ListEntry>>(n));
  auto check_step = [&](std::size_t t) {
    const auto& cells = lists[t];
    if (std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.empty(); })) {
      throw InferenceError("no state path explains the observation at step " + std::to_string(t),
                           t);
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double score = safe_log(model.initial()[i]) + safe_log(model.emission(i, obs[0]));
    if (score != kNegInf) lists[0][i].push_back({score, 0, 0});
  }
  check_step(0);

  std::vector<ListEntry> candidates;
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      candidates.clear();
      const double emit = safe_log(model.emission(j, obs[t]));
      if (emit == kNegInf) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double trans = safe_log(model.transition(i, j));
        const auto& prev = lists[t - 1][i];
        for (std::size_t r = 0; r < prev.size(); ++r) {
          const double score = (prev[r].score + trans) + emit;
          if (score != kNegInf) candidates.push_back({score, i, r});
        }
      }
      const std::size_t keep = std::min(k, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                        candidates.end(), ranks_before);
      lists[t][j].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    check_step(t);
  }

  // Termination: rank all surviving end points; (score, state, rank) keys are unique.
  struct Terminal {
    double score;
    StateIndex state;
    std::size_t rank;
  };
  std::vector<Terminal> ends;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& cell = lists[steps - 1][j];
    for (std::size_t r = 0; r < cell.size(); ++r) ends.push_back({cell[r].score, j, r});
  }
  std::stable_sort(ends.begin(), ends.end(), [](const Terminal& a, const Terminal& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.state != b.state) return a.state < b.state;
    return a.rank < b.rank;
  });

  std::vector<StatePath> out;
  for (const Terminal& end : ends) {
    if (out.size() == k) break;
    StatePath path;
    path.states.assign(steps, 0);
    path.log_prob = end.score;
    StateIndex state = end.state;
    std::size_t rank = end.rank;
    for (std::size_t t = steps; t-- > 0;) {
      path.states[t] = state;
      const ListEntry& e = lists[t][state][rank];
      state = e.prev_state;
      rank = e.prev_rank;
    }
    // Duplicate-path suppression.
    if (std::none_of(out.begin(), out.end(),
                     [&](const StatePath& p) { return p.states == path.states; })) {
      out.push_back(std::move(path));
    }
  }
  return out;
}

double path_log_prob(const Hmm& model, std::span<const Symbol> obs,
                     std::span<const StateIndex> states) {
  check_observations(model, obs);
  if (states.size() != obs.size()) {
    throw DomainError("state path length does not match the observation sequence");
  }
  for (StateIndex s : states) {
    if (s >= model.n_states()) throw DomainError("state index out of range");
  }
  double lp = safe_log(model.initial()[states[0]]) + safe_log(model.emission(states[0], obs[0]));
  for (std::size_t t = 1; t < obs.size(); ++t) {
    lp = (lp + safe_log(model.transition(states[t - 1], states[t]))) +
         safe_log(model.emission(states[t], obs[t]));
  }
  return lp;
}

}  // namespace alarmhmm
