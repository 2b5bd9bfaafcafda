#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "alarmhmm/matrix.hpp"

namespace alarmhmm {

using Symbol = std::size_t;
using StateIndex = std::size_t;
using ObservationSequence = std::vector<Symbol>;

// Tolerance used when checking that a probability vector sums to one.
inline constexpr double kStochasticTolerance = 1e-9;

// Discrete first-order hidden Markov model lambda = (A, B, pi).
//
// The constructor validates the stochastic invariants: every row of the
// transition and emission matrices, and the initial distribution, is
// non-negative and sums to one within kStochasticTolerance.
class Hmm {
 public:
  Hmm(Matrix transition, Matrix emission, std::vector<double> initial);

  // A, B and pi all uniform.
  static Hmm uniform(std::size_t n_states, std::size_t n_symbols);

  std::size_t n_states() const noexcept { return initial_.size(); }
  std::size_t n_symbols() const noexcept { return emission_.cols(); }

  const Matrix& transition() const noexcept { return transition_; }
  const Matrix& emission() const noexcept { return emission_; }
  const std::vector<double>& initial() const noexcept { return initial_; }

  double transition(StateIndex from, StateIndex to) const noexcept { return transition_(from, to); }
  double emission(StateIndex state, Symbol symbol) const noexcept { return emission_(state, symbol); }

  friend bool operator==(const Hmm&, const Hmm&) = default;

 private:
  Matrix transition_;
  Matrix emission_;
  std::vector<double> initial_;
};

// Throws UnknownSymbolError naming the first position whose symbol is >= n_symbols,
// or DomainError for an empty sequence.
void check_observations(const Hmm& model, std::span<const Symbol> obs);

// Per-step normalized forward/backward trellis.
//
// scale_factors[t] is the sum of the unnormalized forward row at t (after
// propagating the already normalized row t-1), so that scaled_alpha rows sum
// to one and log_likelihood = sum_t log(scale_factors[t]). The backward values
// are scaled with the same factors: scaled_beta[t] = beta[t] / prod_{s>t} c_s.
// Hence alpha[t] = scaled_alpha[t] * prod_{s<=t} c_s and
// sum_i scaled_alpha[t][i] * scaled_beta[t][i] = 1 for every t.
struct TrellisResult {
  Matrix scaled_alpha;
  Matrix scaled_beta;
  std::vector<double> scale_factors;
  double log_likelihood = 0.0;
};

TrellisResult forward_backward(const Hmm& model, std::span<const Symbol> obs);

// Forward pass only; same scaling as forward_backward.
double log_likelihood(const Hmm& model, std::span<const Symbol> obs);

struct Posteriors {
  Matrix gamma;            // T x N, gamma(t, i) = P(q_t = i | O)
  std::vector<Matrix> xi;  // T-1 matrices of N x N, xi[t](i, j) = P(q_t = i, q_{t+1} = j | O)
};

Posteriors posteriors(const Hmm& model, std::span<const Symbol> obs, const TrellisResult& trellis);

struct FitConfig {
  std::size_t max_iterations = 500;
  double rel_tol = 1e-6;
  // Lower bound for every emission and transition entry after each M-step.
  // Zero disables smoothing.
  double emission_floor = 1e-10;
  // When false the transition matrix is held at its initial value.
  bool update_transition = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  Hmm model;
  // Total log-likelihood of every model visited, starting with the initial
  // one; the last entry belongs to the returned model.
  std::vector<double> log_likelihood_trace;
  std::size_t iterations = 0;  // number of EM updates applied
  bool converged = false;
};

// Called once per sequence during each E-step with the posteriors of the
// model being evaluated at that iteration.
using FitObserver =
    std::function<void(std::size_t iteration, std::size_t sequence, const Posteriors&)>;

// Multi-sequence Baum-Welch. Expected counts are pooled over sequences in
// sequence order, then time order; pi is the average of the per-sequence
// initial posteriors.
FitResult fit(const Hmm& initial_model, std::span<const ObservationSequence> sequences,
              const FitConfig& config, const FitObserver& observer = {});

// Projects a non-negative vector of expected counts onto the probability
// simplex restricted to entries >= floor, maximizing sum_k counts_k log p_k.
// Entries whose scaled count falls under the floor are pinned to it and the
// remaining mass is shared in proportion to the counts.
std::vector<double> floored_normalize(std::span<const double> counts, double floor);

struct StatePath {
  std::vector<StateIndex> states;
  double log_prob = 0.0;  // log P(states, obs | model)

  friend bool operator==(const StatePath&, const StatePath&) = default;
};

// Log-space Viterbi decoding; argmax ties resolve to the lowest state index.
StatePath viterbi(const Hmm& model, std::span<const Symbol> obs);

// List Viterbi: up to k distinct paths with non-zero probability, ordered by
// descending log_prob. The first element equals viterbi(model, obs).
std::vector<StatePath> k_best_paths(const Hmm& model, std::span<const Symbol> obs, std::size_t k);

// Random valid model with entries bounded away from zero, drawn from seed.
Hmm random_model(std::size_t n_states, std::size_t n_symbols, std::uint64_t seed);

// log P(states, obs | model) for an explicit path.
double path_log_prob(const Hmm& model, std::span<const Symbol> obs,
                     std::span<const StateIndex> states);

}  // namespace alarmhmm
