#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include <alarmhmm/errors.hpp>
#include <alarmhmm/hmm.hpp>

#include "oracle.hpp"

using namespace alarmhmm;

namespace {

Hmm two_state() {
  return Hmm(Matrix::from_rows({{0.7, 0.3}, {0.4, 0.6}}), Matrix::from_rows({{0.5, 0.5}, {0.1, 0.9}}),
             {0.6, 0.4});
}
const std::vector<Symbol> kObs{0, 1, 1};

// Values below were enumerated over the 8 paths with exact rational
// arithmetic: P(O) = 2281/15625.
constexpr double kTwoStateLogLik = -1.9242582523202143;
const double kGamma[3][2] = {{0.85653222270933804, 0.14346777729066199},
                             {0.47991560718982901, 0.52008439281017094},
                             {0.41148345024112232, 0.58851654975887768}};
// Top three paths with log P(path, O).
const std::vector<std::pair<std::vector<StateIndex>, double>> kTop3 = {
    {{0, 1, 1}, -3.1294922637335154},
    {{0, 0, 0}, -3.3036170533232916},
    {{0, 0, 1}, -3.5631282488083760}};

}  // namespace

TEST(Hmm, RejectsNonStochasticRows) {
  EXPECT_THROW(Hmm(Matrix::from_rows({{0.5, 0.4}, {0.5, 0.5}}), Matrix::from_rows({{1.0}, {1.0}}),
                   {0.5, 0.5}),
               DomainError);
  EXPECT_THROW(Hmm(Matrix::from_rows({{1.0}}), Matrix::from_rows({{1.2, -0.2}}), {1.0}), DomainError);
  EXPECT_THROW(Hmm(Matrix::from_rows({{1.0}}), Matrix::from_rows({{1.0}}), {0.9}), DomainError);
  EXPECT_THROW(Hmm(Matrix(2, 2, 0.5), Matrix(3, 2, 0.5), {0.5, 0.5}), DomainError);
}

TEST(ForwardBackward, TwoStateMatchesEnumeration) {
  const auto tr = forward_backward(two_state(), kObs);
  EXPECT_NEAR(tr.log_likelihood, kTwoStateLogLik, 1e-12);
  const double from_oracle = std::log(oracle::total_prob(oracle::enumerate_paths(two_state(), kObs)));
  EXPECT_NEAR(tr.log_likelihood, from_oracle, 1e-12);
  double sum_log_c = 0.0;
  for (double c : tr.scale_factors) sum_log_c += std::log(c);
  EXPECT_DOUBLE_EQ(tr.log_likelihood, sum_log_c);
}

TEST(ForwardBackward, SingleStateIsProductOfEmissions) {
  const Hmm m(Matrix::from_rows({{1.0}}), Matrix::from_rows({{0.2, 0.3, 0.5}}), {1.0});
  const std::vector<Symbol> obs{2, 0, 1};
  const auto tr = forward_backward(m, obs);
  EXPECT_NEAR(tr.log_likelihood, std::log(0.5) + std::log(0.2) + std::log(0.3), 1e-14);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(tr.scaled_alpha(t, 0), 1.0);
}

TEST(ForwardBackward, UniformModel) {
  const auto tr = forward_backward(Hmm::uniform(3, 4), std::vector<Symbol>{0, 3, 1, 1, 2});
  EXPECT_NEAR(tr.log_likelihood, 5 * std::log(0.25), 1e-12);
}

TEST(ForwardBackward, ErrorsNameThePosition) {
  try {
    forward_backward(two_state(), std::vector<Symbol>{0, 1, 7});
    FAIL() << "expected UnknownSymbolError";
  } catch (const UnknownSymbolError& e) {
    EXPECT_NE(std::string(e.what()).find("position 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(forward_backward(two_state(), std::vector<Symbol>{}), DomainError);
}

TEST(ForwardBackward, ImpossibleObservationReportsStep) {
  const Hmm m(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}),
              {1.0, 0.0});
  try {
    forward_backward(m, std::vector<Symbol>{0, 0, 1});
    FAIL() << "expected InferenceError";
  } catch (const InferenceError& e) {
    EXPECT_EQ(e.step(), 2u);
  }
  EXPECT_THROW(viterbi(m, std::vector<Symbol>{0, 1}), InferenceError);
}

TEST(ForwardBackward, ScaledRowsNormalizeAndReconstructLikelihood) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto tr = forward_backward(inst.model, inst.obs);
    const std::size_t n = inst.model.n_states();
    // alpha_t(i) beta_t(i) summed over i reconstructs P(O) at every t.
    for (std::size_t t = 0; t < inst.obs.size(); ++t) {
      double row = 0.0;
      double ab = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        row += tr.scaled_alpha(t, i);
        ab += tr.scaled_alpha(t, i) * tr.scaled_beta(t, i);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
      EXPECT_NEAR(ab, 1.0, 1e-12);
    }
  }
}

TEST(Posteriors, TwoStateGammaMatchesEnumeration) {
  const auto m = two_state();
  const auto post = posteriors(m, kObs, forward_backward(m, kObs));
  const auto g = oracle::gamma(oracle::enumerate_paths(m, kObs), 2);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(post.gamma(t, i), kGamma[t][i], 1e-10);
      EXPECT_NEAR(post.gamma(t, i), g[t][i], 1e-10);
    }
  }
}

TEST(Posteriors, SingleStateIsAllOnes) {
  const Hmm m(Matrix::from_rows({{1.0}}), Matrix::from_rows({{0.4, 0.6}}), {1.0});
  const std::vector<Symbol> obs{1, 0, 1, 1};
  const auto post = posteriors(m, obs, forward_backward(m, obs));
  for (std::size_t t = 0; t < obs.size(); ++t) EXPECT_DOUBLE_EQ(post.gamma(t, 0), 1.0);
  ASSERT_EQ(post.xi.size(), 3u);
  for (const auto& x : post.xi) EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
}

TEST(Posteriors, DeterministicChainStaysInStateZero) {
  const Hmm m(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}),
              {1.0, 0.0});
  const std::vector<Symbol> obs{0, 1, 1, 0};
  const auto post = posteriors(m, obs, forward_backward(m, obs));
  for (std::size_t t = 0; t < obs.size(); ++t) {
    EXPECT_DOUBLE_EQ(post.gamma(t, 0), 1.0);
    EXPECT_DOUBLE_EQ(post.gamma(t, 1), 0.0);
  }
}

TEST(Posteriors, MismatchedTrellisIsRejected) {
  const auto m = two_state();
  const auto tr = forward_backward(m, kObs);
  EXPECT_THROW(posteriors(m, std::vector<Symbol>{0, 1}, tr), DomainError);
}

TEST(Posteriors, NormalizationAndMarginalConsistency) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto post = posteriors(inst.model, inst.obs, forward_backward(inst.model, inst.obs));
    const std::size_t n = inst.model.n_states();
    const auto g = oracle::gamma(oracle::enumerate_paths(inst.model, inst.obs), n);
    for (std::size_t t = 0; t < inst.obs.size(); ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += post.gamma(t, i);
        EXPECT_NEAR(post.gamma(t, i), g[t][i], 1e-10);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
    for (std::size_t t = 0; t + 1 < inst.obs.size(); ++t) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += post.xi[t](i, j);
        EXPECT_NEAR(row, post.gamma(t, i), 1e-9);
        total += row;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(Viterbi, TwoStateMatchesEnumeration) {
  const auto p = viterbi(two_state(), kObs);
  EXPECT_EQ(p.states, (std::vector<StateIndex>{0, 1, 1}));
  EXPECT_NEAR(p.log_prob, kTop3[0].second, 1e-10);
}

TEST(Viterbi, IdentityTransitionsKeepStartState) {
  const Hmm m(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
              Matrix::from_rows({{0.2, 0.8}, {0.6, 0.4}, {0.5, 0.5}}), {0.0, 1.0, 0.0});
  EXPECT_EQ(viterbi(m, std::vector<Symbol>{0, 1, 1, 0}).states, (std::vector<StateIndex>(4, 1)));
}

TEST(Viterbi, IdentityEmissionsDetermineStates) {
  const Hmm m(Matrix(3, 3, 1.0 / 3), Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
              {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_EQ(viterbi(m, std::vector<Symbol>{2, 0, 1}).states, (std::vector<StateIndex>{2, 0, 1}));
}

TEST(Viterbi, TiesGoToLowestIndex) {
  EXPECT_EQ(viterbi(Hmm::uniform(3, 2), std::vector<Symbol>{1, 0, 1}).states,
            (std::vector<StateIndex>{0, 0, 0}));
}

TEST(Viterbi, RelabelingEquivariance) {
  // Permuting the symbol alphabet together with the emission columns leaves
  // the decoded path unchanged.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const std::size_t m = inst.model.n_symbols();
    std::vector<Symbol> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
    Matrix b(inst.model.n_states(), m);
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t k = 0; k < m; ++k) b(i, perm[k]) = inst.model.emission(i, k);
    }
    const Hmm relabeled(inst.model.transition(), b, inst.model.initial());
    std::vector<Symbol> obs;
    for (Symbol o : inst.obs) obs.push_back(perm[o]);
    EXPECT_EQ(viterbi(relabeled, obs).states, viterbi(inst.model, inst.obs).states);
  }
}

TEST(Viterbi, NotWorseThanAnyEnumeratedPath) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto best = viterbi(inst.model, inst.obs);
    EXPECT_NEAR(best.log_prob, path_log_prob(inst.model, inst.obs, best.states), 1e-12);
    for (const auto& p : oracle::enumerate_paths(inst.model, inst.obs)) {
      EXPECT_GE(best.log_prob, p.log_prob - 1e-12);
    }
  }
}

TEST(Viterbi, ExactTiesResolveFromTheLastStep) {
  // Seeds 55, 108 and 153 contain tied optimal paths that are permutations of
  // the same factors.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto want = oracle::tie_broken_best(oracle::enumerate_paths(inst.model, inst.obs));
    EXPECT_EQ(viterbi(inst.model, inst.obs).states, want.states) << "seed " << seed;
  }
}

TEST(KBest, TwoStateTopThree) {
  const auto paths = k_best_paths(two_state(), kObs, 3);
  ASSERT_EQ(paths.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(paths[r].states, kTop3[r].first) << "rank " << r;
    EXPECT_NEAR(paths[r].log_prob, kTop3[r].second, 1e-10);
  }
}

TEST(KBest, FirstEqualsViterbi) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto one = k_best_paths(inst.model, inst.obs, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one.front(), viterbi(inst.model, inst.obs));
  }
}

TEST(KBest, SingleStateHasOnePath) {
  const Hmm m(Matrix::from_rows({{1.0}}), Matrix::from_rows({{0.5, 0.5}}), {1.0});
  EXPECT_EQ(k_best_paths(m, std::vector<Symbol>{0, 1, 0}, 2).size(), 1u);
}

TEST(KBest, ReturnsEveryPathWhenKIsLarge) {
  const auto paths = k_best_paths(two_state(), kObs, 20);
  ASSERT_EQ(paths.size(), 8u);
  std::set<std::vector<StateIndex>> distinct;
  for (std::size_t r = 0; r < paths.size(); ++r) {
    distinct.insert(paths[r].states);
    if (r > 0) EXPECT_LE(paths[r].log_prob, paths[r - 1].log_prob);
  }
  EXPECT_EQ(distinct.size(), 8u);
  EXPECT_THROW(k_best_paths(two_state(), kObs, 0), DomainError);
}

TEST(KBest, SkipsImpossiblePaths) {
  const Hmm m(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}),
              {0.5, 0.5});
  const auto paths = k_best_paths(m, std::vector<Symbol>{0, 1}, 4);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].states, (std::vector<StateIndex>{0, 0}));
  EXPECT_EQ(paths[1].states, (std::vector<StateIndex>{1, 1}));
}

TEST(RandomModel, DeterministicAndValid) {
  EXPECT_EQ(random_model(3, 4, 9), random_model(3, 4, 9));
  EXPECT_NE(random_model(3, 4, 9), random_model(3, 4, 10));
}
