#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <alarmhmm/errors.hpp>
#include <alarmhmm/hmm.hpp>
#include <alarmhmm/rng.hpp>

#include "oracle.hpp"

using namespace alarmhmm;

namespace {

// Samples sequences from a model with the library RNG.
std::vector<ObservationSequence> sample(const Hmm& m, std::size_t count, std::size_t len,
                                        std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&rng](std::span<const double> p) {
    double u = rng.uniform();
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      if (u < p[k]) return k;
      u -= p[k];
    }
    return p.size() - 1;
  };
  std::vector<ObservationSequence> out(count);
  for (auto& seq : out) {
    std::size_t q = draw(m.initial());
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) q = draw(m.transition().row(q));
      seq.push_back(draw(m.emission().row(q)));
    }
  }
  return out;
}

double total_ll(const Hmm& m, const std::vector<ObservationSequence>& data) {
  double s = 0.0;
  for (const auto& o : data) s += forward_backward(m, o).log_likelihood;
  return s;
}

}  // namespace

TEST(FlooredNormalize, PlainNormalizationWithoutFloor) {
  const std::vector<double> c{1.0, 3.0, 0.0};
  const auto p = floored_normalize(c, 0.0);
  EXPECT_DOUBLE_EQ(p[0], 0.25);
  EXPECT_DOUBLE_EQ(p[1], 0.75);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
}

TEST(FlooredNormalize, PinsSmallEntriesAndKeepsProportions) {
  const std::vector<double> c{0.0, 1.0, 3.0};
  const auto p = floored_normalize(c, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.1);
  EXPECT_NEAR(p[1], 0.225, 1e-15);
  EXPECT_NEAR(p[2], 0.675, 1e-15);
  // The projection still satisfies the floor when a second entry is pushed under it.
  const auto q = floored_normalize(std::vector<double>{0.0, 0.05, 10.0}, 0.2);
  EXPECT_DOUBLE_EQ(q[0], 0.2);
  EXPECT_DOUBLE_EQ(q[1], 0.2);
  EXPECT_NEAR(q[2], 0.6, 1e-15);
}

TEST(FlooredNormalize, MaximizesExpectedLogLikelihood) {
  // Compare against a grid search over the constrained simplex.
  const std::vector<double> c{0.3, 2.0, 5.0};
  const double floor = 0.15;
  const auto p = floored_normalize(c, floor);
  auto objective = [&](double a, double b) {
    return c[0] * std::log(a) + c[1] * std::log(b) + c[2] * std::log(1.0 - a - b);
  };
  const double best = objective(p[0], p[1]);
  for (double a = floor; a <= 1.0; a += 0.001) {
    for (double b = floor; a + b <= 1.0 - floor; b += 0.001) {
      EXPECT_LE(objective(a, b), best + 1e-12);
    }
  }
}

TEST(Fit, SingleStateLearnsEmpiricalFrequencies) {
  const std::vector<ObservationSequence> data{{0, 1, 1, 2, 1, 0, 1, 1}};
  FitConfig cfg;
  cfg.emission_floor = 0.0;
  const Hmm start(Matrix::from_rows({{1.0}}), Matrix(1, 3, 1.0 / 3), {1.0});
  const auto res = fit(start, data, cfg);
  EXPECT_NEAR(res.model.emission(0, 0), 2.0 / 8, 1e-12);
  EXPECT_NEAR(res.model.emission(0, 1), 5.0 / 8, 1e-12);
  EXPECT_NEAR(res.model.emission(0, 2), 1.0 / 8, 1e-12);
  EXPECT_DOUBLE_EQ(res.model.transition(0, 0), 1.0);
}

TEST(Fit, BeatsGeneratingModelInSample) {
  const Hmm truth(Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}),
                  Matrix::from_rows({{0.95, 0.03, 0.02}, {0.05, 0.45, 0.5}}), {0.5, 0.5});
  const auto data = sample(truth, 50, 30, 17);
  const auto res = fit(random_model(2, 3, 4), data, FitConfig{});
  EXPECT_GE(total_ll(res.model, data), total_ll(truth, data));
  EXPECT_TRUE(res.converged);
  const auto& tr = res.log_likelihood_trace;
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i] - tr[i - 1], -1e-9);
  EXPECT_NEAR(tr.back(), total_ll(res.model, data), 1e-8);
}

TEST(Fit, OneIterationIsOneUpdate) {
  const auto data = sample(random_model(2, 3, 1), 5, 10, 2);
  FitConfig one;
  one.max_iterations = 1;
  const Hmm start = random_model(2, 3, 8);
  const auto r1 = fit(start, data, one);
  EXPECT_EQ(r1.iterations, 1u);
  EXPECT_EQ(r1.log_likelihood_trace.size(), 2u);
  EXPECT_NE(r1.model, start);
  // Two single steps equal two iterations in one call.
  const auto r2 = fit(r1.model, data, one);
  FitConfig two = one;
  two.max_iterations = 2;
  two.rel_tol = 1e-300;
  EXPECT_EQ(fit(start, data, two).model, r2.model);
}

TEST(Fit, FrozenTransitionsStayFixed) {
  const auto data = sample(random_model(3, 4, 5), 10, 12, 6);
  FitConfig cfg;
  cfg.update_transition = false;
  const Hmm start = random_model(3, 4, 7);
  const auto res = fit(start, data, cfg);
  EXPECT_EQ(res.model.transition(), start.transition());
}

TEST(Fit, FloorAppliesToEmissions) {
  const std::vector<ObservationSequence> data{{0, 0, 0, 1}, {0, 1, 1}};
  FitConfig cfg;
  cfg.emission_floor = 1e-3;
  const auto res = fit(random_model(2, 4, 3), data, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 4; ++k) EXPECT_GE(res.model.emission(i, k), 1e-3 - 1e-15);
  }
}

TEST(Fit, ShortSequencesContributeToPiAndB) {
  const std::vector<ObservationSequence> data{{1}, {1}, {0}};
  FitConfig cfg;
  cfg.emission_floor = 0.0;
  const Hmm start(Matrix::from_rows({{1.0}}), Matrix(1, 2, 0.5), {1.0});
  const auto res = fit(start, data, cfg);
  EXPECT_NEAR(res.model.emission(0, 1), 2.0 / 3, 1e-12);
}

TEST(Fit, ErrorsOnBadInput) {
  const std::vector<ObservationSequence> none;
  EXPECT_THROW(fit(Hmm::uniform(2, 2), none, FitConfig{}), DomainError);
  const std::vector<ObservationSequence> bad{{0, 5}};
  EXPECT_THROW(fit(Hmm::uniform(2, 2), bad, FitConfig{}), UnknownSymbolError);
  FitConfig cfg;
  cfg.max_iterations = 0;
  EXPECT_THROW(fit(Hmm::uniform(2, 2), std::vector<ObservationSequence>{{0}}, cfg), DomainError);
  cfg = {};
  cfg.rel_tol = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Fit, MonotoneOnRandomProblems) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.next() % 4;
    const std::size_t m = 2 + rng.next() % 4;
    const auto data = sample(random_model(n, m, seed + 100), 1 + rng.next() % 6, 1 + rng.next() % 15,
                             seed + 200);
    FitConfig cfg;
    cfg.max_iterations = 50;
    const auto res = fit(random_model(n, m, seed + 300), data, cfg,
                         [&](std::size_t, std::size_t, const Posteriors& p) {
                           for (std::size_t t = 0; t < p.gamma.rows(); ++t) {
                             const auto row = p.gamma.row(t);
                             EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
                           }
                         });
    const auto& tr = res.log_likelihood_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i] - tr[i - 1], -1e-9) << "seed " << seed;
  }
}

TEST(Fit, Deterministic) {
  const auto data = sample(random_model(3, 5, 1), 8, 20, 3);
  const auto a = fit(random_model(3, 5, 2), data, FitConfig{});
  const auto b = fit(random_model(3, 5, 2), data, FitConfig{});
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.log_likelihood_trace, b.log_likelihood_trace);
}
