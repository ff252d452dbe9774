#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "amoc/error.hpp"
#include "amoc/random.hpp"
#include "amoc/regress.hpp"
#include "oracles.hpp"

namespace amoc {
namespace {

using testing::random_design;
using testing::oracle_ols;
using testing::oracle_stepwise;

TEST(Ols, ExactLine) {
  DesignMatrix X({"x"}, 10);
  for (std::size_t r = 0; r < 10; ++r) {
    X.at(r, 0) = static_cast<double>(r);
    X.response(r) = 2.0 * static_cast<double>(r);
  }
  const std::vector<std::string> terms = {"x"};
  const auto fit = ols_fit(X, terms);
  EXPECT_NEAR(fit.beta[0], 0.0, 1e-12);
  EXPECT_NEAR(fit.beta[1], 2.0, 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Ols, MatchesExtendedPrecisionOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto X = random_design(50, 3, seed);
    const std::vector<std::string> terms = {"x1", "x2", "x3"};
    const auto fit = ols_fit(X, terms);
    const auto oracle = oracle_ols(X, {0, 1, 2});
    ASSERT_FALSE(oracle.singular);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(fit.beta[i], static_cast<double>(oracle.beta[i]), 1e-8);
      EXPECT_NEAR(fit.se[i], static_cast<double>(oracle.se[i]), 1e-8);
    }
  }
}

TEST(Ols, NormalEquationsHold) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto X = random_design(40, 4, seed + 50);
    const std::vector<std::string> terms = {"x1", "x2", "x3", "x4"};
    const auto fit = ols_fit(X, terms);
    double s = std::accumulate(fit.residuals.begin(), fit.residuals.end(), 0.0);
    EXPECT_NEAR(s, 0.0, 1e-8);
    for (std::size_t c = 0; c < 4; ++c) {
      s = 0.0;
      for (std::size_t r = 0; r < 40; ++r) s += X.at(r, c) * fit.residuals[r];
      EXPECT_NEAR(s, 0.0, 1e-8);
    }
  }
}

TEST(Ols, DuplicateColumnIsSingular) {
  auto X = random_design(20, 3, 4);
  for (std::size_t r = 0; r < 20; ++r) X.at(r, 2) = X.at(r, 0);
  const std::vector<std::string> terms = {"x1", "x2", "x3"};
  try {
    ols_fit(X, terms);
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_NE(std::string(e.what()).find("x3"), std::string::npos) << e.what();
  }
}

TEST(Ols, TooFewRows) {
  const auto X = random_design(4, 3, 4);
  const std::vector<std::string> terms = {"x1", "x2", "x3"};
  EXPECT_THROW(ols_fit(X, terms), InsufficientDataError);
  const std::vector<std::string> unknown = {"zz"};
  EXPECT_THROW(ols_fit(random_design(10, 1, 1), unknown), InputError);
}

TEST(Ols, AdjustedR2Formula) {
  DesignMatrix X({"a", "b"}, 7);
  const double a[] = {1, 2, 3, 4, 5, 6, 7};
  const double b[] = {2, 1, 4, 3, 6, 5, 8};
  const double y[] = {1.1, 1.9, 3.2, 3.8, 5.3, 5.9, 7.4};
  for (std::size_t r = 0; r < 7; ++r) {
    X.at(r, 0) = a[r];
    X.at(r, 1) = b[r];
    X.response(r) = y[r];
  }
  const std::vector<std::string> terms = {"a", "b"};
  const auto fit = ols_fit(X, terms);
  EXPECT_NEAR(fit.adjusted_r2, 1.0 - (1.0 - fit.r2) * (7.0 - 1.0) / (7.0 - 2.0 - 1.0), 1e-12);
}

TEST(TDistribution, MatchesReferenceCdf) {
  const std::pair<double, double> points[] = {{0.0, 1},  {1.0, 1},   {-2.5, 3},  {0.3, 5},     {2.0, 10},
                                              {-1.1, 17}, {3.7, 30}, {0.05, 90}, {-6.0, 200}, {1.96, 1000}};
  for (const auto& [t, dof] : points) {
    boost::math::students_t dist(dof);
    EXPECT_NEAR(student_t_cdf(t, dof), boost::math::cdf(dist, t), 1e-6) << t << " " << dof;
    EXPECT_NEAR(two_sided_p_value(t, dof), 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-6);
  }
  EXPECT_NEAR(regularized_incomplete_beta(2.0, 3.0, 0.4), 0.5248, 1e-12);
}

TEST(Stepwise, PicksTheRealPredictor) {
  DesignMatrix X({"x1", "x2"}, 200);
  Rng rng(8);
  for (std::size_t r = 0; r < 200; ++r) {
    X.at(r, 0) = rng.normal();
    X.at(r, 1) = rng.normal();
    X.response(r) = 3.0 * X.at(r, 0) + 0.01 * rng.normal();
  }
  const std::vector<std::string> terms = {"x1", "x2"};
  const auto m = stepwise_fit(X, terms);
  EXPECT_EQ(m.term_names(), (std::vector<std::string>{"x1"}));
  EXPECT_NEAR(m.terms[0].beta, 3.0, 1e-2);
}

TEST(Stepwise, PureNoiseGivesInterceptOnly) {
  const auto X = random_design(60, 3, 21);
  const std::vector<std::string> terms = {"x1", "x2", "x3"};
  const auto m = stepwise_fit(X, terms);
  EXPECT_TRUE(m.terms.empty());
  double mean = 0.0;
  for (double y : X.response()) mean += y / 60.0;
  EXPECT_NEAR(m.intercept.beta, mean, 1e-12);
}

TEST(Stepwise, MatchesBruteForceForwardSelection) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto X = random_design(100, 6, seed * 31);
    Rng rng(seed);
    // A few real effects of mixed strength so paths have several steps.
    for (std::size_t r = 0; r < 100; ++r) {
      X.response(r) = 0.5 * X.at(r, seed % 6) - 0.3 * X.at(r, (seed + 2) % 6) + 0.25 * X.at(r, (seed + 3) % 6) +
                      rng.normal();
    }
    const auto& terms = X.columns();
    const auto m = stepwise_fit(X, terms, 0.01);
    EXPECT_EQ(m.term_names(), oracle_stepwise(X, 0.01)) << "seed " << seed;
  }
}

TEST(Stepwise, InvariantToRowOrder) {
  auto X = random_design(80, 4, 77);
  for (std::size_t r = 0; r < 80; ++r) X.response(r) += 0.6 * X.at(r, 1) - 0.4 * X.at(r, 3);
  DesignMatrix Y(X.columns(), 80);
  for (std::size_t r = 0; r < 80; ++r) {
    const std::size_t s = (r * 37) % 80;
    for (std::size_t c = 0; c < 4; ++c) Y.at(r, c) = X.at(s, c);
    Y.response(r) = X.response(s);
  }
  const auto a = stepwise_fit(X, X.columns());
  const auto b = stepwise_fit(Y, Y.columns());
  ASSERT_EQ(a.term_names(), b.term_names());
  for (std::size_t i = 0; i < a.terms.size(); ++i) EXPECT_NEAR(a.terms[i].beta, b.terms[i].beta, 1e-10);
  EXPECT_NEAR(a.adjusted_r2, b.adjusted_r2, 1e-12);
}

TEST(Stepwise, DeltaR2IsAdjustedIncrement) {
  auto X = random_design(120, 3, 5);
  for (std::size_t r = 0; r < 120; ++r) X.response(r) += X.at(r, 0) + 0.5 * X.at(r, 2);
  const auto m = stepwise_fit(X, X.columns());
  ASSERT_EQ(m.terms.size(), 2u);
  double previous = 0.0;
  std::vector<std::string> sofar;
  for (const auto& t : m.terms) {
    sofar.push_back(t.name);
    const auto fit = ols_fit(X, sofar);
    EXPECT_NEAR(t.delta_r2, fit.adjusted_r2 - previous, 1e-12);
    previous = fit.adjusted_r2;
  }
  EXPECT_NEAR(m.adjusted_r2, previous, 1e-12);
}

CandidateRecord record_with(double f1_s) {
  CandidateRecord r;
  r.spec = CandidateSpec({1}, 6);
  r.f1_source = f1_s;
  r.run_sizes = {1};
  return r;
}

TEST(Predict, LinearAndUnclipped) {
  RegressionModel m;
  m.intercept.beta = 0.1;
  m.terms.push_back({"f1_s", 0.5});
  EXPECT_DOUBLE_EQ(predict(m, record_with(0.8)), 0.5);
  m.terms[0].beta = 5.0;
  EXPECT_GT(predict(m, record_with(0.8)), 1.0);
  m.terms.push_back({"ind_size_9", 1.0});
  EXPECT_THROW(predict(m, record_with(0.8)), InputError);
  RegressionModel flat;
  flat.intercept.beta = 0.3;
  EXPECT_EQ(predict(flat, record_with(0.1)), predict(flat, record_with(0.9)));
}

TEST(Predict, ReproducesFittedValues) {
  std::vector<CandidateRecord> records;
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    auto r = record_with(rng.uniform());
    r.p_s_given_t = rng.uniform();
    r.ate_target.value = rng.uniform();
    r.ate_target_x_p_s_t = r.ate_target.value * r.p_s_given_t;
    r.target_f1 = 0.2 + 0.7 * r.f1_source - 0.3 * r.ate_target.value + 0.01 * rng.normal();
    records.push_back(r);
  }
  const std::vector<std::string> terms = {"f1_s", "ate_t", "p_s_t"};
  const auto X = DesignMatrix::from_records(records, terms);
  const auto m = stepwise_fit(X, terms);
  std::vector<std::string> names = m.term_names();
  const auto fit = ols_fit(X, names);
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_NEAR(predict(m, records[i]), fit.fitted[i], 1e-12);
}

TEST(Report, JsonRoundTrip) {
  auto X = random_design(60, 3, 9);
  for (std::size_t r = 0; r < 60; ++r) X.response(r) += 2.0 * X.at(r, 1);
  const auto m = stepwise_fit(X, X.columns());
  const auto back = regression_from_json(regression_to_json(m));
  EXPECT_EQ(back.term_names(), m.term_names());
  EXPECT_EQ(back.intercept.beta, m.intercept.beta);
  for (std::size_t i = 0; i < m.terms.size(); ++i) {
    EXPECT_EQ(back.terms[i].beta, m.terms[i].beta);
    EXPECT_EQ(back.terms[i].p, m.terms[i].p);
    EXPECT_EQ(back.terms[i].delta_r2, m.terms[i].delta_r2);
  }
  EXPECT_EQ(back.adjusted_r2, m.adjusted_r2);
  EXPECT_THROW(regression_from_json("{\"terms\": 3}"), FormatError);
}

}  // namespace
}  // namespace amoc
