#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dae/error.hpp"
#include "dae/metrics.hpp"
#include "support.hpp"

using namespace dae;

namespace {

TEST(AverageRanks, TiesShareTheMeanRank) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  EXPECT_EQ(average_ranks(std::vector<double>{1, 1, 1}), (std::vector<double>{2, 2, 2}));
}

TEST(AverageRanks, MatchesBruteForceCounting) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> d(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(30);
    for (auto& v : x) v = d(gen);
    const auto fast = average_ranks(x);
    const auto slow = test_support::brute_ranks(x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(fast[i], static_cast<double>(slow[i]));
  }
}

TEST(Spearman, HandCases) {
  const std::vector<double> p{1, 2, 3, 4}, q{1, 3, 2, 4};
  EXPECT_EQ(spearman(p, q), 0.8);
  EXPECT_EQ(spearman(p, p), 1.0);
  EXPECT_EQ(spearman(p, std::vector<double>{4, 3, 2, 1}), -1.0);
  // Monotone transforms leave the correlation unchanged.
  EXPECT_EQ(spearman(std::vector<double>{0.1, 5, 7, 100}, q), 0.8);
}

TEST(Spearman, SymmetricAndBounded) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> d(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(20), q(20);
    for (std::size_t i = 0; i < 20; ++i) {
      p[i] = std::round(d(gen) * 2);
      q[i] = p[i] + d(gen);
    }
    const double a = spearman(p, q), b = spearman(q, p);
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_LE(std::abs(a), 1.0);
  }
}

TEST(Spearman, UndefinedInputsAreErrors) {
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DomainError);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Ols, HandFitAndPerfectData) {
  Tensor x({3, 1}, std::vector<double>{1, 2, 3});
  const OlsFit fit = fit_ols_baseline(x, std::vector<double>{2, 4, 6});
  ASSERT_EQ(fit.coefficients.size(), 2u);
  EXPECT_NEAR(fit.coefficients[0], 0.0, 1e-12);
  EXPECT_NEAR(fit.coefficients[1], 2.0, 1e-12);
  EXPECT_NEAR(fit.r, 1.0, 1e-12);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fit.fitted[i], 2.0 * (i + 1), 1e-12);
  EXPECT_LT(fit.residual_variance, 1e-20);
}

TEST(Ols, TooFewRowsIsAnError) {
  EXPECT_THROW(fit_ols_baseline(Tensor({3, 2}), std::vector<double>{1, 2, 3}), Error);
}

TEST(ClassicalErrorVariance, HandCase) {
  // r^2 = 27/28 and SSE = 1 with N - 2 = 1.
  EXPECT_NEAR(classical_error_variance(std::vector<double>{1, 2, 4}, std::vector<double>{1, 2, 3}) * 28.0, 1.0,
              1e-13);
  const std::vector<double> y{3, 1, 4, 1, 5};
  EXPECT_EQ(classical_error_variance(y, y), 0.0);
}

TEST(ClassicalErrorVariance, MatchesLongDoubleOracle) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> y(25), yhat(25);
    for (std::size_t i = 0; i < 25; ++i) {
      yhat[i] = d(gen);
      y[i] = yhat[i] + 0.5 * d(gen);
    }
    const long double expect = test_support::error_variance_oracle(y, yhat);
    EXPECT_NEAR(classical_error_variance(y, yhat) / static_cast<double>(expect), 1.0, 1e-12);
  }
}

TEST(ClassicalErrorVariance, ConstantPredictionUsesZeroCorrelation) {
  const std::vector<double> y{1, 2, 3, 4}, flat{2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(classical_error_variance(y, flat), (1.0 + 0.0 + 1.0 + 4.0) / 2.0);
}

// Model whose mean head reproduces relu(x0): every weight zero except a unit path.
DaeModel identity_model() {
  ModelConfig c;
  c.feature_dim = 1;
  c.hidden = {1};
  DaeModel m = DaeModel::zeros(c);
  m.parameter("trunk.0.weight").tensor[0] = 1.0;
  m.parameter("mean.weight").tensor[0] = 1.0;
  return m;
}

Dataset labelled(const std::vector<double>& labels) {
  Dataset d;
  d.feature_dim = 1;
  for (std::size_t i = 0; i < labels.size(); ++i)
    d.records.push_back({std::to_string(i), {labels[i]}, labels[i], std::nullopt, std::nullopt});
  return d;
}

TEST(Evaluate, PerfectModelScoresOne) {
  const EvalReport r = evaluate(identity_model(), labelled({0.5, 2.0, 1.0, 3.5, 7.0}));
  ASSERT_TRUE(r.rho_defined());
  EXPECT_EQ(*r.spearman_rho, 1.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.n, 5u);
  EXPECT_EQ(r.mean_sigma2, 1.0);
  EXPECT_EQ(r.mean_sigma, 1.0);
}

TEST(Evaluate, ConstantPredictionsFlagUndefinedRho) {
  ModelConfig c;
  c.feature_dim = 1;
  c.hidden = {2};
  const EvalReport r = evaluate(DaeModel::zeros(c), labelled({1, 2, 3}));
  EXPECT_FALSE(r.rho_defined());
  const auto doc = nlohmann::json::parse(report_json(r));
  EXPECT_FALSE(doc.at("rho_defined").get<bool>());
  EXPECT_TRUE(doc.at("rho").is_null());
}

TEST(Evaluate, SampleModeIsSeeded) {
  const Dataset d = labelled({0.5, 2.0, 1.0, 3.5});
  const auto a = evaluate(identity_model(), d, ReadoutMode::Sample, {}, 4);
  const auto b = evaluate(identity_model(), d, ReadoutMode::Sample, {}, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.rows[i].y_pred, b.rows[i].y_pred);
    EXPECT_EQ(a.rows[i].mu, d.records[i].label);
  }
  EXPECT_GT(a.rmse, 0.0);
}

TEST(Evaluate, ReportJsonKeysInOrder) {
  const EvalReport r = evaluate(identity_model(), labelled({1, 2, 3}));
  const auto doc = nlohmann::ordered_json::parse(report_json(r));
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"rho", "rho_defined", "rmse", "n", "mean_sigma2", "mean_sigma"}));
  std::ostringstream csv;
  write_report_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "id,y_true,mu,sigma2,y_pred");
}

TEST(Quartiles, LinearInterpolation) {
  const Quartiles q = quartiles(std::vector<double>{4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(q.q1, 1.75);
  EXPECT_DOUBLE_EQ(q.median, 2.5);
  EXPECT_DOUBLE_EQ(q.q3, 3.25);
  EXPECT_DOUBLE_EQ(q.iqr(), 1.5);
  const Quartiles one = quartiles(std::vector<double>{7});
  EXPECT_EQ(one.q1, 7.0);
  EXPECT_EQ(one.q3, 7.0);
  EXPECT_THROW(quartiles(std::vector<double>{}), Error);
}

}  // namespace
