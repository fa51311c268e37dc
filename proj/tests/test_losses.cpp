#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dae/autodiff.hpp"
#include "dae/error.hpp"
#include "dae/losses.hpp"
#include "support.hpp"

using namespace dae;

namespace {

struct Batch {
  std::vector<double> mu, logvar, y;
};

double eval_loss(LossKind kind, const Batch& b, const LossWeights& w = {}) {
  Tape tape;
  const Var l = head_loss(tape, kind, tape.constant(Tensor::vector(b.mu)), tape.constant(Tensor::vector(b.logvar)),
                          tape.constant(Tensor::vector(b.y)), w);
  return tape.value(l).item();
}

TEST(DaeLoss, HandCases) {
  EXPECT_DOUBLE_EQ(eval_loss(LossKind::Dae, {{1.0}, {0.0}, {2.0}}), 0.6);
  EXPECT_EQ(eval_loss(LossKind::Dae, {{3.0}, {0.0}, {3.0}}), 0.0);
  // alpha = 1, beta = 0, sigma^2 = 1 reduces to plain MSE.
  const Batch b{{0.0, 1.0, -2.0}, {0.0, 0.0, 0.0}, {1.0, 3.0, 0.0}};
  EXPECT_DOUBLE_EQ(eval_loss(LossKind::Dae, b, {1.0, 0.0}), (1.0 + 4.0 + 4.0) / 3.0);
}

TEST(DaeLoss, DecomposesIntoReconstructionAndSupport) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Batch b;
  for (int i = 0; i < 9; ++i) {
    b.mu.push_back(u(gen));
    b.logvar.push_back(u(gen));
    b.y.push_back(u(gen));
  }
  double rec = 0.0, sup = 0.0;
  for (int i = 0; i < 9; ++i) {
    rec += (b.y[i] - b.mu[i]) * (b.y[i] - b.mu[i]) / std::exp(b.logvar[i]);
    sup += b.logvar[i];
  }
  rec /= 9;
  sup /= 9;
  EXPECT_NEAR(eval_loss(LossKind::Dae, b, {0.6, 0.4}), 0.6 * rec + 0.4 * sup, 1e-13);
  EXPECT_NEAR(eval_loss(LossKind::Dae, b, {1.0, 0.0}), rec, 1e-13);
  EXPECT_NEAR(eval_loss(LossKind::Dae, b, {0.0, 1.0}), sup, 1e-13);
}

TEST(DaeLoss, GoldenSectionFindsTheClosedFormMinimizer) {
  const LossWeights w{0.6, 0.4};
  for (double r : {0.05, 0.3, 1.0, 2.5}) {
    const double u = test_support::golden_section_min(
        [&](double lv) { return eval_loss(LossKind::Dae, {{1.0}, {lv}, {1.0 + r}}, w); }, -30.0, 30.0);
    EXPECT_NEAR(std::exp(u) / (w.alpha / w.beta * r * r), 1.0, 1e-6) << "residual " << r;
  }
}

TEST(DaeLoss, GradientsMatchFiniteDifferences) {
  const LossWeights w{0.6, 0.4};
  Tensor mu = Tensor::vector({0.2, -1.0, 0.7}), lv = Tensor::vector({0.3, -0.5, 1.2});
  const Tensor y = Tensor::vector({1.0, -0.2, 0.1});
  Tape tape;
  const Var vmu = tape.leaf(mu), vlv = tape.leaf(lv);
  tape.backward(dae_loss(tape, vmu, vlv, tape.constant(y), w));
  for (std::size_t i = 0; i < 3; ++i) {
    const double r = y[i] - mu[i], s2 = std::exp(lv[i]);
    EXPECT_NEAR(tape.grad(vmu)[i], -2.0 * w.alpha * r / s2 / 3.0, 1e-14);
    EXPECT_NEAR(tape.grad(vlv)[i], (-w.alpha * r * r / s2 + w.beta) / 3.0, 1e-14);
  }
}

TEST(MseAblationLoss, HandCases) {
  EXPECT_EQ(eval_loss(LossKind::Mse, {{1.0}, {0.0}, {2.0}}), 0.0);
  const double tiny = eval_loss(LossKind::Mse, {{4.0}, {-10.0}, {4.0}});
  EXPECT_LT(tiny, 1e-8);
  EXPECT_NEAR(tiny, std::exp(-20.0), 1e-9 * std::exp(-20.0));
}

TEST(RegressionBaselineLoss, HandCasesAndIgnoresLogvar) {
  EXPECT_EQ(eval_loss(LossKind::Regression, {{3.0}, {0.0}, {3.0}}), 0.0);
  EXPECT_EQ(eval_loss(LossKind::Regression, {{0.0, 0.0}, {0.0, 0.0}, {1.0, 3.0}}), 5.0);
  EXPECT_EQ(eval_loss(LossKind::Regression, {{0.0, 0.0}, {7.0, -3.0}, {1.0, 3.0}}), 5.0);
}

TEST(LossWeights, Validation) {
  EXPECT_NO_THROW((LossWeights{0.6, 0.4}).validate());
  EXPECT_THROW((LossWeights{-0.1, 0.4}).validate(), ConfigError);
  EXPECT_THROW((LossWeights{0.0, 0.0}).validate(), ConfigError);
  EXPECT_THROW(parse_loss_kind("huber"), ConfigError);
  for (LossKind k : {LossKind::Dae, LossKind::Mse, LossKind::Regression}) EXPECT_EQ(parse_loss_kind(to_string(k)), k);
}

TEST(Losses, ShapeMismatchIsRejected) {
  Tape tape;
  EXPECT_THROW(dae_loss(tape, tape.constant(Tensor::vector({1, 2})), tape.constant(Tensor::vector({0, 0})),
                        tape.constant(Tensor::vector({1})), {}),
               ShapeError);
}

}  // namespace
