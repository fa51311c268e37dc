#include "dae/losses.hpp"

#include "dae/error.hpp"

namespace dae {

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (alpha == 0.0 && beta == 0.0) throw ConfigError("loss weights alpha and beta cannot both be zero");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Dae: return "dae";
    case LossKind::Mse: return "mse";
    case LossKind::Regression: return "regression";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "dae") return LossKind::Dae;
  if (name == "mse") return LossKind::Mse;
  if (name == "regression") return LossKind::Regression;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected dae, mse or regression)");
}

Var dae_loss(Tape& tape, Var mu, Var logvar, Var y, const LossWeights& weights) {
  const Var residual2 = square(tape, sub(tape, y, mu));
  const Var precision = exp(tape, scale(tape, logvar, -1.0));
  const Var reconstruction = mul(tape, residual2, precision);
  const Var per_example =
      add(tape, scale(tape, reconstruction, weights.alpha), scale(tape, logvar, weights.beta));
  return reduce_mean(tape, per_example);
}

Var mse_ablation_loss(Tape& tape, Var mu, Var logvar, Var y) {
  const Var predicted = add(tape, mu, exp(tape, logvar));
  return reduce_mean(tape, square(tape, sub(tape, y, predicted)));
}

Var regression_baseline_loss(Tape& tape, Var mu, Var y) {
  return reduce_mean(tape, square(tape, sub(tape, y, mu)));
}

Var head_loss(Tape& tape, LossKind kind, Var mu, Var logvar, Var y, const LossWeights& weights) {
  switch (kind) {
    case LossKind::Dae: return dae_loss(tape, mu, logvar, y, weights);
    case LossKind::Mse: return mse_ablation_loss(tape, mu, logvar, y);
    case LossKind::Regression: return regression_baseline_loss(tape, mu, y);
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace dae
