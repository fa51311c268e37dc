#pragma once

#include <string>
#include <string_view>

#include "dae/autodiff.hpp"

namespace dae {

// Weights of the reconstruction term (alpha) and the log-variance support term (beta).
struct LossWeights {
  double alpha = 0.6;
  double beta = 0.4;

  void validate() const;
};

enum class LossKind { Dae, Mse, Regression };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// mean( alpha * (y - mu)^2 / sigma^2 + beta * log sigma^2 ), sigma^2 = exp(logvar)
Var dae_loss(Tape& tape, Var mu, Var logvar, Var y, const LossWeights& weights);

// mean( (y - (mu + sigma^2))^2 )
Var mse_ablation_loss(Tape& tape, Var mu, Var logvar, Var y);

// mean( (y - mu)^2 ); logvar takes no part.
Var regression_baseline_loss(Tape& tape, Var mu, Var y);

Var head_loss(Tape& tape, LossKind kind, Var mu, Var logvar, Var y, const LossWeights& weights);

}  // namespace dae
