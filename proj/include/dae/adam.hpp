#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update of every parameter from its gradient buffer.
// Parameters that never received a gradient are treated as having gradient zero.
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace dae
