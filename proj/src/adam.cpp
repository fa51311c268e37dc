#include "dae/adam.hpp"

#include <cmath>

#include "dae/error.hpp"
#include "dae/kernels.hpp"

namespace dae {

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Parameter& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.first_moment[i].size() != params[i].tensor.size())
      throw ShapeError("adam_step: moment buffer does not match parameter '" + params[i].name + "'");

  ++state.t;
  const double t = static_cast<double>(state.t);
  const kernels::AdamCoeffs coeffs{state.lr, state.beta1, state.beta2, state.eps,
                                   1.0 - std::pow(state.beta1, t), 1.0 - std::pow(state.beta2, t)};
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& tensor = params[i].tensor;
    tensor.ensure_grad();
    k.adam_update(tensor.size(), coeffs, tensor.grad().data(), state.first_moment[i].data(),
                  state.second_moment[i].data(), tensor.data().data());
  }
}

}  // namespace dae
