#include "dae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dae/error.hpp"
#include "dae/trainer.hpp"

namespace dae {

GradCheckReport finite_diff_check(DaeModel& model, const Dataset& data, LossKind loss, const LossWeights& weights,
                                  const GradCheckOptions& options) {
  if (data.empty()) throw DataError("finite_diff_check: empty batch");

  model.zero_grad();
  {
    Tape tape;
    tape.set_corrupt_backward(options.corrupt_backward);
    tape.backward(training_loss(tape, model, data, {}, loss, weights));
  }

  auto loss_value = [&] {
    Tape tape;
    return tape.value(training_loss(tape, model, data, {}, loss, weights)).item();
  };

  GradCheckReport report;
  for (Parameter& p : model.parameters()) {
    ParameterGradError entry{p.name, 0.0};
    auto values = p.tensor.data();
    const auto analytic = p.tensor.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      const double h = options.step * (std::abs(original) + 1.0);
      values[i] = original + h;
      const double up = loss_value();
      values[i] = original - h;
      const double down = loss_value();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      entry.max_error = std::max(entry.max_error, std::abs(analytic[i] - numeric) / scale);
    }
    report.max_error = std::max(report.max_error, entry.max_error);
    report.parameters.push_back(std::move(entry));
  }
  report.passed = report.max_error < options.tolerance;
  return report;
}

}  // namespace dae
