#pragma once

#include <string>
#include <vector>

#include "dae/dataset.hpp"
#include "dae/losses.hpp"
#include "dae/model.hpp"

namespace dae {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;          // h = step * (|theta| + 1)
  bool corrupt_backward = false;  // negative control
};

struct ParameterGradError {
  std::string name;
  double max_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParameterGradError> parameters;
  double max_error = 0.0;
  bool passed = false;
};

// Compares the analytic gradient of training_loss on `data` with central finite
// differences for every parameter entry. The error of one entry is
//   |analytic - numeric| / max(1, |analytic|, |numeric|),
// i.e. relative for gradients above 1 and absolute below.
GradCheckReport finite_diff_check(DaeModel& model, const Dataset& data, LossKind loss, const LossWeights& weights,
                                  const GradCheckOptions& options = {});

}  // namespace dae
