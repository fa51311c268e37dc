#pragma once

// Distribution auto-encoder regressors.
//
// All three variants share a fully connected ReLU trunk (F -> 512 -> 256 -> 128 by
// default) and differ in their read-out heads:
//   mlp   one (mean, log-variance) pair
//   mt    seven pairs, head j predicting the j-th smallest judge score
//   core  K interval logits plus one (mean, log-variance) pair for the offset inside
//         the selected interval
// Log-variance outputs are clamped to [-10, 10] so sigma^2 = exp(logvar) is positive
// and bounded.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dae/autodiff.hpp"
#include "dae/distributions.hpp"
#include "dae/tensor.hpp"

namespace dae {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;
inline constexpr std::size_t kJudgeCount = 7;

enum class ModelKind { Mlp, MultiJudge, Interval };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

enum class ReadoutMode { Mean, Sample };

std::string to_string(ReadoutMode mode);
ReadoutMode parse_readout_mode(std::string_view name);

// Ascending boundaries splitting [front, back] into K = size - 1 intervals.
struct IntervalSpec {
  std::vector<double> boundaries;

  static IntervalSpec uniform(double lo, double hi, std::size_t count);
  std::size_t count() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  double lo() const { return boundaries.front(); }
  double hi() const { return boundaries.back(); }
  // Interval holding y; values outside the range map to the first or last interval.
  std::size_t locate(double y) const;
  void validate() const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::Mlp;
  std::size_t feature_dim = 1024;
  std::vector<std::size_t> hidden{512, 256, 128};
  IntervalSpec intervals;  // core only

  void validate() const;
};

struct HeadOutput {
  Var mu;      // [batch]
  Var logvar;  // [batch], clamped
};

struct ForwardOutput {
  std::vector<HeadOutput> heads;
  std::optional<Var> interval_logits;  // [batch x K], core only
};

// Plain-value counterpart of ForwardOutput.
struct HeadValues {
  std::vector<double> mu;
  std::vector<double> logvar;
};

struct ForwardValues {
  std::vector<HeadValues> heads;
  Tensor interval_logits;  // empty unless core
};

class DaeModel {
 public:
  // Weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases zero.
  static DaeModel init(const ModelConfig& config, std::uint64_t seed);
  // Zero-filled parameters with the right names and shapes (checkpoint loading).
  static DaeModel zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  std::size_t feature_dim() const { return config_.feature_dim; }

  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  // Records a differentiable forward pass; x is [batch x F].
  ForwardOutput forward(Tape& tape, Var x);
  // Same graph with parameters read as constants.
  ForwardOutput forward(Tape& tape, Var x) const;

  // Kind-checked views of the forward pass.
  HeadOutput forward_mlp(Tape& tape, Var x);
  std::vector<HeadOutput> forward_mt(Tape& tape, Var x);

  // Evaluates every head on a batch without recording gradients.
  ForwardValues infer(const Tensor& x) const;

 private:
  explicit DaeModel(ModelConfig config);
  void add_linear(const std::string& name, std::size_t in, std::size_t out);
  template <typename Self>
  static ForwardOutput forward_impl(Self& self, Tape& tape, Var x);

  ModelConfig config_;
  std::vector<Parameter> params_;
};

void check_input_width(const DaeModel& model, const Tensor& x);

// Score read-out y = mu + eps * exp(logvar / 2); eps = 0 in mean mode.
std::vector<double> predict(const DaeModel& model, const Tensor& x, const DistributionFamily& family, Rng& rng,
                            ReadoutMode mode);

// (sum of the three middle sorted scores) * dd.
double aggregate_judges(std::span<const double> scores, double dd);

// Per-judge read-out followed by aggregate_judges with each row's difficulty degree.
// Noise is drawn row by row, judges 0..6 within a row.
std::vector<double> predict_mt_final(const DaeModel& model, const Tensor& x, std::span<const double> dd,
                                     const DistributionFamily& family, Rng& rng, ReadoutMode mode);

// Location mu * (right - left) + left plus noise sigma * eps * (right - left), with the
// location evaluated as (1 - mu) * left + mu * right so mu = 0 and mu = 1 land exactly
// on the boundaries. In mean mode (eps = 0) the result is kept inside [left, right].
double interval_readout(double left, double right, double offset, double sigma, double eps);

std::vector<double> interval_predict(const DaeModel& model, const Tensor& x, const DistributionFamily& family,
                                     Rng& rng, ReadoutMode mode);

}  // namespace dae
