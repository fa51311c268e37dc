#include "dae/model.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "dae/error.hpp"
#include "dae/format.hpp"
#include "dae/numeric.hpp"

namespace dae {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mlp: return "mlp";
    case ModelKind::MultiJudge: return "mt";
    case ModelKind::Interval: return "core";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "mt") return ModelKind::MultiJudge;
  if (name == "core") return ModelKind::Interval;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected mlp, mt or core)");
}

std::string to_string(ReadoutMode mode) { return mode == ReadoutMode::Mean ? "mean" : "sample"; }

ReadoutMode parse_readout_mode(std::string_view name) {
  if (name == "mean") return ReadoutMode::Mean;
  if (name == "sample") return ReadoutMode::Sample;
  throw ConfigError("unknown read-out mode '" + std::string(name) + "' (expected mean or sample)");
}

IntervalSpec IntervalSpec::uniform(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("interval count must be at least 1");
  if (!(hi > lo)) throw ConfigError("interval range must satisfy lo < hi");
  IntervalSpec spec;
  spec.boundaries.resize(count + 1);
  for (std::size_t i = 0; i <= count; ++i)
    spec.boundaries[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count);
  spec.boundaries.back() = hi;
  return spec;
}

void IntervalSpec::validate() const {
  if (boundaries.size() < 2) throw ConfigError("interval spec needs at least two boundaries");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (!(boundaries[i] > boundaries[i - 1])) throw ConfigError("interval boundaries must be strictly ascending");
}

std::size_t IntervalSpec::locate(double y) const {
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), y);
  if (it == boundaries.begin()) return 0;
  const auto k = static_cast<std::size_t>(it - boundaries.begin()) - 1;
  return std::min(k, count() - 1);
}

void ModelConfig::validate() const {
  if (feature_dim == 0) throw ConfigError("feature dimension must be at least 1");
  if (hidden.empty()) throw ConfigError("trunk needs at least one hidden layer");
  for (std::size_t width : hidden)
    if (width == 0) throw ConfigError("hidden layer widths must be positive");
  if (kind == ModelKind::Interval) intervals.validate();
}

DaeModel::DaeModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t in = config_.feature_dim;
  for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
    add_linear("trunk." + std::to_string(l), in, config_.hidden[l]);
    in = config_.hidden[l];
  }
  switch (config_.kind) {
    case ModelKind::Mlp:
      add_linear("mean", in, 1);
      add_linear("logvar", in, 1);
      break;
    case ModelKind::MultiJudge:
      for (std::size_t j = 0; j < kJudgeCount; ++j) {
        add_linear("judge" + std::to_string(j) + ".mean", in, 1);
        add_linear("judge" + std::to_string(j) + ".logvar", in, 1);
      }
      break;
    case ModelKind::Interval:
      add_linear("interval", in, config_.intervals.count());
      add_linear("within.mean", in, 1);
      add_linear("within.logvar", in, 1);
      break;
  }
}

void DaeModel::add_linear(const std::string& name, std::size_t in, std::size_t out) {
  params_.push_back(Parameter{name + ".weight", Tensor(Shape{in, out})});
  params_.push_back(Parameter{name + ".bias", Tensor(Shape{out})});
}

DaeModel DaeModel::zeros(const ModelConfig& config) { return DaeModel(config); }

DaeModel DaeModel::init(const ModelConfig& config, std::uint64_t seed) {
  DaeModel model(config);
  Rng rng(seed);
  for (Parameter& p : model.params_) {
    if (p.tensor.rank() != 2) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(p.tensor.shape()[0]));
    for (double& w : p.tensor.data()) w = rng.uniform(-bound, bound);
  }
  return model;
}

Parameter& DaeModel::parameter(std::string_view name) {
  for (Parameter& p : params_)
    if (p.name == name) return p;
  throw Error("no parameter named '" + std::string(name) + "'");
}

const Parameter& DaeModel::parameter(std::string_view name) const {
  return const_cast<DaeModel*>(this)->parameter(name);
}

std::size_t DaeModel::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.tensor.size();
  return total;
}

void DaeModel::zero_grad() {
  for (Parameter& p : params_) p.tensor.zero_grad();
}

void check_input_width(const DaeModel& model, const Tensor& x) {
  if (x.rank() != 2 || x.shape()[1] != model.feature_dim())
    throw ShapeError("model expects input [batch x " + std::to_string(model.feature_dim()) + "], got " +
                     shape_to_string(x.shape()));
}

template <typename Self>
ForwardOutput DaeModel::forward_impl(Self& self, Tape& tape, Var x) {
  check_input_width(self, tape.value(x));
  const std::size_t batch = tape.value(x).shape()[0];
  std::size_t next = 0;
  auto bind = [&](auto& param) {
    if constexpr (std::is_const_v<std::remove_reference_t<decltype(param)>>)
      return tape.constant_ref(param.tensor);
    else
      return tape.leaf(param.tensor);
  };
  auto linear = [&](Var in) {
    const Var w = bind(self.params_[next++]);
    const Var b = bind(self.params_[next++]);
    return add_bias(tape, matmul(tape, in, w), b);
  };
  auto head = [&](Var h) {
    const Var mu = reshape(tape, linear(h), Shape{batch});
    const Var logvar = clamp(tape, reshape(tape, linear(h), Shape{batch}), kLogvarMin, kLogvarMax);
    return HeadOutput{mu, logvar};
  };

  Var h = x;
  for (std::size_t l = 0; l < self.config_.hidden.size(); ++l) h = relu(tape, linear(h));

  ForwardOutput out;
  switch (self.config_.kind) {
    case ModelKind::Mlp:
      out.heads.push_back(head(h));
      break;
    case ModelKind::MultiJudge:
      for (std::size_t j = 0; j < kJudgeCount; ++j) out.heads.push_back(head(h));
      break;
    case ModelKind::Interval:
      out.interval_logits = linear(h);
      out.heads.push_back(head(h));
      break;
  }
  return out;
}

ForwardOutput DaeModel::forward(Tape& tape, Var x) { return forward_impl(*this, tape, x); }

ForwardOutput DaeModel::forward(Tape& tape, Var x) const { return forward_impl(*this, tape, x); }

HeadOutput DaeModel::forward_mlp(Tape& tape, Var x) {
  if (kind() != ModelKind::Mlp) throw ConfigError("forward_mlp on a " + to_string(kind()) + " model");
  return forward(tape, x).heads.front();
}

std::vector<HeadOutput> DaeModel::forward_mt(Tape& tape, Var x) {
  if (kind() != ModelKind::MultiJudge) throw ConfigError("forward_mt on a " + to_string(kind()) + " model");
  return forward(tape, x).heads;
}

ForwardValues DaeModel::infer(const Tensor& x) const {
  Tape tape;
  const ForwardOutput out = forward(tape, tape.constant_ref(x));
  ForwardValues values;
  for (const HeadOutput& h : out.heads) {
    const auto mu = tape.value(h.mu).data();
    const auto lv = tape.value(h.logvar).data();
    values.heads.push_back(HeadValues{{mu.begin(), mu.end()}, {lv.begin(), lv.end()}});
  }
  if (out.interval_logits) values.interval_logits = tape.value(*out.interval_logits);
  return values;
}

namespace {

double draw(const DistributionFamily& family, Rng& rng, ReadoutMode mode) {
  return mode == ReadoutMode::Sample ? sample_standard(family, rng) : 0.0;
}

double readout(double mu, double logvar, double eps) {
  if (eps == 0.0) return mu;
  return reparameterize(mu, std::exp(0.5 * logvar), eps);
}

void require_kind(const DaeModel& model, ModelKind kind, const char* op) {
  if (model.kind() != kind)
    throw ConfigError(std::string(op) + " needs a " + to_string(kind) + " model, got " + to_string(model.kind()));
}

}  // namespace

std::vector<double> predict(const DaeModel& model, const Tensor& x, const DistributionFamily& family, Rng& rng,
                            ReadoutMode mode) {
  require_kind(model, ModelKind::Mlp, "predict");
  family.validate();
  const ForwardValues values = model.infer(x);
  const HeadValues& head = values.heads.front();
  std::vector<double> scores(head.mu.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = readout(head.mu[i], head.logvar[i], draw(family, rng, mode));
  return scores;
}

double aggregate_judges(std::span<const double> scores, double dd) {
  if (scores.size() != kJudgeCount)
    throw DomainError("aggregate_judges: expected 7 judge scores, got " + std::to_string(scores.size()));
  if (!(dd > 0.0)) throw DomainError("aggregate_judges: difficulty degree must be positive, got " + format_double(dd));
  std::array<double, kJudgeCount> sorted;
  std::copy(scores.begin(), scores.end(), sorted.begin());
  std::sort(sorted.begin(), sorted.end());
  return (sorted[2] + sorted[3] + sorted[4]) * dd;
}

std::vector<double> predict_mt_final(const DaeModel& model, const Tensor& x, std::span<const double> dd,
                                     const DistributionFamily& family, Rng& rng, ReadoutMode mode) {
  require_kind(model, ModelKind::MultiJudge, "predict_mt_final");
  family.validate();
  const ForwardValues values = model.infer(x);
  const std::size_t batch = x.shape()[0];
  if (dd.size() != batch)
    throw ShapeError("predict_mt_final: " + std::to_string(dd.size()) + " difficulty degrees for " +
                     std::to_string(batch) + " rows");
  std::vector<double> finals(batch);
  std::array<double, kJudgeCount> judges;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < kJudgeCount; ++j)
      judges[j] = readout(values.heads[j].mu[i], values.heads[j].logvar[i], draw(family, rng, mode));
    finals[i] = aggregate_judges(judges, dd[i]);
  }
  return finals;
}

double interval_readout(double left, double right, double offset, double sigma, double eps) {
  const double location = (1.0 - offset) * left + offset * right;
  if (eps == 0.0) return std::clamp(location, left, right);
  return location + sigma * eps * (right - left);
}

std::vector<double> interval_predict(const DaeModel& model, const Tensor& x, const DistributionFamily& family,
                                     Rng& rng, ReadoutMode mode) {
  require_kind(model, ModelKind::Interval, "interval_predict");
  family.validate();
  const IntervalSpec& spec = model.config().intervals;
  if (spec.count() == 0) throw ConfigError("interval_predict: empty interval spec");
  const ForwardValues values = model.infer(x);
  const HeadValues& within = values.heads.front();
  const Tensor& logits = values.interval_logits;
  const std::size_t classes = spec.count();
  std::vector<double> scores(within.mu.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    const double offset = logistic_sigmoid(within.mu[i]);
    const double sigma = std::exp(0.5 * within.logvar[i]);
    scores[i] = interval_readout(spec.boundaries[best], spec.boundaries[best + 1], offset, sigma,
                                 draw(family, rng, mode));
  }
  return scores;
}

}  // namespace dae
