#include "dae/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "dae/error.hpp"
#include "dae/format.hpp"
#include "dae/metrics.hpp"

namespace dae {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (hidden.empty()) throw ConfigError("trunk needs at least one hidden layer");
  if (model == ModelKind::Interval && intervals == 0) throw ConfigError("core model needs at least one interval");
  weights.validate();
  family.validate();
}

ModelConfig model_config_for(const TrainConfig& config, const Dataset& train) {
  ModelConfig mc;
  mc.kind = config.model;
  mc.feature_dim = train.feature_dim;
  mc.hidden = config.hidden;
  if (config.model == ModelKind::Interval) {
    if (train.empty()) throw DataError("core model needs training labels to place its intervals");
    const auto labels = train.labels();
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    if (!(*hi > *lo)) throw DataError("core model needs a non-constant label range");
    mc.intervals = IntervalSpec::uniform(*lo, *hi, config.intervals);
  }
  mc.validate();
  return mc;
}

Var training_loss(Tape& tape, DaeModel& model, const Dataset& data, std::span<const std::size_t> indices,
                  LossKind loss, const LossWeights& weights) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = all;
  }
  const std::size_t batch = indices.size();
  const Var x = tape.constant(data.features(indices));
  const ForwardOutput out = model.forward(tape, x);

  switch (model.kind()) {
    case ModelKind::Mlp: {
      std::vector<double> y(batch);
      for (std::size_t i = 0; i < batch; ++i) y[i] = data.records[indices[i]].label;
      const HeadOutput& h = out.heads.front();
      return head_loss(tape, loss, h.mu, h.logvar, tape.constant(Tensor::vector(std::move(y))), weights);
    }
    case ModelKind::MultiJudge: {
      std::vector<std::array<double, kJudgeCount>> sorted(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto& judges = data.records[indices[i]].judges;
        if (!judges) throw DataError("mt training needs judge scores (record '" + data.records[indices[i]].id + "')");
        sorted[i] = *judges;
        std::sort(sorted[i].begin(), sorted[i].end());
      }
      std::optional<Var> total;
      for (std::size_t j = 0; j < kJudgeCount; ++j) {
        std::vector<double> y(batch);
        for (std::size_t i = 0; i < batch; ++i) y[i] = sorted[i][j];
        const HeadOutput& h = out.heads[j];
        const Var l = head_loss(tape, loss, h.mu, h.logvar, tape.constant(Tensor::vector(std::move(y))), weights);
        total = total ? add(tape, *total, l) : l;
      }
      return scale(tape, *total, 1.0 / static_cast<double>(kJudgeCount));
    }
    case ModelKind::Interval: {
      const IntervalSpec& spec = model.config().intervals;
      std::vector<std::size_t> classes(batch);
      std::vector<double> offsets(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const double y = data.records[indices[i]].label;
        const std::size_t k = spec.locate(y);
        const double left = spec.boundaries[k], right = spec.boundaries[k + 1];
        classes[i] = k;
        offsets[i] = std::clamp((y - left) / (right - left), 0.0, 1.0);
      }
      const Var ce = reduce_mean(tape, softmax_cross_entropy(tape, *out.interval_logits, classes));
      const HeadOutput& h = out.heads.front();
      const Var offset_mu = sigmoid(tape, h.mu);
      const Var within =
          head_loss(tape, loss, offset_mu, h.logvar, tape.constant(Tensor::vector(std::move(offsets))), weights);
      return add(tape, ce, within);
    }
  }
  throw ConfigError("unknown model kind");
}

double train_epoch(DaeModel& model, const Dataset& data, const TrainConfig& config, AdamState& state,
                   std::size_t epoch) {
  if (data.empty()) throw DataError("train_epoch: empty dataset");
  if (data.feature_dim != model.feature_dim())
    throw ShapeError("model expects " + std::to_string(model.feature_dim()) + " features, dataset has " +
                     std::to_string(data.feature_dim));
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(config.seed, epoch + 1);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  double weighted_loss = 0.0;
  for (std::size_t start = 0; start < n; start += config.batch_size) {
    const std::size_t stop = std::min(n, start + config.batch_size);
    const std::span<const std::size_t> batch(order.data() + start, stop - start);
    model.zero_grad();
    Tape tape;
    const Var loss = training_loss(tape, model, data, batch, config.loss, config.weights);
    tape.backward(loss);
    adam_step(model.parameters(), state);
    weighted_loss += tape.value(loss).item() * static_cast<double>(batch.size());
  }
  return weighted_loss / static_cast<double>(n);
}

FitResult fit(const TrainConfig& config, const Dataset& train, const Dataset& eval) {
  config.validate();
  if (train.empty() || eval.empty()) throw DataError("fit needs non-empty training and evaluation splits");
  if (train.feature_dim != eval.feature_dim) throw ShapeError("training and evaluation feature widths differ");
  if (config.model == ModelKind::MultiJudge && (!train.has_judges() || !eval.has_judges()))
    throw DataError("mt model needs judge scores and difficulty degrees in both splits");
  {
    std::unordered_set<std::string> ids;
    for (const auto& r : train.records) ids.insert(r.id);
    for (const auto& r : eval.records)
      if (ids.count(r.id)) throw DataError("record '" + r.id + "' appears in both training and evaluation splits");
  }

  DaeModel model = DaeModel::init(model_config_for(config, train), config.seed);
  AdamState state;
  state.lr = config.lr;
  FitResult result{model, 0, std::nullopt, {}};

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double loss = train_epoch(model, train, config, state, epoch);
    if (epoch % config.eval_every != 0 && epoch != config.epochs) continue;
    const EvalReport report = evaluate(model, eval, ReadoutMode::Mean, config.family, config.seed);
    result.history.push_back(HistoryRow{epoch, loss, report.spearman_rho, report.mean_sigma2});
    const bool better = report.spearman_rho && (!result.best_rho || *report.spearman_rho > *result.best_rho);
    if (better || result.best_epoch == 0) {
      if (better) result.best_rho = report.spearman_rho;
      result.best_epoch = epoch;
      result.best_model = model;
    }
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const HistoryRow> history) {
  out << "epoch,train_loss,eval_rho,mean_sigma2\n";
  for (const auto& row : history)
    out << row.epoch << ',' << format_double(row.train_loss) << ',' << (row.eval_rho ? format_double(*row.eval_rho) : "nan")
        << ',' << format_double(row.mean_sigma2) << '\n';
}

}  // namespace dae
