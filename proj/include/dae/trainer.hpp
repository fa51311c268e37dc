#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dae/adam.hpp"
#include "dae/dataset.hpp"
#include "dae/distributions.hpp"
#include "dae/losses.hpp"
#include "dae/model.hpp"

namespace dae {

struct TrainConfig {
  ModelKind model = ModelKind::Mlp;
  std::vector<std::size_t> hidden{512, 256, 128};
  std::size_t intervals = 8;  // core only
  LossKind loss = LossKind::Dae;
  LossWeights weights;
  DistributionFamily family;  // read-out noise for sampled evaluation
  double lr = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Model configuration implied by a training config and the training data. The core
// interval grid spans the training label range uniformly.
ModelConfig model_config_for(const TrainConfig& config, const Dataset& train);

// Loss of `model` on the records `indices` (all records when empty), recorded on `tape`.
//   mlp   selected head loss on the label
//   mt    mean over heads of the head loss, head j against the j-th smallest judge score
//   core  interval cross-entropy + head loss of sigmoid(mean) against the offset of the
//         label inside its true interval
Var training_loss(Tape& tape, DaeModel& model, const Dataset& data, std::span<const std::size_t> indices,
                  LossKind loss, const LossWeights& weights);

// One pass over `data` in an order shuffled from (seed, epoch). Returns the mean loss
// per example.
double train_epoch(DaeModel& model, const Dataset& data, const TrainConfig& config, AdamState& state,
                   std::size_t epoch);

struct HistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> eval_rho;
  double mean_sigma2 = 0.0;
};

struct FitResult {
  DaeModel best_model;
  std::size_t best_epoch = 0;
  std::optional<double> best_rho;
  std::vector<HistoryRow> history;
};

// Trains for config.epochs, evaluating Spearman on `eval` every eval_every epochs and
// after the last one, and keeps the model with the highest evaluation rho (earliest on ties).
FitResult fit(const TrainConfig& config, const Dataset& train, const Dataset& eval);

// `epoch,train_loss,eval_rho,mean_sigma2`; an undefined rho is written as `nan`.
void write_history_csv(std::ostream& out, std::span<const HistoryRow> history);

}  // namespace dae
