#pragma once

// JSON checkpoints:
//   { "format_version": 1, "kind": "mlp"|"mt"|"core", "F": <int>, "hidden": [...],
//     "interval_spec": [...] (core only), "parameters": { name: nested arrays },
//     "rng_seed": <int>, "train_config": {...} }
// Doubles are written in shortest round-trip form, so loading restores every
// parameter bit for bit.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dae/model.hpp"
#include "dae/trainer.hpp"

namespace dae {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  DaeModel model;
  TrainConfig train_config;
  std::uint64_t rng_seed = 0;
};

nlohmann::ordered_json train_config_to_json(const TrainConfig& config);

// Applies the recognised keys of `obj` to `config`. Unrecognised keys are appended to
// `unknown` when given, otherwise rejected with ConfigError.
void apply_train_config(TrainConfig& config, const nlohmann::json& obj, std::vector<std::string>* unknown = nullptr);

nlohmann::ordered_json checkpoint_to_json(const DaeModel& model, const TrainConfig& config, std::uint64_t rng_seed);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const DaeModel& model, const TrainConfig& config,
                     std::uint64_t rng_seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dae
