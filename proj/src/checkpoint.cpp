#include "dae/checkpoint.hpp"

#include <fstream>

#include "dae/error.hpp"

namespace dae {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json train_config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["model"] = to_string(c.model);
  j["hidden"] = c.hidden;
  j["intervals"] = c.intervals;
  j["loss"] = to_string(c.loss);
  j["alpha"] = c.weights.alpha;
  j["beta"] = c.weights.beta;
  j["family"] = c.family.name();
  j["df"] = c.family.degrees_of_freedom;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch_size;
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  return j;
}

namespace {

template <typename T>
T typed(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t count(const json& value, const std::string& key) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return value.get<std::size_t>();
}

}  // namespace

void apply_train_config(TrainConfig& c, const json& obj, std::vector<std::string>* unknown) {
  if (!obj.is_object()) throw ConfigError("training config must be a JSON object");
  std::string family_name = c.family.name();
  double df = c.family.degrees_of_freedom;
  for (const auto& [key, value] : obj.items()) {
    if (key == "model") c.model = parse_model_kind(typed<std::string>(value, key));
    else if (key == "hidden") {
      if (!value.is_array()) throw ConfigError("config key 'hidden' must be an array");
      c.hidden.clear();
      for (const auto& w : value) c.hidden.push_back(count(w, key));
    }
    else if (key == "intervals") c.intervals = count(value, key);
    else if (key == "loss") c.loss = parse_loss_kind(typed<std::string>(value, key));
    else if (key == "alpha") c.weights.alpha = typed<double>(value, key);
    else if (key == "beta") c.weights.beta = typed<double>(value, key);
    else if (key == "family") family_name = typed<std::string>(value, key);
    else if (key == "df") df = typed<double>(value, key);
    else if (key == "lr") c.lr = typed<double>(value, key);
    else if (key == "epochs") c.epochs = count(value, key);
    else if (key == "batch") c.batch_size = count(value, key);
    else if (key == "eval_every") c.eval_every = count(value, key);
    else if (key == "seed") c.seed = typed<std::uint64_t>(value, key);
    else if (unknown) unknown->push_back(key);
    else throw ConfigError("unknown training config key '" + key + "'");
  }
  c.family = parse_family(family_name, df);
}

ordered_json checkpoint_to_json(const DaeModel& model, const TrainConfig& config, std::uint64_t rng_seed) {
  ordered_json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["kind"] = to_string(model.kind());
  doc["F"] = model.feature_dim();
  doc["hidden"] = model.config().hidden;
  if (model.kind() == ModelKind::Interval) doc["interval_spec"] = model.config().intervals.boundaries;
  ordered_json params = ordered_json::object();
  for (const Parameter& p : model.parameters()) {
    const Tensor& t = p.tensor;
    if (t.rank() == 2) {
      ordered_json rows = ordered_json::array();
      for (std::size_t i = 0; i < t.rows(); ++i) {
        const auto row = t.data().subspan(i * t.cols(), t.cols());
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      params[p.name] = std::move(rows);
    } else {
      params[p.name] = std::vector<double>(t.data().begin(), t.data().end());
    }
  }
  doc["parameters"] = std::move(params);
  doc["rng_seed"] = rng_seed;
  doc["train_config"] = train_config_to_json(config);
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointVersion)
      throw DataError("unsupported checkpoint format_version " + doc.at("format_version").dump());
    ModelConfig mc;
    mc.kind = parse_model_kind(doc.at("kind").get<std::string>());
    mc.feature_dim = doc.at("F").get<std::size_t>();
    mc.hidden = doc.at("hidden").get<std::vector<std::size_t>>();
    if (mc.kind == ModelKind::Interval) mc.intervals.boundaries = doc.at("interval_spec").get<std::vector<double>>();

    DaeModel model = DaeModel::zeros(mc);
    const json& params = doc.at("parameters");
    if (params.size() != model.parameters().size())
      throw DataError("checkpoint holds " + std::to_string(params.size()) + " parameters, model needs " +
                      std::to_string(model.parameters().size()));
    for (Parameter& p : model.parameters()) {
      const json& value = params.at(p.name);
      std::vector<double> flat;
      if (p.tensor.rank() == 2) {
        for (const auto& row : value) {
          const auto r = row.get<std::vector<double>>();
          if (r.size() != p.tensor.cols()) throw DataError("checkpoint parameter '" + p.name + "' has a malformed row");
          flat.insert(flat.end(), r.begin(), r.end());
        }
      } else {
        flat = value.get<std::vector<double>>();
      }
      if (flat.size() != p.tensor.size())
        throw DataError("checkpoint parameter '" + p.name + "' has " + std::to_string(flat.size()) + " values, expected " +
                        std::to_string(p.tensor.size()));
      std::copy(flat.begin(), flat.end(), p.tensor.data().begin());
    }
    TrainConfig tc;
    apply_train_config(tc, doc.at("train_config"));
    return Checkpoint{std::move(model), std::move(tc), doc.at("rng_seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const DaeModel& model, const TrainConfig& config,
                     std::uint64_t rng_seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, config, rng_seed).dump() << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace dae
