#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dae/checkpoint.hpp"
#include "dae/dataset.hpp"
#include "dae/distributions.hpp"
#include "dae/error.hpp"
#include "dae/format.hpp"
#include "dae/gradcheck.hpp"
#include "dae/metrics.hpp"
#include "dae/model.hpp"
#include "dae/trainer.hpp"

namespace dae::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Every value a command can take, from flags or from the --config JSON file.
struct Settings {
  std::string config;
  std::string data;
  std::string eval_data;
  std::string checkpoint;
  std::string out = ".";

  std::string model = "mlp";
  std::string hidden = "512,256,128";
  std::size_t intervals = 8;
  std::string loss = "dae";
  double alpha = 0.6;
  double beta = 0.4;
  std::string family = "gaussian";
  double df = 3.0;
  double lr = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  double split = 0.75;

  std::size_t n = 1000;
  std::size_t features = 8;
  std::string mean_fn = "sine";
  double mean_scale = 1.0;
  double mean_offset = 0.0;
  std::string noise_fn = "affine";
  double noise_a = 0.05;
  double noise_b = 0.2;
  bool judges = false;
  double judge_noise = 0.3;
  double dd_min = 1.5;
  double dd_max = 3.5;
  std::string format = "csv";

  std::string mode = "mean";
  std::size_t points = 201;
  double sigmas = 4.0;
  std::vector<std::string> ids;
  std::size_t head = 0;

  std::string check_hidden = "64,32,16";
  std::size_t check_batch = 4;
  std::string check_models = "all";
  double tol = 1e-4;
  bool corrupt = false;

  std::size_t replicas = 20;
  std::size_t threads = 0;
  bool same_seed = false;
};

// Binds flags to Settings fields and remembers how to merge file values under them.
class Binder {
 public:
  Binder(CLI::App* app, Settings& cli) : app_(app), cli_(cli) {}

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& key, std::function<T&(Settings&)> field,
                   const std::string& help) {
    CLI::Option* opt = app_->add_option(flag, field(cli_), help)->capture_default_str();
    bindings_.push_back(Binding{
        opt, key,
        [field](Settings& dst, const Settings& src) { field(dst) = field(const_cast<Settings&>(src)); },
        [field, key](Settings& dst, const json& value) {
          try {
            if constexpr (std::is_same_v<T, std::string>) {
              if (key == "hidden" || key == "check_hidden") {
                if (value.is_array()) {
                  std::string joined;
                  for (const auto& w : value) joined += (joined.empty() ? "" : ",") + std::to_string(w.get<std::size_t>());
                  field(dst) = joined;
                  return;
                }
              }
            }
            field(dst) = value.get<T>();
          } catch (const json::exception&) {
            throw ConfigError("config key '" + key + "' has the wrong type");
          }
        }});
    return opt;
  }

  CLI::Option* flag(const std::string& flag, const std::string& key, std::function<bool&(Settings&)> field,
                    const std::string& help) {
    CLI::Option* opt = app_->add_flag(flag, field(cli_), help);
    bindings_.push_back(Binding{
        opt, key, [field](Settings& dst, const Settings& src) { field(dst) = field(const_cast<Settings&>(src)); },
        [field, key](Settings& dst, const json& value) {
          if (!value.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
          field(dst) = value.get<bool>();
        }});
    return opt;
  }

  bool given(const std::string& key) const {
    for (const auto& b : bindings_)
      if (b.key == key) return b.option->count() > 0;
    return false;
  }

  void collect_keys(std::set<std::string>& keys) const {
    for (const auto& b : bindings_) keys.insert(b.key);
  }

  // Defaults, then the config file (keys of other commands are ignored), then flags.
  Settings resolve(const std::set<std::string>& all_keys) const {
    Settings merged;
    merged.config = cli_.config;
    if (!cli_.config.empty()) {
      std::ifstream in(cli_.config);
      if (!in) throw ConfigError("cannot open config file " + cli_.config);
      json doc;
      try {
        in >> doc;
      } catch (const json::exception& e) {
        throw ConfigError("config file " + cli_.config + " is not valid JSON: " + e.what());
      }
      if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
      for (const auto& [key, value] : doc.items()) {
        if (!all_keys.count(key)) throw ConfigError("unknown config key '" + key + "'");
        for (const auto& b : bindings_)
          if (b.key == key) b.from_json(merged, value);
      }
    }
    for (const auto& b : bindings_)
      if (b.option->count() > 0) b.copy(merged, cli_);
    return merged;
  }

 private:
  struct Binding {
    CLI::Option* option;
    std::string key;
    std::function<void(Settings&, const Settings&)> copy;
    std::function<void(Settings&, const json&)> from_json;
  };

  CLI::App* app_;
  Settings& cli_;
  std::vector<Binding> bindings_;
};

#define FIELD(type, name) std::function<type&(Settings&)>([](Settings& s) -> type& { return s.name; })

std::vector<std::size_t> parse_widths(const std::string& text, const char* what) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t value = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || value == 0)
      throw ConfigError(std::string(what) + " must be a comma-separated list of positive integers, got '" + text + "'");
    widths.push_back(value);
  }
  if (widths.empty()) throw ConfigError(std::string(what) + " must not be empty");
  return widths;
}

TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  c.model = parse_model_kind(s.model);
  c.hidden = parse_widths(s.hidden, "--hidden");
  c.intervals = s.intervals;
  c.loss = parse_loss_kind(s.loss);
  c.weights = LossWeights{s.alpha, s.beta};
  c.family = parse_family(s.family, s.df);
  c.lr = s.lr;
  c.epochs = s.epochs;
  c.batch_size = s.batch;
  c.eval_every = s.eval_every;
  c.seed = s.seed;
  c.validate();
  return c;
}

SyntheticSpec synthetic_spec(const Settings& s) {
  SyntheticSpec spec;
  spec.n = s.n;
  spec.feature_dim = s.features;
  spec.mean_fn = parse_mean_fn(s.mean_fn);
  spec.mean_scale = s.mean_scale;
  spec.mean_offset = s.mean_offset;
  spec.noise_fn = parse_noise_fn(s.noise_fn);
  spec.noise_a = s.noise_a;
  spec.noise_b = s.noise_b;
  spec.seed = s.seed;
  spec.validate();
  return spec;
}

fs::path prepare_out(const Settings& s) {
  const fs::path dir(s.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::pair<Dataset, Dataset> train_eval_split(const Settings& s) {
  if (s.data.empty()) throw ConfigError("--data is required");
  Dataset data = load_dataset(s.data);
  if (!s.eval_data.empty()) return {std::move(data), load_dataset(s.eval_data)};
  return split(data, s.split, s.seed);
}

void add_train_options(Binder& b) {
  b.add<std::string>("--model", "model", FIELD(std::string, model), "Model kind: mlp, mt or core");
  b.add<std::string>("--hidden", "hidden", FIELD(std::string, hidden), "Trunk layer widths, comma separated");
  b.add<std::size_t>("--intervals", "intervals", FIELD(std::size_t, intervals), "Interval count for the core model");
  b.add<std::string>("--loss", "loss", FIELD(std::string, loss), "Loss: dae, mse or regression");
  b.add<double>("--alpha", "alpha", FIELD(double, alpha), "Weight of the reconstruction term");
  b.add<double>("--beta", "beta", FIELD(double, beta), "Weight of the log-variance term");
  b.add<std::string>("--family", "family", FIELD(std::string, family),
                     "Noise family: gaussian, laplace, logistic, studentt, triangular, logisticnormal");
  b.add<double>("--df", "df", FIELD(double, df), "Student-t degrees of freedom");
  b.add<double>("--lr", "lr", FIELD(double, lr), "Adam learning rate");
  b.add<std::size_t>("--epochs", "epochs", FIELD(std::size_t, epochs), "Training epochs");
  b.add<std::size_t>("--batch", "batch", FIELD(std::size_t, batch), "Minibatch size");
  b.add<std::size_t>("--eval-every", "eval_every", FIELD(std::size_t, eval_every), "Evaluate every N epochs");
  b.add<std::uint64_t>("--seed", "seed", FIELD(std::uint64_t, seed), "Random seed");
  b.add<double>("--split", "split", FIELD(double, split), "Training fraction when --eval-data is absent");
  b.add<std::string>("--data", "data", FIELD(std::string, data), "Dataset (.csv or .daef)");
  b.add<std::string>("--eval-data", "eval_data", FIELD(std::string, eval_data), "Separate evaluation dataset");
  b.add<std::string>("--out", "out", FIELD(std::string, out), "Output directory");
}

// ---------------------------------------------------------------------------- commands

int cmd_synth(const Settings& s, std::ostream& out) {
  const SyntheticSpec spec = synthetic_spec(s);
  SyntheticData synth = synth_heteroscedastic(spec);
  Dataset data = synth.data;
  if (s.judges) data = synth_judges(data, JudgeSpec{s.judge_noise, s.dd_min, s.dd_max, s.seed});
  if (s.format != "csv" && s.format != "bin") throw ConfigError("--format must be csv or bin");
  const fs::path dir = prepare_out(s);
  const fs::path data_path = dir / (s.format == "bin" ? "data.daef" : "data.csv");
  save_dataset(data_path, data);
  std::ostringstream sigma;
  write_sigma_csv(sigma, synth);
  write_text(dir / "sigma.csv", sigma.str());
  out << "wrote " << data.size() << " records to " << data_path.string() << '\n';
  return kExitOk;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const TrainConfig config = train_config(s);
  const auto [train, eval] = train_eval_split(s);
  const FitResult result = fit(config, train, eval);
  const fs::path dir = prepare_out(s);
  save_checkpoint(dir / "best.json", result.best_model, config, config.seed);
  std::ostringstream history;
  write_history_csv(history, result.history);
  write_text(dir / "history.csv", history.str());
  out << "best epoch " << result.best_epoch << " eval rho "
      << (result.best_rho ? format_double(*result.best_rho) : std::string("undefined")) << '\n';
  return kExitOk;
}

int cmd_eval(const Settings& s, const Binder& b, std::ostream& out) {
  if (s.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (s.data.empty()) throw ConfigError("--data is required");
  const Checkpoint ckpt = load_checkpoint(s.checkpoint);
  const Dataset data = load_dataset(s.data);
  if (data.feature_dim != ckpt.model.feature_dim())
    throw DataError("incompatible checkpoint and dataset: model expects " + std::to_string(ckpt.model.feature_dim()) +
                    " features, dataset has " + std::to_string(data.feature_dim));
  const DistributionFamily family = b.given("family") ? parse_family(s.family, s.df) : ckpt.train_config.family;
  const EvalReport report = evaluate(ckpt.model, data, parse_readout_mode(s.mode), family, s.seed);
  const fs::path dir = prepare_out(s);
  std::ostringstream csv;
  write_report_csv(csv, report);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.json", report_json(report) + "\n");
  out << "eval rho " << (report.spearman_rho ? format_double(*report.spearman_rho) : std::string("undefined"))
      << " rmse " << format_double(report.rmse) << " n " << report.n << '\n';
  return kExitOk;
}

std::string safe_file_id(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return out;
}

int cmd_sample_dist(const Settings& s, const Binder& b, std::ostream& out) {
  if (s.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (s.data.empty()) throw ConfigError("--data is required");
  if (s.points == 0) throw ConfigError("--points must be positive");
  if (!(s.sigmas > 0.0)) throw ConfigError("--sigmas must be positive");
  const Checkpoint ckpt = load_checkpoint(s.checkpoint);
  const Dataset data = load_dataset(s.data);
  if (data.feature_dim != ckpt.model.feature_dim())
    throw DataError("incompatible checkpoint and dataset: feature widths differ");
  const DistributionFamily family = b.given("family") ? parse_family(s.family, s.df) : ckpt.train_config.family;
  if (ckpt.model.kind() == ModelKind::MultiJudge && s.head >= kJudgeCount) throw ConfigError("--head must be in 0..6");

  std::vector<std::string> ids = s.ids;
  if (ids.empty()) ids.push_back(data.records.front().id);
  const fs::path dir = prepare_out(s);
  for (const std::string& id : ids) {
    const auto it = std::find_if(data.records.begin(), data.records.end(), [&](const auto& r) { return r.id == id; });
    if (it == data.records.end()) throw DataError("unknown record id '" + id + "'");
    Dataset one;
    one.feature_dim = data.feature_dim;
    one.records.push_back(*it);
    const ForwardValues v = ckpt.model.infer(one.features());
    double location = 0.0, scale = 0.0;
    switch (ckpt.model.kind()) {
      case ModelKind::Mlp:
        location = v.heads[0].mu[0];
        scale = std::exp(0.5 * v.heads[0].logvar[0]);
        break;
      case ModelKind::MultiJudge:
        location = v.heads[s.head].mu[0];
        scale = std::exp(0.5 * v.heads[s.head].logvar[0]);
        break;
      case ModelKind::Interval: {
        const IntervalSpec& spec = ckpt.model.config().intervals;
        Rng unused(0);
        location = interval_predict(ckpt.model, one.features(), family, unused, ReadoutMode::Mean)[0];
        std::size_t best = 0;
        for (std::size_t c = 1; c < spec.count(); ++c)
          if (v.interval_logits.at(0, c) > v.interval_logits.at(0, best)) best = c;
        scale = std::exp(0.5 * v.heads[0].logvar[0]) * (spec.boundaries[best + 1] - spec.boundaries[best]);
        break;
      }
    }
    const auto curve =
        density_curve(location, scale, family, Grid{location - s.sigmas * scale, location + s.sigmas * scale, s.points});
    std::ostringstream csv;
    write_density_csv(csv, curve);
    const fs::path path = dir / ("density_" + safe_file_id(id) + ".csv");
    write_text(path, csv.str());
    out << "record " << id << " location " << format_double(location) << " scale " << format_double(scale) << " -> "
        << path.string() << '\n';
  }
  return kExitOk;
}

int cmd_check_grad(const Settings& s, std::ostream& out) {
  const auto hidden = parse_widths(s.check_hidden, "--hidden");
  if (s.check_batch == 0) throw ConfigError("--batch must be positive");
  std::vector<ModelKind> kinds;
  if (s.check_models == "all")
    kinds = {ModelKind::Mlp, ModelKind::MultiJudge, ModelKind::Interval};
  else
    kinds = {parse_model_kind(s.check_models)};
  const LossWeights weights{s.alpha, s.beta};
  weights.validate();

  SyntheticSpec spec;
  spec.n = s.check_batch;
  spec.feature_dim = s.features;
  spec.seed = s.seed;
  const Dataset batch = synth_judges(synth_heteroscedastic(spec).data, JudgeSpec{0.3, 1.5, 3.5, s.seed});

  GradCheckOptions options;
  options.tolerance = s.tol;
  options.corrupt_backward = s.corrupt;
  bool all_passed = true;
  for (ModelKind kind : kinds) {
    TrainConfig tc;
    tc.model = kind;
    tc.hidden = hidden;
    tc.intervals = s.intervals;
    for (LossKind loss : {LossKind::Dae, LossKind::Mse, LossKind::Regression}) {
      DaeModel model = DaeModel::init(model_config_for(tc, batch), s.seed);
      const GradCheckReport report = finite_diff_check(model, batch, loss, weights, options);
      for (const auto& p : report.parameters)
        out << to_string(kind) << ' ' << to_string(loss) << ' ' << p.name << ' ' << format_double(p.max_error) << '\n';
      out << (report.passed ? "PASS " : "FAIL ") << to_string(kind) << ' ' << to_string(loss) << " max_error "
          << format_double(report.max_error) << " tol " << format_double(s.tol) << '\n';
      all_passed = all_passed && report.passed;
    }
  }
  out << (all_passed ? "gradient check passed" : "gradient check FAILED") << '\n';
  return all_passed ? kExitOk : kExitRuntime;
}

struct ReplicaResult {
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  std::optional<double> best_rho;
  double mean_sigma2 = 0.0;
  double mean_sigma = 0.0;
};

int cmd_variance_stability(const Settings& s, std::ostream& out) {
  if (s.replicas < 2) throw ConfigError("--replicas must be at least 2");
  const TrainConfig base = train_config(s);
  const auto [train, eval] = train_eval_split(s);

  auto run_replica = [&, &train = train, &eval = eval](std::size_t r) {
    TrainConfig config = base;
    config.seed = s.same_seed ? base.seed : base.seed + r;
    const FitResult fitted = fit(config, train, eval);
    const EvalReport report = evaluate(fitted.best_model, eval, ReadoutMode::Mean, config.family, config.seed);
    return ReplicaResult{config.seed, fitted.best_epoch, fitted.best_rho, report.mean_sigma2, report.mean_sigma};
  };

  std::size_t threads = s.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : s.threads;
  threads = std::min(threads, s.replicas);
  std::vector<ReplicaResult> results(s.replicas);
  for (std::size_t start = 0; start < s.replicas; start += threads) {
    std::vector<std::future<ReplicaResult>> wave;
    for (std::size_t r = start; r < std::min(s.replicas, start + threads); ++r)
      wave.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async, run_replica, r));
    for (std::size_t i = 0; i < wave.size(); ++i) results[start + i] = wave[i].get();
  }

  std::vector<double> sigmas, sigma2s, rhos;
  for (const auto& r : results) {
    sigmas.push_back(r.mean_sigma);
    sigma2s.push_back(r.mean_sigma2);
    if (r.best_rho) rhos.push_back(*r.best_rho);
  }
  const Quartiles q = quartiles(sigmas);
  std::ostringstream csv;
  csv << "row,seed,best_epoch,best_rho,mean_sigma2,mean_sigma,q1,median,q3,iqr\n";
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& x = results[r];
    csv << r << ',' << x.seed << ',' << x.best_epoch << ',' << (x.best_rho ? format_double(*x.best_rho) : "nan") << ','
        << format_double(x.mean_sigma2) << ',' << format_double(x.mean_sigma) << ",,,,\n";
  }
  csv << "summary,,," << (rhos.empty() ? "nan" : format_double(quartiles(rhos).median)) << ','
      << format_double(quartiles(sigma2s).median) << ',' << format_double(q.median) << ',' << format_double(q.q1) << ','
      << format_double(q.median) << ',' << format_double(q.q3) << ',' << format_double(q.iqr()) << '\n';
  const fs::path dir = prepare_out(s);
  write_text(dir / "variance_stability.csv", csv.str());
  out << "mean sigma quartiles q1 " << format_double(q.q1) << " median " << format_double(q.median) << " q3 "
      << format_double(q.q3) << " iqr " << format_double(q.iqr()) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution auto-encoder regression: synthesis, training, evaluation and diagnostics", "dae"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dae 1.0.0");

  Settings cli;
  std::map<std::string, Binder> binders;
  auto command = [&](const std::string& name, const std::string& help) -> Binder& {
    CLI::App* sub = app.add_subcommand(name, help);
    Binder& b = binders.emplace(name, Binder(sub, cli)).first->second;
    b.add<std::string>("--config", "config", FIELD(std::string, config), "JSON config file; flags override its values");
    return b;
  };

  {
    Binder& b = command("synth", "Generate a synthetic heteroscedastic dataset");
    b.add<std::size_t>("--n", "n", FIELD(std::size_t, n), "Number of records");
    b.add<std::size_t>("--features", "features", FIELD(std::size_t, features), "Feature dimension F");
    b.add<std::string>("--mean-fn", "mean_fn", FIELD(std::string, mean_fn), "Mean function: sine, quadratic, linear");
    b.add<double>("--mean-scale", "mean_scale", FIELD(double, mean_scale), "Scale of the mean function");
    b.add<double>("--mean-offset", "mean_offset", FIELD(double, mean_offset), "Offset of the mean function");
    b.add<std::string>("--noise-fn", "noise_fn", FIELD(std::string, noise_fn), "Noise function: affine, vshape, constant");
    b.add<double>("--noise-a", "noise_a", FIELD(double, noise_a), "Noise intercept a");
    b.add<double>("--noise-b", "noise_b", FIELD(double, noise_b), "Noise slope b");
    b.flag("--judges", "judges", FIELD(bool, judges), "Add seven judge scores and a difficulty degree per record");
    b.add<double>("--judge-noise", "judge_noise", FIELD(double, judge_noise), "Judge score noise std");
    b.add<double>("--dd-min", "dd_min", FIELD(double, dd_min), "Lowest difficulty degree");
    b.add<double>("--dd-max", "dd_max", FIELD(double, dd_max), "Highest difficulty degree");
    b.add<std::string>("--format", "format", FIELD(std::string, format), "Output format: csv or bin");
    b.add<std::uint64_t>("--seed", "seed", FIELD(std::uint64_t, seed), "Random seed");
    b.add<std::string>("--out", "out", FIELD(std::string, out), "Output directory");
  }
  {
    Binder& b = command("train", "Train a model and keep the checkpoint with the best evaluation rho");
    add_train_options(b);
  }
  {
    Binder& b = command("eval", "Evaluate a checkpoint on a dataset");
    b.add<std::string>("--checkpoint", "checkpoint", FIELD(std::string, checkpoint), "Checkpoint JSON");
    b.add<std::string>("--data", "data", FIELD(std::string, data), "Dataset (.csv or .daef)");
    b.add<std::string>("--mode", "mode", FIELD(std::string, mode), "Read-out: mean or sample");
    b.add<std::string>("--family", "family", FIELD(std::string, family), "Noise family for sampled read-out");
    b.add<double>("--df", "df", FIELD(double, df), "Student-t degrees of freedom");
    b.add<std::uint64_t>("--seed", "seed", FIELD(std::uint64_t, seed), "Seed for sampled read-out");
    b.add<std::string>("--out", "out", FIELD(std::string, out), "Output directory");
  }
  {
    Binder& b = command("sample-dist", "Write the predicted score density of records as CSV");
    b.add<std::string>("--checkpoint", "checkpoint", FIELD(std::string, checkpoint), "Checkpoint JSON");
    b.add<std::string>("--data", "data", FIELD(std::string, data), "Dataset holding the records");
    b.add<std::vector<std::string>>("--id", "ids", FIELD(std::vector<std::string>, ids), "Record id (repeatable)");
    b.add<std::size_t>("--points", "points", FIELD(std::size_t, points), "Grid points per curve");
    b.add<double>("--sigmas", "sigmas", FIELD(double, sigmas), "Half-width of the grid in scale units");
    b.add<std::string>("--family", "family", FIELD(std::string, family), "Noise family (default: checkpoint's)");
    b.add<double>("--df", "df", FIELD(double, df), "Student-t degrees of freedom");
    b.add<std::size_t>("--head", "head", FIELD(std::size_t, head), "Judge head for mt models");
    b.add<std::string>("--out", "out", FIELD(std::string, out), "Output directory");
  }
  {
    Binder& b = command("check-grad", "Compare analytic gradients with central finite differences");
    b.add<std::string>("--model", "check_models", FIELD(std::string, check_models), "mlp, mt, core or all");
    b.add<std::string>("--hidden", "check_hidden", FIELD(std::string, check_hidden), "Trunk layer widths");
    b.add<std::size_t>("--features", "features", FIELD(std::size_t, features), "Feature dimension F");
    b.add<std::size_t>("--batch", "check_batch", FIELD(std::size_t, check_batch), "Records in the checked batch");
    b.add<std::size_t>("--intervals", "intervals", FIELD(std::size_t, intervals), "Interval count for core");
    b.add<double>("--alpha", "alpha", FIELD(double, alpha), "Weight of the reconstruction term");
    b.add<double>("--beta", "beta", FIELD(double, beta), "Weight of the log-variance term");
    b.add<double>("--tol", "tol", FIELD(double, tol), "Maximum allowed error");
    b.add<std::uint64_t>("--seed", "seed", FIELD(std::uint64_t, seed), "Random seed");
    b.flag("--corrupt", "corrupt", FIELD(bool, corrupt), "Debug: break the matmul backward rule");
  }
  {
    Binder& b = command("variance-stability", "Train replicas and summarise the spread of learned sigma");
    add_train_options(b);
    b.add<std::size_t>("--replicas", "replicas", FIELD(std::size_t, replicas), "Number of replicas R");
    b.add<std::size_t>("--threads", "threads", FIELD(std::size_t, threads), "Worker threads (0 = hardware)");
    b.flag("--same-seed", "same_seed", FIELD(bool, same_seed), "Use the same seed for every replica");
  }

  std::set<std::string> all_keys;
  for (const auto& [name, b] : binders) b.collect_keys(all_keys);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto& [name, b] : binders) {
      if (!app.got_subcommand(name)) continue;
      const Settings s = b.resolve(all_keys);
      if (name == "synth") return cmd_synth(s, out);
      if (name == "train") return cmd_train(s, out);
      if (name == "eval") return cmd_eval(s, b, out);
      if (name == "sample-dist") return cmd_sample_dist(s, b, out);
      if (name == "check-grad") return cmd_check_grad(s, out);
      if (name == "variance-stability") return cmd_variance_stability(s, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dae::cli
