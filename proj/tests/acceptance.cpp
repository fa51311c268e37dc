// Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dae/autodiff.hpp"
#include "dae/checkpoint.hpp"
#include "dae/dataset.hpp"
#include "dae/distributions.hpp"
#include "dae/losses.hpp"
#include "dae/metrics.hpp"
#include "dae/model.hpp"
#include "dae/rng.hpp"
#include "dae/trainer.hpp"
#include "support.hpp"

using namespace dae;
using namespace dae::test_support;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
    pass = pass && ok;
  }
};

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Criterion-4 task: sine mean, affine noise 0.05 + 0.2 t, F = 8.
SyntheticSpec synthetic_task(std::uint64_t seed, std::size_t n = 5000) {
  SyntheticSpec spec;
  spec.n = n;
  spec.feature_dim = 8;
  spec.mean_fn = MeanFn::Sine;
  spec.noise_fn = NoiseFn::Affine;
  spec.noise_a = 0.05;
  spec.noise_b = 0.2;
  spec.seed = seed;
  return spec;
}

TrainConfig desk_config(std::uint64_t seed, LossKind loss = LossKind::Dae, ModelKind model = ModelKind::Mlp) {
  TrainConfig c;
  c.model = model;
  c.hidden = {64, 32, 16};
  c.loss = loss;
  c.lr = 1e-3;
  c.epochs = 200;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------- 1

Outcome gradient_correctness() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const CliResult r = run_cli({"check-grad", "--features", "8", "--batch", "4", "--tol", "1e-4", "--seed", "1"});
  const double elapsed = seconds_since(start);
  std::size_t checked = 0;
  for (const std::string model : {"mlp", "mt", "core"})
    for (const std::string loss : {"dae", "mse", "regression"})
      checked += r.out.find("PASS " + model + " " + loss + " ") != std::string::npos;
  o.require(r.code == 0 && checked == 9, std::to_string(checked) + "/9 model x loss checks below 1e-4");
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed, 3) + " s < 60 s");

  const CliResult bad = run_cli({"check-grad", "--features", "8", "--batch", "4", "--model", "mlp", "--corrupt"});
  o.require(bad.code != 0, "corrupted backward rule is detected");
  return o;
}

// ---------------------------------------------------------------------------- 2

struct SampleStats {
  double mean = 0, variance = 0, median = 0, min = 0, max = 0;
};

SampleStats sample_stats(const DistributionFamily& family, double mu, double sigma, std::uint64_t seed,
                         std::size_t n) {
  Rng rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) v = reparameterize(mu, sigma, sample_standard(family, rng));
  SampleStats s;
  long double sum = 0;
  for (double v : y) sum += v;
  s.mean = static_cast<double>(sum / n);
  long double ss = 0;
  for (double v : y) ss += (v - s.mean) * (v - s.mean);
  s.variance = static_cast<double>(ss / (n - 1));
  s.median = median_of(y);
  s.min = *std::min_element(y.begin(), y.end());
  s.max = *std::max_element(y.begin(), y.end());
  return s;
}

Outcome reparameterization_statistics() {
  Outcome o;
  const double mu = 2.0, sigma = 0.5;
  const std::size_t n = 100000;
  const SampleStats g = sample_stats(parse_family("gaussian"), mu, sigma, 2024, n);
  o.require(std::abs(g.mean - mu) < 0.01, "gaussian |mean-2|=" + fmt(std::abs(g.mean - mu)));
  o.require(std::abs(g.variance - 0.25) < 0.01, "gaussian |var-0.25|=" + fmt(std::abs(g.variance - 0.25)));

  struct Case {
    const char* name;
    double variance;                // of the standard member, 0 when not checked
    double support;                 // half-width of the standard support, 0 when unbounded
  };
  const double pi = std::acos(-1.0);
  for (const Case c : {Case{"laplace", 2.0, 0}, Case{"logistic", pi * pi / 3.0, 0}, Case{"studentt", 0, 0},
                       Case{"triangular", 1.0 / 6.0, 1.0}, Case{"logisticnormal", 0, 0.5}}) {
    const SampleStats s = sample_stats(parse_family(c.name), mu, sigma, 2024, n);
    o.require(std::abs(s.median - mu) < 0.01, std::string(c.name) + " |median-2|=" + fmt(std::abs(s.median - mu)));
    if (c.variance > 0) {
      const double expect = sigma * sigma * c.variance;
      o.require(std::abs(s.variance - expect) < 0.03 * expect,
                std::string(c.name) + " var " + fmt(s.variance) + " vs " + fmt(expect));
    }
    if (c.support > 0) {
      o.require(s.min > mu - sigma * c.support && s.max < mu + sigma * c.support,
                std::string(c.name) + " samples inside support");
    }
  }
  // Student-t(3) has no finite fourth moment, so its spread is checked through the
  // interquartile range instead: the 75% quantile of t_3 is 0.7648923.
  {
    Rng rng(99);
    std::vector<double> y(n);
    for (auto& v : y) v = reparameterize(mu, sigma, sample_standard(parse_family("studentt"), rng));
    std::sort(y.begin(), y.end());
    const double iqr = y[3 * n / 4] - y[n / 4];
    const double expect = 2 * 0.7648923 * sigma;
    o.require(std::abs(iqr - expect) < 0.02 * expect, "studentt IQR " + fmt(iqr) + " vs " + fmt(expect));
  }
  return o;
}

// ---------------------------------------------------------------------------- 3

double library_dae_loss(double y, double mu, double logvar, const LossWeights& w) {
  Tape tape;
  const Var l = dae_loss(tape, tape.constant(Tensor::vector({mu})), tape.constant(Tensor::vector({logvar})),
                         tape.constant(Tensor::vector({y})), w);
  return tape.value(l).item();
}

Outcome loss_minimizer() {
  Outcome o;
  const LossWeights w{0.6, 0.4};
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double y = val(gen), mu = val(gen);
    if (std::abs(y - mu) < 1e-3) continue;
    const double u = golden_section_min([&](double lv) { return library_dae_loss(y, mu, lv, w); }, -40.0, 40.0);
    const double numeric = std::exp(u);
    const double closed = w.alpha / w.beta * (y - mu) * (y - mu);
    worst = std::max(worst, std::abs(numeric - closed) / closed);
  }
  o.require(worst < 1e-6, "max relative gap to (alpha/beta)(y-mu)^2 = " + fmt(worst, 3));
  return o;
}

// ---------------------------------------------------------------------------- 4, 5

struct TaskRun {
  double rho = 0;
  double sigma_rho = 0;
  double rmse = 0;
  double noise_floor = 0;
  double seconds = 0;
};

TaskRun run_synthetic_task(std::uint64_t seed, LossKind loss) {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticSpec spec = synthetic_task(seed);
  const SyntheticData synth = synth_heteroscedastic(spec);
  const auto [train, eval] = split(synth.data, 0.75, seed);
  const FitResult result = fit(desk_config(seed, loss), train, eval);

  TaskRun run;
  const EvalReport report = evaluate(result.best_model, eval);
  run.rho = report.spearman_rho.value_or(-1.0);
  run.rmse = report.rmse;
  // Irreducible error of the eval split: root mean true variance.
  double var = 0.0;
  for (const auto& rec : eval.records) {
    const double s = synth.sigma[std::stoul(rec.id)];
    var += s * s;
  }
  run.noise_floor = std::sqrt(var / eval.size());

  // Learned sigma against the generating sigma on an even grid of t.
  const std::size_t grid = 201;
  Tensor x({grid, spec.feature_dim});
  std::vector<double> truth(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / (grid - 1);
    const auto f = embed_latent(t, spec.feature_dim);
    std::copy(f.begin(), f.end(), x.data().begin() + i * spec.feature_dim);
    truth[i] = spec.sigma(t);
  }
  const ForwardValues v = result.best_model.infer(x);
  std::vector<double> learned(grid);
  for (std::size_t i = 0; i < grid; ++i) learned[i] = std::exp(0.5 * v.heads[0].logvar[i]);
  run.sigma_rho = spearman(learned, truth);
  run.seconds = seconds_since(start);
  return run;
}

Outcome heteroscedastic_recovery() {
  Outcome o;
  const TaskRun r = run_synthetic_task(1, LossKind::Dae);
  o.require(r.rho > 0.90, "eval rho " + fmt(r.rho, 4) + " > 0.90");
  o.require(r.sigma_rho > 0.80, "sigma rank agreement " + fmt(r.sigma_rho, 4) + " > 0.80");
  o.require(r.rmse < 2.0 * r.noise_floor, "mu RMSE " + fmt(r.rmse, 4) + " < 2 x floor " + fmt(r.noise_floor, 4));
  o.require(r.seconds < 300.0, "runtime " + fmt(r.seconds, 3) + " s < 300 s");
  return o;
}

Outcome loss_study() {
  Outcome o;
  std::vector<double> rho[3];
  const LossKind kinds[3] = {LossKind::Dae, LossKind::Mse, LossKind::Regression};
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (int k = 0; k < 3; ++k) rho[k].push_back(run_synthetic_task(seed, kinds[k]).rho);
  const double dae = median_of(rho[0]), mse = median_of(rho[1]), reg = median_of(rho[2]);
  o.require(dae - mse >= -0.01, "median rho dae " + fmt(dae, 5) + " vs mse " + fmt(mse, 5));
  o.require(mse - reg >= -0.01, "median rho mse " + fmt(mse, 5) + " vs regression " + fmt(reg, 5));
  return o;
}

// ---------------------------------------------------------------------------- 6

Outcome judge_aggregation() {
  Outcome o;
  const std::vector<double> same(7, 8.5);
  o.require(aggregate_judges(same, 3.2) == 3 * 8.5 * 3.2, "all equal gives 3 s d");
  const std::vector<double> ramp{1, 2, 3, 4, 5, 6, 7};
  o.require(aggregate_judges(ramp, 2.0) == 24.0, "{1..7}, dd 2 gives 24");

  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  std::vector<double> s(7);
  for (auto& v : s) v = score(gen);
  const double dd = 3.3;
  std::vector<int> perm{0, 1, 2, 3, 4, 5, 6};
  const double reference = aggregate_judges(s, dd);
  std::size_t count = 0, mismatches = 0;
  do {
    std::vector<double> p(7);
    for (int i = 0; i < 7; ++i) p[i] = s[perm[i]];
    mismatches += aggregate_judges(p, dd) != reference;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  o.require(count == 5040 && mismatches == 0,
            std::to_string(count) + " permutations, " + std::to_string(mismatches) + " differ");
  return o;
}

// ---------------------------------------------------------------------------- 7

Outcome multi_judge() {
  Outcome o;
  std::vector<double> mt_rho, mlp_rho;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec = synthetic_task(seed);
    spec.mean_offset = 21.0;
    spec.mean_scale = 6.0;
    const Dataset judged = synth_judges(synth_heteroscedastic(spec).data, JudgeSpec{0.3, 1.5, 3.5, seed});
    const auto [train, eval] = split(judged, 0.75, seed);
    mt_rho.push_back(fit(desk_config(seed, LossKind::Dae, ModelKind::MultiJudge), train, eval).best_rho.value_or(-1));
    mlp_rho.push_back(fit(desk_config(seed, LossKind::Dae, ModelKind::Mlp), train, eval).best_rho.value_or(-1));
  }
  const double mt = median_of(mt_rho), mlp = median_of(mlp_rho);
  o.require(mt > 0.85, "median DAE-MT rho " + fmt(mt, 4) + " > 0.85");
  o.require(mt - mlp >= -0.01, "DAE-MT " + fmt(mt, 4) + " vs DAE-MLP " + fmt(mlp, 4));
  return o;
}

// ---------------------------------------------------------------------------- 8

Outcome interval_readout_checks() {
  Outcome o;
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> bound(-100.0, 100.0);
  bool exact = true;
  for (int i = 0; i < 1000; ++i) {
    double l = bound(gen), r = bound(gen);
    if (l > r) std::swap(l, r);
    const double sigma = std::abs(bound(gen));
    exact = exact && interval_readout(l, r, 0.0, sigma, 0.0) == l && interval_readout(l, r, 1.0, sigma, 0.0) == r &&
            interval_readout(l, r, 0.5, sigma, 0.0) == (l + r) / 2.0;
  }
  o.require(exact, "w = 0, 1, 0.5 give left, right, midpoint exactly");

  ModelConfig mc;
  mc.kind = ModelKind::Interval;
  mc.feature_dim = 8;
  mc.hidden = {16, 16};
  mc.intervals = IntervalSpec::uniform(-3.0, 7.0, 8);
  const DaeModel model = DaeModel::init(mc, 8);
  const std::size_t n = 10000;
  Tensor x({n, mc.feature_dim});
  std::normal_distribution<double> wide(0.0, 20.0);
  for (auto& v : x.data()) v = wide(gen);
  Rng rng(8);
  const auto y = interval_predict(model, x, DistributionFamily{}, rng, ReadoutMode::Mean);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  o.require(*lo >= -3.0 && *hi <= 7.0,
            "10^4 mean read-outs in [" + fmt(*lo, 4) + ", " + fmt(*hi, 4) + "] within [-3, 7]");
  return o;
}

// ---------------------------------------------------------------------------- 9

Outcome spearman_oracle_check() {
  Outcome o;
  o.require(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) == 0.8, "hand case is 0.8");
  std::mt19937_64 gen(9);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + gen() % 60;
    std::uniform_int_distribution<int> coarse(0, 1 + static_cast<int>(n / 3));
    std::normal_distribution<double> fine(0.0, 1.0);
    std::vector<double> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = coarse(gen);  // heavy ties
      q[i] = (gen() % 4 == 0) ? 0.5 : fine(gen) + 0.3 * p[i];
    }
    if (std::all_of(p.begin(), p.end(), [&](double v) { return v == p[0]; })) p[0] += 1;
    worst = std::max(worst, static_cast<double>(std::abs(spearman(p, q) - spearman_oracle(p, q))));
  }
  o.require(worst < 1e-12, "max |delta| vs brute-force ranks " + fmt(worst, 3));
  return o;
}

// ---------------------------------------------------------------------------- 10

Outcome classical_estimator() {
  Outcome o;
  std::mt19937_64 gen(10);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + gen() % 90, k = 1 + gen() % 4;
    Tensor x({n, k});
    for (auto& v : x.data()) v = z(gen);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.7;
      for (std::size_t j = 0; j < k; ++j) y[i] += (j + 1.0) * x.at(i, j);
      y[i] += (0.1 + trial * 0.05) * z(gen);
    }
    const OlsFit f = fit_ols_baseline(x, y);
    const long double expect = error_variance_oracle(y, f.fitted);
    const double got = classical_error_variance(y, f.fitted);
    worst = std::max(worst, static_cast<double>(std::abs(got - expect) / expect));
    worst = std::max(worst, static_cast<double>(std::abs(f.residual_variance - expect) / expect));
  }
  o.require(worst < 1e-10, "max relative error vs long double " + fmt(worst, 3));

  std::vector<double> y(20);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.5 * i - 4.0;
  o.require(classical_error_variance(y, y) == 0.0, "perfect fit gives exactly 0");
  return o;
}

// ---------------------------------------------------------------------------- 11

Outcome determinism_and_persistence() {
  Outcome o;
  TempDir dir("accept11");
  const CliResult s = run_cli({"synth", "--n", "600", "--features", "8", "--seed", "11", "--out", dir / "data"});
  o.require(s.code == 0, "synth ok");
  std::string rho[2], checkpoint[2];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    const CliResult t = run_cli({"train", "--data", dir / "data/data.csv", "--hidden", "32,16", "--lr", "1e-3",
                                 "--epochs", "15", "--seed", "5", "--out", dir / ("train" + tag)});
    const CliResult e = run_cli({"eval", "--checkpoint", dir / ("train" + tag + "/best.json"), "--data",
                                 dir / "data/data.csv", "--mode", "sample", "--seed", "3", "--out",
                                 dir / ("eval" + tag)});
    o.require(t.code == 0 && e.code == 0, "run " + tag + " train and eval ok");
    rho[run] = nlohmann::json::parse(slurp(dir / ("eval" + tag + "/report.json"))).at("rho").dump();
    checkpoint[run] = slurp(dir / ("train" + tag + "/best.json"));
  }
  o.require(rho[0] == rho[1], "eval rho " + rho[0] + " identical across runs");
  o.require(checkpoint[0] == checkpoint[1], "checkpoints byte-identical across runs");

  const Checkpoint a = load_checkpoint(dir / "train0/best.json");
  save_checkpoint(dir / "copy.json", a.model, a.train_config, a.rng_seed);
  const Checkpoint b = load_checkpoint(dir / "copy.json");
  std::size_t values = 0, differ = 0;
  for (const Parameter& p : a.model.parameters()) {
    const Parameter& q = b.model.parameter(p.name);
    for (std::size_t i = 0; i < p.tensor.size(); ++i, ++values)
      differ += std::memcmp(&p.tensor.data()[i], &q.tensor.data()[i], sizeof(double)) != 0;
  }
  o.require(differ == 0, std::to_string(values) + " parameter values, " + std::to_string(differ) + " changed");
  return o;
}

// ---------------------------------------------------------------------------- 12

Outcome variance_stability() {
  Outcome o;
  TempDir dir("accept12");
  const auto start = std::chrono::steady_clock::now();
  const CliResult s = run_cli({"synth", "--n", "5000", "--features", "8", "--mean-fn", "sine", "--noise-fn", "affine",
                               "--noise-a", "0.05", "--noise-b", "0.2", "--seed", "12", "--out", dir / "data"});
  const CliResult r = run_cli({"variance-stability", "--data", dir / "data/data.csv", "--replicas", "20",
                               "--hidden", "64,32,16", "--lr", "1e-3", "--epochs", "200", "--batch", "32", "--seed",
                               "100", "--out", dir / "vs"});
  o.require(s.code == 0 && r.code == 0, "command completed in " + fmt(seconds_since(start), 4) + " s");
  if (r.code != 0) return o;

  std::istringstream csv(slurp(dir / "vs/variance_stability.csv"));
  std::string line;
  std::getline(csv, line);
  std::size_t replicas = 0, collapsed = 0;
  double iqr = std::nan("");
  const double floor = std::exp(-10.0);
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 10) cells.emplace_back();
    if (cells[0] == "summary") {
      iqr = std::stod(cells[9]);
      continue;
    }
    ++replicas;
    collapsed += std::stod(cells[4]) <= floor * 1.01;
  }
  o.require(replicas == 20, std::to_string(replicas) + " replica rows");
  o.require(std::isfinite(iqr) && iqr >= 0.0, "IQR of mean sigma " + fmt(iqr, 4));
  o.require(collapsed == 0, std::to_string(collapsed) + " replicas at the e^-10 floor");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"reparameterization statistics", reparameterization_statistics},
      {"loss minimizer over sigma^2", loss_minimizer},
      {"heteroscedastic recovery", heteroscedastic_recovery},
      {"loss study ordering", loss_study},
      {"judge aggregation", judge_aggregation},
      {"multi-judge model", multi_judge},
      {"interval read-out", interval_readout_checks},
      {"spearman oracle", spearman_oracle_check},
      {"classical error variance", classical_estimator},
      {"determinism and persistence", determinism_and_persistence},
      {"variance stability", variance_stability},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
