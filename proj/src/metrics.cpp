#include "dae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "dae/error.hpp"
#include "dae/format.hpp"

namespace dae {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold equal values; ranks (i+1)..j average to (i + j + 1) / 2.
    const double rank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("correlation of vectors with different lengths");
  if (p.size() < 2) throw DomainError("correlation needs at least two observations");
  const double n = static_cast<double>(p.size());
  const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
  const double mq = std::accumulate(q.begin(), q.end(), 0.0) / n;
  double spq = 0.0, spp = 0.0, sqq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - mp;
    const double dq = q[i] - mq;
    spq += dp * dq;
    spp += dp * dp;
    sqq += dq * dq;
  }
  if (spp == 0.0 || sqq == 0.0) throw DomainError("correlation is undefined for a constant vector");
  return std::clamp(spq / std::sqrt(spp * sqq), -1.0, 1.0);
}

double spearman(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("spearman: vectors differ in length");
  const auto rp = average_ranks(p);
  const auto rq = average_ranks(q);
  return pearson(rp, rq);
}

double classical_error_variance(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw ShapeError("classical_error_variance: length mismatch");
  if (y.size() < 3) throw DomainError("classical_error_variance needs N >= 3");
  double r = 0.0;
  try {
    r = pearson(y, yhat);
  } catch (const DomainError&) {
    r = 0.0;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return (1.0 - r * r) / static_cast<double>(y.size() - 2) * sse;
}

double classical_error_variance(const OlsFit&, std::span<const double> y, std::span<const double> yhat) {
  return classical_error_variance(y, yhat);
}

OlsFit fit_ols_baseline(const Tensor& x, std::span<const double> y) {
  if (x.rank() != 2) throw ShapeError("fit_ols_baseline: design must be a matrix, got " + shape_to_string(x.shape()));
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  if (y.size() != n) throw ShapeError("fit_ols_baseline: " + std::to_string(y.size()) + " targets for " + std::to_string(n) + " rows");
  if (n < k + 2) throw DomainError("fit_ols_baseline: need at least k + 2 observations");
  Eigen::MatrixXd design(n, k + 1);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) design(i, j + 1) = x.at(i, j);
    target(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(k + 1)) throw DomainError("fit_ols_baseline: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(target);
  const Eigen::VectorXd fitted = design * beta;

  OlsFit fit;
  fit.coefficients.assign(beta.data(), beta.data() + beta.size());
  fit.fitted.assign(fitted.data(), fitted.data() + fitted.size());
  try {
    fit.r = pearson(y, fit.fitted);
  } catch (const DomainError&) {
    fit.r = 0.0;
  }
  fit.residual_variance = classical_error_variance(y, fit.fitted);
  return fit;
}

EvalReport evaluate(const DaeModel& model, const Dataset& data, ReadoutMode mode, const DistributionFamily& family,
                    std::uint64_t seed) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  if (data.feature_dim != model.feature_dim())
    throw ShapeError("model expects " + std::to_string(model.feature_dim()) + " features, dataset has " +
                     std::to_string(data.feature_dim));
  family.validate();
  const Tensor x = data.features();
  const std::size_t n = data.size();
  std::vector<double> mean_score(n), sigma2(n), score(n);
  Rng rng(seed);
  Rng mean_rng(seed);  // never drawn from in mean mode

  switch (model.kind()) {
    case ModelKind::Mlp: {
      const ForwardValues v = model.infer(x);
      const HeadValues& h = v.heads.front();
      for (std::size_t i = 0; i < n; ++i) {
        mean_score[i] = h.mu[i];
        sigma2[i] = std::exp(h.logvar[i]);
      }
      score = mode == ReadoutMode::Mean ? mean_score : predict(model, x, family, rng, mode);
      break;
    }
    case ModelKind::MultiJudge: {
      if (!data.has_judges()) throw DataError("evaluating an mt model needs difficulty degrees in the dataset");
      std::vector<double> dd(n);
      for (std::size_t i = 0; i < n; ++i) dd[i] = *data.records[i].dd;
      const ForwardValues v = model.infer(x);
      for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (const HeadValues& h : v.heads) total += std::exp(h.logvar[i]);
        sigma2[i] = total / static_cast<double>(v.heads.size());
      }
      mean_score = predict_mt_final(model, x, dd, family, mean_rng, ReadoutMode::Mean);
      score = mode == ReadoutMode::Mean ? mean_score : predict_mt_final(model, x, dd, family, rng, mode);
      break;
    }
    case ModelKind::Interval: {
      const ForwardValues v = model.infer(x);
      const IntervalSpec& spec = model.config().intervals;
      const std::size_t classes = spec.count();
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
          if (v.interval_logits.at(i, c) > v.interval_logits.at(i, best)) best = c;
        const double width = spec.boundaries[best + 1] - spec.boundaries[best];
        sigma2[i] = std::exp(v.heads.front().logvar[i]) * width * width;
      }
      mean_score = interval_predict(model, x, family, mean_rng, ReadoutMode::Mean);
      score = mode == ReadoutMode::Mean ? mean_score : interval_predict(model, x, family, rng, mode);
      break;
    }
  }

  EvalReport report;
  report.n = n;
  const auto labels = data.labels();
  double se = 0.0, s2 = 0.0, s1 = 0.0;
  report.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.rows.push_back(EvalRow{data.records[i].id, labels[i], mean_score[i], sigma2[i], score[i]});
    se += (labels[i] - score[i]) * (labels[i] - score[i]);
    s2 += sigma2[i];
    s1 += std::sqrt(sigma2[i]);
  }
  report.rmse = std::sqrt(se / static_cast<double>(n));
  report.mean_sigma2 = s2 / static_cast<double>(n);
  report.mean_sigma = s1 / static_cast<double>(n);
  if (n >= 2) {
    try {
      report.spearman_rho = spearman(labels, score);
    } catch (const DomainError&) {
      report.spearman_rho.reset();
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "id,y_true,mu,sigma2,y_pred\n";
  for (const auto& r : report.rows)
    out << r.id << ',' << format_double(r.y_true) << ',' << format_double(r.mu) << ',' << format_double(r.sigma2) << ','
        << format_double(r.y_pred) << '\n';
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["rho"] = report.spearman_rho ? nlohmann::ordered_json(*report.spearman_rho) : nlohmann::ordered_json(nullptr);
  j["rho_defined"] = report.rho_defined();
  j["rmse"] = report.rmse;
  j["n"] = report.n;
  j["mean_sigma2"] = report.mean_sigma2;
  j["mean_sigma"] = report.mean_sigma;
  return j.dump(2);
}

Quartiles quartiles(std::span<const double> values) {
  if (values.empty()) throw DomainError("quartiles of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  return Quartiles{at(0.25), at(0.5), at(0.75)};
}

}  // namespace dae
