#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dae/dataset.hpp"
#include "dae/distributions.hpp"
#include "dae/model.hpp"
#include "dae/tensor.hpp"

namespace dae {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Throws DomainError when either input has fewer than two distinct values.
double pearson(std::span<const double> p, std::span<const double> q);

// Pearson correlation of average ranks, which stays exact under ties.
double spearman(std::span<const double> p, std::span<const double> q);

struct OlsFit {
  std::vector<double> coefficients;  // intercept first
  std::vector<double> fitted;
  double r = 0.0;                    // corr(Y, fitted)
  double residual_variance = 0.0;    // classical_error_variance(Y, fitted)
};

// Least squares with an intercept column; X is [n x k] with n >= k + 2.
OlsFit fit_ols_baseline(const Tensor& x, std::span<const double> y);

// (1 - r^2) / (N - 2) * sum (y_i - yhat_i)^2 with r = corr(y, yhat).
// A constant yhat (or y) has no correlation and is treated as r = 0.
double classical_error_variance(std::span<const double> y, std::span<const double> yhat);
double classical_error_variance(const OlsFit& fit, std::span<const double> y, std::span<const double> yhat);

struct EvalRow {
  std::string id;
  double y_true = 0.0;
  double mu = 0.0;      // mean-mode read-out
  double sigma2 = 0.0;  // predictive variance in label units (mean over judges for mt)
  double y_pred = 0.0;  // read-out in the requested mode
};

struct EvalReport {
  std::optional<double> spearman_rho;  // empty when predictions or labels are constant
  double rmse = 0.0;
  std::size_t n = 0;
  double mean_sigma2 = 0.0;
  double mean_sigma = 0.0;
  std::vector<EvalRow> rows;

  bool rho_defined() const { return spearman_rho.has_value(); }
};

EvalReport evaluate(const DaeModel& model, const Dataset& data, ReadoutMode mode = ReadoutMode::Mean,
                    const DistributionFamily& family = {}, std::uint64_t seed = 0);

void write_report_csv(std::ostream& out, const EvalReport& report);
// {"rho": ..., "rho_defined": ..., "rmse": ..., "n": ..., "mean_sigma2": ..., "mean_sigma": ...}
std::string report_json(const EvalReport& report);

struct Quartiles {
  double q1;
  double median;
  double q3;
  double iqr() const { return q3 - q1; }
};

// Linear interpolation between order statistics (position (n - 1) p).
Quartiles quartiles(std::span<const double> values);

}  // namespace dae
