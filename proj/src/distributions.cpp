#include "dae/distributions.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "dae/error.hpp"
#include "dae/format.hpp"
#include "dae/numeric.hpp"

namespace dae {

void DistributionFamily::validate() const {
  if (kind == FamilyKind::StudentT && !(degrees_of_freedom > 2.0))
    throw ConfigError("student-t needs degrees of freedom > 2, got " + format_double(degrees_of_freedom));
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Laplace: return "laplace";
    case FamilyKind::Logistic: return "logistic";
    case FamilyKind::StudentT: return "studentt";
    case FamilyKind::Triangular: return "triangular";
    case FamilyKind::LogisticNormal: return "logisticnormal";
  }
  return "unknown";
}

std::string DistributionFamily::name() const { return to_string(kind); }

DistributionFamily parse_family(std::string_view name, double degrees_of_freedom) {
  DistributionFamily family;
  family.degrees_of_freedom = degrees_of_freedom;
  if (name == "gaussian" || name == "normal") family.kind = FamilyKind::Gaussian;
  else if (name == "laplace") family.kind = FamilyKind::Laplace;
  else if (name == "logistic") family.kind = FamilyKind::Logistic;
  else if (name == "studentt" || name == "student-t" || name == "t") family.kind = FamilyKind::StudentT;
  else if (name == "triangular") family.kind = FamilyKind::Triangular;
  else if (name == "logisticnormal" || name == "logistic-normal") family.kind = FamilyKind::LogisticNormal;
  else throw ConfigError("unknown distribution family '" + std::string(name) + "'");
  family.validate();
  return family;
}

namespace {

// Marsaglia-Tsang, shape >= 1, unit scale.
double sample_gamma(double shape, Rng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace

double sample_standard(const DistributionFamily& family, Rng& rng) {
  switch (family.kind) {
    case FamilyKind::Gaussian:
      return rng.normal();
    case FamilyKind::Laplace: {
      const double u = rng.uniform() - 0.5;
      return u < 0.0 ? std::log(1.0 + 2.0 * u) : -std::log(1.0 - 2.0 * u);
    }
    case FamilyKind::Logistic: {
      const double u = rng.uniform();
      return std::log(u / (1.0 - u));
    }
    case FamilyKind::StudentT: {
      const double z = rng.normal();
      const double chi2 = 2.0 * sample_gamma(0.5 * family.degrees_of_freedom, rng);
      return z / std::sqrt(chi2 / family.degrees_of_freedom);
    }
    case FamilyKind::Triangular: {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      return u1 + u2 - 1.0;
    }
    case FamilyKind::LogisticNormal:
      return logistic_sigmoid(rng.normal()) - 0.5;
  }
  return 0.0;
}

std::vector<double> sample_standard(const DistributionFamily& family, Rng& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_standard: need at least one draw");
  family.validate();
  std::vector<double> out(n);
  for (double& e : out) e = sample_standard(family, rng);
  return out;
}

double reparameterize(double mu, double sigma, double eps) {
  if (sigma < 0.0) throw DomainError("reparameterize: negative sigma " + format_double(sigma));
  return mu + eps * sigma;
}

double gaussian_log_pdf(double y, double mu, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("gaussian_log_pdf: variance must be positive, got " + format_double(sigma2));
  const double r = y - mu;
  return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(sigma2) - r * r / (2.0 * sigma2);
}

double standard_density(const DistributionFamily& family, double z) {
  switch (family.kind) {
    case FamilyKind::Gaussian:
      return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    case FamilyKind::Laplace:
      return 0.5 * std::exp(-std::abs(z));
    case FamilyKind::Logistic: {
      const double e = std::exp(-std::abs(z));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case FamilyKind::StudentT: {
      const double nu = family.degrees_of_freedom;
      const double log_norm =
          std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
      return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu));
    }
    case FamilyKind::Triangular:
      return std::abs(z) < 1.0 ? 1.0 - std::abs(z) : 0.0;
    case FamilyKind::LogisticNormal: {
      // Change of variables u = z + 1/2 = sigmoid(g), g ~ N(0, 1).
      const double u = z + 0.5;
      if (!(u > 0.0 && u < 1.0)) return 0.0;
      const double g = std::log(u / (1.0 - u));
      return std::exp(-0.5 * g * g) / std::sqrt(2.0 * std::numbers::pi) / (u * (1.0 - u));
    }
  }
  return 0.0;
}

std::vector<DensityPoint> density_curve(double mu, double sigma, const DistributionFamily& family,
                                        const Grid& grid) {
  if (grid.points == 0) throw DomainError("density_curve: empty grid");
  if (!(sigma > 0.0)) throw DomainError("density_curve: sigma must be positive, got " + format_double(sigma));
  if (grid.points > 1 && !(grid.hi > grid.lo)) throw DomainError("density_curve: grid upper bound must exceed lower bound");
  family.validate();
  std::vector<DensityPoint> curve(grid.points);
  const double step = grid.points > 1 ? (grid.hi - grid.lo) / static_cast<double>(grid.points - 1) : 0.0;
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double y = grid.points > 1 ? grid.lo + step * static_cast<double>(i) : grid.lo;
    curve[i] = {y, standard_density(family, (y - mu) / sigma) / sigma};
  }
  return curve;
}

void write_density_csv(std::ostream& out, std::span<const DensityPoint> curve) {
  out << "y,density\n";
  for (const auto& p : curve) out << format_double(p.y) << ',' << format_double(p.density) << '\n';
}

}  // namespace dae
