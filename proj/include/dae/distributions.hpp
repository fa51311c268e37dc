#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dae/rng.hpp"

namespace dae {

enum class FamilyKind { Gaussian, Laplace, Logistic, StudentT, Triangular, LogisticNormal };

// Standard (location 0) member of a location-scale family, used as the auxiliary noise.
//   Gaussian        N(0, 1)
//   Laplace         density exp(-|z|) / 2
//   Logistic        density e^-z / (1 + e^-z)^2
//   StudentT        t with `degrees_of_freedom` > 2
//   Triangular      symmetric on [-1, 1], density 1 - |z|
//   LogisticNormal  sigmoid(z) - 0.5 with z ~ N(0, 1), support (-0.5, 0.5)
struct DistributionFamily {
  FamilyKind kind = FamilyKind::Gaussian;
  double degrees_of_freedom = 3.0;

  void validate() const;
  std::string name() const;
};

DistributionFamily parse_family(std::string_view name, double degrees_of_freedom = 3.0);
std::string to_string(FamilyKind kind);

double sample_standard(const DistributionFamily& family, Rng& rng);
std::vector<double> sample_standard(const DistributionFamily& family, Rng& rng, std::size_t n);

// y = mu + eps * sigma
double reparameterize(double mu, double sigma, double eps);

// -ln(2 pi)/2 - ln(sigma2)/2 - (y - mu)^2 / (2 sigma2)
double gaussian_log_pdf(double y, double mu, double sigma2);

// Density of the standard member at z.
double standard_density(const DistributionFamily& family, double z);

struct DensityPoint {
  double y;
  double density;
};

// `points` evenly spaced abscissae from lo to hi inclusive.
struct Grid {
  double lo;
  double hi;
  std::size_t points;
};

// Density of mu + sigma * eps over the grid.
std::vector<DensityPoint> density_curve(double mu, double sigma, const DistributionFamily& family,
                                        const Grid& grid);

// Two-column CSV `y,density`.
void write_density_csv(std::ostream& out, std::span<const DensityPoint> curve);

}  // namespace dae
