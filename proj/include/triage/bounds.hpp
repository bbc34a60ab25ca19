#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/data.hpp"
#include "triage/kernel.hpp"

namespace triage {

struct HullDistanceResult {
  std::size_t s = 1;
  double distance = 0.0;
  /// Weights over the positive / negative samples, in data-set order.
  std::vector<double> mu_positive;
  std::vector<double> mu_negative;
  bool converged = true;
};

/// Euclidean projection onto {mu : sum mu = 1, 0 <= mu_i <= cap}.
std::vector<double> project_capped_simplex(std::span<const double> values, double cap);

/// Minimum feature-space distance between the reduced convex hulls C+_{1/s} and C-_{1/s}.
HullDistanceResult reduced_hull_distance(const GramMatrix& gram, std::size_t s);
HullDistanceResult reduced_hull_distance(const DataSet& data, std::size_t s, const Kernel& kernel);

/// Delta_{1/s} for s = 1..min(|V+|, |V-|).
std::vector<double> hull_distance_scan(const GramMatrix& gram);

struct DeltaStar {
  double delta = 0.0;
  /// 0 when no reduced-hull pair is separated.
  std::size_t s_star = 0;
};

/// Distances at or below 1e-7 times the largest feature norm count as overlap.
double overlap_threshold(const GramMatrix& gram);

DeltaStar delta_star(const GramMatrix& gram);
DeltaStar delta_star(const DataSet& data, const Kernel& kernel);

struct ZetaResult {
  double zeta = 0.0;
  double min_eigenvalue = 0.0;
  bool rank_deficient = false;
  std::vector<double> mu;
};

/// min mu^T Y K Y mu over mu >= 0 with unit mass on each class.
ZetaResult zeta(const GramMatrix& gram);
ZetaResult zeta(const DataSet& data, const Kernel& kernel);

enum class BoundVariant { linear_offset, kernel_offset, no_offset, hard_margin };

std::string to_string(BoundVariant variant);
BoundVariant parse_bound_variant(const std::string& text);

struct GammaBoundReport {
  BoundVariant variant = BoundVariant::linear_offset;
  std::size_t size = 0;
  double lambda = 1.0;
  double kappa = 0.0;
  double eta = 2.0;
  double delta_star = 0.0;
  std::size_t s_star = 0;
  double sigma_star = 0.0;
  double rho_star = 0.0;
  std::optional<double> zeta;
  std::optional<double> min_eigenvalue;
  double gamma_star = 0.0;
  /// floor((rho* - sigma*) |V|) for the offset variants.
  std::optional<std::size_t> n_max;
  std::vector<std::string> warnings;
};

/// eta + eta^2 / 2 (1/2 + sqrt(1/4 + 4 |V| (eta - 1) / eta^2)) + (eta - 1) |V|.
double offset_bound_denominator(double eta, std::size_t size);
/// 1 / (eta - 2)^2, +inf at eta = 2.
double eta_term(double eta);

/// Closed-form lower bound gamma* for `variant`. For kernel_offset, sigma*
/// is the largest grid value in (0, rho*] that admits `budget` (if given).
GammaBoundReport gamma_bound(const GramMatrix& gram, double lambda, BoundVariant variant,
                             std::optional<std::size_t> budget = std::nullopt);
GammaBoundReport gamma_bound(const DataSet& data, double lambda, const Kernel& kernel, BoundVariant variant,
                             std::optional<std::size_t> budget = std::nullopt);

/// `key=value` lines: variant, eta, delta_star, s_star, zeta, gamma_star, n_max, ...
std::string format_report(const GammaBoundReport& report);

}  // namespace triage
