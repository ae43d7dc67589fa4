#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace rcmlab {

inline constexpr double kZ95 = 1.96;

/// Monte Carlo estimate with a 95% normal-approximation half-width.
/// half_width is NaN when fewer than two replicates are available.
struct EstimateWithCI {
  double value = 0.0;
  double half_width = 0.0;
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;

  bool has_ci() const noexcept { return replicates >= 2 && std::isfinite(half_width); }
  /// Standard error, half_width / 1.96.
  double sigma() const noexcept { return half_width / kZ95; }
  double lower() const noexcept { return value - half_width; }
  double upper() const noexcept { return value + half_width; }
};

/// Sample mean with half-width 1.96 * sd / sqrt(n) (sd with n - 1 denominator).
EstimateWithCI mean_estimate(std::span<const double> xs, std::uint64_t seed = 0);

/// Frequency hits / n; the same formula applied to 0/1 outcomes.
EstimateWithCI frequency_estimate(std::uint64_t hits, std::uint64_t n, std::uint64_t seed = 0);

/// The estimate multiplied by a constant.
EstimateWithCI scale(const EstimateWithCI& e, double factor);

/// sqrt(sigma_a^2 + sigma_b^2) for independent estimates.
double combined_sigma(const EstimateWithCI& a, const EstimateWithCI& b);

double sample_variance(std::span<const double> xs);
double median(std::vector<double> xs);

/// Kolmogorov-Smirnov distance between the empirical law of xs and U(lo, hi).
double ks_uniform_statistic(std::vector<double> xs, double lo, double hi);

/// Asymptotic one-sample KS critical value of sqrt(n) * D at the 1% level.
inline constexpr double kKsCritical1 = 1.6276;

/// Upper tail P[chi2_dof >= x].
double chi_square_sf(double x, double dof);

}  // namespace rcmlab
