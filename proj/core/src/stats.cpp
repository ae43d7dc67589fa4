#include "rcmlab/stats.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace rcmlab {

double sample_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  return m2 / static_cast<double>(n - 1);
}

EstimateWithCI mean_estimate(std::span<const double> xs, std::uint64_t seed) {
  EstimateWithCI e;
  e.replicates = xs.size();
  e.seed = seed;
  if (xs.empty()) {
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.half_width = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.value = sum / static_cast<double>(xs.size());
  const double var = sample_variance(xs);
  e.half_width = kZ95 * std::sqrt(std::max(var, 0.0) / static_cast<double>(xs.size()));
  return e;
}

EstimateWithCI frequency_estimate(std::uint64_t hits, std::uint64_t n, std::uint64_t seed) {
  if (hits > n) throw std::invalid_argument("frequency: hits exceed trials");
  EstimateWithCI e;
  e.replicates = n;
  e.seed = seed;
  if (n == 0) {
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.half_width = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  const double dn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / dn;
  e.value = p;
  if (n < 2) {
    e.half_width = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double var = p * (1.0 - p) * dn / (dn - 1.0);
    e.half_width = kZ95 * std::sqrt(var / dn);
  }
  return e;
}

EstimateWithCI scale(const EstimateWithCI& e, double factor) {
  EstimateWithCI out = e;
  out.value = e.value * factor;
  out.half_width = e.half_width * std::abs(factor);
  return out;
}

double combined_sigma(const EstimateWithCI& a, const EstimateWithCI& b) {
  return std::hypot(a.sigma(), b.sigma());
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double ks_uniform_statistic(std::vector<double> xs, double lo, double hi) {
  if (xs.empty()) return 0.0;
  if (!(hi > lo)) throw std::invalid_argument("ks_uniform_statistic: need hi > lo");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  const boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace rcmlab
