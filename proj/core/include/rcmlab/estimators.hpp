#pragma once

// Monte Carlo estimators over independent replicates.
//
// Each estimator derives its replicate streams from stream_seed(seed, tag)
// with a fixed tag per estimator, so equal seeds at different intensities use
// the same (nested) configurations and edge marks.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcmlab/connection.hpp"
#include "rcmlab/graph.hpp"
#include "rcmlab/growth.hpp"
#include "rcmlab/points.hpp"
#include "rcmlab/stats.hpp"

namespace rcmlab {

struct RunOptions {
  unsigned workers = 0;  // 0: available parallelism
  std::size_t memory_limit_bytes = std::size_t{1} << 30;
};

namespace tags {
inline constexpr std::string_view theta = "theta";
inline constexpr std::string_view giant = "giant";
inline constexpr std::string_view lambda_c = "lambda-c";
inline constexpr std::string_view mecke_lhs = "mecke-lhs";
inline constexpr std::string_view mecke_rhs = "mecke-rhs";
inline constexpr std::string_view mecke_theta = "mecke-theta";
inline constexpr std::string_view fkg = "fkg";
inline constexpr std::string_view event_u = "event-U";
inline constexpr std::string_view event_f = "event-F";
inline constexpr std::string_view block_field = "block-field";
}  // namespace tags

// --- theta ------------------------------------------------------------------

struct ClusterOutcome {
  std::uint64_t replicate = 0;
  std::uint64_t task_seed = 0;
  ClusterStatus status = ClusterStatus::exhausted;
  std::uint64_t size = 0;
};

struct ThetaEstimate {
  EstimateWithCI theta_hat;
  StoppingRule rule;
  double lambda = 0.0;
  std::uint64_t k_report = 0;
  std::map<std::uint64_t, double> pi_hat;  // k <= k_report, observed sizes only
  double residual = 0.0;                   // exhausted with size > k_report
  double escaped_fraction = 0.0;
  double capped_fraction = 0.0;
  std::vector<ClusterOutcome> outcomes;    // in replicate order
};

struct ThetaOptions {
  std::uint64_t k_report = 100;
  RunOptions run;
};

/// Growth of the Palm origin's cluster in the infinite model; theta_hat counts
/// escaped and size-capped runs.
ThetaEstimate estimate_theta(const ConnectionFunction& phi, double lambda, const StoppingRule& rule,
                             std::uint64_t replicates, std::uint64_t seed,
                             const ThetaOptions& options = {});

// --- lambda_c ---------------------------------------------------------------

struct LambdaCCriterion {
  enum class Kind { spanning, theta_threshold };

  Kind kind = Kind::spanning;
  /// Crossing level: spanning probability `level`, or theta threshold `tau`.
  double level = 0.5;
  double tau = 0.05;
  std::uint64_t replicates = 200;
  /// Bisection stops at this bracket width, in units of range^-2, or after
  /// max_iterations halvings.
  double width = 0.05;
  int max_iterations = 12;

  std::string describe() const;
  void validate() const;
};

struct CrossingStats {
  double s = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int iterations = 0;
  /// (lambda, criterion estimate) at each evaluated intensity, in bisection order.
  std::vector<std::pair<double, EstimateWithCI>> evaluations;
  /// Per-replicate threshold intensities (infinite if never reached).
  std::vector<double> thresholds;
  bool monotone = true;

  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

struct LambdaCBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::string criterion;
  std::vector<CrossingStats> per_s;
  /// Per-size brackets lie within one bracket width of each other.
  bool agree = false;
  bool monotone = true;
};

/// Finite-size crossing of the criterion on each box size, located by
/// bisection; the reported bracket is the hull of the per-size brackets.
/// Replicate r at every intensity uses the same nested configuration, so the
/// empirical criterion is a monotone function of lambda.
LambdaCBracket estimate_lambda_c(const ConnectionFunction& phi, std::span<const double> s_grid,
                                 const LambdaCCriterion& criterion, std::uint64_t seed,
                                 const RunOptions& run = {});

/// Empirical criterion frequency at `lambda` from per-replicate thresholds.
EstimateWithCI threshold_frequency(std::span<const double> thresholds, double lambda,
                                   std::uint64_t seed = 0);

/// Smallest intensity (at most lambda_max) at which the configuration of B(s)
/// has a left-right crossing cluster: some component holds a vertex within
/// one range of each vertical side. Infinity if none at lambda_max.
double spanning_threshold(const PointSet& at_lambda_max, const ConnectionFunction& phi);

/// Smallest intensity (at most lambda_max) at which the Palm origin's
/// cluster in the plane reaches distance `radius`.
double escape_threshold(const PoissonPlane& at_lambda_max, std::uint64_t edge_key,
                        const ConnectionFunction& phi, double radius);

// --- Mecke ------------------------------------------------------------------

struct MeckeReport {
  EstimateWithCI lhs;
  EstimateWithCI rhs;
  double sigma = 0.0;  // combined standard error of lhs - rhs
  bool compatible = false;
};

/// lhs = E N_s with N_s = #{x : {x} <-> D_K}; rhs = lambda s^2 P[V_s <-> D_K].
MeckeReport mecke_check_Ns(const ConnectionFunction& phi, double lambda, double K, double s,
                           std::uint64_t replicates, std::uint64_t seed, const RunOptions& run = {});

struct MeckeSecondReport {
  EstimateWithCI lhs;            // E[N'(N' - 1)]
  EstimateWithCI rhs;            // lambda^2 s^4 P[both Palm clusters >= sqrt(s)]
  double sigma = 0.0;
  bool compatible = false;
  EstimateWithCI both_fraction;  // rhs / (lambda^2 s^4)
  EstimateWithCI theta_s;        // P[single Palm cluster >= sqrt(s)]
  double theta_s_squared = 0.0;
  double factorization_sigma = 0.0;
  double allowance = 0.0;
  bool factorization_ok = false;
};

/// Second-order identity with clusters of order >= sqrt(s), plus the check
/// that the two-point frequency factorizes as theta_s^2 within `allowance`.
MeckeSecondReport mecke_check_second(const ConnectionFunction& phi, double lambda, double s,
                                     std::uint64_t replicates, std::uint64_t seed,
                                     const RunOptions& run = {}, double allowance = 0.02);

// --- giant component ----------------------------------------------------------

struct GiantRow {
  std::uint64_t replicate = 0;
  std::uint64_t task_seed = 0;
  double L1_frac = 0.0;
  double L2_frac = 0.0;
};

struct GiantStatistics {
  double lambda = 0.0;
  double s = 0.0;
  std::vector<GiantRow> rows;
  EstimateWithCI L1;
  EstimateWithCI L2;
  double median_L1 = 0.0;
  double median_L2 = 0.0;
};

/// Replicates of (s^-2 L1, s^-2 L2). Box sizes get separate stream families.
GiantStatistics giant_statistics(const ConnectionFunction& phi, double lambda, double s,
                                 std::uint64_t replicates, std::uint64_t seed,
                                 const RunOptions& run = {});

/// Seed family of giant_statistics at box side s.
std::uint64_t giant_stream(std::uint64_t seed, double s) noexcept;

// --- positive association -----------------------------------------------------

struct GraphObservation {
  const PointSet& points;
  const ComponentSummary& components;  // with labels
  const ConnectionFunction& phi;
};

/// A named increasing event of the graph G(H_{lambda,s}).
struct IncreasingEvent {
  std::string name;
  std::function<bool(const GraphObservation&)> test;
};

IncreasingEvent event_L1_at_least(double count);
/// Some component meets D_K and holds a vertex within one range of the box boundary.
IncreasingEvent event_disk_to_boundary(double K);
IncreasingEvent event_nonempty();

struct CovarianceReport {
  std::string first;
  std::string second;
  double p_first = 0.0;
  double p_second = 0.0;
  double covariance = 0.0;
  double sigma = 0.0;
  bool ok = false;
};

struct FkgReport {
  std::vector<CovarianceReport> pairs;
  std::uint64_t replicates = 0;
  bool ok = false;
};

/// Empirical covariance of each event pair; ok when >= -3 sigma.
FkgReport fkg_sanity(const ConnectionFunction& phi, double lambda, double s,
                     std::span<const std::pair<IncreasingEvent, IncreasingEvent>> events,
                     std::uint64_t replicates, std::uint64_t seed, const RunOptions& run = {});

}  // namespace rcmlab
