#pragma once

// Renormalization events and the block field.
//
// U(c; K, L): exactly one component of G(H ∩ D_{L+r}(c)), r the connection
//             range, meets both D_K(c) and the complement of D_L(c).
// F(c, c'; K, M): D_K(c) <-> D_K(c') in G(H ∩ D_{3M}(c)).
// X_x = U(Mx; K, M/3) and F(Mx, My; K, M) for the four lattice neighbours y.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rcmlab/estimators.hpp"
#include "rcmlab/growth.hpp"

namespace rcmlab {

struct EventSpecU {
  double K = 2.0;
  double L = 10.0;
  double lambda = 2.0;
  void validate() const;
};

struct EventSpecF {
  double K = 2.0;
  double M = 8.0;
  double lambda = 2.0;
  void validate() const;
};

/// Evaluate on a fixed configuration. `src` may hold any superset of the
/// relevant disk; its domain and visited set are overwritten.
bool event_U(StaticSource& src, Point2 center, double K, double L, const ConnectionFunction& phi,
             const EdgeMarks& marks);
bool event_F(StaticSource& src, Point2 from, Point2 to, double K, double M,
             const ConnectionFunction& phi, const EdgeMarks& marks);

EstimateWithCI estimate_event_U(const ConnectionFunction& phi, const EventSpecU& spec,
                                std::uint64_t replicates, std::uint64_t seed,
                                const RunOptions& run = {});
EstimateWithCI estimate_event_F(const ConnectionFunction& phi, const EventSpecF& spec,
                                std::uint64_t replicates, std::uint64_t seed,
                                const RunOptions& run = {});

/// (parameter, estimate) over a grid of L (for U) or M (for F) at fixed K.
std::vector<std::pair<double, EstimateWithCI>> grid_search_U(
    const ConnectionFunction& phi, double K, double lambda, std::span<const double> L_grid,
    std::uint64_t replicates, std::uint64_t seed, const RunOptions& run = {});
std::vector<std::pair<double, EstimateWithCI>> grid_search_F(
    const ConnectionFunction& phi, double K, double lambda, std::span<const double> M_grid,
    std::uint64_t replicates, std::uint64_t seed, const RunOptions& run = {});

struct BlockParams {
  double K = 2.0;
  double M = 18.0;
  double lambda = 2.0;
  void validate() const;
};

struct BlockFieldSample {
  BlockParams params;
  int nx = 0;
  int ny = 0;
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;
  std::vector<std::uint8_t> values;  // row-major, values[iy * nx + ix]

  std::uint8_t at(int ix, int iy) const { return values.at(static_cast<std::size_t>(iy) * nx + ix); }
  /// Centre M * (ix, iy) of site (ix, iy).
  Point2 center(int ix, int iy) const noexcept { return {params.M * ix, params.M * iy}; }
  double fraction() const noexcept;
};

/// X at lattice centre `center` (= M x) from the configuration in `src`.
std::uint8_t block_value(StaticSource& src, Point2 center, const BlockParams& p,
                         const ConnectionFunction& phi, const EdgeMarks& marks);

/// One shared configuration over the union of the disks D_{3M}(Mx) of an
/// nx-by-ny grid; independent samples differ in `sample`.
BlockFieldSample block_field_sample(const ConnectionFunction& phi, const BlockParams& params, int nx,
                                    int ny, std::uint64_t seed, std::uint64_t sample = 0,
                                    const RunOptions& run = {});

/// Sites of the shared configuration used by block_field_sample.
std::vector<Site> block_field_sites(const ConnectionFunction& phi, const BlockParams& params, int nx,
                                    int ny, std::uint64_t seed, std::uint64_t sample,
                                    std::size_t memory_limit_bytes = std::size_t{1} << 30);
/// Edge-mark key used by block_field_sample.
std::uint64_t block_field_edge_key(std::uint64_t seed, std::uint64_t sample) noexcept;

struct DependenceReport {
  int distance = 0;
  std::uint64_t pairs_per_sample = 0;
  std::uint64_t samples = 0;
  double p_hat = 0.0;
  double covariance = 0.0;
  double sigma = 0.0;
  double correlation = 0.0;
  /// Smallest centre distance over pairs beyond `distance`, against 6M.
  double min_center_distance = 0.0;
  bool structural_disjoint = false;
  bool within_3_sigma = false;
  /// Report only: nearest-neighbour correlation (overlapping regions).
  double adjacent_correlation = 0.0;

  bool ok() const noexcept { return structural_disjoint && within_3_sigma; }
};

/// Covariance of X_x, X_y over site pairs at L-infinity distance > d. With
/// several samples sigma is the spread of the per-sample covariance; with one
/// it treats pairs as independent.
DependenceReport dependence_check(std::span<const BlockFieldSample> samples, int d);

struct HomogeneityReport {
  double chi_square = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool ok = true;  // p_value >= 0.01
};

/// Chi-square test that P[X_x = 1] is the same at every site.
HomogeneityReport homogeneity_check(std::span<const BlockFieldSample> samples);

/// Parameter header followed by ny rows of nx digits.
void write_block_field(std::ostream& os, const BlockFieldSample& sample);

}  // namespace rcmlab
