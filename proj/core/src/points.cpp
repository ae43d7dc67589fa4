#include "rcmlab/points.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rcmlab {

namespace {

constexpr int kMaxBatches = 255;

std::uint64_t chunk_label(int cx, int cy) noexcept {
  const auto ux = static_cast<std::uint64_t>(cx + (1 << 18)) & 0x7ffff;
  const auto uy = static_cast<std::uint64_t>(cy + (1 << 18)) & 0x7ffff;
  return (ux << 19) | uy;
}

VertexId site_id(int cx, int cy, int batch, std::uint32_t index) noexcept {
  return (chunk_label(cx, cy) << 24) | (static_cast<std::uint64_t>(batch & 0xff) << 16) |
         (index & 0xffff);
}

void check_chunk(int c) {
  if (c < -PoissonPlane::kMaxChunk || c > PoissonPlane::kMaxChunk) {
    throw std::invalid_argument("region exceeds the addressable plane (" +
                                std::to_string(PoissonPlane::kMaxChunk) + " range units)");
  }
}

}  // namespace

BoxSpec::BoxSpec(double side) : side_(side) {
  if (!std::isfinite(side) || side <= 0.0) {
    throw std::invalid_argument("box side s must be positive and finite");
  }
}

PoissonPlane::PoissonPlane(double lambda, double unit, std::uint64_t stream_key)
    : lambda_(lambda), unit_(unit), scaled_lambda_(lambda * unit * unit), batches_(0),
      key_(stream_key) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("intensity lambda must be finite and >= 0");
  }
  if (!std::isfinite(unit) || unit <= 0.0) throw std::invalid_argument("length unit must be positive");
  if (scaled_lambda_ > kMaxBatches) {
    throw std::invalid_argument("intensity too large: lambda * range^2 must be <= " +
                                std::to_string(kMaxBatches));
  }
  batches_ = static_cast<int>(std::ceil(scaled_lambda_));
}

void PoissonPlane::sample_chunk(int cx, int cy, std::vector<Site>& out) const {
  const std::uint64_t chunk_key = derive_key(key_, chunk_label(cx, cy));
  for (int b = 0; b < batches_; ++b) {
    CounterRng rng(derive_key(chunk_key, static_cast<std::uint64_t>(b)));
    const std::uint32_t count = poisson_by_inversion(1.0, rng.uniform());
    for (std::uint32_t i = 0; i < count; ++i) {
      const double u = rng.uniform();
      const double v = rng.uniform();
      const double mark = rng.uniform();
      const double arrival = b + mark;
      if (arrival >= scaled_lambda_) continue;
      out.push_back({{(cx + u) * unit_, (cy + v) * unit_}, site_id(cx, cy, b, i), arrival});
    }
  }
}

std::vector<Site> sample_region(const PoissonPlane& plane, const Domain& domain) {
  if (!domain.bounded()) throw std::invalid_argument("sample_region needs a bounded domain");
  const double e = domain.extent;
  const int x0 = plane.chunk_of(domain.center.x - e);
  const int x1 = plane.chunk_of(domain.center.x + e);
  const int y0 = plane.chunk_of(domain.center.y - e);
  const int y1 = plane.chunk_of(domain.center.y + e);
  check_chunk(x0);
  check_chunk(x1);
  check_chunk(y0);
  check_chunk(y1);

  std::vector<Site> out;
  std::vector<Site> chunk;
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      chunk.clear();
      plane.sample_chunk(cx, cy, chunk);
      for (const Site& s : chunk) {
        if (domain.contains(s.pos)) out.push_back(s);
      }
    }
  }
  return out;
}

PointSet sample_points(double lambda, const BoxSpec& box, std::uint64_t seed,
                       std::uint64_t replicate, double unit) {
  PointSet ps;
  ps.box = box;
  ps.lambda = lambda;
  ps.seed = seed;
  ps.replicate = replicate;
  ps.unit = unit;
  const PoissonPlane plane(lambda, unit, ps.streams().points);
  if (lambda == 0.0) return ps;
  ps.sites = sample_region(plane, Domain::box(box));
  return ps;
}

std::vector<Site> PalmPointSet::vertices() const {
  std::vector<Site> v = base.sites;
  v.insert(v.end(), added.begin(), added.end());
  return v;
}

PalmPointSet with_origin(PointSet base) {
  PalmPointSet p{std::move(base), {}};
  p.added.push_back(palm_site(0, {0.0, 0.0}));
  return p;
}

Point2 uniform_in_box(const BoxSpec& box, std::uint64_t palm_key, std::uint32_t k) noexcept {
  CounterRng rng(palm_key, 2ULL * k);
  const double u = rng.uniform();
  const double v = rng.uniform();
  return {(u - 0.5) * box.side(), (v - 0.5) * box.side()};
}

PalmPointSet with_uniform_points(PointSet base, int count) {
  if (count < 1 || count > 2) throw std::invalid_argument("Palm point count must be 1 or 2");
  const std::uint64_t key = base.streams().palm;
  PalmPointSet p{std::move(base), {}};
  for (int k = 0; k < count; ++k) {
    p.added.push_back(palm_site(static_cast<std::uint32_t>(k),
                                uniform_in_box(p.base.box, key, static_cast<std::uint32_t>(k))));
  }
  return p;
}

}  // namespace rcmlab
