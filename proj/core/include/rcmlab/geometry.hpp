#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace rcmlab {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

constexpr double norm2(Point2 p) noexcept { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) noexcept { return std::sqrt(norm2(p)); }
constexpr double distance2(Point2 a, Point2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}
inline double distance(Point2 a, Point2 b) noexcept { return std::sqrt(distance2(a, b)); }

/// The box B(s) = [-s/2, s/2]^2.
class BoxSpec {
 public:
  explicit BoxSpec(double side);

  double side() const noexcept { return side_; }
  double half() const noexcept { return 0.5 * side_; }
  double area() const noexcept { return side_ * side_; }

  bool contains(Point2 p) const noexcept {
    return std::abs(p.x) <= half() && std::abs(p.y) <= half();
  }

 private:
  double side_;
};

/// Closed disk D_r(c).
struct Disk {
  Point2 center;
  double radius = 0.0;

  bool contains(Point2 p) const noexcept { return distance2(p, center) <= radius * radius; }
};

/// Region a cluster exploration is confined to.
struct Domain {
  enum class Kind : std::uint8_t { plane, disk, box };

  Kind kind = Kind::plane;
  Point2 center;
  double extent = 0.0;  // disk radius or box half-side

  static Domain whole_plane() noexcept { return {}; }
  static Domain disk(Disk d) noexcept { return {Kind::disk, d.center, d.radius}; }
  static Domain box(const BoxSpec& b) noexcept { return {Kind::box, {}, b.half()}; }

  bool contains(Point2 p) const noexcept {
    switch (kind) {
      case Kind::plane:
        return true;
      case Kind::disk:
        return distance2(p, center) <= extent * extent;
      case Kind::box:
        return std::abs(p.x - center.x) <= extent && std::abs(p.y - center.y) <= extent;
    }
    return false;
  }

  bool bounded() const noexcept { return kind != Kind::plane; }
};

}  // namespace rcmlab
