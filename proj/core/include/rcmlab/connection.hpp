#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcmlab {

/// One step of a step-table connection function: phi(r) = value for r in
/// (previous breakpoint, breakpoint].
struct Step {
  double breakpoint = 0.0;
  double value = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

/// A nonincreasing, finite-range connection function phi: [0, inf) -> [0, 1].
///
/// Instances are immutable and validated on construction: values lie in [0, 1],
/// phi is nonincreasing, and phi vanishes beyond range() < inf.
class ConnectionFunction {
 public:
  enum class Kind { hard_disk, linear_ramp, truncated_exponential, step_table };

  /// phi = 1 on [0, range].
  static ConnectionFunction hard_disk(double range = 1.0);
  /// phi(r) = max(0, 1 - r / range).
  static ConnectionFunction linear_ramp(double range = 1.0);
  /// phi(r) = amplitude * exp(-r / length) on [0, range], zero beyond.
  static ConnectionFunction truncated_exponential(double amplitude, double length,
                                                  double range = 1.0);
  /// Trailing zero-valued steps are dropped; the range is the last breakpoint
  /// with a positive value.
  static ConnectionFunction step_table(std::vector<Step> steps);

  Kind kind() const noexcept { return kind_; }
  std::string_view kind_name() const noexcept;
  double range() const noexcept { return range_; }
  double amplitude() const noexcept { return amplitude_; }
  double length() const noexcept { return length_; }
  std::span<const Step> steps() const noexcept { return steps_; }

  /// Unchecked evaluation for hot loops; r must be >= 0.
  double operator()(double r) const noexcept {
    if (r > range_) return 0.0;
    switch (kind_) {
      case Kind::hard_disk:
        return 1.0;
      case Kind::linear_ramp:
        return 1.0 - r / range_;
      case Kind::truncated_exponential:
        return amplitude_ * std::exp(-r / length_);
      case Kind::step_table:
        return step_value(r);
    }
    return 0.0;
  }

  /// Mean degree of a typical vertex of the random connection model at
  /// intensity lambda: lambda * 2 pi * int_0^range phi(r) r dr.
  double expected_degree(double lambda) const;

  /// int_{R^2} phi(|x|) dx.
  double integral() const;

  /// The same function with lengths multiplied by `factor`: r -> phi(r / factor).
  ConnectionFunction scaled(double factor) const;

  friend bool operator==(const ConnectionFunction&, const ConnectionFunction&) = default;

 private:
  ConnectionFunction() = default;
  double step_value(double r) const noexcept;
  void validate_monotone() const;

  Kind kind_ = Kind::hard_disk;
  double range_ = 1.0;
  double amplitude_ = 1.0;
  double length_ = 1.0;
  std::vector<Step> steps_;
};

/// Checked evaluation: rejects negative or non-finite r.
double phi_eval(const ConnectionFunction& phi, double r);

/// Checked expected degree: rejects negative or non-finite lambda.
double expected_degree(const ConnectionFunction& phi, double lambda);

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40);

namespace detail {
template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace rcmlab
