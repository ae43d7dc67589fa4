#include "rcmlab/connection.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rcmlab {

namespace {

void require_positive_finite(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

constexpr int kMonotoneGrid = 4096;

}  // namespace

ConnectionFunction ConnectionFunction::hard_disk(double range) {
  require_positive_finite(range, "hard-disk range");
  ConnectionFunction f;
  f.kind_ = Kind::hard_disk;
  f.range_ = range;
  return f;
}

ConnectionFunction ConnectionFunction::linear_ramp(double range) {
  require_positive_finite(range, "linear-ramp range");
  ConnectionFunction f;
  f.kind_ = Kind::linear_ramp;
  f.range_ = range;
  f.validate_monotone();
  return f;
}

ConnectionFunction ConnectionFunction::truncated_exponential(double amplitude, double length,
                                                             double range) {
  if (!std::isfinite(amplitude) || amplitude <= 0.0 || amplitude > 1.0) {
    throw std::invalid_argument("truncated-exponential amplitude must lie in (0, 1]");
  }
  require_positive_finite(length, "truncated-exponential length");
  require_positive_finite(range, "truncated-exponential range");
  ConnectionFunction f;
  f.kind_ = Kind::truncated_exponential;
  f.amplitude_ = amplitude;
  f.length_ = length;
  f.range_ = range;
  f.validate_monotone();
  return f;
}

ConnectionFunction ConnectionFunction::step_table(std::vector<Step> steps) {
  while (!steps.empty() && steps.back().value == 0.0) steps.pop_back();
  if (steps.empty()) throw std::invalid_argument("step-table has empty range (phi is zero)");

  double prev_break = 0.0;
  double prev_value = 1.0;
  for (const Step& s : steps) {
    if (!std::isfinite(s.breakpoint) || s.breakpoint <= prev_break) {
      throw std::invalid_argument("step-table breakpoints must be positive, finite, increasing");
    }
    if (!std::isfinite(s.value) || s.value < 0.0 || s.value > 1.0) {
      throw std::invalid_argument("step-table values must lie in [0, 1]");
    }
    if (s.value > prev_value) throw std::invalid_argument("step-table values must be nonincreasing");
    prev_break = s.breakpoint;
    prev_value = s.value;
  }
  ConnectionFunction f;
  f.kind_ = Kind::step_table;
  f.range_ = steps.back().breakpoint;
  f.steps_ = std::move(steps);
  return f;
}

std::string_view ConnectionFunction::kind_name() const noexcept {
  switch (kind_) {
    case Kind::hard_disk:
      return "hard-disk";
    case Kind::linear_ramp:
      return "linear-ramp";
    case Kind::truncated_exponential:
      return "truncated-exponential";
    case Kind::step_table:
      return "step-table";
  }
  return "unknown";
}

double ConnectionFunction::step_value(double r) const noexcept {
  // first step whose breakpoint is >= r
  auto it = std::lower_bound(steps_.begin(), steps_.end(), r,
                             [](const Step& s, double v) { return s.breakpoint < v; });
  return it == steps_.end() ? 0.0 : it->value;
}

void ConnectionFunction::validate_monotone() const {
  double prev = (*this)(0.0);
  if (prev < 0.0 || prev > 1.0) throw std::invalid_argument("phi(0) outside [0, 1]");
  for (int i = 1; i <= kMonotoneGrid + 8; ++i) {
    const double r = range_ * i / kMonotoneGrid;
    const double v = (*this)(r);
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("phi outside [0, 1]");
    if (v > prev) throw std::invalid_argument("phi is not nonincreasing");
    prev = v;
  }
}

double ConnectionFunction::integral() const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r = range_;
  switch (kind_) {
    case Kind::hard_disk:
      return std::numbers::pi * r * r;
    case Kind::linear_ramp:
      return std::numbers::pi * r * r / 3.0;
    case Kind::truncated_exponential: {
      const double l = length_;
      return two_pi * amplitude_ * l * l * (1.0 - std::exp(-r / l) * (1.0 + r / l));
    }
    case Kind::step_table: {
      // Piecewise quadrature; each piece is smooth so Simpson converges at once.
      double total = 0.0;
      double lo = 0.0;
      for (const Step& s : steps_) {
        const double v = s.value;
        total += adaptive_simpson([v](double t) { return v * t; }, lo, s.breakpoint, 1e-13);
        lo = s.breakpoint;
      }
      return two_pi * total;
    }
  }
  return 0.0;
}

double ConnectionFunction::expected_degree(double lambda) const { return lambda * integral(); }

ConnectionFunction ConnectionFunction::scaled(double factor) const {
  require_positive_finite(factor, "scale factor");
  switch (kind_) {
    case Kind::hard_disk:
      return hard_disk(range_ * factor);
    case Kind::linear_ramp:
      return linear_ramp(range_ * factor);
    case Kind::truncated_exponential:
      return truncated_exponential(amplitude_, length_ * factor, range_ * factor);
    case Kind::step_table: {
      std::vector<Step> steps = steps_;
      for (Step& s : steps) s.breakpoint *= factor;
      return step_table(std::move(steps));
    }
  }
  return *this;
}

double phi_eval(const ConnectionFunction& phi, double r) {
  if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("phi_eval: r must be finite and >= 0");
  return phi(r);
}

double expected_degree(const ConnectionFunction& phi, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("expected_degree: lambda must be finite and >= 0");
  }
  return phi.expected_degree(lambda);
}

}  // namespace rcmlab
