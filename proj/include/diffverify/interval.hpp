#pragma once

// Closed intervals of doubles with outward rounding.
//
// Every arithmetic endpoint is rounded toward the outside of the interval:
// the float result is computed in round-to-nearest, the exact rounding error
// is recovered (TwoSum for addition, FMA for multiplication) and the endpoint
// is stepped one ULP outward whenever that error points outward. Results
// therefore always contain the exact real-arithmetic result while exact
// operations (0 * x, small integers, identical operands) stay exact.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace diffverify {

namespace detail {

inline std::atomic<bool>& outward_rounding_flag() {
  static std::atomic<bool> flag{true};
  return flag;
}

// Below this magnitude FMA error terms can be lost to underflow, so the
// endpoint is always widened.
inline constexpr double kTinyMagnitude = 0x1p-960;

inline double step_down(double v) {
  return std::nextafter(v, -std::numeric_limits<double>::infinity());
}
inline double step_up(double v) {
  return std::nextafter(v, std::numeric_limits<double>::infinity());
}

}  // namespace detail

/// Sound mode (default) widens inexact endpoints; fast mode skips it.
inline void set_outward_rounding(bool enabled) {
  detail::outward_rounding_flag().store(enabled, std::memory_order_relaxed);
}
inline bool outward_rounding() {
  return detail::outward_rounding_flag().load(std::memory_order_relaxed);
}

/// RAII toggle, mostly for tests and the --fast-math CLI flag.
class OutwardRoundingScope {
 public:
  explicit OutwardRoundingScope(bool enabled) : previous_(outward_rounding()) {
    set_outward_rounding(enabled);
  }
  ~OutwardRoundingScope() { set_outward_rounding(previous_); }
  OutwardRoundingScope(const OutwardRoundingScope&) = delete;
  OutwardRoundingScope& operator=(const OutwardRoundingScope&) = delete;

 private:
  bool previous_;
};

// Directed-rounding primitives. Each returns a double that is <= (down) or
// >= (up) the exact result.

inline double add_down(double a, double b) {
  const double s = a + b;
  if (!outward_rounding() || !std::isfinite(s)) return s;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err < 0 ? detail::step_down(s) : s;
}

inline double add_up(double a, double b) {
  const double s = a + b;
  if (!outward_rounding() || !std::isfinite(s)) return s;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0 ? detail::step_up(s) : s;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

// Division by a finite nonzero b; the remainder a - q*b is exact under FMA.
inline double div_down(double a, double b) {
  const double q = a / b;
  if (!outward_rounding() || !std::isfinite(q)) return q;
  if (std::fabs(q) < detail::kTinyMagnitude) return q == 0 && a == 0 ? q : detail::step_down(q);
  const double r = std::fma(-q, b, a);
  // exact = q + r / b
  return (r != 0 && ((r < 0) != (b < 0))) ? detail::step_down(q) : q;
}

inline double div_up(double a, double b) {
  const double q = a / b;
  if (!outward_rounding() || !std::isfinite(q)) return q;
  if (std::fabs(q) < detail::kTinyMagnitude) return q == 0 && a == 0 ? q : detail::step_up(q);
  const double r = std::fma(-q, b, a);
  return (r != 0 && ((r < 0) == (b < 0))) ? detail::step_up(q) : q;
}

inline double mul_down(double a, double b) {
  const double p = a * b;
  if (!outward_rounding()) return p;
  if (std::isinf(p)) {
    // Overflowed (finite operands): the exact product is finite.
    if (std::isfinite(a) && std::isfinite(b) && p > 0) return std::numeric_limits<double>::max();
    return p;
  }
  if (p == 0 && a != 0 && b != 0) {
    // Underflow to zero; the exact product keeps the operands' sign.
    return (a > 0) == (b > 0) ? 0.0 : -std::numeric_limits<double>::denorm_min();
  }
  if (std::fabs(p) < detail::kTinyMagnitude && p != 0) return detail::step_down(p);
  const double err = std::fma(a, b, -p);
  return err < 0 ? detail::step_down(p) : p;
}

inline double mul_up(double a, double b) {
  const double p = a * b;
  if (!outward_rounding()) return p;
  if (std::isinf(p)) {
    if (std::isfinite(a) && std::isfinite(b) && p < 0) return std::numeric_limits<double>::lowest();
    return p;
  }
  if (p == 0 && a != 0 && b != 0) {
    return (a > 0) == (b > 0) ? std::numeric_limits<double>::denorm_min() : 0.0;
  }
  if (std::fabs(p) < detail::kTinyMagnitude && p != 0) return detail::step_up(p);
  const double err = std::fma(a, b, -p);
  return err > 0 ? detail::step_up(p) : p;
}

/// Closed interval [lo, hi]. Zero width is fine; NaN is not.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr explicit Interval(double v) : lo(v), hi(v) {}
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static Interval checked(double l, double h) {
    if (std::isnan(l) || std::isnan(h)) throw std::invalid_argument("interval endpoint is NaN");
    if (l > h) throw std::invalid_argument("interval lower endpoint exceeds upper endpoint");
    return {l, h};
  }

  constexpr bool valid() const { return lo <= hi; }  // false for NaN too
  constexpr bool is_point() const { return lo == hi; }

  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

inline Interval add(Interval a, Interval b) { return {add_down(a.lo, b.lo), add_up(a.hi, b.hi)}; }

inline Interval sub(Interval a, Interval b) { return {sub_down(a.lo, b.hi), sub_up(a.hi, b.lo)}; }

inline Interval scale(Interval a, double c) {
  if (c >= 0) return {mul_down(a.lo, c), mul_up(a.hi, c)};
  return {mul_down(a.hi, c), mul_up(a.lo, c)};
}

inline Interval negate(Interval a) { return {-a.hi, -a.lo}; }

// Product of two intervals. Only used internally for interval-valued weight
// deltas that straddle zero.
inline Interval mul(Interval a, Interval b) {
  const double lo = std::min({mul_down(a.lo, b.lo), mul_down(a.lo, b.hi), mul_down(a.hi, b.lo),
                              mul_down(a.hi, b.hi)});
  const double hi = std::max({mul_up(a.lo, b.lo), mul_up(a.lo, b.hi), mul_up(a.hi, b.lo),
                              mul_up(a.hi, b.hi)});
  return {lo, hi};
}

inline Interval imax(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }
inline Interval imin(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }

inline Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

inline double width(Interval a) { return sub_up(a.hi, a.lo); }

inline bool contains(Interval a, double x) { return a.lo <= x && x <= a.hi; }

/// inner ⊆ outer.
inline bool subset(Interval inner, Interval outer) { return outer.lo <= inner.lo && inner.hi <= outer.hi; }

inline double magnitude(Interval a) { return std::max(std::fabs(a.lo), std::fabs(a.hi)); }

inline Interval operator+(Interval a, Interval b) { return add(a, b); }
inline Interval operator-(Interval a, Interval b) { return sub(a, b); }
inline Interval operator-(Interval a) { return negate(a); }
inline Interval operator*(Interval a, double c) { return scale(a, c); }
inline Interval operator*(double c, Interval a) { return scale(a, c); }

inline std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo << ", " << a.hi << ']';
}

}  // namespace diffverify
