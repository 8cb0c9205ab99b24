#pragma once

// Linear bound expressions over the network inputs and their concretization
// over an input box.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "diffverify/interval.hpp"

namespace diffverify {

/// Axis-aligned input box, one interval per network input.
struct InputRegion {
  std::vector<Interval> bounds;

  InputRegion() = default;
  explicit InputRegion(std::vector<Interval> b) : bounds(std::move(b)) {}

  std::size_t dim() const { return bounds.size(); }
  const Interval& operator[](std::size_t i) const { return bounds[i]; }
  Interval& operator[](std::size_t i) { return bounds[i]; }

  bool contains(std::span<const double> x) const {
    if (x.size() != bounds.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!diffverify::contains(bounds[i], x[i])) return false;
    return true;
  }

  std::vector<double> center() const {
    std::vector<double> c(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i) c[i] = std::midpoint(bounds[i].lo, bounds[i].hi);
    return c;
  }

  friend bool operator==(const InputRegion&, const InputRegion&) = default;
};

/// sum_i coeffs[i] * x_i + constant. Coefficients are intervals only to absorb
/// rounding; their width stays at a few ULPs.
struct LinearExpr {
  std::vector<Interval> coeffs;
  Interval constant;

  LinearExpr() = default;
  explicit LinearExpr(std::size_t n, Interval c = Interval(0.0)) : coeffs(n, Interval(0.0)), constant(c) {}

  static LinearExpr variable(std::size_t n, std::size_t i) {
    LinearExpr e(n);
    e.coeffs.at(i) = Interval(1.0);
    return e;
  }

  std::size_t dim() const { return coeffs.size(); }

  bool is_constant() const {
    for (const auto& c : coeffs)
      if (c.lo != 0.0 || c.hi != 0.0) return false;
    return true;
  }
};

/// Lower and upper linear bounds on one quantity.
struct SymbolicInterval {
  LinearExpr lower;
  LinearExpr upper;

  SymbolicInterval() = default;
  explicit SymbolicInterval(std::size_t n) : lower(n), upper(n) {}
  SymbolicInterval(LinearExpr l, LinearExpr u) : lower(std::move(l)), upper(std::move(u)) {}

  static SymbolicInterval constant(std::size_t n, Interval c) {
    return {LinearExpr(n, Interval(c.lo)), LinearExpr(n, Interval(c.hi))};
  }

  std::size_t dim() const { return lower.dim(); }
};

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("symbolic expressions over different input dimensions");
}

// acc += w * term with w an interval weight; rounding absorbed into the
// coefficient intervals.
inline void accumulate(LinearExpr& acc, const LinearExpr& term, Interval w) {
  for (std::size_t i = 0; i < acc.coeffs.size(); ++i) {
    const Interval& c = term.coeffs[i];
    if (c.lo == 0.0 && c.hi == 0.0) continue;
    acc.coeffs[i] = add(acc.coeffs[i], mul(c, w));
  }
  acc.constant = add(acc.constant, mul(term.constant, w));
}

inline void accumulate(LinearExpr& acc, const LinearExpr& term, double w) {
  if (w == 0.0) return;
  for (std::size_t i = 0; i < acc.coeffs.size(); ++i) {
    const Interval& c = term.coeffs[i];
    if (c.lo == 0.0 && c.hi == 0.0) continue;
    acc.coeffs[i] = add(acc.coeffs[i], scale(c, w));
  }
  acc.constant = add(acc.constant, scale(term.constant, w));
}

// Minimum of c * x over c in coeff, x in box.
inline double term_min(Interval coeff, Interval box) {
  if (coeff.lo == 0.0 && coeff.hi == 0.0) return 0.0;
  return std::min({mul_down(coeff.lo, box.lo), mul_down(coeff.lo, box.hi), mul_down(coeff.hi, box.lo),
                   mul_down(coeff.hi, box.hi)});
}

inline double term_max(Interval coeff, Interval box) {
  if (coeff.lo == 0.0 && coeff.hi == 0.0) return 0.0;
  return std::max({mul_up(coeff.lo, box.lo), mul_up(coeff.lo, box.hi), mul_up(coeff.hi, box.lo),
                   mul_up(coeff.hi, box.hi)});
}

}  // namespace detail

/// Smallest value of `e` over the region (rounded down).
inline double concretize_lower(const LinearExpr& e, const InputRegion& region) {
  detail::require_same_dim(e.dim(), region.dim());
  double acc = e.constant.lo;
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) acc = add_down(acc, detail::term_min(e.coeffs[i], region[i]));
  return acc;
}

/// Largest value of `e` over the region (rounded up).
inline double concretize_upper(const LinearExpr& e, const InputRegion& region) {
  detail::require_same_dim(e.dim(), region.dim());
  double acc = e.constant.hi;
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) acc = add_up(acc, detail::term_max(e.coeffs[i], region[i]));
  return acc;
}

inline Interval concretize(const SymbolicInterval& s, const InputRegion& region) {
  return {concretize_lower(s.lower, region), concretize_upper(s.upper, region)};
}

/// Enclosure of e evaluated at the point x (used to check sampled values).
inline Interval evaluate(const LinearExpr& e, std::span<const double> x) {
  detail::require_same_dim(e.dim(), x.size());
  Interval acc = e.constant;
  for (std::size_t i = 0; i < x.size(); ++i) acc = add(acc, mul(e.coeffs[i], Interval(x[i])));
  return acc;
}

/// One identity expression per input: the i-th is [x_i, x_i].
inline std::vector<SymbolicInterval> sym_from_region(const InputRegion& region) {
  const std::size_t n = region.dim();
  std::vector<SymbolicInterval> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(LinearExpr::variable(n, i), LinearExpr::variable(n, i));
  return out;
}

/// In-place acc += w * term, swapping term's bounds when w is negative.
inline void sym_scale_add_into(SymbolicInterval& acc, const SymbolicInterval& term, double w) {
  detail::require_same_dim(acc.dim(), term.dim());
  if (w >= 0) {
    detail::accumulate(acc.lower, term.lower, w);
    detail::accumulate(acc.upper, term.upper, w);
  } else {
    detail::accumulate(acc.lower, term.upper, w);
    detail::accumulate(acc.upper, term.lower, w);
  }
}

/// In-place acc += w * term for an interval weight. A weight straddling zero
/// cannot keep the bound orientation, so the term is concretized into the
/// constants.
inline void sym_scale_add_into(SymbolicInterval& acc, const SymbolicInterval& term, Interval w,
                               const InputRegion& region) {
  if (w.is_point()) return sym_scale_add_into(acc, term, w.lo);
  detail::require_same_dim(acc.dim(), term.dim());
  if (w.lo >= 0) {
    detail::accumulate(acc.lower, term.lower, w);
    detail::accumulate(acc.upper, term.upper, w);
  } else if (w.hi <= 0) {
    detail::accumulate(acc.lower, term.upper, w);
    detail::accumulate(acc.upper, term.lower, w);
  } else {
    const Interval prod = mul(concretize(term, region), w);
    acc.lower.constant = add(acc.lower.constant, Interval(prod.lo));
    acc.upper.constant = add(acc.upper.constant, Interval(prod.hi));
  }
}

inline SymbolicInterval sym_scale_add(SymbolicInterval acc, const SymbolicInterval& term, double w) {
  sym_scale_add_into(acc, term, w);
  return acc;
}

inline SymbolicInterval sym_scale_add(SymbolicInterval acc, const SymbolicInterval& term, Interval w,
                                      const InputRegion& region) {
  sym_scale_add_into(acc, term, w, region);
  return acc;
}

inline SymbolicInterval sym_negate(const SymbolicInterval& s) {
  SymbolicInterval out(s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i) {
    out.lower.coeffs[i] = negate(s.upper.coeffs[i]);
    out.upper.coeffs[i] = negate(s.lower.coeffs[i]);
  }
  out.lower.constant = negate(s.upper.constant);
  out.upper.constant = negate(s.lower.constant);
  return out;
}

inline SymbolicInterval sym_add(const SymbolicInterval& a, const SymbolicInterval& b) {
  detail::require_same_dim(a.dim(), b.dim());
  SymbolicInterval out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    out.lower.coeffs[i] = add(a.lower.coeffs[i], b.lower.coeffs[i]);
    out.upper.coeffs[i] = add(a.upper.coeffs[i], b.upper.coeffs[i]);
  }
  out.lower.constant = add(a.lower.constant, b.lower.constant);
  out.upper.constant = add(a.upper.constant, b.upper.constant);
  return out;
}

/// Adds a concrete interval to both bounds' constants (bias terms).
inline SymbolicInterval sym_add_constant(SymbolicInterval s, Interval c) {
  s.lower.constant = add(s.lower.constant, Interval(c.lo));
  s.upper.constant = add(s.upper.constant, Interval(c.hi));
  return s;
}

}  // namespace diffverify
