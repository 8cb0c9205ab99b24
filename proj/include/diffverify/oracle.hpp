#pragma once

// Independent ground truth for testing the analysis: exact extremes of the
// ReLU delta function, sampled under-approximations of network deltas, and
// extended-precision re-evaluation of concretization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "diffverify/interval.hpp"
#include "diffverify/network.hpp"
#include "diffverify/symbolic.hpp"

namespace diffverify::oracle {

class EmptyFeasibleSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ReLU(n + d) - ReLU(n).
inline double relu_delta(double n, double d) { return std::max(n + d, 0.0) - std::max(n, 0.0); }

/// Exact range of ReLU(n + d) - ReLU(n) over n in `n`, d in `d`, optionally
/// restricted to n + d in `n_prime`.
///
/// The function is continuous and piecewise linear with kinks on n = 0 and
/// n + d = 0, so its extremes over the (convex polygonal) feasible set sit at
/// vertices of the arrangement formed by the box edges, the optional strip
/// edges and the two kink lines. All pairwise line intersections are
/// enumerated and the feasible ones evaluated. Vertex coordinates are single
/// differences of the inputs, so binary128 holds them exactly; the extremes
/// are rounded to the nearest double at the end.
inline Interval relu_delta_exact(Interval n, Interval d, std::optional<Interval> n_prime = std::nullopt) {
  using Q = __float128;
  // Lines a*n + b*d = c with a, b in {0, 1}.
  struct Line {
    int a, b;
    Q c;
  };
  std::vector<Line> lines = {{1, 0, n.lo}, {1, 0, n.hi}, {0, 1, d.lo}, {0, 1, d.hi}, {1, 0, 0}, {1, 1, 0}};
  if (n_prime) {
    lines.push_back({1, 1, n_prime->lo});
    lines.push_back({1, 1, n_prime->hi});
  }
  auto feasible = [&](Q x, Q y) {
    if (x < n.lo || x > n.hi || y < d.lo || y > d.hi) return false;
    if (n_prime && (x + y < n_prime->lo || x + y > n_prime->hi)) return false;
    return true;
  };

  bool any = false;
  Q lo = 0, hi = 0;
  auto consider = [&](Q x, Q y) {
    if (!feasible(x, y)) return;
    const Q s = x + y;
    const Q v = (s > 0 ? s : Q(0)) - (x > 0 ? x : Q(0));
    if (!any || v < lo) lo = v;
    if (!any || v > hi) hi = v;
    any = true;
  };

  for (std::size_t p = 0; p < lines.size(); ++p) {
    for (std::size_t q = p + 1; q < lines.size(); ++q) {
      const Line& l1 = lines[p];
      const Line& l2 = lines[q];
      const int det = l1.a * l2.b - l2.a * l1.b;  // 0 or +-1
      if (det == 0) continue;
      const Q x = (l1.c * l2.b - l2.c * l1.b) / det;
      const Q y = (l2.c * l1.a - l1.c * l2.a) / det;
      consider(x, y);
    }
  }

  if (!any) throw EmptyFeasibleSet("no (n, d) in the box satisfies n + d in the given n' interval");
  return {static_cast<double>(lo), static_cast<double>(hi)};
}

/// Points per input for a full grid (at least 1; 1 means the centre).
struct EnvelopeOptions {
  std::size_t grid_per_dim = 10;
  std::size_t random_points = 0;
  std::uint64_t seed = 0;
};

/// Hull of f'(x) - f(x) per output over a grid plus random points. Every
/// value is an actual network difference, so the result is an inner
/// approximation of the true range.
inline std::vector<Interval> sampled_delta_envelope(const NetworkPair& pair, const InputRegion& region,
                                                    const EnvelopeOptions& opts = {}) {
  const std::size_t n = region.dim();
  const std::size_t m = pair.output_size();
  std::vector<Interval> env(m, Interval(std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity()));
  auto record = [&](const std::vector<double>& x) {
    const auto a = eval_concrete(pair.f, x);
    const auto b = eval_concrete(pair.f_prime, x);
    for (std::size_t o = 0; o < m; ++o) {
      const double v = b[o] - a[o];
      env[o].lo = std::min(env[o].lo, v);
      env[o].hi = std::max(env[o].hi, v);
    }
  };

  const std::size_t g = std::max<std::size_t>(1, opts.grid_per_dim);
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  auto coord = [&](std::size_t i, std::size_t k) {
    if (g == 1) return std::midpoint(region[i].lo, region[i].hi);
    const double t = static_cast<double>(k) / static_cast<double>(g - 1);
    return std::clamp(region[i].lo + t * (region[i].hi - region[i].lo), region[i].lo, region[i].hi);
  };
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = coord(i, idx[i]);
    record(x);
    std::size_t i = 0;
    while (i < n && ++idx[i] == g) idx[i++] = 0;
    if (i == n) break;
  }

  std::mt19937_64 rng(opts.seed);
  for (std::size_t r = 0; r < opts.random_points; ++r) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::uniform_real_distribution<double>(region[i].lo, region[i].hi)(rng);
    record(x);
  }
  return env;
}

namespace detail {

using Quad = __float128;

// Largest double <= q and smallest double >= q.
inline double quad_down(Quad q) {
  double d = static_cast<double>(q);
  if (static_cast<Quad>(d) > q) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}
inline double quad_up(Quad q) {
  double d = static_cast<double>(q);
  if (static_cast<Quad>(d) < q) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

}  // namespace detail

/// Concretization of [expr, expr] recomputed in 113-bit binary128, then
/// converted outward to doubles. A sound working-precision concretization
/// must contain this interval.
inline Interval extended_precision_recheck(const LinearExpr& expr, const InputRegion& region) {
  using detail::Quad;
  if (expr.dim() != region.dim()) throw std::invalid_argument("expression and region dimensions differ");
  Quad lo = expr.constant.lo;
  Quad hi = expr.constant.hi;
  for (std::size_t i = 0; i < expr.dim(); ++i) {
    const Interval c = expr.coeffs[i];
    const std::array<Quad, 4> p = {Quad(c.lo) * Quad(region[i].lo), Quad(c.lo) * Quad(region[i].hi),
                                   Quad(c.hi) * Quad(region[i].lo), Quad(c.hi) * Quad(region[i].hi)};
    lo += *std::min_element(p.begin(), p.end());
    hi += *std::max_element(p.begin(), p.end());
  }
  return {detail::quad_down(lo), detail::quad_up(hi)};
}

}  // namespace diffverify::oracle
