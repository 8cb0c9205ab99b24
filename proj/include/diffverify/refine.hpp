#pragma once

// Interval gradients from forward-pass masks, gradient differences, and the
// smear heuristic that picks which input interval to bisect.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffverify/forward.hpp"
#include "diffverify/interval.hpp"
#include "diffverify/network.hpp"
#include "diffverify/symbolic.hpp"

namespace diffverify {

/// d(output) / d(neuron) as intervals; after a full backward pass, one entry
/// per input.
using GradientVector = std::vector<Interval>;

/// Backward gradient-interval pass from one output neuron through `mask`.
inline GradientVector gradient(const Network& net, const MaskMatrix& mask, std::size_t output_index) {
  const std::size_t layers = net.num_layers();
  if (mask.size() + 1 != layers) throw std::invalid_argument("mask does not match network depth");
  if (output_index >= net.output_size()) throw std::invalid_argument("output index out of range");

  // Output layer: the chosen neuron's gradient is [1,1], so the gradient over
  // the last hidden layer is that neuron's incoming weight row.
  const Matrix& last = net.weights[layers - 1];
  GradientVector grad(last.cols());
  for (std::size_t i = 0; i < last.cols(); ++i) grad[i] = Interval(last(output_index, i));

  for (std::size_t k = layers - 1; k-- > 0;) {
    const Matrix& w = net.weights[k];
    const auto& states = mask[k];
    if (states.size() != w.rows() || grad.size() != w.rows())
      throw std::invalid_argument("mask layer " + std::to_string(k + 1) + " has the wrong size");
    GradientVector next(w.cols(), Interval(0.0));
    for (std::size_t j = 0; j < w.rows(); ++j) {
      Interval g = grad[j];
      switch (states[j]) {
        case ReluState::Inactive: g = {0.0, 0.0}; break;
        case ReluState::NonLinear: g = {std::min(0.0, g.lo), std::max(0.0, g.hi)}; break;
        case ReluState::Active: break;
      }
      if (g.lo == 0.0 && g.hi == 0.0) continue;
      for (std::size_t i = 0; i < w.cols(); ++i) next[i] = add(next[i], scale(g, w(j, i)));
    }
    grad = std::move(next);
  }
  return grad;
}

/// Entry-wise g' - g.
inline GradientVector gradient_diff(const GradientVector& g, const GradientVector& g_prime) {
  if (g.size() != g_prime.size()) throw std::invalid_argument("gradient vectors differ in length");
  GradientVector out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = sub(g_prime[i], g[i]);
  return out;
}

struct SplitDecision {
  std::size_t input_index = 0;
  InputRegion left;
  InputRegion right;
};

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits input `i` at its float midpoint.
inline std::pair<InputRegion, InputRegion> bisect(const InputRegion& region, std::size_t i) {
  if (i >= region.dim()) throw SplitError("split index out of range");
  const Interval b = region[i];
  const double mid = std::midpoint(b.lo, b.hi);
  if (!(b.lo < mid && mid < b.hi)) throw SplitError("input interval " + std::to_string(i) + " cannot be split");
  InputRegion left = region;
  InputRegion right = region;
  left[i] = {b.lo, mid};
  right[i] = {mid, b.hi};
  return {std::move(left), std::move(right)};
}

/// Smear score per input: width * max(|lo|, |hi|) of the gradient entry.
inline std::vector<double> smear_scores(const InputRegion& region, const GradientVector& grad) {
  if (grad.size() != region.dim()) throw std::invalid_argument("gradient does not match region dimension");
  std::vector<double> scores(region.dim());
  for (std::size_t i = 0; i < region.dim(); ++i) scores[i] = (region[i].hi - region[i].lo) * magnitude(grad[i]);
  return scores;
}

/// Picks the splittable input with the largest smear (lowest index on ties)
/// and bisects it. Falls back to the widest splittable input when every score
/// is zero. Throws SplitError when no input can be split.
inline SplitDecision smear_choose(const InputRegion& region, const GradientVector& grad) {
  const auto scores = smear_scores(region, grad);
  auto splittable = [&](std::size_t i) {
    const double mid = std::midpoint(region[i].lo, region[i].hi);
    return region[i].lo < mid && mid < region[i].hi;
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!splittable(i) || !(scores[i] > 0)) continue;
    if (!best || scores[i] > scores[*best]) best = i;
  }
  if (!best) {
    for (std::size_t i = 0; i < region.dim(); ++i) {
      if (!splittable(i)) continue;
      if (!best || region[i].hi - region[i].lo > region[*best].hi - region[*best].lo) best = i;
    }
  }
  if (!best) throw SplitError("no input interval can be split");
  auto [left, right] = bisect(region, *best);
  return {*best, std::move(left), std::move(right)};
}

}  // namespace diffverify
