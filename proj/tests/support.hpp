#pragma once

// Shared fixtures for the test binaries.

#include <cstdint>
#include <random>
#include <vector>

#include "diffverify/diffverify.hpp"

namespace dvtest {

using namespace diffverify;

// Two-input, two-hidden-layer example and its whole-number-rounded copy.
inline Network example_f() {
  return make_network({2, 2, 2, 1}, {{{1.9, -2.1}, {1.1, 1.0}}, {{2.1, -1.0}, {-0.9, 1.1}}, {{1.0, -1.0}}});
}
inline Network example_f_rounded() { return quantize_round(example_f(), 0); }
inline InputRegion example_region() { return InputRegion({{4.0, 6.0}, {1.0, 5.0}}); }

// Gradient example: f' changes the two first-layer weights.
inline Network grad_f() { return make_network({2, 2, 1}, {{{1.1, 0.0}, {0.0, 0.5}}, {{1.0, -1.0}}}); }
inline Network grad_f_prime() { return make_network({2, 2, 1}, {{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, -1.0}}}); }
inline InputRegion grad_region() { return InputRegion({{0.0, 1.5}, {-0.5, 0.5}}); }

// ReLU(5 x1) + ReLU(2 x2) - ReLU(x2).
inline Network single_net_example() { return make_network({2, 3, 1}, {{{5, 0}, {0, 2}, {0, 1}}, {{1, 1, -1}}}); }
inline InputRegion single_net_region() { return InputRegion({{1.0, 3.0}, {-1.0, 1.0}}); }

inline std::vector<std::size_t> hidden_sizes(std::size_t inputs, std::size_t layers, std::size_t width,
                                             std::size_t outputs) {
  std::vector<std::size_t> s{inputs};
  for (std::size_t k = 0; k < layers; ++k) s.push_back(width);
  s.push_back(outputs);
  return s;
}

// Random box inside [-r, r]^n with positive widths.
inline InputRegion random_region(std::mt19937_64& rng, std::size_t n, double r = 1.0) {
  std::uniform_real_distribution<double> u(-r, r);
  InputRegion region;
  for (std::size_t i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a == b) b = a + 1e-3;
    region.bounds.push_back({a, b});
  }
  return region;
}

inline std::vector<double> random_point(std::mt19937_64& rng, const InputRegion& region) {
  std::vector<double> x(region.dim());
  for (std::size_t i = 0; i < region.dim(); ++i)
    x[i] = std::uniform_real_distribution<double>(region[i].lo, region[i].hi)(rng);
  return x;
}

// Random interval with endpoints in [-r, r]; occasionally a point.
inline Interval random_interval(std::mt19937_64& rng, double r = 10.0) {
  std::uniform_real_distribution<double> u(-r, r);
  double a = u(rng), b = u(rng);
  if (a > b) std::swap(a, b);
  if (rng() % 16 == 0) b = a;
  return {a, b};
}

// Neuron whose three expressions are the given constants.
NeuronBounds constant_bounds(std::size_t n, Interval pre, Interval pre_prime, Interval d) {
  NeuronBounds b;
  b.s = SymbolicInterval::constant(n, pre);
  b.s_prime = SymbolicInterval::constant(n, pre_prime);
  b.s_delta = SymbolicInterval::constant(n, d);
  b.c = pre;
  b.c_prime = pre_prime;
  b.c_delta = d;
  return b;
}

}  // namespace dvtest
