#pragma once

// Lock-step symbolic interval analysis of a network pair.
//
// Three bounds are tracked per neuron: S (network f), S' (network f') and
// S-delta (f' minus f). The affine step pushes the delta through
//   delta_in(j) = sum_i S(i) * (W'[i,j] - W[i,j]) + delta(i) * W'[i,j]
// and the ReLU step applies one of nine transformers picked by the
// activation states of the two neurons.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "diffverify/interval.hpp"
#include "diffverify/network.hpp"
#include "diffverify/symbolic.hpp"

namespace diffverify {

enum class ReluState : std::uint8_t { Inactive, Active, NonLinear };

/// Gradient interval of a ReLU in the given state: [0,0], [1,1] or [0,1].
inline Interval mask_interval(ReluState s) {
  switch (s) {
    case ReluState::Inactive: return {0.0, 0.0};
    case ReluState::Active: return {1.0, 1.0};
    case ReluState::NonLinear: return {0.0, 1.0};
  }
  return {0.0, 1.0};
}

/// Inactive when the upper bound is <= 0, active when the lower bound is >= 0.
inline ReluState classify(Interval pre) {
  if (pre.hi <= 0.0) return ReluState::Inactive;
  if (pre.lo >= 0.0) return ReluState::Active;
  return ReluState::NonLinear;
}

/// Per hidden layer, per neuron activation state.
using MaskMatrix = std::vector<std::vector<ReluState>>;

/// Case number 1..9: 3 * state(f) + state(f') + 1 with Inactive=0,
/// Active=1, NonLinear=2.
inline int delta_case(ReluState n, ReluState n_prime) {
  return 3 * static_cast<int>(n) + static_cast<int>(n_prime) + 1;
}

/// ReLU(n') - ReLU(n) from the two ranges alone.
inline Interval naive_relu_delta(Interval n, Interval n_prime) {
  return sub({std::max(n_prime.lo, 0.0), std::max(n_prime.hi, 0.0)}, {std::max(n.lo, 0.0), std::max(n.hi, 0.0)});
}

namespace detail {

inline Interval case_bounds(Interval n, Interval n_prime, Interval d) {
  const ReluState s = classify(n);
  const ReluState sp = classify(n_prime);
  switch (delta_case(s, sp)) {
    case 1: return {0.0, 0.0};
    case 2: return n_prime;
    case 3: return {0.0, n_prime.hi};
    case 4: return negate(n);
    case 5: return d;
    case 6:  // delta = max(-n, d)
      return imax(negate(n), d);
    case 7: return {-n.hi, 0.0};
    case 8:  // delta = min(n', d)
      return imin(n_prime, d);
    case 9:
      if (d.lo >= 0) return {0.0, std::min(d.hi, n_prime.hi)};
      if (d.hi <= 0) return {std::max(d.lo, -n.hi), 0.0};
      return {std::max(d.lo, -n.hi), std::min(d.hi, n_prime.hi)};
  }
  throw std::logic_error("unreachable ReLU delta case");
}

}  // namespace detail

/// Concrete ReLU delta transformer: bound on ReLU(n') - ReLU(n) given
/// pre-activation bounds n, n' and the bound d on n' - n. The case bound is
/// clipped to the naive difference, which is also sound; the clip only bites
/// when d is looser than n' - n.
inline Interval relu_delta_bounds(Interval n, Interval n_prime, Interval d) {
  const Interval c = detail::case_bounds(n, n_prime, d);
  const Interval naive = naive_relu_delta(n, n_prime);
  return {std::max(c.lo, naive.lo), std::min(c.hi, naive.hi)};
}

/// Bounds for one neuron: symbolic expressions plus their cached
/// concretizations over the current region.
struct NeuronBounds {
  SymbolicInterval s;
  SymbolicInterval s_prime;
  SymbolicInterval s_delta;
  Interval c;
  Interval c_prime;
  Interval c_delta;
};

struct ReluOutput {
  NeuronBounds out;
  ReluState state = ReluState::NonLinear;
  ReluState state_prime = ReluState::NonLinear;
  int relu_case = 0;
};

/// Applies the ReLU transformer to one neuron. Cases where both networks are
/// linear keep their expressions symbolic; the others concretize.
inline ReluOutput relu_transform(const NeuronBounds& in, const InputRegion& region) {
  const std::size_t n = region.dim();
  ReluOutput r;
  r.state = classify(in.c);
  r.state_prime = classify(in.c_prime);
  r.relu_case = delta_case(r.state, r.state_prime);

  auto relu_single = [&](const SymbolicInterval& s, Interval c, ReluState st, SymbolicInterval& out_s,
                         Interval& out_c) {
    switch (st) {
      case ReluState::Inactive:
        out_s = SymbolicInterval::constant(n, {0.0, 0.0});
        out_c = {0.0, 0.0};
        break;
      case ReluState::Active:
        out_s = s;
        out_c = c;
        break;
      case ReluState::NonLinear:
        out_s = SymbolicInterval::constant(n, {0.0, c.hi});
        out_c = {0.0, c.hi};
        break;
    }
  };
  relu_single(in.s, in.c, r.state, r.out.s, r.out.c);
  relu_single(in.s_prime, in.c_prime, r.state_prime, r.out.s_prime, r.out.c_prime);

  switch (r.relu_case) {
    case 2:
      r.out.s_delta = in.s_prime;
      r.out.c_delta = in.c_prime;
      break;
    case 4:
      r.out.s_delta = sym_negate(in.s);
      r.out.c_delta = negate(in.c);
      break;
    case 5:
      if (subset(in.c_delta, naive_relu_delta(in.c, in.c_prime))) {
        r.out.s_delta = in.s_delta;
        r.out.c_delta = in.c_delta;
      } else {
        const Interval d = relu_delta_bounds(in.c, in.c_prime, in.c_delta);
        r.out.s_delta = SymbolicInterval::constant(n, d);
        r.out.c_delta = d;
      }
      break;
    default: {
      const Interval d = relu_delta_bounds(in.c, in.c_prime, in.c_delta);
      r.out.s_delta = SymbolicInterval::constant(n, d);
      r.out.c_delta = d;
      break;
    }
  }
  return r;
}

/// Concrete bounds recorded for one hidden layer.
struct LayerTrace {
  std::vector<Interval> pre;        // f pre-activation
  std::vector<Interval> pre_prime;  // f' pre-activation
  std::vector<Interval> pre_delta;  // delta before ReLU
  std::vector<Interval> delta;      // delta after ReLU
  std::vector<int> relu_case;
};

struct ForwardResult {
  std::vector<Interval> output_delta;  // f' - f per output neuron
  std::vector<Interval> output;        // f per output neuron
  std::vector<Interval> output_prime;  // f' per output neuron
  MaskMatrix mask;
  MaskMatrix mask_prime;
  std::vector<LayerTrace> layers;  // hidden layers only
};

/// Affine step for layer k (weights[k]); `prev` holds the previous layer's
/// post-ReLU bounds (or the inputs).
inline std::vector<NeuronBounds> affine_delta(const NetworkPair& pair, std::size_t k,
                                              const std::vector<NeuronBounds>& prev, const InputRegion& region) {
  const Matrix& w = pair.f.weights[k];
  const Matrix& wp = pair.f_prime.weights[k];
  const IntervalMatrix& wd = pair.weight_delta[k];
  const std::size_t n = region.dim();
  if (prev.size() != w.cols()) throw std::invalid_argument("layer state does not match weight matrix");

  std::vector<NeuronBounds> out(w.rows());
  for (std::size_t j = 0; j < w.rows(); ++j) {
    NeuronBounds& nb = out[j];
    nb.s = SymbolicInterval::constant(n, Interval(pair.f.biases[k][j]));
    nb.s_prime = SymbolicInterval::constant(n, Interval(pair.f_prime.biases[k][j]));
    nb.s_delta = SymbolicInterval::constant(n, pair.bias_delta[k][j]);
    for (std::size_t i = 0; i < w.cols(); ++i) {
      sym_scale_add_into(nb.s, prev[i].s, w(j, i));
      sym_scale_add_into(nb.s_prime, prev[i].s_prime, wp(j, i));
      // new quantity from the weight change, old quantity scaled by W'
      sym_scale_add_into(nb.s_delta, prev[i].s, wd(j, i), region);
      if (prev[i].c_delta.lo != 0.0 || prev[i].c_delta.hi != 0.0)
        sym_scale_add_into(nb.s_delta, prev[i].s_delta, wp(j, i));
    }
    nb.c = concretize(nb.s, region);
    nb.c_prime = concretize(nb.s_prime, region);
    nb.c_delta = concretize(nb.s_delta, region);
  }
  return out;
}

/// Initial bounds: S = S' = identity, delta = 0.
inline std::vector<NeuronBounds> input_bounds(const InputRegion& region) {
  const std::size_t n = region.dim();
  auto ids = sym_from_region(region);
  std::vector<NeuronBounds> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].s = ids[i];
    out[i].s_prime = ids[i];
    out[i].s_delta = SymbolicInterval(n);
    out[i].c = region[i];
    out[i].c_prime = region[i];
    out[i].c_delta = {0.0, 0.0};
  }
  return out;
}

/// Full lock-step pass over every layer of the pair.
inline ForwardResult forward_pass(const NetworkPair& pair, const InputRegion& region) {
  if (region.dim() != pair.input_size()) throw std::invalid_argument("region dimension does not match network inputs");
  ForwardResult result;
  std::vector<NeuronBounds> cur = input_bounds(region);
  const std::size_t layers = pair.f.num_layers();
  for (std::size_t k = 0; k < layers; ++k) {
    std::vector<NeuronBounds> pre = affine_delta(pair, k, cur, region);
    if (k + 1 == layers) {
      for (const auto& nb : pre) {
        result.output_delta.push_back(nb.c_delta);
        result.output.push_back(nb.c);
        result.output_prime.push_back(nb.c_prime);
      }
      break;
    }
    LayerTrace trace;
    std::vector<ReluState> mask(pre.size()), mask_prime(pre.size());
    cur.resize(pre.size());
    for (std::size_t j = 0; j < pre.size(); ++j) {
      trace.pre.push_back(pre[j].c);
      trace.pre_prime.push_back(pre[j].c_prime);
      trace.pre_delta.push_back(pre[j].c_delta);
      ReluOutput r = relu_transform(pre[j], region);
      mask[j] = r.state;
      mask_prime[j] = r.state_prime;
      trace.delta.push_back(r.out.c_delta);
      trace.relu_case.push_back(r.relu_case);
      cur[j] = std::move(r.out);
    }
    result.mask.push_back(std::move(mask));
    result.mask_prime.push_back(std::move(mask_prime));
    result.layers.push_back(std::move(trace));
  }
  return result;
}

/// Result of analysing one network on its own.
struct SingleResult {
  std::vector<Interval> output;
  MaskMatrix mask;
  std::vector<std::vector<Interval>> pre;  // per hidden layer
};

/// Symbolic interval analysis of a single network: active neurons keep their
/// expressions, non-linear ones are concretized to [0, upper].
inline SingleResult forward_single(const Network& net, const InputRegion& region) {
  if (region.dim() != net.input_size()) throw std::invalid_argument("region dimension does not match network inputs");
  const std::size_t n = region.dim();
  SingleResult result;
  std::vector<SymbolicInterval> cur = sym_from_region(region);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const Matrix& w = net.weights[k];
    std::vector<SymbolicInterval> next(w.rows());
    std::vector<Interval> conc(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) {
      SymbolicInterval s = SymbolicInterval::constant(n, Interval(net.biases[k][j]));
      for (std::size_t i = 0; i < w.cols(); ++i) sym_scale_add_into(s, cur[i], w(j, i));
      conc[j] = concretize(s, region);
      next[j] = std::move(s);
    }
    if (k + 1 == net.num_layers()) {
      result.output = std::move(conc);
      break;
    }
    std::vector<ReluState> mask(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) {
      mask[j] = classify(conc[j]);
      if (mask[j] == ReluState::Inactive) next[j] = SymbolicInterval::constant(n, {0.0, 0.0});
      else if (mask[j] == ReluState::NonLinear) next[j] = SymbolicInterval::constant(n, {0.0, conc[j].hi});
    }
    result.pre.push_back(std::move(conc));
    result.mask.push_back(std::move(mask));
    cur = std::move(next);
  }
  return result;
}

}  // namespace diffverify
