#pragma once

// Fully connected ReLU networks, pairs of structurally identical networks,
// and the transformations used to build them (binary16 truncation, decimal
// rounding, composition into a single difference network).
//
// Layers are indexed from 0 internally: weights[k] maps layer k to layer k+1
// and is stored output-major, so weights[k](j, i) is the edge from neuron i of
// layer k to neuron j of layer k+1 (row j of the NNet weight block).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffverify/interval.hpp"
#include "diffverify/symbolic.hpp"

namespace diffverify {

template <class T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using IntervalMatrix = BasicMatrix<Interval>;

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Network {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<Matrix> weights;           // one per affine layer
  std::vector<std::vector<double>> biases;

  // Input normalization metadata as carried by NNet files. means/ranges have
  // one extra trailing entry for the output.
  std::vector<double> input_mins;
  std::vector<double> input_maxs;
  std::vector<double> input_means;
  std::vector<double> input_ranges;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }

  /// Checks shapes and finiteness; throws NetworkError.
  void validate() const {
    if (layer_sizes.size() < 2) throw NetworkError("network needs at least an input and an output layer");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
      throw NetworkError("layer count does not match weight/bias blocks");
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k].rows() != layer_sizes[k + 1] || weights[k].cols() != layer_sizes[k])
        throw NetworkError("weight matrix " + std::to_string(k + 1) + " has the wrong shape");
      if (biases[k].size() != layer_sizes[k + 1])
        throw NetworkError("bias vector " + std::to_string(k + 1) + " has the wrong length");
      for (double w : weights[k].data())
        if (!std::isfinite(w)) throw NetworkError("non-finite weight in layer " + std::to_string(k + 1));
      for (double b : biases[k])
        if (!std::isfinite(b)) throw NetworkError("non-finite bias in layer " + std::to_string(k + 1));
    }
  }

  /// Fills neutral normalization metadata (no clipping, identity scaling).
  void set_identity_normalization() {
    const std::size_t n = input_size();
    input_mins.assign(n, -std::numeric_limits<double>::max());
    input_maxs.assign(n, std::numeric_limits<double>::max());
    input_means.assign(n + 1, 0.0);
    input_ranges.assign(n + 1, 1.0);
  }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Builds a network from per-layer weight rows; normalization is identity.
inline Network make_network(std::vector<std::size_t> layer_sizes, std::vector<std::vector<std::vector<double>>> rows,
                            std::vector<std::vector<double>> biases = {}) {
  Network net;
  net.layer_sizes = std::move(layer_sizes);
  if (rows.size() + 1 != net.layer_sizes.size()) throw NetworkError("layer count does not match weight blocks");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Matrix m(net.layer_sizes[k + 1], net.layer_sizes[k]);
    if (rows[k].size() != m.rows()) throw NetworkError("weight block " + std::to_string(k + 1) + " has wrong row count");
    for (std::size_t j = 0; j < m.rows(); ++j) {
      if (rows[k][j].size() != m.cols())
        throw NetworkError("weight block " + std::to_string(k + 1) + " has wrong column count");
      for (std::size_t i = 0; i < m.cols(); ++i) m(j, i) = rows[k][j][i];
    }
    net.weights.push_back(std::move(m));
    net.biases.push_back(k < biases.size() ? biases[k] : std::vector<double>(net.layer_sizes[k + 1], 0.0));
  }
  net.set_identity_normalization();
  net.validate();
  return net;
}

/// Plain double forward execution: ReLU after every hidden layer, none after
/// the output layer.
inline std::vector<double> eval_concrete(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_size())
    throw NetworkError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                       std::to_string(net.input_size()));
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const Matrix& w = net.weights[k];
    next.assign(w.rows(), 0.0);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double acc = net.biases[k][j];
      const auto row = w.row(j);
      for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * cur[i];
      next[j] = (k + 1 < net.num_layers()) ? std::max(acc, 0.0) : acc;
    }
    cur.swap(next);
  }
  return cur;
}

/// Hidden-layer pre-activations, one vector per hidden layer.
inline std::vector<std::vector<double>> eval_preactivations(const Network& net, std::span<const double> x) {
  std::vector<std::vector<double>> out;
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t k = 0; k + 1 < net.num_layers(); ++k) {
    const Matrix& w = net.weights[k];
    std::vector<double> pre(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double acc = net.biases[k][j];
      const auto row = w.row(j);
      for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * cur[i];
      pre[j] = acc;
    }
    out.push_back(pre);
    for (double& v : pre) v = std::max(v, 0.0);
    cur = std::move(pre);
  }
  return out;
}

/// Two networks with identical shapes plus their per-edge weight deltas
/// W'_k - W_k (bias deltas included), each enclosed in an interval.
struct NetworkPair {
  Network f;
  Network f_prime;
  std::vector<IntervalMatrix> weight_delta;
  std::vector<std::vector<Interval>> bias_delta;

  NetworkPair() = default;
  NetworkPair(Network first, Network second) : f(std::move(first)), f_prime(std::move(second)) {
    f.validate();
    f_prime.validate();
    if (f.layer_sizes != f_prime.layer_sizes) throw NetworkError("networks in a pair must have identical layer sizes");
    for (std::size_t k = 0; k < f.num_layers(); ++k) {
      const Matrix& w = f.weights[k];
      const Matrix& wp = f_prime.weights[k];
      IntervalMatrix d(w.rows(), w.cols());
      for (std::size_t j = 0; j < w.rows(); ++j)
        for (std::size_t i = 0; i < w.cols(); ++i) d(j, i) = sub(Interval(wp(j, i)), Interval(w(j, i)));
      weight_delta.push_back(std::move(d));
      std::vector<Interval> bd(w.rows());
      for (std::size_t j = 0; j < w.rows(); ++j)
        bd[j] = sub(Interval(f_prime.biases[k][j]), Interval(f.biases[k][j]));
      bias_delta.push_back(std::move(bd));
    }
  }

  std::size_t input_size() const { return f.input_size(); }
  std::size_t output_size() const { return f.output_size(); }
};

namespace detail {

inline double round_to_binary16(double x, std::size_t index) {
  constexpr double kMax = 65504.0;
  if (!std::isfinite(x) || std::fabs(x) > kMax)
    throw NetworkError("value " + std::to_string(x) + " at parameter index " + std::to_string(index) +
                       " does not fit in binary16");
  const double a = std::fabs(x);
  if (a == 0.0) return x;
  int exp2 = 0;
  std::frexp(a, &exp2);  // a = m * 2^exp2, m in [0.5, 1)
  // Quantum: 10 fraction bits for normals, fixed 2^-24 for subnormals.
  const int e = std::max(exp2 - 1, -14);
  const double quantum = std::ldexp(1.0, e - 10);
  const double r = std::nearbyint(a / quantum) * quantum;  // ties-to-even
  return std::copysign(r, x);
}

}  // namespace detail

/// Rounds every weight and bias to the nearest binary16 value (ties to even).
inline Network truncate_f16(const Network& net) {
  Network out = net;
  std::size_t index = 0;
  for (std::size_t k = 0; k < out.num_layers(); ++k) {
    for (double& w : out.weights[k].data()) w = detail::round_to_binary16(w, index++);
    for (double& b : out.biases[k]) b = detail::round_to_binary16(b, index++);
  }
  return out;
}

/// Rounds every weight and bias half away from zero at `decimals` places.
inline Network quantize_round(const Network& net, int decimals) {
  if (decimals < 0) throw NetworkError("decimals must be non-negative");
  const double factor = std::pow(10.0, decimals);
  auto round_one = [&](double v) { return decimals == 0 ? std::round(v) : std::round(v * factor) / factor; };
  Network out = net;
  for (std::size_t k = 0; k < out.num_layers(); ++k) {
    for (double& w : out.weights[k].data()) w = round_one(w);
    for (double& b : out.biases[k]) b = round_one(b);
  }
  return out;
}

/// A single network computing f'(x) - f(x): hidden layers side by side (f
/// first, then f'), final layer subtracts. Output biases are differenced in
/// double precision.
inline Network compose_difference(const NetworkPair& pair) {
  const Network& f = pair.f;
  const Network& g = pair.f_prime;
  if (f.layer_sizes != g.layer_sizes) throw NetworkError("networks in a pair must have identical layer sizes");
  const std::size_t layers = f.num_layers();
  Network out;
  out.layer_sizes.push_back(f.input_size());
  for (std::size_t k = 1; k + 1 < f.layer_sizes.size(); ++k) out.layer_sizes.push_back(2 * f.layer_sizes[k]);
  out.layer_sizes.push_back(f.output_size());

  for (std::size_t k = 0; k < layers; ++k) {
    const Matrix& a = f.weights[k];
    const Matrix& b = g.weights[k];
    const std::size_t h_out = a.rows();
    const std::size_t h_in = a.cols();
    const bool first = (k == 0);
    const bool last = (k + 1 == layers);
    if (last) {
      Matrix m(h_out, first ? h_in : 2 * h_in);
      std::vector<double> bias(h_out);
      for (std::size_t j = 0; j < h_out; ++j) {
        for (std::size_t i = 0; i < h_in; ++i) {
          if (first) {
            m(j, i) = b(j, i) - a(j, i);
          } else {
            m(j, i) = -a(j, i);
            m(j, h_in + i) = b(j, i);
          }
        }
        bias[j] = g.biases[k][j] - f.biases[k][j];
      }
      out.weights.push_back(std::move(m));
      out.biases.push_back(std::move(bias));
    } else {
      Matrix m(2 * h_out, first ? h_in : 2 * h_in);
      std::vector<double> bias(2 * h_out);
      for (std::size_t j = 0; j < h_out; ++j) {
        for (std::size_t i = 0; i < h_in; ++i) {
          m(j, i) = a(j, i);
          m(h_out + j, first ? i : h_in + i) = b(j, i);
        }
        bias[j] = f.biases[k][j];
        bias[h_out + j] = g.biases[k][j];
      }
      out.weights.push_back(std::move(m));
      out.biases.push_back(std::move(bias));
    }
  }
  out.input_mins = f.input_mins;
  out.input_maxs = f.input_maxs;
  out.input_means = f.input_means;
  out.input_ranges = f.input_ranges;
  out.validate();
  return out;
}

/// Random network with uniform Glorot-style weights and small biases.
inline Network make_random_network(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed,
                                   double bias_scale = 0.1) {
  std::mt19937_64 rng(seed);
  Network net;
  net.layer_sizes = layer_sizes;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer_sizes[k] + layer_sizes[k + 1]));
    std::uniform_real_distribution<double> wdist(-limit, limit);
    std::uniform_real_distribution<double> bdist(-bias_scale, bias_scale);
    Matrix m(layer_sizes[k + 1], layer_sizes[k]);
    for (double& w : m.data()) w = wdist(rng);
    std::vector<double> b(layer_sizes[k + 1]);
    for (double& v : b) v = bdist(rng);
    net.weights.push_back(std::move(m));
    net.biases.push_back(std::move(b));
  }
  net.set_identity_normalization();
  net.validate();
  return net;
}

/// Maps a raw-unit region into the network's normalized input space:
/// clip to [min, max], then (x - mean) / range.
inline InputRegion normalize_region(const Network& net, const InputRegion& raw) {
  if (raw.dim() != net.input_size()) throw NetworkError("region dimension does not match network inputs");
  if (net.input_mins.size() < raw.dim() || net.input_means.size() < raw.dim())
    throw NetworkError("network has no normalization metadata");
  InputRegion out = raw;
  for (std::size_t i = 0; i < raw.dim(); ++i) {
    double lo = std::clamp(raw[i].lo, net.input_mins[i], net.input_maxs[i]);
    double hi = std::clamp(raw[i].hi, net.input_mins[i], net.input_maxs[i]);
    const double mean = net.input_means[i];
    const double range = net.input_ranges[i];
    if (!(range > 0)) throw NetworkError("normalization range must be positive");
    out[i] = {div_down(sub_down(lo, mean), range), div_up(sub_up(hi, mean), range)};
  }
  return out;
}

}  // namespace diffverify
