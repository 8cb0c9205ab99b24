#pragma once

// Reader and writer for the NNet text format.
//
//   // optional comment lines
//   numLayers,inputSize,outputSize,maxLayerSize,
//   size0,size1,...,sizeN,
//   flag (ignored)
//   mins (inputSize), maxs (inputSize), means (inputSize+1), ranges (inputSize+1)
//   per layer: one line per output neuron with its incoming weights, then one
//   line per output neuron with its bias.
//
// Numbers are written in shortest round-trip form so write/parse is bit-exact.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "diffverify/network.hpp"

namespace diffverify {

class NNetParseError : public NetworkError {
 public:
  NNetParseError(std::size_t line, const std::string& what)
      : NetworkError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

class NNetLineReader {
 public:
  explicit NNetLineReader(std::istream& in) : in_(in) {}

  // Next non-comment, non-blank line split into numbers.
  std::vector<double> numbers(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::string_view v(line);
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      if (v.starts_with("//")) continue;
      if (v.find_first_not_of(" \t\r,") == std::string_view::npos) continue;
      return split(v, what);
    }
    throw NNetParseError(line_no_ + 1, std::string("unexpected end of file while reading ") + what);
  }

  std::size_t line() const { return line_no_; }

 private:
  std::vector<double> split(std::string_view v, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < v.size()) {
      std::size_t end = v.find(',', pos);
      if (end == std::string_view::npos) end = v.size();
      std::string_view tok = v.substr(pos, end - pos);
      while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
      if (!tok.empty()) {
        if (tok.front() == '+') tok.remove_prefix(1);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
          throw NNetParseError(line_no_, std::string("malformed number '") + std::string(tok) + "' in " + what);
        if (!std::isfinite(value)) throw NNetParseError(line_no_, std::string("non-finite value in ") + what);
        out.push_back(value);
      }
      pos = end + 1;
    }
    return out;
  }

  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline std::size_t as_count(double v, std::size_t line, const char* what) {
  if (v < 0 || v != std::floor(v) || v > 1e9) throw NNetParseError(line, std::string("invalid count for ") + what);
  return static_cast<std::size_t>(v);
}

inline void expect_size(const std::vector<double>& v, std::size_t n, std::size_t line, const std::string& what) {
  if (v.size() != n)
    throw NNetParseError(line, what + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline Network parse_nnet(std::istream& in) {
  detail::NNetLineReader reader(in);
  Network net;

  const auto header = reader.numbers("header");
  if (header.size() < 4) throw NNetParseError(reader.line(), "header needs numLayers,inputSize,outputSize,maxLayerSize");
  const std::size_t num_layers = detail::as_count(header[0], reader.line(), "numLayers");
  const std::size_t input_size = detail::as_count(header[1], reader.line(), "inputSize");
  const std::size_t output_size = detail::as_count(header[2], reader.line(), "outputSize");
  if (num_layers == 0) throw NNetParseError(reader.line(), "network must have at least one layer");

  const auto sizes = reader.numbers("layer sizes");
  detail::expect_size(sizes, num_layers + 1, reader.line(), "layer sizes");
  for (double s : sizes) net.layer_sizes.push_back(detail::as_count(s, reader.line(), "layer size"));
  if (net.layer_sizes.front() != input_size || net.layer_sizes.back() != output_size)
    throw NNetParseError(reader.line(), "layer sizes disagree with header input/output sizes");

  reader.numbers("flag line");
  net.input_mins = reader.numbers("input minimums");
  detail::expect_size(net.input_mins, input_size, reader.line(), "input minimums");
  net.input_maxs = reader.numbers("input maximums");
  detail::expect_size(net.input_maxs, input_size, reader.line(), "input maximums");
  net.input_means = reader.numbers("input means");
  detail::expect_size(net.input_means, input_size + 1, reader.line(), "input means");
  net.input_ranges = reader.numbers("input ranges");
  detail::expect_size(net.input_ranges, input_size + 1, reader.line(), "input ranges");

  for (std::size_t k = 0; k < num_layers; ++k) {
    const std::size_t rows = net.layer_sizes[k + 1];
    const std::size_t cols = net.layer_sizes[k];
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < rows; ++j) {
      const auto row = reader.numbers("weights");
      detail::expect_size(row, cols, reader.line(), "weight row of layer " + std::to_string(k + 1));
      for (std::size_t i = 0; i < cols; ++i) m(j, i) = row[i];
    }
    std::vector<double> bias(rows);
    for (std::size_t j = 0; j < rows; ++j) {
      const auto b = reader.numbers("biases");
      detail::expect_size(b, 1, reader.line(), "bias of layer " + std::to_string(k + 1));
      bias[j] = b[0];
    }
    net.weights.push_back(std::move(m));
    net.biases.push_back(std::move(bias));
  }
  net.validate();
  return net;
}

inline Network parse_nnet(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_nnet(in);
}

inline Network load_nnet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open network file '" + path + "'");
  try {
    return parse_nnet(in);
  } catch (const NNetParseError& e) {
    throw NetworkError(path + ": " + e.what());
  }
}

inline void write_nnet(std::ostream& out, const Network& net) {
  net.validate();
  auto join = [&](const std::vector<double>& v) {
    for (double x : v) out << detail::format_double(x) << ',';
    out << '\n';
  };
  std::size_t max_size = 0;
  for (std::size_t s : net.layer_sizes) max_size = std::max(max_size, s);
  out << "// fully connected ReLU network\n";
  out << net.num_layers() << ',' << net.input_size() << ',' << net.output_size() << ',' << max_size << ",\n";
  for (std::size_t s : net.layer_sizes) out << s << ',';
  out << "\n0,\n";
  join(net.input_mins);
  join(net.input_maxs);
  join(net.input_means);
  join(net.input_ranges);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const Matrix& m = net.weights[k];
    for (std::size_t j = 0; j < m.rows(); ++j) {
      for (double w : m.row(j)) out << detail::format_double(w) << ',';
      out << '\n';
    }
    for (double b : net.biases[k]) out << detail::format_double(b) << ",\n";
  }
}

inline std::string to_nnet_string(const Network& net) {
  std::ostringstream out;
  write_nnet(out, net);
  return out.str();
}

inline void save_nnet(const std::string& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write network file '" + path + "'");
  write_nnet(out, net);
  if (!out) throw NetworkError("failed writing network file '" + path + "'");
}

}  // namespace diffverify
