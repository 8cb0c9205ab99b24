#pragma once

// Command-line front end: verify, truncate, compare.
//
// Exit codes for `verify`: 0 verified, 1 falsified, 2 unknown, 3 usage or
// I/O error. The other subcommands return 0 or 3.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffverify/network.hpp"
#include "diffverify/nnet.hpp"
#include "diffverify/report.hpp"
#include "diffverify/verifier.hpp"

namespace diffverify {

constexpr int kExitVerified = 0;
constexpr int kExitFalsified = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitError = 3;

inline int exit_code(Status s) {
  switch (s) {
    case Status::Verified: return kExitVerified;
    case Status::Falsified: return kExitFalsified;
    case Status::Unknown: return kExitUnknown;
  }
  return kExitError;
}

namespace detail {

struct VerifyArgs {
  std::string net1, net2, region, report;
  double epsilon = 0.0;
  std::vector<std::size_t> outputs;
  std::size_t max_depth = 40;
  double timeout = 1800.0;
  std::size_t threads = 10;
  std::size_t samples = 1024;
  std::uint64_t seed = 0x5eed;
  std::string mode = "delta";
  bool normalize = false;
  bool fast_math = false;
};

inline void add_query_options(CLI::App* cmd, VerifyArgs& a) {
  cmd->add_option("--output-index", a.outputs, "Output neuron to check (repeatable; default all)");
  cmd->add_option("--max-depth", a.max_depth, "Maximum bisection depth")->capture_default_str();
  cmd->add_option("--timeout", a.timeout, "Wall-clock limit in seconds")->capture_default_str();
  cmd->add_option("--threads", a.threads, "Worker threads")->capture_default_str();
  cmd->add_option("--samples", a.samples, "Random samples per region")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Sampling seed")->capture_default_str();
  cmd->add_flag("--fast-math", a.fast_math, "Disable outward rounding");
}

inline Mode parse_mode(const std::string& s) { return s == "composed-baseline" ? Mode::ComposedBaseline : Mode::Delta; }

inline VerificationQuery build_query(const VerifyArgs& a, NetworkPair pair, InputRegion region) {
  VerificationQuery q;
  q.pair = std::move(pair);
  q.region = a.normalize ? normalize_region(q.pair.f, region) : std::move(region);
  q.epsilon = a.epsilon;
  q.output_indices = a.outputs;
  q.max_depth = a.max_depth;
  q.timeout_seconds = a.timeout;
  q.threads = a.threads;
  q.sample_count = a.samples;
  q.seed = a.seed;
  q.mode = parse_mode(a.mode);
  return q;
}

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  OutwardRoundingScope rounding(!a.fast_math);
  NetworkPair pair(load_nnet(a.net1), load_nnet(a.net2));
  VerificationQuery q = build_query(a, std::move(pair), load_region(a.region));
  q.validate();
  const Verdict v = verify(q);
  const json report = make_report(q, v, {a.net1, a.net2, a.normalize, a.fast_math});
  if (a.report.empty()) {
    out << report.dump(2) << '\n';
  } else {
    std::ofstream f(a.report);
    if (!f) throw ReportError("cannot write report '" + a.report + "'");
    f << report.dump(2) << '\n';
    if (!f) throw ReportError("failed writing report '" + a.report + "'");
    out << to_string(v.status) << " (regions " << v.stats.regions << ", splits " << v.stats.splits << ", "
        << v.stats.wall_seconds << " s)\n";
  }
  return exit_code(v.status);
}

struct TruncateArgs {
  std::string in, out;
  std::optional<int> decimals;
};

inline int cmd_truncate(const TruncateArgs& a, std::ostream& out) {
  const Network net = load_nnet(a.in);
  const Network t = a.decimals ? quantize_round(net, *a.decimals) : truncate_f16(net);
  save_nnet(a.out, t);
  out << "wrote " << a.out << '\n';
  return 0;
}

struct CompareArgs {
  VerifyArgs query;
  std::size_t random_pairs = 0;
  std::size_t inputs = 5;
  std::size_t hidden_layers = 3;
  std::size_t width = 50;
  std::size_t outputs = 5;
  double region_radius = 1.0;
  std::string csv;
};

// Largest first-pass width over the watched outputs.
inline double first_pass_width(const VerificationQuery& q, const Verdict& v) {
  double w = 0.0;
  for (std::size_t o : q.watched()) w = std::max(w, v.stats.first_pass[o].hi - v.stats.first_pass[o].lo);
  return w;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline int cmd_compare(const CompareArgs& a, std::ostream& out) {
  OutwardRoundingScope rounding(!a.query.fast_math);
  std::vector<VerificationQuery> queries;
  if (a.random_pairs > 0) {
    std::vector<std::size_t> sizes{a.inputs};
    for (std::size_t k = 0; k < a.hidden_layers; ++k) sizes.push_back(a.width);
    sizes.push_back(a.outputs);
    InputRegion region(std::vector<Interval>(a.inputs, Interval(-a.region_radius, a.region_radius)));
    for (std::size_t p = 0; p < a.random_pairs; ++p) {
      Network f = make_random_network(sizes, a.query.seed + p);
      NetworkPair pair(f, truncate_f16(f));
      queries.push_back(build_query(a.query, std::move(pair), region));
    }
  } else {
    if (a.query.net1.empty() || a.query.net2.empty() || a.query.region.empty())
      throw CLI::ValidationError("compare needs --net1, --net2 and --region, or --random N");
    NetworkPair pair(load_nnet(a.query.net1), load_nnet(a.query.net2));
    queries.push_back(build_query(a.query, std::move(pair), load_region(a.query.region)));
  }

  std::ofstream file;
  if (!a.csv.empty()) {
    file.open(a.csv);
    if (!file) throw ReportError("cannot write CSV '" + a.csv + "'");
  }
  std::ostream& csv = a.csv.empty() ? out : file;
  csv << std::setprecision(17);
  csv << "query,delta_width,baseline_width,width_ratio,delta_status,baseline_status,delta_seconds,baseline_seconds,"
         "delta_splits,baseline_splits\n";
  std::vector<double> ratios;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    VerificationQuery& q = queries[i];
    q.validate();
    q.mode = Mode::Delta;
    const Verdict d = verify(q);
    q.mode = Mode::ComposedBaseline;
    const Verdict b = verify(q);
    const double wd = first_pass_width(q, d);
    const double wb = first_pass_width(q, b);
    const double ratio = wd > 0 ? wb / wd : std::numeric_limits<double>::infinity();
    ratios.push_back(ratio);
    csv << i << ',' << wd << ',' << wb << ',' << ratio << ',' << to_string(d.status) << ',' << to_string(b.status)
        << ',' << d.stats.wall_seconds << ',' << b.stats.wall_seconds << ',' << d.stats.splits << ','
        << b.stats.splits << '\n';
  }
  out << "queries: " << queries.size() << ", median width ratio (baseline/delta): " << median(ratios) << '\n';
  return 0;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential verification of ReLU network pairs"};
  app.require_subcommand(1);

  detail::VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Prove or refute |f'(x) - f(x)| < epsilon over a region");
  verify_cmd->add_option("--net1", va.net1, "Network f (NNet)")->required();
  verify_cmd->add_option("--net2", va.net2, "Network f' (NNet)")->required();
  verify_cmd->add_option("--region", va.region, "Region JSON: [[lo, hi], ...]")->required();
  verify_cmd->add_option("--epsilon", va.epsilon, "Bound on the output difference")->required();
  verify_cmd->add_option("--mode", va.mode, "delta or composed-baseline")
      ->check(CLI::IsMember({"delta", "composed-baseline"}))
      ->capture_default_str();
  verify_cmd->add_flag("--normalize", va.normalize, "Apply the networks' input normalization to the region");
  verify_cmd->add_option("--report", va.report, "Write the JSON report here instead of stdout");
  detail::add_query_options(verify_cmd, va);

  detail::TruncateArgs ta;
  auto* truncate_cmd = app.add_subcommand("truncate", "Round every parameter to binary16 (or to k decimals)");
  truncate_cmd->add_option("input", ta.in, "Input NNet")->required();
  truncate_cmd->add_option("output", ta.out, "Output NNet")->required();
  truncate_cmd->add_option("--decimals", ta.decimals, "Round half away from zero at this many decimals")
      ->check(CLI::NonNegativeNumber);

  detail::CompareArgs ca;
  ca.query.max_depth = 0;
  ca.query.timeout = 60;
  ca.query.threads = 1;
  ca.query.epsilon = 0.05;
  auto* compare_cmd = app.add_subcommand("compare", "Delta mode against the composed baseline, as CSV");
  compare_cmd->add_option("--net1", ca.query.net1, "Network f (NNet)");
  compare_cmd->add_option("--net2", ca.query.net2, "Network f' (NNet)");
  compare_cmd->add_option("--region", ca.query.region, "Region JSON");
  compare_cmd->add_option("--epsilon", ca.query.epsilon, "Bound on the output difference")->capture_default_str();
  compare_cmd->add_flag("--normalize", ca.query.normalize, "Apply input normalization to the region");
  compare_cmd->add_option("--random", ca.random_pairs, "Generate N random (f, binary16 f) pairs instead");
  compare_cmd->add_option("--inputs", ca.inputs, "Random pairs: input count")->capture_default_str();
  compare_cmd->add_option("--hidden-layers", ca.hidden_layers, "Random pairs: hidden layers")->capture_default_str();
  compare_cmd->add_option("--width", ca.width, "Random pairs: neurons per hidden layer")->capture_default_str();
  compare_cmd->add_option("--outputs", ca.outputs, "Random pairs: output count")->capture_default_str();
  compare_cmd->add_option("--radius", ca.region_radius, "Random pairs: region is [-r, r]^inputs")
      ->capture_default_str();
  compare_cmd->add_option("--csv", ca.csv, "Write CSV here instead of stdout");
  detail::add_query_options(compare_cmd, ca.query);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (verify_cmd->parsed()) return detail::cmd_verify(va, out);
    if (truncate_cmd->parsed()) return detail::cmd_truncate(ta, out);
    if (compare_cmd->parsed()) return detail::cmd_compare(ca, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace diffverify
