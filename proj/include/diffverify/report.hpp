#pragma once

// JSON region files and verification reports.

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffverify/interval.hpp"
#include "diffverify/symbolic.hpp"
#include "diffverify/verifier.hpp"

namespace diffverify {

using json = nlohmann::json;

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Region document: [[lo, hi], [lo, hi], ...], one pair per network input.
inline InputRegion parse_region(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ReportError(std::string("region is not valid JSON: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw ReportError("region must be a non-empty array of [lo, hi] pairs");
  InputRegion region;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& p = doc[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ReportError("region entry " + std::to_string(i) + " is not a [lo, hi] pair");
    Interval b(p[0].get<double>(), p[1].get<double>());
    if (!b.valid()) throw ReportError("region entry " + std::to_string(i) + " has lo > hi");
    region.bounds.push_back(b);
  }
  return region;
}

inline InputRegion load_region(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open region file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_region(ss.str());
  } catch (const ReportError& e) {
    throw ReportError(path + ": " + e.what());
  }
}

inline json to_json(Interval b) { return json::array({b.lo, b.hi}); }

inline json to_json(const std::vector<Interval>& v) {
  json a = json::array();
  for (Interval b : v) a.push_back(to_json(b));
  return a;
}

inline json region_to_json(const InputRegion& r) { return to_json(r.bounds); }

/// Everything needed to reproduce a run besides the network files themselves.
struct QueryEcho {
  std::string net1;
  std::string net2;
  bool normalize = false;
  bool fast_math = false;
};

inline json make_report(const VerificationQuery& q, const Verdict& v, const QueryEcho& echo = {}) {
  json r;
  r["status"] = to_string(v.status);
  if (v.witness) {
    r["witness"] = {{"x", v.witness->x}, {"f", v.witness->f}, {"f_prime", v.witness->f_prime},
                    {"delta", v.witness->delta}};
  } else {
    r["witness"] = nullptr;
  }
  r["output_delta_hull"] = to_json(v.stats.hull);
  r["first_pass_bounds"] = to_json(v.stats.first_pass);
  r["stats"] = {{"regions", v.stats.regions},
                {"splits", v.stats.splits},
                {"max_depth", v.stats.max_depth},
                {"wall_seconds", v.stats.wall_seconds},
                {"timed_out", v.stats.timed_out}};
  r["query"] = {{"net1", echo.net1},
                {"net2", echo.net2},
                {"region", region_to_json(q.region)},
                {"epsilon", q.epsilon},
                {"output_indices", q.watched()},
                {"max_depth", q.max_depth},
                {"timeout", q.timeout_seconds},
                {"threads", q.threads},
                {"samples", q.sample_count},
                {"seed", q.seed},
                {"mode", to_string(q.mode)},
                {"normalize", echo.normalize},
                {"fast_math", echo.fast_math}};
  return r;
}

inline Status parse_status(const std::string& s) {
  if (s == "verified") return Status::Verified;
  if (s == "falsified") return Status::Falsified;
  if (s == "unknown") return Status::Unknown;
  throw ReportError("unknown status '" + s + "'");
}

inline std::vector<Interval> intervals_from_json(const json& a) {
  std::vector<Interval> out;
  for (const json& p : a) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

/// Reads back the verdict part of a report (the query echo is not parsed).
inline Verdict parse_report(const std::string& text) {
  try {
    const json r = json::parse(text);
    Verdict v;
    v.status = parse_status(r.at("status").get<std::string>());
    if (!r.at("witness").is_null()) {
      const json& w = r["witness"];
      v.witness = Witness{w.at("x").get<std::vector<double>>(), w.at("f").get<std::vector<double>>(),
                          w.at("f_prime").get<std::vector<double>>(), w.at("delta").get<std::vector<double>>()};
    }
    v.stats.hull = intervals_from_json(r.at("output_delta_hull"));
    v.stats.first_pass = intervals_from_json(r.at("first_pass_bounds"));
    const json& s = r.at("stats");
    v.stats.regions = s.at("regions").get<std::size_t>();
    v.stats.splits = s.at("splits").get<std::size_t>();
    v.stats.max_depth = s.at("max_depth").get<std::size_t>();
    v.stats.wall_seconds = s.at("wall_seconds").get<double>();
    v.stats.timed_out = s.at("timed_out").get<bool>();
    return v;
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace diffverify
