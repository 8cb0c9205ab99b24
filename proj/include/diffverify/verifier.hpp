#pragma once

// Branch-and-bound driver: bound the output delta over a region, try to find a
// concrete counterexample, otherwise bisect an input and recurse. Regions are
// handed out from a shared LIFO stack to a pool of worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "diffverify/forward.hpp"
#include "diffverify/interval.hpp"
#include "diffverify/network.hpp"
#include "diffverify/refine.hpp"
#include "diffverify/symbolic.hpp"

namespace diffverify {

enum class Status { Verified, Falsified, Unknown };
enum class Mode { Delta, ComposedBaseline };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Verified: return "verified";
    case Status::Falsified: return "falsified";
    case Status::Unknown: return "unknown";
  }
  return "unknown";
}

inline const char* to_string(Mode m) { return m == Mode::Delta ? "delta" : "composed-baseline"; }

struct VerificationQuery {
  NetworkPair pair;
  InputRegion region;
  double epsilon = 0.0;
  std::vector<std::size_t> output_indices;  // empty: every output
  std::size_t max_depth = 40;
  double timeout_seconds = 1800.0;
  std::size_t threads = 10;
  std::size_t sample_count = 1024;
  std::uint64_t seed = 0x5eed;
  Mode mode = Mode::Delta;
  bool record_leaves = false;  // keep every terminal region in the stats

  std::vector<std::size_t> watched() const {
    if (!output_indices.empty()) return output_indices;
    std::vector<std::size_t> all(pair.output_size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

  void validate() const {
    if (!(epsilon > 0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be a positive number");
    if (region.dim() != pair.input_size())
      throw std::invalid_argument("region has " + std::to_string(region.dim()) + " inputs, networks expect " +
                                  std::to_string(pair.input_size()));
    for (std::size_t i = 0; i < region.dim(); ++i)
      if (!region[i].valid()) throw std::invalid_argument("region interval " + std::to_string(i) + " is invalid");
    for (std::size_t o : output_indices)
      if (o >= pair.output_size()) throw std::invalid_argument("output index " + std::to_string(o) + " out of range");
  }
};

struct Witness {
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> f_prime;
  std::vector<double> delta;  // f' - f
};

struct VerifierStats {
  std::size_t regions = 0;  // regions bounded
  std::size_t splits = 0;
  std::size_t max_depth = 0;
  double wall_seconds = 0.0;
  bool timed_out = false;
  std::vector<Interval> first_pass;  // output delta bounds over the root region
  std::vector<Interval> hull;        // hull over terminal regions
  std::vector<InputRegion> leaves;   // only when record_leaves
};

struct Verdict {
  Status status = Status::Unknown;
  std::optional<Witness> witness;
  VerifierStats stats;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of a child region: depends only on the parent seed and the side.
inline std::uint64_t child_seed(std::uint64_t parent, bool right) { return splitmix64(parent ^ (right ? 0xa5a5 : 0x5a5a)); }

inline bool inside_open(Interval b, double eps) { return b.lo > -eps && b.hi < eps; }

inline Interval hull_or(const std::optional<Interval>& acc, Interval b) { return acc ? hull(*acc, b) : b; }

}  // namespace detail

/// Concrete check of one input point; a witness if any watched |delta| >= epsilon.
inline std::optional<Witness> check_point(const VerificationQuery& q, const std::vector<std::size_t>& watched,
                                          std::vector<double> x) {
  auto a = eval_concrete(q.pair.f, x);
  auto b = eval_concrete(q.pair.f_prime, x);
  bool hit = false;
  std::vector<double> d(a.size());
  for (std::size_t o = 0; o < a.size(); ++o) d[o] = b[o] - a[o];
  for (std::size_t o : watched)
    if (std::fabs(d[o]) >= q.epsilon) hit = true;
  if (!hit) return std::nullopt;
  return Witness{std::move(x), std::move(a), std::move(b), std::move(d)};
}

/// Corners (all of them up to 2^12, random corners past that), the centre and
/// `sample_count` uniform points. Returns the first hit.
inline std::optional<Witness> sample_counterexample(const VerificationQuery& q, const InputRegion& region,
                                                    std::uint64_t seed) {
  constexpr std::size_t kCornerCap = std::size_t{1} << 12;
  const std::size_t n = region.dim();
  const auto watched = q.watched();
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);

  if (n < 12) {
    const std::size_t corners = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i & 1) ? region[i].hi : region[i].lo;
      if (auto w = check_point(q, watched, x)) return w;
    }
  } else {
    for (std::size_t c = 0; c < kCornerCap; ++c) {
      for (std::size_t i = 0; i < n; ++i) x[i] = (rng() & 1) ? region[i].hi : region[i].lo;
      if (auto w = check_point(q, watched, x)) return w;
    }
  }
  if (auto w = check_point(q, watched, region.center())) return w;
  for (std::size_t s = 0; s < q.sample_count; ++s) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = region[i].lo == region[i].hi ? region[i].lo
                                          : std::uniform_real_distribution<double>(region[i].lo, region[i].hi)(rng);
    if (auto w = check_point(q, watched, x)) return w;
  }
  return std::nullopt;
}

inline std::optional<Witness> sample_counterexample(const VerificationQuery& q, const InputRegion& region) {
  return sample_counterexample(q, region, q.seed);
}

namespace detail {

struct WorkItem {
  InputRegion region;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
};

class Engine {
 public:
  explicit Engine(const VerificationQuery& q) : q_(q), watched_(q.watched()) {
    if (q.mode == Mode::ComposedBaseline) composed_ = compose_difference(q.pair);
    start_ = std::chrono::steady_clock::now();
  }

  Verdict run(InputRegion root, std::size_t depth) {
    stack_.push_back({std::move(root), depth, q_.seed});
    const std::size_t workers = std::max<std::size_t>(1, q_.threads);
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t t = 0; t < workers; ++t) pool.emplace_back([this] { work(); });
      for (auto& th : pool) th.join();
    }
    Verdict v;
    v.stats = std::move(stats_);
    v.stats.wall_seconds = elapsed();
    for (auto& h : hull_) v.stats.hull.push_back(h.value_or(Interval(0.0)));
    if (falsified_) {
      v.status = Status::Falsified;
      v.witness = std::move(witness_);
    } else {
      v.status = unknown_ ? Status::Unknown : Status::Verified;
    }
    return v;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  bool out_of_time() const { return elapsed() >= q_.timeout_seconds; }

  void work() {
    while (true) {
      WorkItem item;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !stack_.empty() || busy_ == 0 || falsified_; });
        if (falsified_ || stack_.empty()) {
          cv_.notify_all();
          return;
        }
        if (out_of_time()) {
          // Drop the remaining work; it is all unresolved.
          stats_.timed_out = true;
          unknown_ = true;
          stack_.clear();
          cv_.notify_all();
          return;
        }
        item = std::move(stack_.back());
        stack_.pop_back();
        ++busy_;
      }
      process(item);
      {
        std::lock_guard lock(mu_);
        --busy_;
      }
      cv_.notify_all();
    }
  }

  // Output delta bounds over `region`, plus what is needed to pick a split.
  struct Analysis {
    std::vector<Interval> delta;
    std::optional<ForwardResult> fwd;
    std::optional<SingleResult> single;
  };

  Analysis analyze(const InputRegion& region) const {
    Analysis a;
    if (q_.mode == Mode::Delta) {
      a.fwd = forward_pass(q_.pair, region);
      a.delta = a.fwd->output_delta;
    } else {
      a.single = forward_single(composed_, region);
      a.delta = a.single->output;
    }
    return a;
  }

  GradientVector split_gradient(const Analysis& a, std::size_t output) const {
    if (a.fwd) {
      return gradient_diff(gradient(q_.pair.f, a.fwd->mask, output), gradient(q_.pair.f_prime, a.fwd->mask_prime, output));
    }
    return gradient(composed_, a.single->mask, output);
  }

  void finish_leaf(const WorkItem& item, const std::vector<Interval>& delta, bool unknown) {
    std::lock_guard lock(mu_);
    if (hull_.empty()) hull_.resize(delta.size());
    for (std::size_t o = 0; o < delta.size(); ++o) hull_[o] = hull_or(hull_[o], delta[o]);
    if (unknown) unknown_ = true;
    if (q_.record_leaves) stats_.leaves.push_back(item.region);
  }

  void process(const WorkItem& item) {
    const Analysis a = analyze(item.region);
    {
      std::lock_guard lock(mu_);
      // Children exist only after the root is done, so the first region is the root.
      if (stats_.regions == 0) stats_.first_pass = a.delta;
      ++stats_.regions;
      stats_.max_depth = std::max(stats_.max_depth, item.depth);
    }

    bool verified = true;
    for (std::size_t o : watched_) verified = verified && inside_open(a.delta[o], q_.epsilon);
    if (verified) {
      finish_leaf(item, a.delta, false);
      return;
    }

    if (auto w = sample_counterexample(q_, item.region, item.seed)) {
      std::lock_guard lock(mu_);
      if (!falsified_) {
        falsified_ = true;
        witness_ = std::move(w);
      }
      return;
    }

    if (item.depth >= q_.max_depth || out_of_time()) {
      if (out_of_time()) {
        std::lock_guard lock(mu_);
        stats_.timed_out = true;
      }
      finish_leaf(item, a.delta, true);
      return;
    }

    // Refine on the watched output that overshoots epsilon the most.
    std::size_t target = watched_.front();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t o : watched_) {
      const double excess = std::max(a.delta[o].hi - q_.epsilon, -q_.epsilon - a.delta[o].lo);
      if (excess > worst) {
        worst = excess;
        target = o;
      }
    }
    SplitDecision split;
    try {
      split = smear_choose(item.region, split_gradient(a, target));
    } catch (const SplitError&) {
      finish_leaf(item, a.delta, true);
      return;
    }
    std::lock_guard lock(mu_);
    ++stats_.splits;
    // Right pushed first so the left half is explored first.
    stack_.push_back({std::move(split.right), item.depth + 1, child_seed(item.seed, true)});
    stack_.push_back({std::move(split.left), item.depth + 1, child_seed(item.seed, false)});
  }

  const VerificationQuery& q_;
  std::vector<std::size_t> watched_;
  Network composed_;
  std::chrono::steady_clock::time_point start_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<WorkItem> stack_;
  std::size_t busy_ = 0;
  bool falsified_ = false;
  bool unknown_ = false;
  std::optional<Witness> witness_;
  VerifierStats stats_;
  std::vector<std::optional<Interval>> hull_;
};

}  // namespace detail

/// Solves the query from `region` at `depth`, refining at most down to
/// query.max_depth. Uses query.threads workers.
inline Verdict check_region(const VerificationQuery& q, const InputRegion& region, std::size_t depth) {
  q.validate();
  if (depth > q.max_depth) throw std::invalid_argument("depth exceeds max_depth");
  detail::Engine engine(q);
  return engine.run(region, depth);
}

inline Verdict verify(const VerificationQuery& q) { return check_region(q, q.region, 0); }

}  // namespace diffverify
