#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "support.hpp"

using namespace diffverify;

namespace {

void expect_interval_near(Interval got, double lo, double hi, double tol) {
  EXPECT_NEAR(got.lo, lo, tol) << "got " << got;
  EXPECT_NEAR(got.hi, hi, tol) << "got " << got;
}

}  // namespace

TEST(Classify, BoundaryRules) {
  EXPECT_EQ(classify({-2.0, 0.0}), ReluState::Inactive);
  EXPECT_EQ(classify({0.0, 0.0}), ReluState::Inactive);
  EXPECT_EQ(classify({0.0, 3.0}), ReluState::Active);
  EXPECT_EQ(classify({-1.0, 3.0}), ReluState::NonLinear);
  EXPECT_EQ(delta_case(ReluState::Inactive, ReluState::Inactive), 1);
  EXPECT_EQ(delta_case(ReluState::Active, ReluState::NonLinear), 6);
  EXPECT_EQ(delta_case(ReluState::NonLinear, ReluState::NonLinear), 9);
  EXPECT_EQ(mask_interval(ReluState::NonLinear), Interval(0.0, 1.0));
}

TEST(ReluDelta, CaseTable) {
  // Inactive f neuron.
  EXPECT_EQ(relu_delta_bounds({-3, -1}, {-2, -1}, {0, 1}), Interval(0.0, 0.0));
  EXPECT_EQ(relu_delta_bounds({-3, -1}, {1, 2}, {2, 4}), Interval(1.0, 2.0));
  EXPECT_EQ(relu_delta_bounds({-3, -1}, {-1, 2}, {0, 4}), Interval(0.0, 2.0));
  // Active f neuron.
  EXPECT_EQ(relu_delta_bounds({1, 3}, {-2, -1}, {-4, -2}), Interval(-3.0, -1.0));
  EXPECT_EQ(relu_delta_bounds({1, 3}, {2, 4}, {0.5, 1}), Interval(0.5, 1.0));
  EXPECT_EQ(relu_delta_bounds({1, 3}, {-3, 1}, {-4, -2}), Interval(-3.0, -1.0));  // max(-n, d)
  // Non-linear f neuron.
  EXPECT_EQ(relu_delta_bounds({-1, 3}, {-2, -1}, {-4, -1}), Interval(-3.0, 0.0));
  EXPECT_EQ(relu_delta_bounds({-1, 2}, {1, 3}, {2, 4}), Interval(1.0, 3.0));      // min(n', d)
  EXPECT_EQ(relu_delta_bounds({-2, 9}, {-2, 10}, {0, 1.1}), Interval(0.0, 1.1));
  EXPECT_EQ(relu_delta_bounds({-2, 9}, {-2, 10}, {-1, -0.5}), Interval(-1.0, 0.0));
  EXPECT_EQ(relu_delta_bounds({-2, 9}, {-2, 10}, {-20, 20}), Interval(-9.0, 10.0));
}

TEST(ReluDelta, SymbolicCasesKeepExpressions) {
  const InputRegion r({{0.0, 1.0}});
  NeuronBounds in;
  in.s = sym_from_region(r)[0];               // x, active
  in.s_prime = sym_scale_add(SymbolicInterval(1), in.s, 2.0);  // 2x, active
  in.s_delta = in.s;                          // 2x - x = x
  in.c = {0.0, 1.0};
  in.c_prime = {0.0, 2.0};
  in.c_delta = {0.0, 1.0};
  const ReluOutput out = relu_transform(in, r);
  EXPECT_EQ(out.relu_case, 5);
  EXPECT_FALSE(out.out.s_delta.upper.is_constant());
  EXPECT_EQ(out.out.c_delta, Interval(0.0, 1.0));
}

// The transformer must contain the exact range of ReLU(n + d) - ReLU(n) under
// the coupling n + d in n', and for consistent bounds (n' = n + d) stay inside
// the plain difference ReLU(n') - ReLU(n).
TEST(ReluDelta, ContainsExactRangeOnRandomInstances) {
  std::mt19937_64 rng(99);
  std::array<int, 10> seen{};
  for (int k = 0; k < 40'000; ++k) {
    const Interval n = dvtest::random_interval(rng, 5.0);
    const Interval d = dvtest::random_interval(rng, 5.0);
    Interval np = add(n, d);
    if (rng() % 2) {
      // Shrink n' while keeping a feasible point.
      const double mid_n = std::midpoint(n.lo, n.hi), mid_d = std::midpoint(d.lo, d.hi);
      const double c = mid_n + mid_d;
      const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      // c is a rounded sum; widen by one ulp so the exact midpoint stays feasible.
      np = {std::min(c - t * (c - np.lo), std::nextafter(c, -INFINITY)),
            std::max(c + t * (np.hi - c), std::nextafter(c, INFINITY))};
    }
    const Interval out = relu_transform(dvtest::constant_bounds(1, n, np, d), InputRegion({{0.0, 1.0}})).out.c_delta;
    const Interval exact = oracle::relu_delta_exact(n, d, np);
    ASSERT_TRUE(subset(exact, out)) << "n=" << n << " n'=" << np << " d=" << d << " out=" << out << " exact=" << exact;
    ++seen[static_cast<std::size_t>(delta_case(classify(n), classify(np)))];
  }
  for (int c = 1; c <= 9; ++c) EXPECT_GT(seen[static_cast<std::size_t>(c)], 0) << "case " << c << " never drawn";
}

TEST(Forward, WorkedExampleLayerBounds) {
  const NetworkPair pair(dvtest::example_f(), dvtest::example_f_rounded());
  const ForwardResult r = forward_pass(pair, dvtest::example_region());
  ASSERT_EQ(r.layers.size(), 2u);
  // Values from a hand evaluation of the nine-case transformer on this pair.
  expect_interval_near(r.layers[0].delta[0], 0.0, 1.1, 1e-9);
  expect_interval_near(r.layers[0].delta[1], -0.6, -0.4, 1e-9);
  expect_interval_near(r.layers[1].delta[0], -0.53, 2.8, 1e-9);
  expect_interval_near(r.layers[1].delta[1], -3.79, 0.0, 1e-9);
  ASSERT_EQ(r.output_delta.size(), 1u);
  expect_interval_near(r.output_delta[0], -0.53, 6.59, 1e-9);
  EXPECT_EQ(r.layers[0].relu_case[0], 9);
  EXPECT_EQ(r.layers[0].relu_case[1], 5);
  expect_interval_near(r.layers[0].pre[0], -2.9, 9.3, 1e-9);
  expect_interval_near(r.layers[0].pre_prime[0], -2.0, 10.0, 1e-9);
}

TEST(Forward, IdenticalNetworksGiveExactZero) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const Network f = make_random_network(dvtest::hidden_sizes(5, 6, 50, 5), 500 + t);
    const NetworkPair pair(f, f);
    const ForwardResult r = forward_pass(pair, dvtest::random_region(rng, 5));
    for (Interval d : r.output_delta) EXPECT_EQ(d, Interval(0.0, 0.0));
  }
}

TEST(Forward, SampledValuesStayInsideBounds) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 30; ++t) {
    const auto sizes = dvtest::hidden_sizes(3, 1 + t % 4, 8 + t, 2);
    const Network f = make_random_network(sizes, 900 + t);
    const NetworkPair pair(f, truncate_f16(f));
    const InputRegion region = dvtest::random_region(rng, 3);
    const ForwardResult r = forward_pass(pair, region);
    for (int k = 0; k < 300; ++k) {
      const auto x = dvtest::random_point(rng, region);
      const auto pa = eval_preactivations(pair.f, x);
      const auto pb = eval_preactivations(pair.f_prime, x);
      for (std::size_t l = 0; l < pa.size(); ++l) {
        for (std::size_t j = 0; j < pa[l].size(); ++j) {
          ASSERT_TRUE(contains(r.layers[l].pre[j], pa[l][j]));
          ASSERT_TRUE(contains(r.layers[l].pre_prime[j], pb[l][j]));
          const double relu_delta = std::max(pb[l][j], 0.0) - std::max(pa[l][j], 0.0);
          ASSERT_TRUE(contains(r.layers[l].delta[j], relu_delta)) << r.layers[l].delta[j] << " vs " << relu_delta;
          // Mask agrees with the sign of the actual pre-activation.
          if (r.mask[l][j] == ReluState::Inactive) {
            ASSERT_LE(pa[l][j], 0.0);
          } else if (r.mask[l][j] == ReluState::Active) {
            ASSERT_GE(pa[l][j], 0.0);
          }
          if (r.mask_prime[l][j] == ReluState::Inactive) {
            ASSERT_LE(pb[l][j], 0.0);
          } else if (r.mask_prime[l][j] == ReluState::Active) {
            ASSERT_GE(pb[l][j], 0.0);
          }
        }
      }
      const auto a = eval_concrete(pair.f, x);
      const auto b = eval_concrete(pair.f_prime, x);
      for (std::size_t o = 0; o < a.size(); ++o) {
        ASSERT_TRUE(contains(r.output_delta[o], b[o] - a[o]));
        ASSERT_TRUE(contains(r.output[o], a[o]));
        ASSERT_TRUE(contains(r.output_prime[o], b[o]));
      }
    }
  }
}

TEST(ForwardSingle, SplittingExample) {
  const Network f = dvtest::single_net_example();
  const InputRegion r = dvtest::single_net_region();
  const SingleResult whole = forward_single(f, r);
  EXPECT_EQ(whole.output[0], Interval(4.0, 17.0));
  auto [x2_lo, x2_hi] = bisect(r, 1);
  EXPECT_EQ(hull(forward_single(f, x2_lo).output[0], forward_single(f, x2_hi).output[0]), Interval(5.0, 16.0));
  auto [x1_lo, x1_hi] = bisect(r, 0);
  EXPECT_EQ(forward_single(f, x1_lo).output[0], Interval(4.0, 12.0));
  EXPECT_EQ(forward_single(f, x1_hi).output[0], Interval(9.0, 17.0));
}

TEST(ForwardSingle, DifferenceNetworkIsLooserThanDeltaMode) {
  // f = 2.1 x, f' = 2 x behind one ReLU, x in [-1, 1].
  const NetworkPair pair(make_network({1, 1, 1}, {{{2.1}}, {{1.0}}}), make_network({1, 1, 1}, {{{2.0}}, {{1.0}}}));
  const InputRegion r({{-1.0, 1.0}});
  const SingleResult base = forward_single(compose_difference(pair), r);
  expect_interval_near(base.output[0], -2.1, 2.0, 1e-12);
  const ForwardResult delta = forward_pass(pair, r);
  expect_interval_near(delta.output_delta[0], -0.1, 0.1, 1e-12);
}
