#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rrw/backward.hpp"
#include "rrw/families.hpp"
#include "rrw/walk.hpp"

using namespace rrw;

namespace {

Measure1D half12() { return Measure1D::lattice({{1, 0.5}, {2, 0.5}}); }

WalkSpec free_unit() { return WalkSpec(JointMeasure::finite({1, 0, 1, 0}, {{1, 1}}, {1.0})); }

}  // namespace

TEST(ReflectStep, Examples) {
  EXPECT_EQ(reflect_step(Point{3, 0}, Point{5, 2}), (Point{2, 2}));
  EXPECT_EQ(reflect_step(Point{4.5, 7}, Point{0, 0}), (Point{4.5, 7}));
  EXPECT_EQ(reflect_step(Point{1}, Point{3}), (Point{2}));
  EXPECT_THROW(reflect_step(Point{1, 2}, Point{3}), PreconditionError);
  EXPECT_THROW(reflect_step(Point{-1}, Point{3}), PreconditionError);
}

TEST(WalkSpec, RejectsUnnormalizedAndLargeFreeDimension) {
  EXPECT_THROW(WalkSpec::one_dim(dirac(2)), PreconditionError);
  EXPECT_THROW(WalkSpec(JointMeasure::finite({1, 0, 3, 0}, {{1, 0, 0, 0}}, {1.0})), PreconditionError);
  EXPECT_THROW(WalkSpec(JointMeasure::finite({0, 0, 1, 0}, {{1}}, {1.0})), PreconditionError);
}

TEST(Simulate, DiracTwoFromThree) {
  // WalkSpec rejects delta_2 as unnormalized; iterate the raw kernel.
  double x = 3;
  std::vector<double> seen;
  for (int k = 0; k < 5; ++k) {
    x = reflect_step(Point{x}, Point{2})[0];
    seen.push_back(x);
  }
  EXPECT_EQ(seen, (std::vector<double>{1, 1, 1, 1, 1}));
}

TEST(Simulate, DiracOneAlternates) {
  const auto t = simulate(WalkSpec::one_dim(dirac(1)), Point{0}, 9, std::uint64_t{1});
  for (std::int64_t k = 0; k <= 9; ++k) EXPECT_EQ(t.state(k)[0], k % 2);
}

TEST(Simulate, FreeCoordinateIsPartialSum) {
  const auto t = simulate(free_unit(), Point{0, 0}, 20, std::uint64_t{3});
  for (std::int64_t k = 0; k <= 20; ++k) {
    EXPECT_EQ(t.state(k)[1], k);
    EXPECT_EQ(t.state(k)[0], k % 2);
  }
}

TEST(Simulate, ReplayIsBitIdentical) {
  const WalkSpec spec(JointMeasure::product({1, 1, 1, 0}, {half12(), uniform(-1, 2), Measure1D::lattice({{-1, 0.5}, {1, 0.5}})}));
  const auto a = simulate(spec, Point{0, 0.5, 0}, 2000, std::uint64_t{42});
  const auto b = simulate(spec, Point{0, 0.5, 0}, 2000, std::uint64_t{42});
  EXPECT_EQ(a.data, b.data);
  const auto c = simulate(spec, Point{0, 0.5, 0}, 2000, std::uint64_t{43});
  EXPECT_NE(a.data, c.data);
}

TEST(Simulate, ReflectedCoordinatesStayNonnegative) {
  const WalkSpec spec(JointMeasure::product({1, 1, 0, 0}, {Measure1D::lattice({{-3, 0.3}, {1, 0.4}, {4, 0.3}}), uniform(-2, 1)}));
  const auto t = simulate(spec, Point{5, 0.25}, 10000, std::uint64_t{8});
  for (std::int64_t k = 0; k <= t.steps; ++k) {
    EXPECT_GE(t.state(k)[0], 0.0);
    EXPECT_GE(t.state(k)[1], 0.0);
  }
}

TEST(Simulate, RejectsStartOutsideStateSpace) {
  const WalkSpec spec = WalkSpec::one_dim(half12());
  Rng rng(1);
  EXPECT_THROW(simulate(spec, Point{-1}, 3, rng), PreconditionError);
  EXPECT_THROW(simulate(spec, Point{0.5}, 3, rng), PreconditionError);
  EXPECT_THROW(simulate(spec, Point{0, 0}, 3, rng), PreconditionError);
}

TEST(ParityReturns, MeanIsTwoInOneDimension) {
  const WalkSpec spec = WalkSpec::one_dim(half12());
  Rng rng(2024);
  double s = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) s += static_cast<double>(parity_return_times(spec, Point{0}, 1, rng).times[0]);
  EXPECT_NEAR(s / n, 2.0, 0.05);
}

TEST(ParityReturns, MeanIsGroupOrderInTwoDimensions) {
  const WalkSpec spec(JointMeasure::product({2, 0, 0, 0}, {half12(), half12()}));
  Rng rng(7);
  double s = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) s += static_cast<double>(parity_return_times(spec, Point{0, 0}, 1, rng).times[0]);
  EXPECT_NEAR(s / n, 4.0, 0.1);
}

TEST(ParityReturns, NeedsLatticeReflection) {
  Rng rng(1);
  EXPECT_THROW(parity_return_times(WalkSpec::one_dim(uniform(0, 1)), Point{0}, 1, rng), PreconditionError);
}

TEST(InducedWord, DiracOneIsOneOne) {
  const WalkSpec spec = WalkSpec::one_dim(dirac(1));
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto w = induced_word(spec, rng);
    EXPECT_EQ(w.to_string(), "1 1");
    EXPECT_EQ(w.evaluate(0.0), 0.0);
  }
}

TEST(InducedWord, EvenLetterIsSingleStep) {
  const WalkSpec spec(JointMeasure::finite({2, 0, 0, 0}, {{2, 4}, {1, 0}, {0, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  Rng rng(9);
  int singles = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto w = induced_word(spec, rng);
    if (w.size() == 1) {
      ++singles;
      EXPECT_EQ(w.evaluate(Point{1, 6}), (Point{1, 2}));
    }
  }
  EXPECT_GT(singles, 800);
}

TEST(InducedWord, ReplaysSimulation) {
  const WalkSpec spec(JointMeasure::product({2, 0, 0, 0}, {half12(), Measure1D::lattice({{-1, 0.25}, {1, 0.25}, {3, 0.5}})}));
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng a(seed), b(seed);
    ContractionWord w(2);
    for (int k = 0; k < 4; ++k) w.append(induced_word(spec, a));
    const Point x{6, 2};
    const auto rets = parity_return_times(spec, x, 4, b);
    EXPECT_EQ(w.evaluate(x), rets.states.back());
    EXPECT_EQ(static_cast<std::int64_t>(w.size()), rets.times.back());
  }
}

TEST(ContractionWord, LipschitzAndAssociative) {
  Rng rng(77);
  std::uniform_real_distribution<double> u(-5, 5), v(0, 10);
  for (int rep = 0; rep < 500; ++rep) {
    ContractionWord a, b, c;
    for (int k = 0; k < 3; ++k) {
      a.push(u(rng));
      b.push(u(rng));
      c.push(u(rng));
    }
    const double x = v(rng), y = v(rng);
    const auto w = a.then(b).then(c);
    EXPECT_LE(std::abs(w.evaluate(x) - w.evaluate(y)), std::abs(x - y) + 1e-12);
    EXPECT_EQ(w, a.then(b.then(c)));
    EXPECT_EQ(w.evaluate(x), c.evaluate(b.evaluate(a.evaluate(x))));
  }
}

TEST(ContractionWord, ParseRoundTrip) {
  const auto w = ContractionWord::parse("1,2 -3,0.5 4,4", 2);
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(ContractionWord::parse(w.to_string(), 2), w);
  EXPECT_THROW(ContractionWord::parse("1,2 3", 2), PreconditionError);
}

TEST(ContractionProfile, CouplesEvenStarts) {
  const WalkSpec spec = WalkSpec::one_dim(half12());
  Rng rng(314);
  int met = 0;
  constexpr int runs = 10000;
  for (int i = 0; i < runs; ++i) met += contraction_distance_profile(spec, Point{0}, Point{2}, 200, rng).back() == 0.0;
  EXPECT_GT(met, 0.99 * runs);
}

TEST(ContractionProfile, ParityIsConserved) {
  const WalkSpec spec = WalkSpec::one_dim(Measure1D::lattice({{-2, 0.2}, {1, 0.3}, {2, 0.2}, {5, 0.3}}));
  Rng rng(15);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = contraction_distance_profile(spec, Point{0}, Point{1}, 500, rng);
    for (double x : d) EXPECT_EQ(std::fmod(x, 2.0), 1.0);
  }
  const auto same = contraction_distance_profile(spec, Point{3}, Point{3}, 100, rng);
  for (double x : same) EXPECT_EQ(x, 0.0);
}

TEST(Backward, DiracOneGivesZero) {
  const WalkSpec spec = WalkSpec::one_dim(dirac(1));
  Rng rng(1);
  const auto s = backward_sample(spec, 0u, 64, rng);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.value, (Point{0}));
  EXPECT_EQ(s.blocks, 1);
}

TEST(Backward, MatchesInvariantLawOnEvens) {
  // nu = (1/2, 3/4, 1/4) on {0, 1, 2}; conditioned on evens: (2/3, 1/3).
  const WalkSpec spec = WalkSpec::one_dim(half12());
  Rng rng(99);
  constexpr int n = 100000;
  int zeros = 0, twos = 0;
  for (int i = 0; i < n; ++i) {
    const auto s = backward_sample(spec, 0u, 1 << 12, rng);
    ASSERT_TRUE(s.converged);
    zeros += s.value[0] == 0;
    twos += s.value[0] == 2;
  }
  EXPECT_EQ(zeros + twos, n);
  EXPECT_LT(std::abs(zeros / double(n) - 2.0 / 3.0), 0.02);
}

TEST(Backward, RejectsMixedParityAndNullRecurrence) {
  Rng rng(1);
  EXPECT_THROW(backward_sample(WalkSpec::one_dim(half12()), Point{0}, Point{1}, 16, rng), PreconditionError);
  const Measure1D srw = Measure1D::lattice({{-1, 0.5}, {1, 0.5}});
  EXPECT_THROW(backward_sample(WalkSpec::one_dim(srw), 0u, 16, rng), PreconditionError);
}

TEST(Backward, ContinuousHorizonExhaustionIsFlagged) {
  // A box only shrinks when an increment lands inside it, so its width decays
  // like 1/n and 1e-9 is out of reach for a short horizon.
  const WalkSpec spec = WalkSpec::one_dim(uniform(0, 1));
  Rng rng(12);
  const auto b = backward_sample(spec, 0u, 256, rng);
  EXPECT_FALSE(b.converged);
  EXPECT_EQ(b.blocks, 256);
  EXPECT_GE(b.value[0], 0.0);
  EXPECT_LE(b.value[0], 2.0);
}
