#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "rrw/diagnostics.hpp"
#include "rrw/families.hpp"
#include "rrw/lattice.hpp"

using namespace rrw;

namespace {

Measure1D half12() { return Measure1D::lattice({{1, 0.5}, {2, 0.5}}); }
Measure1D coin() { return Measure1D::lattice({{-1, 0.5}, {1, 0.5}}); }

// Visit counts proportional to b^e at the four checkpoints.
std::vector<VisitCounts> synthetic(std::int64_t budget, double e, int replicas, bool escaped = false) {
  std::vector<VisitCounts> out(static_cast<std::size_t>(replicas));
  const auto cps = checkpoints(budget);
  for (auto& v : out) {
    for (int i = 0; i < kCheckpoints; ++i) v.visits[i] = std::llround(std::pow(static_cast<double>(cps[i]), e));
    v.visited_after_burn_in = !escaped;
  }
  return out;
}

}  // namespace

TEST(Evidence, DecisionRules) {
  const std::int64_t b = 1 << 20;
  EXPECT_EQ(decide_evidence(b, synthetic(b, 1.0, 8)).category, EvidenceCategory::positive_evidence);
  EXPECT_EQ(decide_evidence(b, synthetic(b, 0.5, 8)).category, EvidenceCategory::null_evidence);
  EXPECT_EQ(decide_evidence(b, synthetic(b, 0.8, 8)).category, EvidenceCategory::inconclusive);
  EXPECT_EQ(decide_evidence(b, synthetic(b, 0.5, 8, true)).category, EvidenceCategory::transient_evidence);
  EXPECT_THROW(decide_evidence(999, synthetic(999, 1.0, 8)), PreconditionError);
}

TEST(Evidence, Statistics) {
  const std::int64_t b = 1 << 20;
  const auto ev = decide_evidence(b, synthetic(b, 0.5, 4));
  EXPECT_NEAR(ev.growth, std::sqrt(2.0) - 1.0, 1e-3);
  EXPECT_NEAR(ev.count_growth_slope, 0.5, 1e-3);
  EXPECT_NEAR(ev.mean_return_time[3], std::sqrt(static_cast<double>(b)), 1e-6);
  EXPECT_EQ(ev.mean_return_se[3], 0.0);
  EXPECT_EQ(ev.escape_fraction, 0.0);
  const auto none = decide_evidence(b, std::vector<VisitCounts>(3));
  EXPECT_TRUE(std::isinf(none.mean_return_time[0]));
  EXPECT_EQ(none.category, EvidenceCategory::transient_evidence);
}

TEST(Evidence, CountVisits) {
  std::int64_t x = 0;
  std::vector<std::int64_t> at;
  const auto vc = count_visits(
      1000, [&] { ++x; }, [&] { return x % 10 == 0; }, [&](std::int64_t k) { at.push_back(k); });
  EXPECT_EQ(vc.visits, (std::array<std::int64_t, 4>{12, 25, 50, 100}));
  EXPECT_TRUE(vc.visited_after_burn_in);
  EXPECT_EQ(at.front(), 10);
  EXPECT_EQ(at.back(), 1000);
}

TEST(Occupation, DiracOneIsExactHalf) {
  Rng rng(1);
  const Law emp = occupation_law(WalkSpec::one_dim(dirac(1)), Point{0}, 1000, 0, rng);
  EXPECT_EQ(emp, (Law{{Point{0}, 0.5}, {Point{1}, 0.5}}));
}

TEST(Occupation, TwoPointLawConverges) {
  const WalkSpec spec = WalkSpec::one_dim(half12());
  const Law exact = invariant_law_1d(half12());
  EXPECT_NEAR(exact.at(Point{1}), 0.5, 1e-15);
  const auto rep = occupation_vs_invariant(spec, exact, 200000, 10000, 6);
  EXPECT_LT(rep.tv, 0.02);
}

TEST(Occupation, ExampleASupportIsEssentialClass) {
  const JointMeasure law = JointMeasure::finite({2, 0, 0, 0}, {{2, 3}, {3, 2}}, {0.5, 0.5});
  Rng rng(4);
  const Law emp = occupation_law(WalkSpec(law), Point{0, 0}, 100000, 100, rng);
  const auto cls = essential_classes(law, 20, 6);
  std::set<Point> members;
  for (const auto& p : cls[0].members) members.insert({static_cast<double>(p[0]), static_cast<double>(p[1])});
  std::set<Point> support;
  for (const auto& [p, w] : emp) support.insert(p);
  EXPECT_EQ(support, members);
  const Law exact = stationary_law_bounded(law, Point{0, 0});
  std::set<Point> exact_support;
  double mass = 0;
  for (const auto& [p, w] : exact) {
    if (w > 1e-12) exact_support.insert(p);
    mass += w;
  }
  EXPECT_EQ(exact_support, members);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_LT(total_variation(emp, exact), 0.02);
}

TEST(Occupation, RefusesNullRecurrentMarginal) {
  EXPECT_THROW(occupation_vs_invariant(WalkSpec::one_dim(coin()), Law{}, 1000, 0, 1), PreconditionError);
}

TEST(ReturnTimes, PositiveRecurrent) {
  const WalkSpec spec = WalkSpec::one_dim(half12());
  const auto rep = return_time_stats(spec, Point{0}, default_window(spec.dims(), 0), 100000, 16, 3);
  EXPECT_EQ(rep.evidence.category, EvidenceCategory::positive_evidence);
  // nu(0) / 1.5 = 1/3, so the mean return time to 0 is 3.
  EXPECT_NEAR(rep.evidence.mean_return_time[3], 3.0, 0.05);
  ASSERT_EQ(rep.stats.return_times.size(), 16u);
  for (const auto& rt : rep.stats.return_times) EXPECT_TRUE(std::is_sorted(rt.begin(), rt.end()));
}

TEST(ReturnTimes, ReflectedSimpleWalkIsNull) {
  const WalkSpec spec = WalkSpec::one_dim(coin());
  const auto rep = return_time_stats(spec, Point{0}, default_window(spec.dims(), 0), 1000000, 64, 3, 0);
  EXPECT_EQ(rep.evidence.category, EvidenceCategory::null_evidence);
  EXPECT_GT(rep.evidence.visits[3], rep.evidence.visits[0]);
}

TEST(ReturnTimes, DeterministicAcrossThreadCounts) {
  const WalkSpec spec = WalkSpec::one_dim(coin());
  const Window w = default_window(spec.dims(), 0);
  const auto a = return_time_stats(spec, Point{0}, w, 20000, 8, 9, 1);
  const auto b = return_time_stats(spec, Point{0}, w, 20000, 8, 9, 4);
  EXPECT_EQ(a.evidence.visits, b.evidence.visits);
  EXPECT_EQ(a.stats.return_times, b.stats.return_times);
  EXPECT_THROW(return_time_stats(spec, Point{0}, w, 999, 8, 9), PreconditionError);
}

TEST(Symmetrization, CoinTwoSteps) {
  const auto rep = symmetrization_check(JointMeasure::single(coin()), Point{0}, 2, SymmetrizationMode::exact_enumeration);
  EXPECT_EQ(rep.reflected, (Law{{Point{0}, 0.5}, {Point{2}, 0.5}}));
  EXPECT_LT(rep.discrepancy, 1e-15);
}

TEST(Symmetrization, ZeroHorizon) {
  const auto rep = symmetrization_check(JointMeasure::single(coin()), Point{-3}, 0, SymmetrizationMode::exact_enumeration);
  EXPECT_EQ(rep.discrepancy, 0.0);
  EXPECT_EQ(rep.reflected, (Law{{Point{3}, 1.0}}));
}

TEST(Symmetrization, ProductOfCoinsExact) {
  const JointMeasure j = JointMeasure::product({2, 0, 0, 0}, {coin(), coin()});
  for (std::int64_t n = 0; n <= 6; ++n)
    for (const Point& x : {Point{0, 0}, Point{1, -2}, Point{3, 1}})
      EXPECT_LT(symmetrization_check(j, x, n, SymmetrizationMode::exact_enumeration).discrepancy, 1e-12);
}

TEST(Symmetrization, MonteCarloMode) {
  const JointMeasure j = JointMeasure::single(Measure1D::lattice({{-2, 0.25}, {-1, 0.25}, {1, 0.25}, {2, 0.25}}));
  const auto rep = symmetrization_check(j, Point{1}, 8, SymmetrizationMode::monte_carlo, 5, 200000);
  EXPECT_LT(rep.discrepancy, 0.02);
  EXPECT_GT(rep.ci, 0.0);
}

TEST(Symmetrization, RejectsAsymmetricLaw) {
  EXPECT_THROW(symmetrization_check(JointMeasure::single(half12()), Point{0}, 2, SymmetrizationMode::exact_enumeration),
               PreconditionError);
}

TEST(Symmetrization, CouplingHoldsPathwise) {
  Rng rng(21);
  const JointMeasure one = JointMeasure::single(Measure1D::lattice({{-3, 0.2}, {-1, 0.3}, {1, 0.3}, {3, 0.2}}));
  const JointMeasure two = JointMeasure::product({1, 1, 0, 0}, {coin(), uniform(-1, 1)});
  for (int rep = 0; rep < 20; ++rep) {
    EXPECT_EQ(symmetrization_coupling_check(one, Point{-2}, 5000, rng), -1);
    EXPECT_EQ(symmetrization_coupling_check(two, Point{1, -0.5}, 5000, rng), -1);
  }
}

TEST(Cesaro, IndependentProduct) {
  const WalkSpec spec(JointMeasure::product({2, 0, 0, 0}, {half12(), half12()}));
  const Law nu = invariant_law_1d(half12());
  const auto rep = cesaro_lower_bound(nu, nu, {0, 1, 2}, {0, 1, 2}, spec, 1000000, 2);
  EXPECT_NEAR(rep.bound, 1.0, 1e-15);
  EXPECT_GE(rep.empirical, 0.97);
  EXPECT_TRUE(rep.asserted);
  EXPECT_TRUE(rep.ok);
}

TEST(Cesaro, EmptySetsAreNotAsserted) {
  const WalkSpec spec(JointMeasure::product({2, 0, 0, 0}, {half12(), half12()}));
  const Law nu = invariant_law_1d(half12());
  const auto rep = cesaro_lower_bound(nu, nu, {}, {}, spec, 1000, 2);
  EXPECT_NEAR(rep.bound, -1.0, 1e-15);
  EXPECT_FALSE(rep.asserted);
}

TEST(Cesaro, ExampleABoundedAttractor) {
  const JointMeasure law = JointMeasure::finite({2, 0, 0, 0}, {{2, 3}, {3, 2}}, {0.5, 0.5});
  const Law nu1 = invariant_law_1d(law.marginal(0)), nu2 = invariant_law_1d(law.marginal(1));
  const auto rep = cesaro_lower_bound(nu1, nu2, {0, 1, 2, 3}, {0, 1, 2, 3}, WalkSpec(law), 100000, 3);
  EXPECT_NEAR(rep.bound, 1.0, 1e-15);
  EXPECT_EQ(rep.empirical, 1.0);
}

TEST(Wald, CentredAndDrifted) {
  for (double up : {0.5, 0.6}) {
    const WalkSpec spec(JointMeasure::product({1, 0, 1, 0}, {half12(), Measure1D::lattice({{-1, 1 - up}, {1, up}})}));
    const auto w = wald_check(spec, 100000, 17);
    EXPECT_NEAR(w.mean_cycle_length, 2.0, 0.03);
    EXPECT_NEAR(w.drift[0], 2 * up - 1, 1e-15);
    EXPECT_TRUE(w.pass) << "deviation " << w.deviation[0] << " se " << w.standard_error[0];
  }
}

TEST(ReflectedFree, Preconditions) {
  EXPECT_THROW(reflected_plus_free_experiment(WalkSpec::one_dim(half12()), 1000, 0, 2, 1), PreconditionError);
  const WalkSpec null_reflected(JointMeasure::product({1, 0, 1, 0}, {coin(), coin()}));
  EXPECT_THROW(reflected_plus_free_experiment(null_reflected, 1000, 0, 2, 1), PreconditionError);
}

TEST(Regression, ExactPowerLaw) {
  std::vector<RegressionPoint> pts;
  for (double n : {8.0, 16.0, 32.0, 64.0}) pts.push_back({n, 3.0 * std::pow(n, -0.7), 0.0});
  const Slope s = log_log_slope(pts);
  EXPECT_NEAR(s.slope, -0.7, 1e-12);
  EXPECT_NEAR(std::exp(s.intercept), 3.0, 1e-10);
  EXPECT_EQ(geometric_grid(2, 4), (std::vector<std::int64_t>{4, 8, 16}));
}

TEST(ProductProbe, CoinSlopes) {
  const auto rep = product_null_recurrence_probe(coin(), coin(), {0, 0}, geometric_grid(4, 10), 100000, 13, 0);
  EXPECT_GE(rep.first.slope, -0.65);
  EXPECT_LE(rep.first.slope, -0.35);
  EXPECT_GE(rep.second.slope, -0.65);
  EXPECT_LE(rep.second.slope, -0.35);
  EXPECT_NEAR(rep.joint.slope, rep.first.slope + rep.second.slope, 3 * (rep.joint.se + rep.first.se + rep.second.se) + 0.05);
}

TEST(ProductProbe, RefusesDrift) {
  EXPECT_THROW(product_null_recurrence_probe(Measure1D::lattice({{-1, 0.4}, {1, 0.6}}), coin(), {0, 0},
                                             geometric_grid(2, 4), 100, 1),
               PreconditionError);
}

TEST(DimensionProbe, OneDimensionReturnsGrow) {
  const auto rep = dimension_transience_probe(JointMeasure::single(coin()), 100000, 20, 4, 2.0, 0.0, 0);
  EXPECT_LT(rep.escape_fraction, 0.1);
  EXPECT_GT(rep.evidence.visits[3], 2 * rep.evidence.visits[0]);
}

TEST(DimensionProbe, RejectsAsymmetricLaw) {
  EXPECT_THROW(dimension_transience_probe(JointMeasure::single(half12()), 10000, 2, 1), PreconditionError);
}

TEST(SubordinatedProbe, ExponentNearTarget) {
  const auto rep = subordinated_return_probe(0.8, geometric_grid(4, 9), 100000, 3, 0);
  EXPECT_NEAR(rep.target, 0.625, 1e-15);
  EXPECT_NEAR(rep.exponent, rep.target, 0.15);
  for (const auto& p : rep.fit.points) EXPECT_GT(p.p, 0.0);
}

TEST(SymmetricEquivalence, SimpleWalkAgrees) {
  const auto rep = symmetric_equivalence_check(coin(), 200000, 0, 32, 8, 0);
  EXPECT_TRUE(rep.agree);
  EXPECT_EQ(rep.free_walk.category, EvidenceCategory::null_evidence);
  EXPECT_THROW(symmetric_equivalence_check(half12(), 10000, 0, 2, 1), PreconditionError);
  EXPECT_THROW(symmetric_equivalence_check(Measure1D::lattice({{0, 1.0}}), 10000, 0, 2, 1), PreconditionError);
}
