#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "rrw/families.hpp"
#include "rrw/measures.hpp"
#include "rrw/subordinator.hpp"

using namespace rrw;

namespace {

Measure1D half12() { return Measure1D::lattice({{1, 0.5}, {2, 0.5}}); }
Measure1D coin() { return Measure1D::lattice({{-1, 0.5}, {1, 0.5}}); }

}  // namespace

TEST(Measure1D, TailOfTwoPointLaw) {
  const Measure1D m = half12();
  EXPECT_DOUBLE_EQ(m.tail(1), 0.5);
  EXPECT_DOUBLE_EQ(m.tail(0), 1.0);
  EXPECT_DOUBLE_EQ(m.tail(2), 0.0);
  EXPECT_DOUBLE_EQ(m.tail(17.5), 0.0);
  EXPECT_DOUBLE_EQ(m.tail(1.5), 0.5);
}

TEST(Measure1D, TailMatchesAtomEnumeration) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::map<std::int64_t, double> atoms;
    double s = 0;
    for (int k = -5; k <= 8; ++k) {
      const double w = static_cast<double>(rng() % 5);
      atoms[k] = w;
      s += w;
    }
    if (s == 0) continue;
    for (auto& [k, p] : atoms) p /= s;
    const Measure1D m = Measure1D::lattice(atoms);
    for (int x = -7; x <= 9; ++x) {
      double direct = 0;
      for (auto [k, p] : atoms)
        if (k > x) direct += p;
      EXPECT_NEAR(m.tail(x), direct, 1e-15);
    }
  }
}

TEST(Measure1D, RejectsBadMass) {
  EXPECT_THROW(Measure1D::lattice({{1, 0.5}, {2, 0.4}}), PreconditionError);
  EXPECT_THROW(Measure1D::lattice({{1, -0.5}, {2, 1.5}}), PreconditionError);
}

TEST(Measure1D, DefaultIsDiracAtZero) {
  const Measure1D m;
  EXPECT_DOUBLE_EQ(m.atom(0), 1.0);
  EXPECT_DOUBLE_EQ(m.tail(0), 0.0);
}

TEST(Moment, TwoPointLaw) {
  EXPECT_NEAR(moment(half12(), 1.0).value, 1.5, 1e-15);
  EXPECT_NEAR(moment(half12(), 0.5).value, (1 + std::sqrt(2.0)) / 2, 1e-15);
  EXPECT_NEAR(moment(dirac(0), 0.7).value, 0.0, 0.0);
  EXPECT_NEAR(moment(dirac(0), 3.0).value, 0.0, 0.0);
}

TEST(Moment, SignedPartsGiveTheMean) {
  const Measure1D m = Measure1D::lattice({{-3, 0.2}, {-1, 0.1}, {0, 0.3}, {4, 0.4}});
  const double direct = -3 * 0.2 - 1 * 0.1 + 4 * 0.4;
  EXPECT_NEAR(moment(m, 1, MomentPart::positive).value - moment(m, 1, MomentPart::negative).value, direct, 1e-15);
  EXPECT_NEAR(mean(m), direct, 1e-15);
}

TEST(Moment, PowerTailThreshold) {
  // P(Y > k) = (k + 2)^-beta: E(Y^p) < inf iff p < beta.
  const Measure1D m = power_tail(1.5);
  EXPECT_TRUE(moment(m, 1.0).finite);
  EXPECT_TRUE(moment(m, 1.2).finite);
  EXPECT_FALSE(moment(m, 1.5).finite);
  EXPECT_FALSE(moment(m, 2.0).finite);
}

TEST(Moment, LogTailSquareRootDiverges) {
  const Measure1D m = wiener_hopf_log_tail();
  EXPECT_TRUE(moment(m, 0.25).finite);
  EXPECT_FALSE(moment(m, 0.5).finite);
}

TEST(Moment, ContinuousUniform) {
  const Measure1D u = uniform(0, 1);
  EXPECT_NEAR(moment(u, 1.0).value, 0.5, 1e-10);
  EXPECT_NEAR(moment(u, 2.0).value, 1.0 / 3, 1e-10);
  EXPECT_NEAR(moment(uniform(-1, 1), 1.0, MomentPart::negative).value, 0.25, 1e-10);
}

TEST(BlockDecay, Classification) {
  std::vector<double> geometric, flat, growing;
  for (int m = 0; m < 40; ++m) {
    geometric.push_back(std::pow(0.5, m));
    flat.push_back(1.0);
    growing.push_back(m + 1.0);
  }
  EXPECT_EQ(test_block_decay(geometric).converges, Verdict::holds);
  EXPECT_EQ(test_block_decay(flat).converges, Verdict::fails);
  EXPECT_EQ(test_block_decay(growing).converges, Verdict::fails);
  EXPECT_EQ(test_block_decay(std::vector<double>{1, 2, 0, 0}).converges, Verdict::holds);
  EXPECT_EQ(test_block_decay(std::vector<double>(10, 1.0)).converges, Verdict::undecided);
}

TEST(GcdNormalize, Examples) {
  auto [a, ka] = gcd_normalize(Measure1D::lattice({{2, 0.5}, {4, 0.5}}));
  EXPECT_EQ(ka, 2);
  EXPECT_DOUBLE_EQ(a.atom(1), 0.5);
  EXPECT_DOUBLE_EQ(a.atom(2), 0.5);
  auto [b, kb] = gcd_normalize(half12());
  EXPECT_EQ(kb, 1);
  EXPECT_DOUBLE_EQ(b.atom(2), 0.5);
  const Measure1D third = Measure1D::lattice({{-1, 1.0 / 3}, {3, 1.0 / 3}, {5, 1.0 / 3}});
  EXPECT_EQ(gcd_normalize(third).second, 1);
  EXPECT_THROW(gcd_normalize(dirac(0)), PreconditionError);
}

TEST(GcdNormalize, Idempotent) {
  auto [a, k1] = gcd_normalize(Measure1D::lattice({{-6, 0.25}, {9, 0.75}}));
  EXPECT_EQ(k1, 3);
  auto [b, k2] = gcd_normalize(a);
  EXPECT_EQ(k2, 1);
  EXPECT_DOUBLE_EQ(b.atom(-2), 0.25);
  EXPECT_DOUBLE_EQ(b.atom(3), 0.75);
}

TEST(JointMeasure, MarginalsOfPaperExamples) {
  const Dims d{2, 0, 0, 0};
  const JointMeasure a = JointMeasure::finite(d, {{2, 3}, {3, 2}}, {0.5, 0.5});
  const Measure1D a1 = a.marginal(0);
  EXPECT_DOUBLE_EQ(a1.atom(2), 0.5);
  EXPECT_DOUBLE_EQ(a1.atom(3), 0.5);
  const JointMeasure b = JointMeasure::finite(d, {{-1, 2}, {2, -1}}, {0.5, 0.5});
  const Measure1D b2 = b.marginal(1);
  EXPECT_DOUBLE_EQ(b2.atom(2), 0.5);
  EXPECT_DOUBLE_EQ(b2.atom(-1), 0.5);
  EXPECT_THROW(b.marginal(2), PreconditionError);
}

TEST(JointMeasure, ProductMarginalIsFactor) {
  const JointMeasure j = JointMeasure::product({1, 1, 0, 0}, {half12(), uniform(0, 1)});
  EXPECT_DOUBLE_EQ(j.marginal(0).atom(1), 0.5);
  EXPECT_FALSE(j.marginal(1).is_lattice());
  EXPECT_THROW(JointMeasure::product({2, 0, 0, 0}, {half12(), uniform(0, 1)}), PreconditionError);
}

TEST(JointMeasure, NontrivialityEnforced) {
  EXPECT_THROW(JointMeasure::finite({2, 0, 0, 0}, {{-1, 2}, {0, 1}}, {0.5, 0.5}), PreconditionError);
  EXPECT_THROW(JointMeasure::single(Measure1D::lattice({{-2, 0.5}, {0, 0.5}})), PreconditionError);
  // Free coordinates need no positive mass.
  EXPECT_NO_THROW(JointMeasure::finite({1, 0, 1, 0}, {{1, -1}, {2, -2}}, {0.5, 0.5}));
}

TEST(Symmetry, FullySymmetricExamples) {
  const Dims d{2, 0, 0, 0};
  EXPECT_FALSE(is_fully_symmetric(JointMeasure::finite(d, {{-1, 1}, {1, -1}}, {0.5, 0.5})));
  EXPECT_TRUE(is_fully_symmetric(JointMeasure::product(d, {coin(), coin()})));
  EXPECT_TRUE(is_fully_symmetric(JointMeasure::finite({0, 0, 2, 0}, {{0, 0}}, {1.0})));
  EXPECT_TRUE(is_fully_symmetric(
      JointMeasure::finite(d, {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}}, {0.25, 0.25, 0.25, 0.25})));
}

TEST(Symmetry, FullySymmetricImpliesSymmetricMarginals) {
  const JointMeasure j = JointMeasure::finite({2, 0, 0, 0}, {{-2, 1}, {2, 1}, {-2, -1}, {2, -1}, {0, 3}, {0, -3}},
                                              {0.2, 0.2, 0.2, 0.2, 0.1, 0.1});
  ASSERT_TRUE(is_fully_symmetric(j));
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(is_symmetric(j.marginal(i)));
}

TEST(Subordinator, PmfValues) {
  EXPECT_NEAR(subordinator_pmf(0.5, 1), 0.5, 1e-15);
  EXPECT_NEAR(subordinator_pmf(0.5, 2), 0.125, 1e-15);
  EXPECT_THROW(subordinator_pmf(1.0, 1), PreconditionError);
  EXPECT_THROW(subordinator_pmf(0.0, 1), PreconditionError);
}

TEST(Subordinator, PmfRatioRecurrence) {
  for (double a : {0.3, 0.5, 0.8})
    for (std::int64_t k = 1; k < 200; ++k)
      EXPECT_NEAR(subordinator_pmf(a, k + 1) / subordinator_pmf(a, k), (k - a) / (k + 1.0), 1e-13);
}

TEST(Subordinator, MassAndSurvival) {
  for (double a : {0.3, 0.6}) {
    double s = 0;
    for (std::int64_t k = 1000000; k >= 1; --k) s += subordinator_pmf(a, k);
    const double rest = subordinator_survival(a, 1e6);
    EXPECT_NEAR(s + rest, 1.0, 1e-10);
    EXPECT_NEAR(1.0 - s, rest, 10 * rest);
  }
}

TEST(Subordinator, AsymptoticPmf) {
  const double a = 0.6;
  const double k = 1e6;
  const double asym = a / boost::math::tgamma(1 - a) / std::pow(k, 1 + a);
  EXPECT_NEAR(subordinator_pmf(a, static_cast<std::int64_t>(k)) / asym, 1.0, 1e-5);
}

TEST(Subordinator, QuantileInvertsSurvival) {
  Rng rng(5);
  for (double a : {0.3, 0.6, 0.8})
    for (int i = 0; i < 300; ++i) {
      const double v = uniform_pos(rng) * (i % 3 == 0 ? 1e-6 : 1.0);
      const std::int64_t k = subordinator_quantile(a, v);
      if (k < kSibuyaCap) EXPECT_LT(subordinator_survival(a, static_cast<double>(k)), v);
      EXPECT_GE(subordinator_survival(a, static_cast<double>(k - 1)), v * (1 - 1e-12));
    }
}

TEST(Subordinator, SumSamplerMatchesExactConvolution) {
  const double a = 0.6;
  constexpr int kMax = 200;
  std::vector<double> p1(kMax + 1, 0.0);
  for (int k = 1; k <= kMax; ++k) p1[k] = subordinator_pmf(a, k);
  auto conv = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(kMax + 1, 0.0);
    for (int i = 0; i <= kMax; ++i)
      for (int j = 0; i + j <= kMax; ++j) z[i + j] += x[i] * y[j];
    return z;
  };
  const auto p3 = conv(conv(p1, p1), p1);
  const SibuyaSumSampler sum(a, 8, 64);
  Rng rng(17);
  constexpr int kDraws = 200000;
  std::vector<int> hist(kMax + 1, 0);
  for (int i = 0; i < kDraws; ++i) {
    const auto t = sum(3, rng);
    if (t <= kMax) ++hist[t];
  }
  for (int cut : {3, 5, 10, 40, 150}) {
    double exact = 0, emp = 0;
    for (int k = 0; k <= cut; ++k) {
      exact += p3[k];
      emp += hist[k];
    }
    emp /= kDraws;
    EXPECT_NEAR(emp, exact, 4 * std::sqrt(exact * (1 - exact) / kDraws) + 1e-12) << "cut " << cut;
  }
}

TEST(SubordinatedIncrement, ParityAndSymmetry) {
  const SibuyaSampler sib(0.5);
  Rng rng(3);
  double s = 0, s2 = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto t = sib(rng);
    const auto y = simple_walk_displacement(t, rng);
    EXPECT_EQ(((y % 2) + 2) % 2, t % 2);
    const double c = std::clamp(static_cast<double>(y), -1e3, 1e3);  // clipped to get a finite variance
    s += c;
    s2 += c * c;
  }
  const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
  EXPECT_LT(std::abs(m), 4 * se);
}

TEST(SubordinatedIncrement, HeavierTailForSmallerAlpha) {
  auto tail_frac = [](double alpha, std::uint64_t seed) {
    const SibuyaSampler sib(alpha);
    Rng rng(seed);
    int hits = 0;
    for (int i = 0; i < 100000; ++i) hits += std::abs(subordinated_increment(sib, rng)) > 100;
    return hits / 1e5;
  };
  EXPECT_GT(tail_frac(0.3, 1), tail_frac(0.9, 2));
}

TEST(SubordinatedLaw, ClosedFormMatchesSeries) {
  // mu(y) = sum_t P(T = t) P(S_t = y), evaluated directly.
  const double a = 0.5;
  for (int y : {0, 1, 2, 5}) {
    double s = 0;
    for (std::int64_t t = 1; t <= 400000; ++t) {
      if ((t + y) % 2) continue;
      const double h = (t + y) / 2.0;
      const double logp = std::lgamma(t + 1.0) - std::lgamma(h + 1) - std::lgamma(t - h + 1) - t * std::log(2.0);
      s += subordinator_pmf(a, t) * std::exp(logp);
    }
    EXPECT_NEAR(s, subordinated_pmf(a, y), 2e-5) << "y = " << y;
  }
}

TEST(SubordinatedLaw, FamilyIsNormalizedAndSymmetric) {
  const Measure1D m = subordinated(0.3);
  EXPECT_TRUE(is_symmetric(m));
  EXPECT_NEAR(m.tail(-1e9), 1.0, 1e-5);  // P(Y <= -1e9) ~ 1e-9^(2 alpha)
  EXPECT_NEAR(m.tail(0) + m.atom(0) + m.tail(0), 1.0, 1e-9);
  EXPECT_FALSE(moment(m, 0.5).finite);  // E|Y|^p < inf iff p < 2 alpha
  EXPECT_TRUE(moment(m, 0.4).finite);
}

TEST(Families, UniformAndPowerTail) {
  const Measure1D u = uniform(0, 1);
  EXPECT_DOUBLE_EQ(u.tail(0.25), 0.75);
  const Measure1D p = power_tail(2.0);
  EXPECT_NEAR(p.tail(10), std::pow(12.0, -2.0), 1e-15);
  EXPECT_NEAR(p.tail(1e6), std::pow(1e6 + 2, -2.0), 1e-20);
}

TEST(Families, LogTailNormalized) {
  const Measure1D m = wiener_hopf_log_tail();
  double c = m.metadata().at("c");
  EXPECT_NEAR(m.atom(0), c * std::log(2.0) / std::pow(2.0, 1.5), 1e-15);
  EXPECT_NEAR(m.prefix_mass() + m.upper_tail_mass(), 1.0, 1e-9);
  // The tail formula agrees with a direct sum just past the cutoff.
  const auto hi = m.prefix_hi();
  double direct = 0;
  for (std::int64_t k = hi + 1; k <= hi + 2000; ++k) direct += m.atom(k);
  EXPECT_NEAR(m.tail(static_cast<double>(hi)) - m.tail(static_cast<double>(hi + 2000)), direct, 1e-12);
}
