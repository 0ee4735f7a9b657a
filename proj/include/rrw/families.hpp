#pragma once

// Builtin increment families: continuous uniform, the discrete power tail
// P(Y > k) = (k + 2)^-beta, the ladder law c log(x + 2) / (x + 2)^(3/2), and
// the subordinated simple-walk law.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rrw/measures.hpp"
#include "rrw/subordinator.hpp"

namespace rrw {

inline constexpr std::int64_t kDefaultCutoff = std::int64_t{1} << 16;

inline Measure1D uniform(double a, double b) {
  require(a < b, "uniform(a,b) needs a < b");
  ContinuousLaw law;
  law.lo = a;
  law.hi = b;
  law.tail = [a, b](double x) { return x <= a ? 1.0 : (x >= b ? 0.0 : (b - x) / (b - a)); };
  law.density = [a, b](double x) { return (x < a || x > b) ? 0.0 : 1.0 / (b - a); };
  law.sampler = [a, b](Rng& rng) { return a + (b - a) * uniform01(rng); };
  Measure1D m = Measure1D::continuous(std::move(law));
  m.set_name("uniform").set_meta("a", a).set_meta("b", b);
  return m;
}

// P(Y > k) = (k + 2)^-beta on N_0.
inline Measure1D power_tail(double beta, std::int64_t cutoff = kDefaultCutoff) {
  require(beta > 0.0, "power_tail needs beta > 0");
  require(cutoff >= 1, "cutoff must be >= 1");
  auto surv = [beta](double k) { return std::pow(k + 2.0, -beta); };
  std::vector<double> pmf(static_cast<std::size_t>(cutoff + 1));
  for (std::int64_t k = 0; k <= cutoff; ++k) {
    const double x = static_cast<double>(k);
    pmf[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : surv(x - 1.0)) - surv(x);
  }
  LatticeTail t;
  t.upper_mass = surv(static_cast<double>(cutoff));
  // (x+1)^-beta (1 - (1 + 1/(x+1))^-beta), without cancellation for large x
  t.pmf = [beta](double x) { return -std::pow(x + 1.0, -beta) * std::expm1(-beta * std::log1p(1.0 / (x + 1.0))); };
  t.upper_survival = [surv](std::int64_t k) { return surv(static_cast<double>(k)); };
  t.sample = [beta, cutoff, surv](Rng& rng, bool) -> std::int64_t {
    // smallest k > cutoff with (k + 2)^-beta < v
    const double v = uniform_pos(rng) * surv(static_cast<double>(cutoff));
    const double x = std::pow(v, -1.0 / beta) - 2.0;
    if (!(x < 4.0e18)) return std::int64_t{1} << 62;
    std::int64_t k = std::max<std::int64_t>(cutoff + 1, static_cast<std::int64_t>(std::floor(x)));
    while (k > cutoff + 1 && surv(static_cast<double>(k - 1)) < v) --k;
    while (surv(static_cast<double>(k)) >= v) ++k;
    return k;
  };
  Measure1D m = Measure1D::dense(0, std::move(pmf), std::move(t));
  m.set_name("power_tail").set_meta("beta", beta).set_meta("cutoff", static_cast<double>(cutoff));
  return m;
}

namespace detail {

// sum_{j >= n} log(j) j^-3/2 by Euler-Maclaurin about u = n - 1/2.
inline double log_tail_sum(double n) {
  const double u = n - 0.5;
  return 2.0 * (std::log(u) + 2.0) / std::sqrt(u) - std::pow(u, -2.5) * (1.0 - 1.5 * std::log(u)) / 24.0;
}

}  // namespace detail

// Ladder law mubar(x) = c log(x + 2) / (x + 2)^(3/2) on N_0, with c fixed
// numerically so that the law has mass 1. c is stored in the metadata.
inline Measure1D wiener_hopf_log_tail(std::int64_t cutoff = kDefaultCutoff) {
  require(cutoff >= 16, "wiener_hopf_log_tail needs cutoff >= 16");
  auto f = [](double x) { return std::log(x + 2.0) * std::pow(x + 2.0, -1.5); };
  std::vector<double> w(static_cast<std::size_t>(cutoff + 1));
  for (std::int64_t k = 0; k <= cutoff; ++k) w[static_cast<std::size_t>(k)] = f(static_cast<double>(k));
  double prefix = 0.0;
  for (std::size_t i = w.size(); i-- > 0;) prefix += w[i];
  const double tail_w = detail::log_tail_sum(static_cast<double>(cutoff) + 3.0);
  const double c = 1.0 / (prefix + tail_w);
  for (double& p : w) p *= c;

  auto surv = [c](std::int64_t k) { return c * detail::log_tail_sum(static_cast<double>(k) + 3.0); };
  LatticeTail t;
  t.upper_mass = c * tail_w;
  t.pmf = [c, f](double x) { return c * f(x); };
  t.upper_survival = surv;
  t.sample = [cutoff, surv](Rng& rng, bool) -> std::int64_t {
    const double v = uniform_pos(rng) * surv(cutoff);
    std::int64_t lo = cutoff, hi = std::int64_t{1} << 62;  // surv(lo) >= v > surv(hi)
    if (surv(hi) >= v) return hi;
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      (surv(mid) < v ? hi : lo) = mid;
    }
    return hi;
  };
  Measure1D m = Measure1D::dense(0, std::move(w), std::move(t));
  m.set_name("wiener_hopf_log_tail").set_meta("c", c).set_meta("cutoff", static_cast<double>(cutoff));
  return m;
}

// Law of S_{tau(k)} - S_{tau(k-1)}: a simple walk run for a Sibuya(alpha) time.
inline Measure1D subordinated(double alpha, std::int64_t cutoff = 1024) {
  check_alpha(alpha);
  require(cutoff >= 1, "cutoff must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(2 * cutoff + 1));
  for (std::int64_t y = -cutoff; y <= cutoff; ++y)
    pmf[static_cast<std::size_t>(y + cutoff)] = subordinated_pmf(alpha, static_cast<double>(y));
  auto sib = std::make_shared<const SibuyaSampler>(alpha);
  auto draw = [sib](Rng& rng) { return static_cast<double>(subordinated_increment(*sib, rng)); };
  LatticeTail t;
  t.upper_mass = subordinated_upper_survival(alpha, static_cast<double>(cutoff));
  t.lower_mass = t.upper_mass;
  t.symmetric = true;
  t.pmf = [alpha](double x) { return subordinated_pmf(alpha, x); };
  t.upper_survival = [alpha](std::int64_t k) { return subordinated_upper_survival(alpha, static_cast<double>(k)); };
  t.lower_cdf = [alpha](std::int64_t k) { return subordinated_upper_survival(alpha, static_cast<double>(-k - 1)); };
  t.sample = [draw, cutoff](Rng& rng, bool upper) -> std::int64_t {
    while (true) {
      const auto y = static_cast<std::int64_t>(draw(rng));
      if (upper ? y > cutoff : y < -cutoff) return y;
    }
  };
  Measure1D m = Measure1D::dense(-cutoff, std::move(pmf), std::move(t));
  m.set_sampler(draw);
  m.set_name("subordinated").set_meta("alpha", alpha).set_meta("cutoff", static_cast<double>(cutoff));
  return m;
}

// Drops any analytic tail and renormalizes the exact prefix.
inline Measure1D truncate(const Measure1D& m, std::int64_t hi) {
  require(m.is_lattice(), "truncate needs a lattice measure");
  require(hi >= m.prefix_lo(), "truncate: no mass below the cutoff");
  const auto& src = m.prefix_pmf();
  const auto n = static_cast<std::size_t>(std::min(hi, m.prefix_hi()) - m.prefix_lo() + 1);
  std::vector<double> pmf(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(n));
  double s = 0.0;
  for (std::size_t i = n; i-- > 0;) s += pmf[i];
  require(s > 0, "truncate: no mass below the cutoff");
  for (double& p : pmf) p /= s;
  Measure1D out = Measure1D::dense(m.prefix_lo(), std::move(pmf));
  out.set_name(m.name());
  for (const auto& [k, v] : m.metadata()) out.set_meta(k, v);
  out.set_meta("truncated_at", static_cast<double>(hi));
  return out;
}

}  // namespace rrw
