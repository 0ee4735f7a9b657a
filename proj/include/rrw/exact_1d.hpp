#pragma once

// One-dimensional theory: invariant measures for nonnegative increments,
// positive/null recurrence classification, the three recurrence criteria,
// ladder laws and the Wiener-Hopf construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "rrw/measures.hpp"
#include "rrw/parallel.hpp"

namespace rrw {

struct InvariantMeasure1D {
  bool lattice = true;
  std::vector<double> values;               // lattice: nu(0), nu(1), ..., up to the exact prefix
  std::function<double(double)> at;         // lattice: nu(k) for any k >= 0; continuous: density
  double total_mass = 0;                    // E(Y); +inf when divergent
  bool mass_finite = true;
};

inline void require_nontrivial(const Measure1D& m) {
  require(m.tail(0.0) > 0.0, "the law violates the nontriviality condition mu((0,inf)) > 0");
}

inline InvariantMeasure1D invariant_measure_nonneg(const Measure1D& m) {
  require(m.inf_support() >= 0.0, "negative support present; use the ladder route for two-sided laws");
  require_nontrivial(m);
  InvariantMeasure1D nu;
  const Moment mean = moment(m, 1.0);
  nu.total_mass = mean.value;
  nu.mass_finite = mean.finite;
  if (!m.is_lattice()) {
    nu.lattice = false;
    nu.at = [m](double x) { return x < 0 ? 0.0 : m.tail(x); };
    return nu;
  }
  require(m.support_gcd() == 1, "lattice law must be normalized (gcd of support = 1)");
  nu.at = [m](double x) {
    const double k = std::floor(x);
    if (k < 0 || k != x) return 0.0;
    if (k == 0) return (1.0 - m.atom(0)) / 2.0;
    return m.atom(static_cast<std::int64_t>(k)) / 2.0 + m.tail(k);
  };
  const std::int64_t hi = std::max<std::int64_t>(0, m.prefix_hi());
  nu.values.resize(static_cast<std::size_t>(hi + 1));
  for (std::int64_t k = 0; k <= hi; ++k) nu.values[static_cast<std::size_t>(k)] = nu.at(static_cast<double>(k));
  return nu;
}

// ---------------------------------------------------------------------------

enum class Recurrence { positive_recurrent, null_recurrent, transient, undecided };

inline const char* to_string(Recurrence r) {
  switch (r) {
    case Recurrence::positive_recurrent: return "positive_recurrent";
    case Recurrence::null_recurrent: return "null_recurrent";
    case Recurrence::transient: return "transient";
    default: return "undecided";
  }
}

struct Criteria {
  Verdict cond_i = Verdict::undecided;
  Verdict cond_ii = Verdict::undecided;
  Verdict cond_iii = Verdict::undecided;
  int max_level = kMaxDyadicLevel;  // blocks [2^m, 2^{m+1}) up to this m
};

namespace detail {

inline Verdict verdict_from(const BlockDecay& d) { return d.converges; }

// Survival P(Y > x) evaluated on the integer part of x (lattice) or directly.
inline double surv_at(const Measure1D& m, double x) { return m.tail(m.is_lattice() ? std::floor(x) : x); }

// Block integrals of g(tail(x)) over [2^lvl, 2^{lvl+1}) for lvl = 0..L, plus the
// piece on [0, 1).
struct TailBlocks {
  double head = 0;
  std::vector<double> blocks;
};

template <class G>
TailBlocks tail_blocks(const Measure1D& m, int levels, const G& g) {
  TailBlocks out;
  if (m.is_lattice()) {
    auto f = [&](double x) { return g(m.tail(std::floor(x))); };
    out.head = f(0.0);
    for (int lvl = 0; lvl <= levels; ++lvl) {
      const std::int64_t a = pow2(lvl);
      const std::int64_t b = lvl >= 62 ? std::numeric_limits<std::int64_t>::max() : pow2(lvl + 1) - 1;
      if (m.bounded_above() && static_cast<double>(a) > m.sup_support()) {
        out.blocks.push_back(0.0);
        continue;
      }
      out.blocks.push_back(integer_range_sum(f, a, b));
    }
    return out;
  }
  auto f = [&](double x) { return g(m.tail(x)); };
  boost::math::quadrature::tanh_sinh<double> ts;
  out.head = ts.integrate(f, 0.0, 1.0);
  for (int lvl = 0; lvl <= levels; ++lvl) {
    const double a = std::ldexp(1.0, lvl), b = std::ldexp(1.0, lvl + 1);
    if (a >= m.sup_support()) {
      out.blocks.push_back(0.0);
      continue;
    }
    out.blocks.push_back(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-12));
  }
  return out;
}

}  // namespace detail

// Conditions (i) E sqrt(Y) < inf, (ii) int tail^2 < inf,
// (iii) tail(y) int_0^y mu((x, y]) dx -> 0, tested on dyadic blocks up to `truncation`.
inline Criteria recurrence_criteria(const Measure1D& m, double truncation = std::ldexp(1.0, kMaxDyadicLevel)) {
  require(m.inf_support() >= 0.0, "recurrence criteria need nonnegative support");
  Criteria c;
  c.max_level = std::clamp(static_cast<int>(std::floor(std::log2(std::max(truncation, 1.0)))), 0, kMaxDyadicLevel);
  const int L = c.max_level;

  const Moment half = moment(m, 0.5, MomentPart::full, L);
  c.cond_i = half.finite ? Verdict::holds : half.decay;

  auto sq = detail::tail_blocks(m, L, [](double t) { return t * t; });
  c.cond_ii = test_block_decay(sq.blocks).converges;

  // g(2^j) = S(2^j) * (int_0^{2^j} S - 2^j S(2^j))
  auto lin = detail::tail_blocks(m, L, [](double t) { return t; });
  std::vector<double> g;
  double cum = lin.head;  // int_0^1 S
  for (int j = 1; j <= L; ++j) {
    cum += lin.blocks[static_cast<std::size_t>(j - 1)];
    const double y = std::ldexp(1.0, j);
    const double s = detail::surv_at(m, y);
    g.push_back(std::max(0.0, s * (cum - y * s)));
  }
  c.cond_iii = test_block_decay(g).converges;

  // (i) => (ii) => (iii)
  if (c.cond_i == Verdict::holds) c.cond_ii = Verdict::holds;
  if (c.cond_ii == Verdict::holds) c.cond_iii = Verdict::holds;
  return c;
}

struct Classification {
  Recurrence verdict = Recurrence::undecided;
  std::string reason;
  double e_plus = 0, e_minus = 0;
};

inline bool centred(double e_plus, double e_minus) {
  return std::abs(e_plus - e_minus) <= 1e-12 * std::max(1.0, std::max(e_plus, e_minus));
}

inline Classification classify_positive_recurrence(const Measure1D& m) {
  require_nontrivial(m);
  Classification c;
  const Moment plus = moment(m, 1.0, MomentPart::positive);
  const Moment minus = moment(m, 1.0, MomentPart::negative);
  c.e_plus = plus.value;
  c.e_minus = minus.value;

  if (m.inf_support() >= 0.0) {
    if (plus.finite) {
      c.verdict = Recurrence::positive_recurrent;
      c.reason = "nonnegative increments with E(Y) < inf";
    } else {
      const Criteria cr = recurrence_criteria(m);
      if (cr.cond_iii == Verdict::holds) {
        c.verdict = Recurrence::null_recurrent;
        c.reason = "E(Y) = inf and a recurrence criterion holds";
      } else {
        c.reason = "E(Y) = inf and no recurrence criterion could be confirmed";
      }
    }
    return c;
  }

  if (!minus.finite && plus.finite) {
    c.verdict = Recurrence::transient;
    c.reason = "E(Y-) = inf > E(Y+): S_n -> -inf, finitely many reflections";
    return c;
  }
  if (!minus.finite) {
    c.reason = "E(Y-) = E(Y+) = inf";
    return c;
  }
  if (!plus.finite || minus.value < plus.value) {
    if (centred(plus.value, minus.value)) {
      // falls through to the centred case below
    } else if (plus.finite) {
      c.verdict = Recurrence::positive_recurrent;
      c.reason = "E(Y-) < E(Y+) < inf";
      return c;
    } else {
      const Moment root = moment(m, 0.5, MomentPart::positive);
      if (root.finite) {
        c.verdict = Recurrence::null_recurrent;
        c.reason = "E(Y-) < E(Y+) = inf with E(sqrt(Y+)) < inf";
      } else {
        c.reason = "E(Y+) = inf and E(sqrt(Y+)) is not finite";
      }
      return c;
    }
  }
  if (centred(plus.value, minus.value)) {
    const Moment m32 = moment(m, 1.5, MomentPart::positive);
    if (m32.finite) {
      c.verdict = Recurrence::null_recurrent;
      c.reason = "centred with E((Y+)^(3/2)) < inf";
    } else {
      c.reason = "centred but E((Y+)^(3/2)) is not finite";
    }
    return c;
  }
  c.verdict = Recurrence::transient;
  c.reason = "E(Y-) > E(Y+): S_n -> -inf, finitely many reflections, X_n -> inf";
  return c;
}

// ---------------------------------------------------------------------------
// Ladders

struct LadderDecomposition {
  Measure1D mbar;
  std::string method;  // "exact_skip_free" or "monte_carlo"
  double q = 1.0;      // P(S ever reaches -1), skip-free case
  std::int64_t samples = 0;
  std::int64_t capped = 0;
  std::int64_t lo = 0;                  // first support point of mbar
  std::vector<double> standard_errors;  // per atom, Monte Carlo only
};

// Smallest root in [0, 1] of q = sum_y mu(y) q^(y+1) for a law on {-1, 0, 1, ...}.
inline double skip_free_descent_probability(const Measure1D& m) {
  const double mu_m1 = m.atom(-1);
  if (mu_m1 == 0.0) return 0.0;
  const double plus = moment(m, 1.0, MomentPart::positive).value;
  const double minus = moment(m, 1.0, MomentPart::negative).value;
  require(plus >= minus || centred(plus, minus), "negative drift: S_n -> -inf, no ladder decomposition");
  if (centred(plus, minus)) return 1.0;
  auto h = [&](double q) {
    double s = -q;
    double qp = 1.0;  // q^(y+1), starting at y = -1
    for (std::int64_t y = -1; y <= m.prefix_hi(); ++y) {
      s += m.atom(y) * qp;
      qp *= q;
      if (qp < 1e-300) break;
    }
    return s;
  };
  double hi = 0.5;
  while (h(hi) >= 0.0) hi = (1.0 + hi) / 2.0;
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(h, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return (r.first + r.second) / 2.0;
}

// Weak ascending ladder law of a skip-free-down law (min support >= -1):
// mbar(x) = sum_{y >= x} q^(y - x) mu(y).
inline LadderDecomposition ladder_exact_skip_free(const Measure1D& m) {
  require(m.is_lattice(), "skip-free ladder needs a lattice law");
  require(m.inf_support() >= -1.0, "support below -1: use ladder_monte_carlo");
  require(!m.has_analytic_tail(), "skip-free ladder needs a finite prefix; truncate the law first");
  require_nontrivial(m);
  LadderDecomposition out;
  out.method = "exact_skip_free";
  out.q = skip_free_descent_probability(m);
  const std::int64_t hi = std::max<std::int64_t>(0, m.prefix_hi());
  std::vector<double> bar(static_cast<std::size_t>(hi + 1));
  double acc = 0.0;
  for (std::int64_t x = hi; x >= 0; --x) {
    acc = m.atom(x) + out.q * acc;
    bar[static_cast<std::size_t>(x)] = acc;
  }
  double s = 0.0;
  for (double p : bar) s += p;
  // Removes the rounding drift of the centred case.
  if (std::abs(s - 1.0) <= 1e-10)
    for (double& p : bar) p /= s;
  out.mbar = Measure1D::dense(0, std::move(bar));
  return out;
}

inline constexpr std::int64_t kLadderStepCap = 10'000'000;

// Empirical law of the first weak ascending ladder height S_{l(1)}.
inline LadderDecomposition ladder_monte_carlo(const Measure1D& m, std::int64_t samples, std::uint64_t seed,
                                              std::int64_t step_cap = kLadderStepCap, unsigned threads = 0) {
  require(m.is_lattice(), "ladder_monte_carlo is implemented for lattice laws");
  require(samples >= 1, "samples must be >= 1");
  require_nontrivial(m);
  {
    const Moment plus = moment(m, 1.0, MomentPart::positive);
    const Moment minus = moment(m, 1.0, MomentPart::negative);
    if (plus.finite && minus.finite)
      require(plus.value >= minus.value || centred(plus.value, minus.value),
              "negative drift: S_n -> -inf, ladder epochs are not finite");
  }
  struct Draw {
    std::int64_t height = 0;
    bool capped = false;
  };
  auto draws = run_replicas<Draw>(samples, seed, threads, [&](std::int64_t, Rng& rng) {
    Draw d;
    double s = 0.0;
    for (std::int64_t k = 0; k < step_cap; ++k) {
      s += m.sample(rng);
      if (s >= 0.0) {
        d.height = static_cast<std::int64_t>(s);
        return d;
      }
    }
    d.capped = true;
    return d;
  });
  std::map<std::int64_t, std::int64_t> hist;
  LadderDecomposition out;
  out.method = "monte_carlo";
  out.samples = samples;
  for (const auto& d : draws) {
    if (d.capped) ++out.capped;
    else ++hist[d.height];
  }
  require(static_cast<double>(out.capped) <= 0.01 * static_cast<double>(samples),
          "more than 1% of ladder excursions hit the step cap (" + std::to_string(out.capped) +
              "); the walk likely drifts to -inf");
  const double n = static_cast<double>(samples - out.capped);
  std::map<std::int64_t, double> atoms;
  for (auto [h, c] : hist) atoms[h] = static_cast<double>(c) / n;
  out.mbar = Measure1D::lattice(atoms);
  out.lo = atoms.begin()->first;
  for (std::int64_t x = out.mbar.prefix_lo(); x <= out.mbar.prefix_hi(); ++x) {
    const double p = out.mbar.atom(x);
    out.standard_errors.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return out;
}

// mu(-1) = 1 - mbar(0), mu(x) = mbar(x) - mbar(x + 1) for x >= 0.
inline Measure1D wiener_hopf_construct(const Measure1D& mbar) {
  require(mbar.is_lattice() && mbar.inf_support() >= 0.0, "ladder law must live on N_0");
  require(!mbar.has_analytic_tail(), "truncate the ladder law before the construction");
  const std::int64_t hi = mbar.prefix_hi();
  for (std::int64_t x = 0; x <= hi; ++x)
    require(mbar.atom(x) >= mbar.atom(x + 1),
            "ladder law must be nonincreasing (fails at x = " + std::to_string(x) + ")");
  std::vector<double> pmf(static_cast<std::size_t>(hi + 2));
  pmf[0] = 1.0 - mbar.atom(0);
  for (std::int64_t x = 0; x <= hi; ++x) pmf[static_cast<std::size_t>(x + 1)] = mbar.atom(x) - mbar.atom(x + 1);
  require(pmf[0] > 0.0, "mbar = delta_0 gives the degenerate law delta_0");
  Measure1D mu = Measure1D::dense(-1, std::move(pmf));
  mu.set_name("wiener_hopf(" + mbar.name() + ")");
  for (const auto& [k, v] : mbar.metadata()) mu.set_meta(k, v);
  return mu;
}

// ---------------------------------------------------------------------------

struct MassEstimate {
  double value = 0;
  double standard_error = 0;
  std::int64_t samples = 0;
  std::int64_t capped = 0;
};

// nu(B) = int E(sum_{k < l(1)} 1_B(x - S_k)) dnubar(x) for B = [b_lo, b_hi].
inline MassEstimate lifted_invariant_measure(const Measure1D& mu, const InvariantMeasure1D& nubar, double b_lo,
                                             double b_hi, std::int64_t samples, std::uint64_t seed,
                                             unsigned threads = 0, std::int64_t step_cap = kLadderStepCap) {
  require(nubar.lattice && !nubar.values.empty(), "embedded invariant law missing");
  require(nubar.mass_finite, "embedded invariant measure has infinite mass");
  const Classification cls = classify_positive_recurrence(mu);
  require(cls.verdict == Recurrence::positive_recurrent && cls.e_minus < cls.e_plus,
          "lifted invariant measure needs the positive recurrent case E(Y-) < E(Y+) < inf");
  std::vector<double> cum;
  double total = 0.0;
  for (double v : nubar.values) cum.push_back(total += v);
  require(total > 0, "embedded invariant law is zero");
  struct Draw {
    double count = 0;
    bool capped = false;
  };
  auto in_b = [&](double x) { return x >= b_lo && x <= b_hi ? 1.0 : 0.0; };
  auto draws = run_replicas<Draw>(samples, seed, threads, [&](std::int64_t, Rng& rng) {
    const double u = uniform01(rng) * total;
    const auto x = static_cast<double>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    Draw d;
    d.count = in_b(x);
    double s = 0.0;
    for (std::int64_t k = 1; k < step_cap; ++k) {
      s += mu.sample(rng);
      if (s >= 0.0) return d;
      d.count += in_b(x - s);
    }
    d.capped = true;
    return d;
  });
  MassEstimate e;
  e.samples = samples;
  double s1 = 0, s2 = 0;
  for (const auto& d : draws) {
    s1 += d.count;
    s2 += d.count * d.count;
    e.capped += d.capped;
  }
  const double n = static_cast<double>(samples);
  const double mean = s1 / n;
  const double var = std::max(0.0, s2 / n - mean * mean);
  e.value = total * mean;
  e.standard_error = total * std::sqrt(var / n);
  return e;
}

// L = [0, N] if supp is in R_+ with N = sup supp < inf, else R_+.
struct Attractor1D {
  bool lattice = true;
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();
  std::string describe() const {
    const std::string top = std::isfinite(hi) ? std::to_string(static_cast<long long>(hi)) : "inf";
    if (lattice) return std::isfinite(hi) ? "{0,...," + top + "}" : "N_0";
    std::ostringstream os;
    os << "[0," << hi << "]";
    return std::isfinite(hi) ? os.str() : "[0,inf)";
  }
};

inline Attractor1D attractor_1d(const Measure1D& m) {
  require_nontrivial(m);
  Attractor1D a;
  a.lattice = m.is_lattice();
  if (m.inf_support() >= 0.0 && m.bounded_above()) a.hi = m.sup_support();
  return a;
}

}  // namespace rrw
