#pragma once

// Monte Carlo diagnostics: occupation laws, return statistics, symmetrization,
// Cesaro bounds, reflected-plus-free experiments and decay-exponent probes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rrw/evidence.hpp"
#include "rrw/exact_1d.hpp"
#include "rrw/lattice.hpp"
#include "rrw/parallel.hpp"
#include "rrw/subordinator.hpp"
#include "rrw/walk.hpp"

namespace rrw {

using Law = std::map<Point, double>;

inline double total_variation(const Law& a, const Law& b) {
  double s = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      s += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      s += std::abs(ib->second);
      ++ib;
    } else {
      s += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return s / 2.0;
}

inline double max_discrepancy(const Law& a, const Law& b) {
  double m = 0.0;
  for (const auto& [x, p] : a) {
    auto it = b.find(x);
    m = std::max(m, std::abs(p - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [x, p] : b)
    if (!a.contains(x)) m = std::max(m, std::abs(p));
  return m;
}

// Histogram key: lattice coordinates as is, continuous ones floored.
inline Point cell_of(const Dims& d, std::span<const double> x) {
  Point c(x.begin(), x.end());
  for (int i = 0; i < d.size(); ++i)
    if (!d.is_lattice(i)) c[static_cast<std::size_t>(i)] = std::floor(c[static_cast<std::size_t>(i)]);
  return c;
}

// ---------------------------------------------------------------------------
// Exact invariant laws

// nu / E(Y) for a normalized nonnegative lattice law with finite support.
inline Law invariant_law_1d(const Measure1D& m) {
  require(m.is_lattice() && m.bounded_above(), "exact invariant law needs a finite lattice law");
  const InvariantMeasure1D nu = invariant_measure_nonneg(m);
  Law out;
  for (std::size_t k = 0; k < nu.values.size(); ++k)
    if (nu.values[k] > 0) out[Point{static_cast<double>(k)}] = nu.values[k] / nu.total_mass;
  return out;
}

// Stationary law of the class reached from `start` for a finite nonnegative
// lattice law with s = 0, by power iteration of the lazy chain (I + P) / 2.
inline Law stationary_law_bounded(const JointMeasure& law, const Point& start, int max_iter = 200000,
                                  double tol = 1e-15) {
  require(law.is_finite() && law.dims().s() == 0 && law.dims().r2 == 0,
          "bounded stationary law needs a finite lattice law without free coordinates");
  for (const auto& p : law.points())
    for (double c : p) require(c >= 0, "bounded stationary law needs nonnegative increments");
  std::map<Point, int> index;
  std::vector<Point> states;
  std::deque<Point> queue{start};
  index[start] = 0;
  states.push_back(start);
  std::vector<std::vector<std::pair<int, double>>> edges;
  while (!queue.empty()) {
    Point x = queue.front();
    queue.pop_front();
    const int from = index[x];
    if (static_cast<int>(edges.size()) <= from) edges.resize(static_cast<std::size_t>(from) + 1);
    for (std::size_t k = 0; k < law.points().size(); ++k) {
      Point y = reflect_step(x, law.points()[k]);
      auto [it, fresh] = index.emplace(y, static_cast<int>(states.size()));
      if (fresh) {
        states.push_back(y);
        queue.push_back(y);
      }
      edges[static_cast<std::size_t>(from)].emplace_back(it->second, law.probs()[k]);
    }
  }
  const std::size_t n = states.size();
  std::vector<double> pi(n, 0.0), next(n);
  pi[0] = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) next[i] = pi[i] / 2.0;
    for (std::size_t i = 0; i < n; ++i)
      for (auto [j, p] : edges[i]) next[static_cast<std::size_t>(j)] += pi[i] * p / 2.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff += std::abs(next[i] - pi[i]);
    pi.swap(next);
    if (diff < tol) break;
  }
  Law out;
  for (std::size_t i = 0; i < n; ++i)
    if (pi[i] > 1e-13) out[states[i]] = pi[i];
  return out;
}

// ---------------------------------------------------------------------------
// Occupation law vs exact invariant law

struct OccupationReport {
  double tv = 0.0;
  std::int64_t steps = 0, burn_in = 0;
  std::uint64_t seed = 0;
  Law empirical;
  Law exact;
};

inline Law occupation_law(const WalkSpec& spec, const Point& start, std::int64_t steps, std::int64_t burn_in,
                          Rng& rng) {
  spec.check_state(start);
  require(steps >= 1 && burn_in >= 0, "steps must be >= 1 and burn-in >= 0");
  std::map<Point, std::int64_t> counts;
  Point x = start, y(x.size());
  for (std::int64_t k = 1; k <= burn_in + steps; ++k) {
    spec.draw(rng, y);
    spec.step(x, y);
    if (k > burn_in) ++counts[cell_of(spec.dims(), x)];
  }
  Law out;
  for (const auto& [c, n] : counts) out[c] = static_cast<double>(n) / static_cast<double>(steps);
  return out;
}

// Refuses specs whose reflected marginals are not positive recurrent, as the
// occupation law then has no limit.
inline OccupationReport occupation_vs_invariant(const WalkSpec& spec, const Law& exact, std::int64_t steps,
                                                std::int64_t burn_in, std::uint64_t seed, Point start = {}) {
  require(spec.dims().s() == 0, "occupation comparison needs a reflected-only walk");
  for (int i = 0; i < spec.dims().r(); ++i) {
    const Classification c = classify_positive_recurrence(spec.law().marginal(i));
    require(c.verdict == Recurrence::positive_recurrent,
            "occupation comparison refused: marginal " + std::to_string(i + 1) + " is " + to_string(c.verdict));
  }
  double mass = 0.0;
  for (const auto& [x, p] : exact) mass += p;
  require(std::abs(mass - 1.0) < 1e-9, "exact law must be a probability measure");
  if (start.empty()) start = Point(static_cast<std::size_t>(spec.size()), 0.0);
  OccupationReport rep;
  rep.steps = steps;
  rep.burn_in = burn_in;
  rep.seed = seed;
  Rng rng(seed);
  rep.empirical = occupation_law(spec, start, steps, burn_in, rng);
  rep.exact = exact;
  rep.tv = total_variation(rep.empirical, exact);
  return rep;
}

// ---------------------------------------------------------------------------
// Return-time statistics

struct Window {
  Point lo, hi;  // closed box over the full state

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  std::string describe() const {
    std::string s;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (i) s += " x ";
      s += "[" + format_double(lo[i]) + ", " + format_double(hi[i]) + "]";
    }
    return s;
  }
  static std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
};

// Reflected coordinates in [0, w]; free lattice coordinates exactly 0;
// free continuous coordinates within 0.5 of 0.
inline Window default_window(const Dims& d, double w = 0.0) {
  Window win{Point(static_cast<std::size_t>(d.size())), Point(static_cast<std::size_t>(d.size()))};
  for (int i = 0; i < d.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (d.is_reflected(i)) {
      win.lo[k] = 0.0;
      win.hi[k] = w;
    } else if (d.is_lattice(i)) {
      win.lo[k] = win.hi[k] = 0.0;
    } else {
      win.lo[k] = -0.5;
      win.hi[k] = 0.5;
    }
  }
  return win;
}

inline constexpr std::size_t kStoredReturnsPerReplica = 100000;

struct TrajectoryStats {
  std::string target;
  std::int64_t budget = 0;
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;                      // per-replica stream seeds
  std::vector<std::vector<std::int64_t>> return_times;  // per replica, first kStoredReturnsPerReplica
  std::map<Point, std::int64_t> histogram;               // visits per window cell, all replicas
  double max_displacement = 0.0;
};

struct ReturnReport {
  TrajectoryStats stats;
  RecurrenceEvidence evidence;
};

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline ReturnReport return_time_stats(const WalkSpec& spec, const Point& start, const Window& window,
                                      std::int64_t budget, std::int64_t replicas, std::uint64_t seed,
                                      unsigned threads = 1, const EvidenceThresholds& th = {}) {
  require(budget >= kMinBudget, "budget below 1000 steps is meaningless");
  require(replicas >= 1, "replicas must be >= 1");
  spec.check_state(start);
  require(static_cast<int>(window.lo.size()) == spec.size() && window.hi.size() == window.lo.size(),
          "window dimension does not match the walk");
  struct Rep {
    VisitCounts vc;
    std::vector<std::int64_t> times;
    std::map<Point, std::int64_t> hist;
    double max_disp = 0.0;
  };
  auto reps = run_replicas<Rep>(replicas, seed, threads, [&](std::int64_t, Rng& rng) {
    Rep rep;
    Point x = start, y(x.size());
    rep.vc = count_visits(
        budget,
        [&] {
          spec.draw(rng, y);
          spec.step(x, y);
          rep.max_disp = std::max(rep.max_disp, norm2(x));
        },
        [&] { return window.contains(x); },
        [&](std::int64_t k) {
          if (rep.times.size() < kStoredReturnsPerReplica) rep.times.push_back(k);
          ++rep.hist[cell_of(spec.dims(), x)];
        },
        th.burn_in_fraction);
    return rep;
  });
  ReturnReport out;
  TrajectoryStats& st = out.stats;
  st.target = window.describe();
  st.budget = budget;
  st.replicas = replicas;
  st.seed = seed;
  std::vector<VisitCounts> vcs;
  for (std::int64_t i = 0; i < replicas; ++i) {
    auto& r = reps[static_cast<std::size_t>(i)];
    st.seeds.push_back(stream_seed(seed, static_cast<std::uint64_t>(i)));
    st.return_times.push_back(std::move(r.times));
    for (const auto& [c, n] : r.hist) st.histogram[c] += n;
    st.max_displacement = std::max(st.max_displacement, r.max_disp);
    vcs.push_back(r.vc);
  }
  out.evidence = decide_evidence(budget, vcs, th);
  return out;
}

// ---------------------------------------------------------------------------
// Symmetrization identity P[X_n^x in B] = P[x + S_n in B*]

enum class SymmetrizationMode { exact_enumeration, monte_carlo };

struct SymmetrizationReport {
  double discrepancy = 0.0;  // exact: max pointwise difference; MC: TV estimate
  double ci = 0.0;           // MC only: approximate 95% half-width of the TV noise
  Law reflected;             // law of X_n^{|x|}
  Law folded;                // law of |x + S_n|
};

inline Point abs_point(std::span<const double> x) {
  Point p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::abs(x[i]) + 0.0;
  return p;
}

// Atoms of a finite law, or of a product of finite-support lattice factors.
inline Law finite_atoms(const JointMeasure& j) {
  Law out;
  if (j.is_finite()) {
    for (std::size_t a = 0; a < j.points().size(); ++a) out[j.points()[a]] += j.probs()[a];
    return out;
  }
  out[Point{}] = 1.0;
  for (const auto& f : j.factors()) {
    require(f.is_lattice() && !f.has_analytic_tail(), "exact enumeration needs a finite-support law");
    Law next;
    for (const auto& [pt, p] : out)
      for (std::int64_t k = f.prefix_lo(); k <= f.prefix_hi(); ++k) {
        const double q = f.atom(k);
        if (q == 0.0) continue;
        Point t = pt;
        t.push_back(static_cast<double>(k));
        next[t] += p * q;
      }
    out.swap(next);
  }
  return out;
}

inline SymmetrizationReport symmetrization_check(const JointMeasure& j, const Point& x, std::int64_t n,
                                                 SymmetrizationMode mode, std::uint64_t seed = 0,
                                                 std::int64_t samples = 100000) {
  require(j.dims().s() == 0, "symmetrization concerns reflected coordinates only (s = 0)");
  require(is_fully_symmetric(j), "symmetrization check needs a fully symmetric law");
  require(static_cast<int>(x.size()) == j.dims().size(), "start dimension does not match the law");
  require(n >= 0, "horizon must be >= 0");
  SymmetrizationReport rep;
  const Point ax = abs_point(x);
  if (mode == SymmetrizationMode::exact_enumeration) {
    const Law atoms = finite_atoms(j);
    // Summing over the |supp|^n words is done one step at a time.
    Law refl{{ax, 1.0}}, free{{x, 1.0}};
    for (std::int64_t k = 0; k < n; ++k) {
      Law nr, nf;
      for (const auto& [s, p] : refl)
        for (const auto& [y, q] : atoms) nr[reflect_step(s, y)] += p * q;
      for (const auto& [s, p] : free)
        for (const auto& [y, q] : atoms) {
          Point t = s;
          for (std::size_t i = 0; i < t.size(); ++i) t[i] += y[i];
          nf[t] += p * q;
        }
      refl.swap(nr);
      free.swap(nf);
    }
    for (const auto& [s, p] : free) rep.folded[abs_point(s)] += p;
    rep.reflected = std::move(refl);
    rep.discrepancy = max_discrepancy(rep.reflected, rep.folded);
    return rep;
  }
  require(samples >= 1, "samples must be >= 1");
  Rng rng(seed);
  const Dims& d = j.dims();
  std::map<Point, std::int64_t> cr, cf;
  Point y(x.size());
  for (std::int64_t s = 0; s < samples; ++s) {
    Point a = ax, b = x;
    for (std::int64_t k = 0; k < n; ++k) {
      j.sample(rng, y);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(a[i] - y[i]);
    }
    for (std::int64_t k = 0; k < n; ++k) {
      j.sample(rng, y);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += y[i];
    }
    ++cr[cell_of(d, a)];
    ++cf[cell_of(d, abs_point(b))];
  }
  double var = 0.0;
  for (const auto& [c, k] : cr) {
    const double p = static_cast<double>(k) / static_cast<double>(samples);
    rep.reflected[c] = p;
    var += p * (1 - p);
  }
  for (const auto& [c, k] : cf) rep.folded[c] = static_cast<double>(k) / static_cast<double>(samples);
  rep.discrepancy = total_variation(rep.reflected, rep.folded);
  // Each cell difference has variance about 2 p (1 - p) / samples.
  rep.ci = 1.96 * std::sqrt(2.0 * var / static_cast<double>(samples)) / 2.0 * std::sqrt(static_cast<double>(cr.size()));
  return rep;
}

// Signed process W with sign rule E: -1 above 0, +1 below, a fair coin at 0.
// Returns the first step where |W_n| differs from X_n^{|x|}, or -1.
inline std::int64_t symmetrization_coupling_check(const JointMeasure& j, const Point& x, std::int64_t n, Rng& rng) {
  require(static_cast<int>(x.size()) == j.dims().size(), "start dimension does not match the law");
  Point w = x, refl = abs_point(x), y(x.size());
  for (std::int64_t k = 1; k <= n; ++k) {
    j.sample(rng, y);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double e = w[i] > 0 ? -1.0 : (w[i] < 0 ? 1.0 : (fair_coin(rng) ? 1.0 : -1.0));
      w[i] += e * y[i];
      refl[i] = std::abs(refl[i] - y[i]);
      if (std::abs(w[i]) != refl[i]) return k;
    }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Cesaro lower bound nu_1(A_1) + nu_2(A_2) - 1

struct CesaroReport {
  double bound = 0.0;
  double empirical = 0.0;
  double ci = 0.0;  // standard error from 50 batch means
  bool asserted = false;
  bool ok = true;
};

inline CesaroReport cesaro_lower_bound(const Law& nu1, const Law& nu2, const std::set<std::int64_t>& a1,
                                       const std::set<std::int64_t>& a2, const WalkSpec& spec, std::int64_t steps,
                                       std::uint64_t seed, Point start = {}) {
  require(spec.dims().r() == 2 && spec.dims().s() == 0, "Cesaro bound concerns two reflected coordinates");
  require(steps >= 50, "steps must be >= 50");
  auto mass = [](const Law& nu, const std::set<std::int64_t>& a) {
    double s = 0.0;
    for (const auto& [x, p] : nu)
      if (a.contains(static_cast<std::int64_t>(x[0])) && x[0] == std::floor(x[0])) s += p;
    return s;
  };
  CesaroReport rep;
  rep.bound = mass(nu1, a1) + mass(nu2, a2) - 1.0;
  rep.asserted = rep.bound > 0.0;
  if (start.empty()) start = Point(2, 0.0);
  spec.check_state(start);
  Rng rng(seed);
  constexpr int kBatches = 50;
  const std::int64_t per = steps / kBatches;
  std::vector<double> batch(kBatches, 0.0);
  Point x = start, y(2);
  std::int64_t hits = 0;
  for (std::int64_t k = 0; k < per * kBatches; ++k) {
    spec.draw(rng, y);
    spec.step(x, y);
    const bool in = x[0] == std::floor(x[0]) && x[1] == std::floor(x[1]) &&
                    a1.contains(static_cast<std::int64_t>(x[0])) && a2.contains(static_cast<std::int64_t>(x[1]));
    if (in) {
      ++hits;
      batch[static_cast<std::size_t>(k / per)] += 1.0;
    }
  }
  rep.empirical = static_cast<double>(hits) / static_cast<double>(per * kBatches);
  double ss = 0.0;
  for (double& b : batch) {
    b /= static_cast<double>(per);
    ss += (b - rep.empirical) * (b - rep.empirical);
  }
  rep.ci = std::sqrt(ss / (kBatches - 1) / kBatches);
  rep.ok = !rep.asserted || rep.empirical >= rep.bound - 3.0 * rep.ci;
  return rep;
}

// ---------------------------------------------------------------------------
// Reflected part plus free coordinates

struct WaldCheck {
  std::int64_t cycles = 0;
  double mean_cycle_length = 0.0;     // E(tau) estimate
  std::vector<double> drift;          // E(V_1) per free coordinate, from the marginal law
  std::vector<double> mean_z;         // mean free displacement per cycle
  std::vector<double> standard_error; // of mean(Z - tau E(V_1))
  std::vector<double> deviation;      // mean(Z - tau E(V_1))
  bool pass = true;
};

struct ReflectedFreeReport {
  RecurrenceEvidence evidence;
  WaldCheck wald;
  Window window;
};

// Cycles end at parity returns of the lattice reflected coordinates (every
// step when r1 = 0); the free displacement over a cycle is compared with
// tau * E(V_1).
inline WaldCheck wald_check(const WalkSpec& spec, std::int64_t cycles, std::uint64_t seed) {
  const Dims& d = spec.dims();
  require(d.s() >= 1, "Wald check needs free coordinates");
  require(cycles >= 2, "cycles must be >= 2");
  WaldCheck w;
  w.cycles = cycles;
  const int s = d.s(), r = d.r();
  for (int i = 0; i < s; ++i) w.drift.push_back(mean(spec.law().marginal(r + i)));
  std::vector<double> sum(static_cast<std::size_t>(s), 0.0), sum2(static_cast<std::size_t>(s), 0.0),
      zsum(static_cast<std::size_t>(s), 0.0);
  double tau_sum = 0.0;
  Rng rng(seed);
  Point y(static_cast<std::size_t>(d.size()));
  for (std::int64_t c = 0; c < cycles; ++c) {
    std::vector<double> z(static_cast<std::size_t>(s), 0.0);
    std::int64_t tau = 0;
    std::uint32_t p = 0;
    do {
      spec.draw(rng, y);
      ++tau;
      for (int i = 0; i < s; ++i) z[static_cast<std::size_t>(i)] += y[static_cast<std::size_t>(r + i)];
      p ^= spec.parity(y);
    } while (d.r1 > 0 && p != 0);
    tau_sum += static_cast<double>(tau);
    for (int i = 0; i < s; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double dev = z[k] - static_cast<double>(tau) * w.drift[k];
      sum[k] += dev;
      sum2[k] += dev * dev;
      zsum[k] += z[k];
    }
  }
  const double n = static_cast<double>(cycles);
  w.mean_cycle_length = tau_sum / n;
  for (int i = 0; i < s; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double m = sum[k] / n;
    const double var = (sum2[k] - n * m * m) / (n - 1);
    w.mean_z.push_back(zsum[k] / n);
    w.deviation.push_back(m);
    w.standard_error.push_back(std::sqrt(std::max(var, 0.0) / n));
    w.pass = w.pass && std::abs(m) <= 3.0 * w.standard_error.back();
  }
  return w;
}

inline ReflectedFreeReport reflected_plus_free_experiment(const WalkSpec& spec, std::int64_t budget,
                                                          double reflected_window, std::int64_t replicas,
                                                          std::uint64_t seed, std::int64_t wald_cycles = 100000,
                                                          unsigned threads = 1, const EvidenceThresholds& th = {}) {
  const Dims& d = spec.dims();
  require(d.s() == 1 || d.s() == 2, "the experiment needs s in {1, 2} free coordinates");
  for (int i = 0; i < d.r(); ++i) {
    const Classification c = classify_positive_recurrence(spec.law().marginal(i));
    require(c.verdict == Recurrence::positive_recurrent,
            "reflected marginal " + std::to_string(i + 1) + " must be positive recurrent; it is " + to_string(c.verdict));
  }
  for (int i = 0; i < d.s(); ++i)
    require(moment(spec.law().marginal(d.r() + i), static_cast<double>(d.s())).finite,
            "free marginal " + std::to_string(i + 1) + " lacks a finite moment of order s");
  ReflectedFreeReport rep;
  rep.window = default_window(d, reflected_window);
  const Point start(static_cast<std::size_t>(d.size()), 0.0);
  rep.evidence = return_time_stats(spec, start, rep.window, budget, replicas, seed, threads, th).evidence;
  rep.wald = wald_check(spec, wald_cycles, stream_seed(seed, 0xa1d));
  return rep;
}

// ---------------------------------------------------------------------------
// Regression helpers

struct RegressionPoint {
  double n = 0, p = 0, se = 0;
};

struct Slope {
  double slope = 0, intercept = 0, se = 0;
  std::vector<RegressionPoint> points;
};

// Weighted least squares of log p on log n with weights 1 / var(log p).
// Points with p = 0 are skipped; unweighted when every se is 0.
inline Slope log_log_slope(std::vector<RegressionPoint> pts) {
  Slope out;
  out.points = pts;
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  bool any_se = false;
  for (const auto& p : pts) any_se = any_se || p.se > 0;
  for (const auto& p : pts) {
    if (p.p <= 0) continue;
    const double x = std::log(p.n), y = std::log(p.p);
    const double w = any_se ? (p.se > 0 ? 1.0 / ((p.se / p.p) * (p.se / p.p)) : 0.0) : 1.0;
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++used;
  }
  require(used >= 2, "regression needs at least two points with positive probability");
  const double det = sw * sxx - sx * sx;
  out.slope = (sw * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / sw;
  out.se = std::sqrt(sw / det);
  return out;
}

// ---------------------------------------------------------------------------
// Product of two centred lattice laws

struct ProductProbeReport {
  Slope first, second, joint;
};

inline std::vector<std::int64_t> geometric_grid(int lo_exp, int hi_exp) {
  std::vector<std::int64_t> g;
  for (int e = lo_exp; e <= hi_exp; ++e) g.push_back(std::int64_t{1} << e);
  return g;
}

// Grid times may need to share the parity of the target for periodic laws;
// the caller chooses the grid.
inline ProductProbeReport product_null_recurrence_probe(const Measure1D& mu1, const Measure1D& mu2,
                                                        std::array<std::int64_t, 2> y,
                                                        const std::vector<std::int64_t>& grid, std::int64_t replicas,
                                                        std::uint64_t seed, unsigned threads = 1) {
  for (const Measure1D* m : {&mu1, &mu2}) {
    require(m->is_lattice() && m->bounded_above() && m->bounded_below(), "probe needs finite-support lattice laws");
    require(std::abs(mean(*m)) < 1e-12, "probe needs centred laws");
    require(m->support_gcd() == 1, "probe needs normalized laws (gcd of support = 1)");
  }
  require(y[0] >= 0 && y[1] >= 0, "target state must be >= 0");
  require(!grid.empty() && std::is_sorted(grid.begin(), grid.end()) && grid.front() >= 1, "grid must be increasing");
  require(replicas >= 1, "replicas must be >= 1");
  const Dims d{2, 0, 0, 0};
  const WalkSpec spec(JointMeasure::product(d, {mu1, mu2}));
  constexpr std::int64_t kChunk = 1000;
  const std::int64_t chunks = (replicas + kChunk - 1) / kChunk;
  const std::size_t g = grid.size();
  struct Counts {
    std::vector<std::int64_t> a, b, ab;
  };
  auto parts = run_replicas<Counts>(chunks, seed, threads, [&](std::int64_t c, Rng& rng) {
    Counts out{std::vector<std::int64_t>(g), std::vector<std::int64_t>(g), std::vector<std::int64_t>(g)};
    const std::int64_t m = std::min(kChunk, replicas - c * kChunk);
    Point x(2), inc(2);
    for (std::int64_t r = 0; r < m; ++r) {
      x[0] = x[1] = 0.0;
      std::int64_t t = 0;
      for (std::size_t k = 0; k < g; ++k) {
        for (; t < grid[k]; ++t) {
          spec.draw(rng, inc);
          spec.step(x, inc);
        }
        const bool h1 = x[0] == static_cast<double>(y[0]), h2 = x[1] == static_cast<double>(y[1]);
        out.a[k] += h1;
        out.b[k] += h2;
        out.ab[k] += h1 && h2;
      }
    }
    return out;
  });
  std::vector<std::int64_t> a(g), b(g), ab(g);
  for (const auto& p : parts)
    for (std::size_t k = 0; k < g; ++k) {
      a[k] += p.a[k];
      b[k] += p.b[k];
      ab[k] += p.ab[k];
    }
  auto points = [&](const std::vector<std::int64_t>& hits) {
    std::vector<RegressionPoint> pts;
    const double n = static_cast<double>(replicas);
    for (std::size_t k = 0; k < g; ++k) {
      const double p = static_cast<double>(hits[k]) / n;
      pts.push_back({static_cast<double>(grid[k]), p, std::sqrt(p * (1 - p) / n)});
    }
    return pts;
  };
  ProductProbeReport rep;
  rep.first = log_log_slope(points(a));
  rep.second = log_log_slope(points(b));
  rep.joint = log_log_slope(points(ab));
  return rep;
}

// ---------------------------------------------------------------------------
// Dimension probe for fully symmetric laws

struct DimensionProbeReport {
  double escape_fraction = 0.0;     // reached the exit radius and never re-entered the window
  double window_radius = 0.0, exit_radius = 0.0;
  std::int64_t budget = 0, replicas = 0;
  std::vector<double> min_distance;  // per replica, after burn-in
  RecurrenceEvidence evidence;
};

// Escape protocol: a replica escapes when it reaches the exit radius and
// afterwards never re-enters the window within the budget. The default exit
// radius budget^(1/4) sits halfway, on a log scale, between the window and the
// diffusive scale.
inline DimensionProbeReport dimension_transience_probe(const JointMeasure& j, std::int64_t budget,
                                                       std::int64_t replicas, std::uint64_t seed,
                                                       double window_radius = 2.0, double exit_radius = 0.0,
                                                       unsigned threads = 1, const EvidenceThresholds& th = {}) {
  require(j.dims().s() == 0, "dimension probe concerns reflected coordinates only (s = 0)");
  require(is_fully_symmetric(j), "dimension probe needs a fully symmetric law");
  for (int i = 0; i < j.dims().size(); ++i)
    require(moment(j.marginal(i), 2.0).finite, "dimension probe needs finite second moments");
  require(budget >= kMinBudget, "budget below 1000 steps is meaningless");
  require(replicas >= 1, "replicas must be >= 1");
  DimensionProbeReport rep;
  rep.budget = budget;
  rep.replicas = replicas;
  rep.window_radius = window_radius;
  rep.exit_radius = exit_radius > 0 ? exit_radius : std::pow(static_cast<double>(budget), 0.25);
  require(rep.exit_radius > window_radius, "exit radius must exceed the window radius");
  const WalkSpec spec(j);
  const auto burn = static_cast<std::int64_t>(th.burn_in_fraction * static_cast<double>(budget));
  struct Rep {
    VisitCounts vc;
    bool escaped = false;
    double min_dist = 0.0;
  };
  auto reps = run_replicas<Rep>(replicas, seed, threads, [&](std::int64_t, Rng& rng) {
    Rep out;
    Point x(static_cast<std::size_t>(j.dims().size()), 0.0), y(x.size());
    bool reached = false, reentered = false;
    double dist = 0.0;
    out.min_dist = std::numeric_limits<double>::infinity();
    std::int64_t k = 0;
    out.vc = count_visits(
        budget,
        [&] {
          spec.draw(rng, y);
          spec.step(x, y);
          dist = norm2(x);
          ++k;
          if (k > burn) out.min_dist = std::min(out.min_dist, dist);
          if (dist >= rep.exit_radius) reached = true;
        },
        [&] { return dist <= window_radius; },
        [&](std::int64_t) {
          if (reached) reentered = true;
        },
        th.burn_in_fraction);
    out.escaped = reached && !reentered;
    return out;
  });
  std::vector<VisitCounts> vcs;
  std::int64_t esc = 0;
  for (const auto& r : reps) {
    vcs.push_back(r.vc);
    esc += r.escaped;
    rep.min_distance.push_back(r.min_dist);
  }
  rep.escape_fraction = static_cast<double>(esc) / static_cast<double>(replicas);
  rep.evidence = decide_evidence(budget, vcs, th);
  return rep;
}

// ---------------------------------------------------------------------------
// Subordinated simple walk: P[S_{tau(2n)} = 0] ~ n^(-1/(2 alpha))

struct SubordinatedProbeReport {
  double alpha = 0.0;
  double target = 0.0;  // 1 / (2 alpha)
  double exponent = 0.0;  // minus the fitted slope
  double se = 0.0;
  Slope fit;
};

// Estimator per replica: P[S_t = 0] given t = tau(2n), which removes the walk
// noise entirely (Rao-Blackwellization). Sums tau(2n) over the nested grid.
inline SubordinatedProbeReport subordinated_return_probe(double alpha, const std::vector<std::int64_t>& n_grid,
                                                         std::int64_t replicas, std::uint64_t seed,
                                                         unsigned threads = 1, std::int64_t cutoff = 0) {
  check_alpha(alpha);
  require(!n_grid.empty() && n_grid.front() >= 1 && std::is_sorted(n_grid.begin(), n_grid.end()),
          "grid must be increasing and >= 1");
  require(replicas >= 2, "replicas must be >= 2");
  std::vector<std::int64_t> seg;  // number of increments added between grid points
  std::int64_t prev = 0;
  for (auto n : n_grid) {
    seg.push_back(2 * n - prev);
    prev = 2 * n;
  }
  const std::int64_t max_count = *std::max_element(seg.begin(), seg.end());
  const std::int64_t cut = cutoff > 0 ? cutoff : (alpha < 0.7 ? 65536 : 16384);
  const SibuyaSumSampler sum(alpha, max_count, cut);
  constexpr std::int64_t kChunk = 1000;
  const std::int64_t chunks = (replicas + kChunk - 1) / kChunk;
  const std::size_t g = n_grid.size();
  struct Acc {
    std::vector<double> s1, s2;
  };
  auto parts = run_replicas<Acc>(chunks, seed, threads, [&](std::int64_t c, Rng& rng) {
    Acc a{std::vector<double>(g, 0.0), std::vector<double>(g, 0.0)};
    const std::int64_t m = std::min(kChunk, replicas - c * kChunk);
    for (std::int64_t r = 0; r < m; ++r) {
      std::int64_t t = 0;
      for (std::size_t k = 0; k < g; ++k) {
        t = saturating_add(t, sum(seg[k], rng));
        const double p = simple_walk_return_probability(t);
        a.s1[k] += p;
        a.s2[k] += p * p;
      }
    }
    return a;
  });
  std::vector<double> s1(g, 0.0), s2(g, 0.0);
  for (const auto& p : parts)
    for (std::size_t k = 0; k < g; ++k) {
      s1[k] += p.s1[k];
      s2[k] += p.s2[k];
    }
  std::vector<RegressionPoint> pts;
  const double n = static_cast<double>(replicas);
  for (std::size_t k = 0; k < g; ++k) {
    const double m = s1[k] / n;
    const double var = std::max(0.0, (s2[k] - n * m * m) / (n - 1));
    pts.push_back({static_cast<double>(n_grid[k]), m, std::sqrt(var / n)});
  }
  SubordinatedProbeReport rep;
  rep.alpha = alpha;
  rep.target = 1.0 / (2.0 * alpha);
  rep.fit = log_log_slope(pts);
  rep.exponent = -rep.fit.slope;
  rep.se = rep.fit.se;
  return rep;
}

// Reflected subordinated walk X_n = |X_{n-1} - Y~_n| started at 0, window [0, w].
inline RecurrenceEvidence subordinated_reflected_evidence(double alpha, std::int64_t budget, std::int64_t replicas,
                                                          std::uint64_t seed, double window = 0.0,
                                                          unsigned threads = 1, const EvidenceThresholds& th = {}) {
  check_alpha(alpha);
  require(budget >= kMinBudget, "budget below 1000 steps is meaningless");
  const SibuyaSampler sib(alpha);
  auto reps = run_replicas<VisitCounts>(replicas, seed, threads, [&](std::int64_t, Rng& rng) {
    double x = 0.0;
    return count_visits(
        budget, [&] { x = std::abs(x - static_cast<double>(subordinated_increment(sib, rng))); },
        [&] { return x <= window; }, [](std::int64_t) {}, th.burn_in_fraction);
  });
  return decide_evidence(budget, reps, th);
}

// ---------------------------------------------------------------------------
// Free walk vs reflected walk for symmetric laws

struct SymmetricEquivalenceReport {
  RecurrenceEvidence free_walk;  // S_n in [-w, w]
  RecurrenceEvidence reflected;  // X_n in [0, w]
  bool agree = false;
};

inline SymmetricEquivalenceReport symmetric_equivalence_check(const Measure1D& m, std::int64_t budget, double window,
                                                              std::int64_t replicas, std::uint64_t seed,
                                                              unsigned threads = 1,
                                                              const EvidenceThresholds& th = {}) {
  require(is_symmetric(m), "symmetric equivalence check needs a symmetric law");
  require(m.tail(0.0) > 0.0, "degenerate law (delta_0) rejected");
  require(budget >= kMinBudget, "budget below 1000 steps is meaningless");
  SymmetricEquivalenceReport rep;
  auto run = [&](bool reflect, std::uint64_t s) {
    auto reps = run_replicas<VisitCounts>(replicas, s, threads, [&](std::int64_t, Rng& rng) {
      double x = 0.0;
      return count_visits(
          budget,
          [&] {
            const double y = m.sample(rng);
            x = reflect ? std::abs(x - y) : x + y;
          },
          [&] { return std::abs(x) <= window; }, [](std::int64_t) {}, th.burn_in_fraction);
    });
    return decide_evidence(budget, reps, th);
  };
  rep.free_walk = run(false, seed);
  rep.reflected = run(true, stream_seed(seed, 0x5e11));
  rep.agree = rep.free_walk.category == rep.reflected.category;
  return rep;
}

}  // namespace rrw
