#pragma once

// Backward iteration F_1 o F_2 o ... o F_n of the induced maps on one parity
// class. Coalescence is certified on a whole box of start points: the image
// of a coordinatewise box under f_y is again a box, computed exactly.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rrw/exact_1d.hpp"
#include "rrw/walk.hpp"

namespace rrw {

inline constexpr double kCoalescenceTolerance = 1e-9;

struct BackwardSample {
  Point value;
  bool converged = false;
  std::int64_t blocks = 0;  // induced words used
};

struct Box {
  Point lo, hi;
};

namespace detail {

// Image of a box under f_y. Lattice coordinates keep a fixed parity, so the
// box stands for {lo, lo + 2, ..., hi}.
inline void box_step(Box& b, std::span<const double> y, int r1) {
  for (std::size_t i = 0; i < b.lo.size(); ++i) {
    const double lo = b.lo[i], hi = b.hi[i], yi = y[i];
    if (yi <= lo) {
      b.lo[i] = lo - yi;
      b.hi[i] = hi - yi;
    } else if (yi >= hi) {
      b.lo[i] = yi - hi;
      b.hi[i] = yi - lo;
    } else {
      const bool lattice = static_cast<int>(i) < r1;
      b.lo[i] = lattice ? std::fmod(yi - lo, 2.0) : 0.0;
      b.hi[i] = std::max(yi - lo, hi - yi);
    }
  }
}

inline void box_apply(Box& b, const ContractionWord& w, int r1) {
  for (std::size_t k = 0; k < w.size(); ++k) box_step(b, w.letter(k), r1);
}

}  // namespace detail

// Refuses unless every reflected marginal is positive recurrent.
inline void require_backward_preconditions(const WalkSpec& spec) {
  for (int i = 0; i < spec.dims().r(); ++i) {
    const Classification c = classify_positive_recurrence(spec.law().marginal(i));
    require(c.verdict == Recurrence::positive_recurrent,
            "backward sampling needs positive recurrent reflected marginals; marginal " + std::to_string(i + 1) +
                " is " + to_string(c.verdict));
  }
}

// Default window M: the largest finite N_i, at least 2; 32 for unbounded marginals.
inline double default_backward_window(const WalkSpec& spec) {
  double m = 2.0;
  for (int i = 0; i < spec.dims().r(); ++i) {
    const Measure1D mi = spec.law().marginal(i);
    const double top = mi.inf_support() >= 0 ? mi.sup_support() : std::numeric_limits<double>::infinity();
    m = std::max(m, std::isfinite(top) ? top : 32.0);
  }
  return m;
}

// Coalescence from every start in `start_box` (reflected coordinates only).
inline BackwardSample backward_sample_box(const WalkSpec& spec, const Box& start_box, std::int64_t horizon, Rng& rng,
                                          double tol = kCoalescenceTolerance) {
  require(horizon >= 1, "horizon must be >= 1");
  const int r = spec.dims().r(), r1 = spec.dims().r1;
  require(static_cast<int>(start_box.lo.size()) == r && static_cast<int>(start_box.hi.size()) == r,
          "start box must have the reflected dimension");
  std::vector<ContractionWord> words;
  std::int64_t n = 1;
  BackwardSample out;
  while (true) {
    while (static_cast<std::int64_t>(words.size()) < n) words.push_back(induced_word(spec, rng));
    Box b = start_box;
    for (std::int64_t k = n - 1; k >= 0; --k) detail::box_apply(b, words[static_cast<std::size_t>(k)], r1);
    bool done = true;
    for (int i = 0; i < r; ++i) done = done && (b.hi[i] - b.lo[i] <= (i < r1 ? 0.0 : tol));
    out.value = b.lo;
    out.blocks = n;
    if (done) {
      out.converged = true;
      return out;
    }
    if (n >= horizon) return out;
    n = std::min(2 * n, horizon);
  }
}

// Sample approximating nu restricted to the parity class eps (bit i = parity of
// coordinate i among the lattice reflected coordinates).
inline BackwardSample backward_sample(const WalkSpec& spec, std::uint32_t eps, std::int64_t horizon, Rng& rng,
                                      double window = 0.0) {
  require(spec.dims().s() == 0, "backward sampling acts on the reflected part only (s = 0)");
  require_backward_preconditions(spec);
  const int r = spec.dims().r(), r1 = spec.dims().r1;
  require(r1 == 0 ? eps == 0 : eps < (1u << r1), "parity vector has bits outside the lattice coordinates");
  const double m = window > 0 ? window : default_backward_window(spec);
  Box b{Point(static_cast<std::size_t>(r)), Point(static_cast<std::size_t>(r))};
  for (int i = 0; i < r; ++i) {
    if (i < r1) {
      const double p = (eps >> i) & 1;
      double top = std::floor(m);
      if (std::fmod(top, 2.0) != p) top -= 1.0;
      b.lo[i] = p;
      b.hi[i] = std::max(p, top);
    } else {
      b.lo[i] = 0.0;
      b.hi[i] = m;
    }
  }
  return backward_sample_box(spec, b, horizon, rng);
}

// Same, from two explicit start points that must share their parity vector.
inline BackwardSample backward_sample(const WalkSpec& spec, std::span<const double> x, std::span<const double> y,
                                      std::int64_t horizon, Rng& rng) {
  require(spec.dims().s() == 0, "backward sampling acts on the reflected part only (s = 0)");
  spec.check_state(x);
  spec.check_state(y);
  require(spec.parity(x) == spec.parity(y), "start points lie in different parity classes");
  require_backward_preconditions(spec);
  const int r = spec.dims().r();
  Box b{Point(static_cast<std::size_t>(r)), Point(static_cast<std::size_t>(r))};
  for (int i = 0; i < r; ++i) {
    b.lo[i] = std::min(x[i], y[i]);
    b.hi[i] = std::max(x[i], y[i]);
  }
  return backward_sample_box(spec, b, horizon, rng);
}

}  // namespace rrw
