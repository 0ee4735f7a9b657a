#pragma once

// The reflected/free process (X_n, w + Z_n): the first r coordinates follow
// X_n = |X_{n-1} - Y_n|, the last s are plain partial sums.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "rrw/measures.hpp"

namespace rrw {

class WalkSpec {
 public:
  WalkSpec() = default;

  explicit WalkSpec(JointMeasure law) : law_(std::move(law)) {
    const Dims& d = law_.dims();
    require(d.r() >= 1, "a walk needs at least one reflected coordinate (r1 + r2 >= 1)");
    require(d.s() <= 2, "only the cases s in {0, 1, 2} are supported");
    for (int i = 0; i < d.r1; ++i) {
      const Measure1D m = law_.marginal(i);
      const auto g = m.support_gcd();
      require(g == 1, "reflecting lattice marginal " + std::to_string(i + 1) + " is not normalized (gcd of support = " +
                          std::to_string(g) + "); divide the support by its gcd first");
    }
  }

  static WalkSpec one_dim(const Measure1D& m) { return WalkSpec(JointMeasure::single(m)); }

  const Dims& dims() const { return law_.dims(); }
  const JointMeasure& law() const { return law_; }
  int size() const { return dims().size(); }

  void draw(Rng& rng, std::span<double> y) const { law_.sample(rng, y); }

  // Applies one increment in place.
  void step(std::span<double> state, std::span<const double> y) const {
    const int r = dims().r();
    for (int i = 0; i < r; ++i) state[i] = std::abs(state[i] - y[i]);
    for (int i = r; i < size(); ++i) state[i] += y[i];
  }

  void check_state(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == size(), "state dimension does not match the walk");
    for (int i = 0; i < size(); ++i) {
      if (dims().is_reflected(i)) require(x[i] >= 0.0, "reflected coordinates must be >= 0");
      if (dims().is_lattice(i)) require(x[i] == std::floor(x[i]), "lattice coordinates must be integers");
    }
  }

  // Bit i set iff lattice reflecting coordinate i of x is odd.
  std::uint32_t parity(std::span<const double> x) const {
    std::uint32_t m = 0;
    for (int i = 0; i < dims().r1; ++i)
      if (std::fmod(std::abs(x[i]), 2.0) != 0.0) m |= 1u << i;
    return m;
  }

 private:
  JointMeasure law_;
};

inline Point reflect_step(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "reflect_step: dimension mismatch");
  Point out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] >= 0.0, "reflect_step: x must be componentwise >= 0");
    out[i] = std::abs(x[i] - y[i]);
  }
  return out;
}

struct Trajectory {
  Dims dims;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  std::vector<double> data;  // (steps + 1) x dims.size(), row-major

  std::span<const double> state(std::int64_t k) const {
    const auto d = static_cast<std::size_t>(dims.size());
    return {data.data() + static_cast<std::size_t>(k) * d, d};
  }
};

inline Trajectory simulate(const WalkSpec& spec, std::span<const double> start, std::int64_t n, Rng& rng) {
  spec.check_state(start);
  require(n >= 0, "simulate: n must be >= 0");
  const auto d = static_cast<std::size_t>(spec.size());
  Trajectory t;
  t.dims = spec.dims();
  t.steps = n;
  t.data.resize((static_cast<std::size_t>(n) + 1) * d);
  std::copy(start.begin(), start.end(), t.data.begin());
  std::vector<double> y(d);
  for (std::int64_t k = 1; k <= n; ++k) {
    double* cur = t.data.data() + static_cast<std::size_t>(k) * d;
    std::copy(cur - d, cur, cur);
    spec.draw(rng, y);
    spec.step({cur, d}, y);
  }
  return t;
}

inline Trajectory simulate(const WalkSpec& spec, std::span<const double> start, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory t = simulate(spec, start, n, rng);
  t.seed = seed;
  return t;
}

// f_{y_m} o ... o f_{y_1} acting coordinatewise on R_+^dim.
class ContractionWord {
 public:
  explicit ContractionWord(int dim = 1) : dim_(dim) { require(dim >= 1, "word dimension must be >= 1"); }

  int dim() const { return dim_; }
  std::size_t size() const { return ys_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return ys_.empty(); }

  std::span<const double> letter(std::size_t i) const {
    return {ys_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  ContractionWord& push(std::span<const double> y) {
    require(static_cast<int>(y.size()) >= dim_, "letter dimension too small");
    ys_.insert(ys_.end(), y.begin(), y.begin() + dim_);
    return *this;
  }
  ContractionWord& push(double y) {
    require(dim_ == 1, "scalar letter needs a 1-D word");
    ys_.push_back(y);
    return *this;
  }
  ContractionWord& append(const ContractionWord& w, int times = 1) {
    require(w.dim_ == dim_, "word dimension mismatch");
    for (int t = 0; t < times; ++t) ys_.insert(ys_.end(), w.ys_.begin(), w.ys_.end());
    return *this;
  }

  // This word first, then `next`.
  ContractionWord then(const ContractionWord& next) const {
    ContractionWord out = *this;
    out.append(next);
    return out;
  }

  void apply(std::span<double> x) const {
    const auto d = static_cast<std::size_t>(dim_);
    for (std::size_t k = 0; k < ys_.size(); k += d)
      for (std::size_t i = 0; i < d; ++i) x[i] = std::abs(x[i] - ys_[k + i]);
  }

  Point evaluate(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == dim_, "word evaluation: dimension mismatch");
    Point out(x.begin(), x.end());
    apply(out);
    return out;
  }
  double evaluate(double x) const {
    require(dim_ == 1, "scalar evaluation needs a 1-D word");
    for (double y : ys_) x = std::abs(x - y);
    return x;
  }

  // Whitespace-separated letters; coordinates of a letter joined by commas.
  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < size(); ++k) {
      if (k) os << ' ';
      auto l = letter(k);
      for (std::size_t i = 0; i < l.size(); ++i) os << (i ? "," : "") << l[i];
    }
    return os.str();
  }

  static ContractionWord parse(const std::string& text, int dim = 1) {
    ContractionWord w(dim);
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
      std::vector<double> y;
      std::stringstream ts(tok);
      std::string part;
      while (std::getline(ts, part, ',')) y.push_back(std::stod(part));
      require(static_cast<int>(y.size()) == dim, "word letter '" + tok + "' has the wrong dimension");
      w.push(y);
    }
    return w;
  }

  bool operator==(const ContractionWord&) const = default;

 private:
  int dim_;
  std::vector<double> ys_;
};

struct ParityReturns {
  std::vector<std::int64_t> times;  // tau(1) < tau(2) < ...
  std::vector<Point> states;        // full state at those times
};

// Successive times k at which every lattice reflecting coordinate of S_k is even.
inline ParityReturns parity_return_times(const WalkSpec& spec, std::span<const double> start, std::int64_t count,
                                         Rng& rng) {
  require(spec.dims().r1 >= 1, "parity returns need at least one lattice reflected coordinate (r1 >= 1)");
  spec.check_state(start);
  require(count >= 0, "count must be >= 0");
  ParityReturns out;
  Point x(start.begin(), start.end());
  Point y(x.size());
  std::uint32_t sum_parity = 0;
  for (std::int64_t k = 1; static_cast<std::int64_t>(out.times.size()) < count; ++k) {
    spec.draw(rng, y);
    spec.step(x, y);
    sum_parity ^= spec.parity(y);
    if (sum_parity == 0) {
      out.times.push_back(k);
      out.states.push_back(x);
    }
  }
  return out;
}

// Increments (reflected coordinates only) up to the first parity return.
inline ContractionWord induced_word(const WalkSpec& spec, Rng& rng) {
  const Dims& d = spec.dims();
  ContractionWord w(d.r());
  Point y(static_cast<std::size_t>(d.size()));
  std::uint32_t p = 0;
  if (d.r1 == 0) {
    spec.draw(rng, y);
    return w.push(y);
  }
  do {
    spec.draw(rng, y);
    w.push(y);
    p ^= spec.parity(y);
  } while (p != 0);
  return w;
}

// Euclidean distance between the reflected parts of two walks driven by the
// same increments, at times 0..n.
inline std::vector<double> contraction_distance_profile(const WalkSpec& spec, std::span<const double> x,
                                                        std::span<const double> y, std::int64_t n, Rng& rng) {
  const int r = spec.dims().r();
  require(static_cast<int>(x.size()) == r && static_cast<int>(y.size()) == r,
          "start points must have the reflected dimension");
  for (int i = 0; i < r; ++i) require(x[i] >= 0 && y[i] >= 0, "start points must be >= 0");
  Point a(x.begin(), x.end()), b(y.begin(), y.end());
  Point inc(static_cast<std::size_t>(spec.size()));
  auto dist = [&] {
    double s = 0;
    for (int i = 0; i < r; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(dist());
  for (std::int64_t k = 1; k <= n; ++k) {
    spec.draw(rng, inc);
    for (int i = 0; i < r; ++i) {
      a[i] = std::abs(a[i] - inc[i]);
      b[i] = std::abs(b[i] - inc[i]);
    }
    out.push_back(dist());
  }
  return out;
}

}  // namespace rrw
