#pragma once

// Increment laws in one and several dimensions.
//
// A lattice Measure1D is a dense block of exact atoms on [lo, hi] plus an
// optional analytic tail beyond either end (used for the infinite-support
// families). A continuous Measure1D is a (sampler, tail) pair on a support
// interval. JointMeasure is either a finite list of integer points or a product
// of Measure1D factors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rrw/error.hpp"
#include "rrw/rng.hpp"

namespace rrw {

inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kTailMassTolerance = 1e-9;

// Dyadic divergence test parameters: a series is declared convergent when its
// block sums over k in [2^m, 2^{m+1}) shrink by at least kDecayRatio per block
// over kDecayBlocks consecutive blocks.
inline constexpr int kDecayBlocks = 20;
inline constexpr double kDecayRatio = 0.9;
inline constexpr int kMaxDyadicLevel = 62;

enum class Verdict { holds, fails, undecided };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    default: return "undecided";
  }
}

struct BlockDecay {
  Verdict converges = Verdict::undecided;  // holds = convergent, fails = divergent
  double mean_ratio = 0;                   // geometric mean block ratio over the test window
};

// Classifies a sequence of nonnegative dyadic block sums.
inline BlockDecay test_block_decay(std::span<const double> blocks) {
  BlockDecay out;
  std::size_t n = blocks.size();
  while (n > 0 && blocks[n - 1] == 0.0) --n;
  if (n == 0) {
    out.converges = Verdict::holds;
    return out;
  }
  if (n < blocks.size()) {
    // Eventually zero: finite series.
    out.converges = Verdict::holds;
    return out;
  }
  if (n < static_cast<std::size_t>(kDecayBlocks) + 1) return out;
  const std::size_t first = n - kDecayBlocks - 1;
  bool all_decay = true;
  for (std::size_t m = first; m + 1 < n; ++m) {
    if (blocks[m] == 0.0 || blocks[m + 1] > kDecayRatio * blocks[m]) all_decay = false;
  }
  out.mean_ratio = blocks[first] > 0 ? std::pow(blocks[n - 1] / blocks[first], 1.0 / kDecayBlocks) : 1.0;
  if (all_decay) {
    out.converges = Verdict::holds;
  } else if (out.mean_ratio >= 1.0) {
    out.converges = Verdict::fails;
  }
  return out;
}

namespace detail {

inline constexpr std::int64_t kExactBlockLength = std::int64_t{1} << 16;

// Sum of f(k) for integer k in [a, b]. Long ranges use Gauss-Legendre on
// [a-1/2, b+1/2]; callers only pass smooth analytic tails there.
template <class F>
double integer_range_sum(const F& f, std::int64_t a, std::int64_t b) {
  if (b < a) return 0.0;
  if (b - a < kExactBlockLength) {
    double s = 0.0;
    for (std::int64_t k = b; k >= a; --k) s += f(static_cast<double>(k));
    return s;
  }
  using boost::math::quadrature::gauss;
  return gauss<double, 30>::integrate([&](double x) { return f(x); }, static_cast<double>(a) - 0.5,
                                      static_cast<double>(b) + 0.5);
}

inline std::int64_t pow2(int m) { return std::int64_t{1} << m; }

}  // namespace detail

enum class MomentPart { full, positive, negative };

struct Moment {
  double value = 0;          // +inf when divergent
  bool finite = true;
  Verdict decay = Verdict::holds;  // raw dyadic verdict (undecided maps to divergent)
};

// Analytic tail of a lattice law beyond its exact prefix. pmf is evaluated at
// integers outside [lo, hi] and, for quadrature, at reals in those ranges.
struct LatticeTail {
  std::function<double(double)> pmf;
  double upper_mass = 0;  // P(Y > hi)
  double lower_mass = 0;  // P(Y < lo)
  std::function<double(std::int64_t)> upper_survival;  // P(Y > k), k >= hi
  std::function<double(std::int64_t)> lower_cdf;       // P(Y <= k), k < lo
  std::function<std::int64_t(Rng&, bool upper)> sample;  // conditional on the side
  bool symmetric = false;
};

struct ContinuousLaw {
  std::function<double(double)> tail;  // x -> mu((x, inf))
  std::function<double(Rng&)> sampler;
  std::function<double(double)> density;  // optional
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

class Measure1D {
 public:
  enum class Kind { lattice, continuous };

  Measure1D() = default;

  static Measure1D lattice(const std::map<std::int64_t, double>& atoms) {
    require(!atoms.empty(), "lattice measure needs at least one atom");
    const std::int64_t lo = atoms.begin()->first;
    const std::int64_t hi = atoms.rbegin()->first;
    require(hi - lo < (std::int64_t{1} << 28), "lattice support span too large for dense storage");
    std::vector<double> pmf(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (auto [k, p] : atoms) pmf[static_cast<std::size_t>(k - lo)] += p;
    return dense(lo, std::move(pmf));
  }

  static Measure1D dense(std::int64_t lo, std::vector<double> pmf, std::optional<LatticeTail> tail = {}) {
    Measure1D m;
    m.kind_ = Kind::lattice;
    m.lo_ = lo;
    m.pmf_ = std::move(pmf);
    m.tail_ = std::move(tail);
    m.finish_lattice();
    return m;
  }

  static Measure1D continuous(ContinuousLaw law) {
    require(static_cast<bool>(law.tail) && static_cast<bool>(law.sampler),
            "continuous measure needs a tail function and a sampler");
    require(law.lo <= law.hi, "continuous support interval is empty");
    Measure1D m;
    m.kind_ = Kind::continuous;
    m.law_ = std::move(law);
    return m;
  }

  Kind kind() const { return kind_; }
  bool is_lattice() const { return kind_ == Kind::lattice; }

  const std::string& name() const { return name_; }
  Measure1D& set_name(std::string n) {
    name_ = std::move(n);
    return *this;
  }
  const std::map<std::string, double>& metadata() const { return meta_; }
  Measure1D& set_meta(const std::string& key, double v) {
    meta_[key] = v;
    return *this;
  }
  // Replaces the default sampler (prefix inversion + tail sampler).
  Measure1D& set_sampler(std::function<double(Rng&)> s) {
    custom_sampler_ = std::move(s);
    return *this;
  }

  // ---- lattice accessors -------------------------------------------------
  std::int64_t prefix_lo() const { return lo_; }
  std::int64_t prefix_hi() const { return lo_ + static_cast<std::int64_t>(pmf_.size()) - 1; }
  const std::vector<double>& prefix_pmf() const { return pmf_; }
  bool has_analytic_tail() const { return tail_.has_value(); }
  const std::optional<LatticeTail>& analytic_tail() const { return tail_; }
  double upper_tail_mass() const { return tail_ ? tail_->upper_mass : 0.0; }
  double lower_tail_mass() const { return tail_ ? tail_->lower_mass : 0.0; }

  double atom(std::int64_t k) const {
    if (!is_lattice()) return 0.0;
    if (k >= lo_ && k <= prefix_hi()) return pmf_[static_cast<std::size_t>(k - lo_)];
    if (tail_ && tail_->pmf) {
      if (k > prefix_hi() && tail_->upper_mass > 0) return tail_->pmf(static_cast<double>(k));
      if (k < lo_ && tail_->lower_mass > 0) return tail_->pmf(static_cast<double>(k));
    }
    return 0.0;
  }

  // Support points with positive mass inside the exact prefix.
  std::vector<std::int64_t> support() const {
    std::vector<std::int64_t> s;
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      if (pmf_[i] > 0) s.push_back(lo_ + static_cast<std::int64_t>(i));
    return s;
  }

  bool bounded_above() const {
    return is_lattice() ? upper_tail_mass() == 0.0 : std::isfinite(law_.hi);
  }
  bool bounded_below() const {
    return is_lattice() ? lower_tail_mass() == 0.0 : std::isfinite(law_.lo);
  }

  // Smallest / largest point of the support (finite parts only).
  double sup_support() const {
    if (!is_lattice()) return law_.hi;
    if (!bounded_above()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = pmf_.size(); i-- > 0;)
      if (pmf_[i] > 0) return static_cast<double>(lo_ + static_cast<std::int64_t>(i));
    return -std::numeric_limits<double>::infinity();
  }
  double inf_support() const {
    if (!is_lattice()) return law_.lo;
    if (!bounded_below()) return -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pmf_.size(); ++i)
      if (pmf_[i] > 0) return static_cast<double>(lo_ + static_cast<std::int64_t>(i));
    return std::numeric_limits<double>::infinity();
  }

  bool nonnegative_support() const { return inf_support() >= 0.0; }

  // gcd of the (exact-prefix) support; 0 for {0}.
  std::int64_t support_gcd() const {
    std::int64_t g = 0;
    for (auto k : support()) g = std::gcd(g, k < 0 ? -k : k);
    return g;
  }
  bool satisfies_gcd_condition() const { return is_lattice() && support_gcd() == 1; }

  // ---- continuous accessors ----------------------------------------------
  const ContinuousLaw& law() const { return law_; }

  // ---- common -------------------------------------------------------------

  // mu((x, inf))
  double tail(double x) const {
    if (!is_lattice()) return std::clamp(law_.tail(x), 0.0, 1.0);
    if (std::isnan(x)) return 0.0;
    const double fl = std::floor(x);
    const std::int64_t hi = prefix_hi();
    if (fl >= static_cast<double>(hi)) {
      if (!tail_ || tail_->upper_mass == 0.0) return 0.0;
      if (fl >= 9.2e18) return 0.0;
      return upper_survival(static_cast<std::int64_t>(fl));
    }
    if (fl < static_cast<double>(lo_)) {
      const double above_lower = 1.0 - lower_tail_mass();
      if (!tail_ || tail_->lower_mass == 0.0) return std::min(1.0, above_lower + 0.0);
      if (fl <= -9.2e18) return 1.0;
      return 1.0 - lower_cdf(static_cast<std::int64_t>(fl));
    }
    const auto i = static_cast<std::size_t>(static_cast<std::int64_t>(fl) - lo_ + 1);
    return suffix_[i] + upper_tail_mass();
  }

  double sample(Rng& rng) const {
    if (custom_sampler_) return custom_sampler_(rng);
    if (!is_lattice()) return law_.sampler(rng);
    const double u = uniform01(rng);
    if (tail_) {
      if (u < tail_->lower_mass) return static_cast<double>(tail_->sample(rng, false));
      if (u >= tail_->lower_mass + prefix_mass_) {
        if (tail_->upper_mass > 0) return static_cast<double>(tail_->sample(rng, true));
      }
    }
    const double target = (u - lower_tail_mass());
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    if (it == cum_.end()) --it;
    while (it != cum_.begin() && pmf_[static_cast<std::size_t>(it - cum_.begin())] == 0.0) --it;
    return static_cast<double>(lo_ + (it - cum_.begin()));
  }

  double prefix_mass() const { return prefix_mass_; }

 private:
  void finish_lattice() {
    for (double p : pmf_) require(p >= 0.0 && std::isfinite(p), "lattice atom probabilities must be finite and >= 0");
    cum_.resize(pmf_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      s += pmf_[i];
      cum_[i] = s;
    }
    prefix_mass_ = s;
    suffix_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t i = pmf_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + pmf_[i];
    const double total = s + upper_tail_mass() + lower_tail_mass();
    const double tol = tail_ ? kTailMassTolerance : kMassTolerance;
    require(std::abs(total - 1.0) <= tol,
            "lattice probabilities must sum to 1 (got " + std::to_string(total) + ")");
    require(s > 0 || tail_, "lattice measure has no mass");
  }

  double upper_survival(std::int64_t k) const {
    if (tail_->upper_survival) return tail_->upper_survival(k);
    // Fallback: subtract the analytic pmf from the tail mass.
    double s = tail_->upper_mass;
    for (std::int64_t j = prefix_hi() + 1; j <= k && s > 0; ++j) s -= tail_->pmf(static_cast<double>(j));
    return std::max(0.0, s);
  }
  double lower_cdf(std::int64_t k) const {
    if (tail_->lower_cdf) return tail_->lower_cdf(k);
    double s = tail_->lower_mass;
    for (std::int64_t j = lo_ - 1; j > k && s > 0; --j) s -= tail_->pmf(static_cast<double>(j));
    return std::max(0.0, s);
  }

  Kind kind_ = Kind::lattice;
  std::int64_t lo_ = 0;
  std::vector<double> pmf_{1.0};
  std::vector<double> cum_{1.0};
  std::vector<double> suffix_{1.0, 0.0};
  double prefix_mass_ = 1.0;
  std::optional<LatticeTail> tail_;
  ContinuousLaw law_;
  std::function<double(Rng&)> custom_sampler_;
  std::string name_;
  std::map<std::string, double> meta_;
};

inline Measure1D dirac(std::int64_t k) { return Measure1D::lattice({{k, 1.0}}); }

// ---------------------------------------------------------------------------
// Moments

namespace detail {

inline double part_weight(double x, double p, MomentPart part) {
  if (part == MomentPart::positive && x <= 0) return 0.0;
  if (part == MomentPart::negative && x >= 0) return 0.0;
  return std::pow(std::abs(x), p);
}

// Dyadic block sums of w(k) * pmf(k) over the analytic tail on one side.
inline std::vector<double> lattice_tail_blocks(const Measure1D& m, double p, MomentPart part, bool upper,
                                               int max_level) {
  std::vector<double> blocks;
  const auto& t = *m.analytic_tail();
  if ((upper && t.upper_mass == 0.0) || (!upper && t.lower_mass == 0.0)) return blocks;
  if (upper && part == MomentPart::negative) return blocks;
  if (!upper && part == MomentPart::positive) return blocks;
  auto f = [&](double x) { return std::pow(std::abs(x), p) * t.pmf(x); };
  for (int lvl = 0; lvl <= max_level; ++lvl) {
    const std::int64_t a = detail::pow2(lvl);
    const std::int64_t b = lvl >= 62 ? std::numeric_limits<std::int64_t>::max() : detail::pow2(lvl + 1) - 1;
    double s = 0.0;
    if (upper) {
      const std::int64_t from = std::max(a, m.prefix_hi() + 1);
      s = integer_range_sum(f, from, b);
    } else {
      // k in [-b, -a], restricted to k < lo
      const std::int64_t to = std::min(-a, m.prefix_lo() - 1);
      s = integer_range_sum(f, -b, to);
    }
    blocks.push_back(s);
  }
  return blocks;
}

}  // namespace detail

// E(|Y|^p), E((Y+)^p) or E((Y-)^p). p = 0 returns the mass of the selected part.
inline Moment moment(const Measure1D& m, double p, MomentPart part = MomentPart::full,
                     int max_level = kMaxDyadicLevel) {
  require(p >= 0.0, "moment order must be >= 0");
  Moment out;
  if (p == 0.0) {
    if (part == MomentPart::full) out.value = 1.0;
    else if (part == MomentPart::positive) out.value = m.tail(0.0);
    else out.value = m.is_lattice() ? 1.0 - m.tail(-1.0) : 1.0 - m.tail(0.0);
    return out;
  }
  if (m.is_lattice()) {
    double s = 0.0;
    const auto& pmf = m.prefix_pmf();
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      const double x = static_cast<double>(m.prefix_lo() + static_cast<std::int64_t>(i));
      if (pmf[i] > 0) s += detail::part_weight(x, p, part) * pmf[i];
    }
    if (m.has_analytic_tail()) {
      for (bool upper : {true, false}) {
        auto blocks = detail::lattice_tail_blocks(m, p, part, upper, max_level);
        if (blocks.empty()) continue;
        auto d = test_block_decay(blocks);
        if (d.converges != Verdict::holds) {
          out.value = std::numeric_limits<double>::infinity();
          out.finite = false;
          out.decay = d.converges;
          return out;
        }
        for (double b : blocks) s += b;
      }
    }
    out.value = s;
    return out;
  }

  // Continuous: E(g(Y+)) = int_0^inf p x^{p-1} mu((x,inf)) dx, likewise for Y-.
  const auto& law = m.law();
  double total = 0.0;
  for (bool upper : {true, false}) {
    if (upper && part == MomentPart::negative) continue;
    if (!upper && part == MomentPart::positive) continue;
    auto side_tail = [&](double x) { return upper ? m.tail(x) : 1.0 - m.tail(-x); };
    const double reach = upper ? law.hi : -law.lo;
    if (reach <= 0) continue;
    auto integrand = [&](double x) { return x <= 0 ? 0.0 : p * std::pow(x, p - 1.0) * side_tail(x); };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double first = std::min(1.0, reach);
    total += ts.integrate(integrand, 0.0, first);
    if (reach <= 1.0) continue;
    std::vector<double> blocks;
    for (int lvl = 0; lvl <= max_level; ++lvl) {
      const double a = std::ldexp(1.0, lvl);
      if (a >= reach) {
        blocks.push_back(0.0);
        continue;
      }
      const double b = std::min(reach, std::ldexp(1.0, lvl + 1));
      blocks.push_back(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 8, 1e-12));
    }
    auto d = test_block_decay(blocks);
    if (d.converges != Verdict::holds) {
      out.value = std::numeric_limits<double>::infinity();
      out.finite = false;
      out.decay = d.converges;
      return out;
    }
    for (double b : blocks) total += b;
  }
  out.value = total;
  return out;
}

inline double mean(const Measure1D& m) {
  auto pos = moment(m, 1.0, MomentPart::positive);
  auto neg = moment(m, 1.0, MomentPart::negative);
  require(pos.finite && neg.finite, "mean is undefined (infinite first moment)");
  return pos.value - neg.value;
}

inline double tail(const Measure1D& m, double x) { return m.tail(x); }

// Divides the support by its gcd kappa. Returns (normalized law, kappa).
inline std::pair<Measure1D, std::int64_t> gcd_normalize(const Measure1D& m) {
  require(m.is_lattice(), "gcd_normalize needs a lattice measure");
  const auto supp = m.support();
  require(!supp.empty(), "gcd_normalize: empty support");
  const std::int64_t g = m.support_gcd();
  require(g != 0, "gcd_normalize: support {0} is degenerate");
  if (g == 1) return {m, 1};
  require(!m.has_analytic_tail(), "gcd_normalize: cannot rescale a law with an analytic tail");
  std::map<std::int64_t, double> atoms;
  for (auto k : supp) atoms[k / g] = m.atom(k);
  Measure1D out = Measure1D::lattice(atoms);
  out.set_name(m.name());
  return {out, g};
}

inline bool is_symmetric(const Measure1D& m, double tol = 1e-14) {
  if (m.is_lattice()) {
    const std::int64_t reach = std::max(std::abs(m.prefix_lo()), std::abs(m.prefix_hi()));
    for (std::int64_t k = 1; k <= reach; ++k)
      if (std::abs(m.atom(k) - m.atom(-k)) > tol) return false;
    if (m.has_analytic_tail()) {
      const auto& t = *m.analytic_tail();
      if (std::abs(t.upper_mass - t.lower_mass) > tol) return false;
      if ((t.upper_mass > 0 || t.lower_mass > 0) && !t.symmetric) return false;
    }
    return true;
  }
  const auto& law = m.law();
  if (std::abs(law.hi + law.lo) > tol && (std::isfinite(law.hi) || std::isfinite(law.lo))) return false;
  const double span = std::isfinite(law.hi) ? law.hi : 100.0;
  for (int i = 1; i <= 64; ++i) {
    const double x = span * i / 64.0;
    if (std::abs(m.tail(x) + m.tail(-x) - 1.0) > 1e-12) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Joint laws

// Dimensions (r1, r2, s1, s2): r1 reflected lattice, r2 reflected continuous,
// s1 free lattice, s2 free continuous coordinates, in that order.
struct Dims {
  int r1 = 0, r2 = 0, s1 = 0, s2 = 0;
  int r() const { return r1 + r2; }
  int s() const { return s1 + s2; }
  int size() const { return r() + s(); }
  bool is_lattice(int i) const { return i < r1 || (i >= r() && i < r() + s1); }
  bool is_reflected(int i) const { return i < r(); }
  bool operator==(const Dims&) const = default;
};

using Point = std::vector<double>;

class JointMeasure {
 public:
  JointMeasure() = default;

  // Finite-support law on integer points.
  static JointMeasure finite(Dims dims, std::vector<Point> points, std::vector<double> probs) {
    require(dims.size() >= 1, "joint measure needs at least one coordinate");
    require(points.size() == probs.size() && !points.empty(), "points/probabilities mismatch");
    require(dims.r2 == 0 && dims.s2 == 0,
            "finite-support laws are integer valued; use a product law for continuous coordinates");
    // Merge duplicate points.
    std::map<Point, double> merged;
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(static_cast<int>(points[i].size()) == dims.size(), "point dimension does not match dims");
      require(probs[i] >= 0 && std::isfinite(probs[i]), "probabilities must be >= 0");
      for (double c : points[i]) require(c == std::floor(c), "lattice coordinates must be integers");
      if (probs[i] > 0) merged[points[i]] += probs[i];
      total += probs[i];
    }
    require(std::abs(total - 1.0) <= kMassTolerance, "joint probabilities must sum to 1");
    JointMeasure j;
    j.dims_ = dims;
    j.finite_ = true;
    double c = 0.0;
    for (auto& [pt, p] : merged) {
      j.points_.push_back(pt);
      j.probs_.push_back(p);
      c += p;
      j.cum_.push_back(c);
    }
    j.validate_marginals();
    return j;
  }

  static JointMeasure product(Dims dims, std::vector<Measure1D> factors) {
    require(static_cast<int>(factors.size()) == dims.size(), "product law needs one factor per coordinate");
    for (int i = 0; i < dims.size(); ++i) {
      if (dims.is_lattice(i))
        require(factors[static_cast<std::size_t>(i)].is_lattice(),
                "coordinate " + std::to_string(i + 1) + " is declared lattice but its factor is continuous");
    }
    JointMeasure j;
    j.dims_ = dims;
    j.finite_ = false;
    j.factors_ = std::move(factors);
    j.validate_marginals();
    return j;
  }

  // One-dimensional shorthand: reflected coordinate only.
  static JointMeasure single(const Measure1D& m) {
    Dims d;
    if (m.is_lattice()) d.r1 = 1;
    else d.r2 = 1;
    return product(d, {m});
  }

  const Dims& dims() const { return dims_; }
  bool is_finite() const { return finite_; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<Measure1D>& factors() const { return factors_; }

  void sample(Rng& rng, std::span<double> out) const {
    if (finite_) {
      const double u = uniform01(rng) * cum_.back();
      std::size_t i;
      if (cum_.size() <= 8) {
        i = 0;
        while (i + 1 < cum_.size() && cum_[i] <= u) ++i;
      } else {
        i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
        if (i >= cum_.size()) i = cum_.size() - 1;
      }
      std::copy(points_[i].begin(), points_[i].end(), out.begin());
      return;
    }
    for (std::size_t i = 0; i < factors_.size(); ++i) out[i] = factors_[i].sample(rng);
  }

  // Marginal of coordinate i (0-based).
  Measure1D marginal(int i) const {
    require(i >= 0 && i < dims_.size(), "marginal index out of range");
    if (!finite_) return factors_[static_cast<std::size_t>(i)];
    std::map<std::int64_t, double> atoms;
    for (std::size_t k = 0; k < points_.size(); ++k)
      atoms[static_cast<std::int64_t>(points_[k][static_cast<std::size_t>(i)])] += probs_[k];
    // Re-normalize away summation rounding.
    double s = 0.0;
    for (auto& [x, p] : atoms) s += p;
    for (auto& [x, p] : atoms) p /= s;
    return Measure1D::lattice(atoms);
  }

  // Law of the first `r` coordinates, with dims reduced accordingly.
  JointMeasure reflected_part() const {
    Dims d{dims_.r1, dims_.r2, 0, 0};
    if (!finite_)
      return product(d, std::vector<Measure1D>(factors_.begin(), factors_.begin() + dims_.r()));
    std::vector<Point> pts;
    for (const auto& p : points_) pts.emplace_back(p.begin(), p.begin() + dims_.r());
    return finite(d, pts, probs_);
  }

 private:
  void validate_marginals() {
    for (int i = 0; i < dims_.r(); ++i) {
      const Measure1D m = marginal(i);
      require(m.tail(0.0) > 0.0, "reflecting marginal " + std::to_string(i + 1) +
                                     " violates the nontriviality condition mu((0,inf)) > 0");
    }
  }

  Dims dims_;
  bool finite_ = true;
  std::vector<Point> points_;
  std::vector<double> probs_;
  std::vector<double> cum_;
  std::vector<Measure1D> factors_;
};

inline Measure1D marginal(const JointMeasure& j, int i) { return j.marginal(i); }

// True iff the law is invariant under every coordinate sign flip.
inline bool is_fully_symmetric(const JointMeasure& j, double tol = 1e-14) {
  if (!j.is_finite()) {
    for (const auto& f : j.factors())
      if (!is_symmetric(f, tol)) return false;
    return true;
  }
  const int d = j.dims().size();
  std::map<Point, double> law;
  for (std::size_t k = 0; k < j.points().size(); ++k) law[j.points()[k]] += j.probs()[k];
  for (int i = 0; i < d; ++i) {
    // Flipping each single coordinate suffices: the group is generated by them.
    std::map<Point, double> flipped;
    for (auto [pt, p] : law) {
      Point q = pt;
      q[static_cast<std::size_t>(i)] = -q[static_cast<std::size_t>(i)] + 0.0;
      flipped[q] += p;
    }
    for (auto& [pt, p] : law) {
      auto it = flipped.find(pt);
      if (it == flipped.end() || std::abs(it->second - p) > tol) return false;
    }
    if (flipped.size() != law.size()) return false;
  }
  return true;
}

}  // namespace rrw
