#pragma once

// Sibuya law of the increments of tau_alpha (generating function
// 1 - (1 - z)^alpha) and the subordinated simple-walk increment
// T - 2 Bin(T, 1/2).

#include <algorithm>
#include <bit>
#include <complex>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <fftw3.h>

#include "rrw/error.hpp"
#include "rrw/rng.hpp"

namespace rrw {

// Draws of T are capped here; P(T > cap) is below 2^-18 for every alpha >= 0.3.
inline constexpr std::int64_t kSibuyaCap = std::int64_t{1} << 62;

inline void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
}

// P(T = k) = alpha Gamma(k - alpha) / (k! Gamma(1 - alpha)), k >= 1.
inline double subordinator_pmf(double alpha, std::int64_t k) {
  check_alpha(alpha);
  require(k >= 1, "subordinator_pmf needs k >= 1");
  using boost::math::tgamma_delta_ratio;
  return alpha / boost::math::tgamma(1.0 - alpha) *
         tgamma_delta_ratio(static_cast<double>(k) - alpha, 1.0 + alpha);
}

// P(T > k) = Gamma(k + 1 - alpha) / (Gamma(1 - alpha) Gamma(k + 1)), k >= 0.
inline double subordinator_survival(double alpha, double k) {
  if (k < 1.0) return 1.0;
  using boost::math::tgamma_delta_ratio;
  return tgamma_delta_ratio(k + 1.0 - alpha, alpha) / boost::math::tgamma(1.0 - alpha);
}

namespace detail {

// log Gamma(z - a) - log Gamma(z) by the Stirling series, accurate to
// rounding for z >= 1000.
inline double log_gamma_shift(double z, double a) {
  const double z1 = z - a;
  auto corr = [](double x) { return 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x * x); };
  return (z1 - 0.5) * std::log1p(-a / z) - a * std::log(z) + a + corr(z1) - corr(z);
}

}  // namespace detail

// Smallest k >= 1 with P(T > k) < v, for v in (0, 1].
inline std::int64_t subordinator_quantile(double alpha, double v) {
  const double g = boost::math::tgamma(1.0 - alpha);
  const double log_g = std::log(g);
  auto surv = [&](std::int64_t k) {
    if (k >= 1000) return std::exp(detail::log_gamma_shift(static_cast<double>(k) + 1.0, alpha) - log_g);
    return boost::math::tgamma_delta_ratio(k + 1.0 - alpha, alpha) / g;
  };
  if (v > 1.0 - alpha) return 1;
  if (v <= surv(kSibuyaCap)) return kSibuyaCap;
  // Gamma(x + a)/Gamma(x + b) ~ (x + (a + b - 1)/2)^(a - b)
  double guess = std::pow(v * g, -1.0 / alpha) - (1.0 - alpha) / 2.0;
  guess = std::clamp(guess, 1.0, static_cast<double>(kSibuyaCap));
  std::int64_t k = static_cast<std::int64_t>(std::ceil(guess));
  // The guess is within a step or two for large k; walk, then gallop if needed.
  std::int64_t lo, hi;  // surv(lo) >= v > surv(hi)
  if (surv(k) < v) {
    hi = k;
    std::int64_t step = 1;
    lo = k;
    while (true) {
      lo = std::max<std::int64_t>(1, hi - step);
      if (lo == hi) return hi;
      if (surv(lo) >= v) break;
      hi = lo;
      if (lo == 1) return 1;
      step *= 2;
    }
  } else {
    lo = k;
    std::int64_t step = 1;
    while (true) {
      if (lo >= kSibuyaCap - step) return kSibuyaCap;
      hi = lo + step;
      if (surv(hi) < v) break;
      lo = hi;
      step *= 2;
    }
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (surv(mid) < v ? hi : lo) = mid;
  }
  return hi;
}

// Exact Sibuya sampler: table inversion below kTable, Gamma-ratio inversion above.
class SibuyaSampler {
 public:
  static constexpr std::int64_t kTable = 1024;

  explicit SibuyaSampler(double alpha) : alpha_(alpha) {
    check_alpha(alpha);
    surv_.resize(kTable + 1);
    surv_[0] = 1.0;
    for (std::int64_t k = 1; k <= kTable; ++k) surv_[static_cast<std::size_t>(k)] = subordinator_survival(alpha, static_cast<double>(k));
  }

  double alpha() const { return alpha_; }

  std::int64_t operator()(Rng& rng) const {
    const double v = uniform_pos(rng);
    if (v <= surv_.back()) return subordinator_quantile(alpha_, v);
    // surv_ is decreasing; find the first index with surv < v.
    std::size_t lo = 0, hi = surv_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (surv_[mid] < v ? hi : lo) = mid;
    }
    return static_cast<std::int64_t>(hi);
  }

 private:
  double alpha_;
  std::vector<double> surv_;
};

inline constexpr std::int64_t kExactDisplacement = std::int64_t{1} << 52;

// T - 2 Bin(T, 1/2): the position of a simple walk after T fair +-1 steps.
inline std::int64_t simple_walk_displacement(std::int64_t t, Rng& rng) {
  if (t <= 64) {
    const std::uint64_t bits = t == 64 ? rng() : (rng() & ((std::uint64_t{1} << t) - 1));
    return t - 2 * static_cast<std::int64_t>(std::popcount(bits));
  }
  if (t <= kExactDisplacement) {
    std::binomial_distribution<std::int64_t> bin(t, 0.5);
    return t - 2 * bin(rng);
  }
  // The library binomial stalls near 2^62; at this scale the local normal
  // approximation is off by O(t^(-1/2)). Round to the parity of t.
  const double z = std::normal_distribution<double>()(rng) * std::sqrt(static_cast<double>(t));
  const std::int64_t tp = t & 1;
  const std::int64_t d = 2 * std::llround((z - static_cast<double>(tp)) / 2.0) + tp;
  return std::clamp(d, -t, t);
}

inline std::int64_t subordinated_increment(const SibuyaSampler& sib, Rng& rng) {
  return simple_walk_displacement(sib(rng), rng);
}

// Closed form of the subordinated increment law mu_alpha. With
// C = Gamma(2a+1) sin(pi a) / (pi 2^a):
//   mu(y) = C Gamma(|y| - a) / Gamma(|y| + 1 + a),  y != 0,
//   mu((y, inf)) = C Gamma(y + 1 - a) / (2a Gamma(y + 1 + a)),  y >= 0.
inline double subordinated_constant(double alpha) {
  const double pi = 3.141592653589793238462643383279502884;
  return boost::math::tgamma(2.0 * alpha + 1.0) * std::sin(pi * alpha) / (pi * std::pow(2.0, alpha));
}

inline double subordinated_pmf(double alpha, double y) {
  const double a = std::abs(y);
  if (a < 0.5) {
    const double g = boost::math::tgamma(1.0 + alpha);
    return 1.0 - boost::math::tgamma(2.0 * alpha + 1.0) / (std::pow(2.0, alpha) * g * g);
  }
  return subordinated_constant(alpha) * boost::math::tgamma_delta_ratio(a - alpha, 1.0 + 2.0 * alpha);
}

inline double subordinated_upper_survival(double alpha, double y) {
  require(y >= 0, "subordinated survival is tabulated for y >= 0");
  return subordinated_constant(alpha) / (2.0 * alpha) *
         boost::math::tgamma_delta_ratio(y + 1.0 - alpha, 2.0 * alpha);
}

// tau(0) = 0 < tau(1) < ... with Sibuya gaps. P[S_tau(m) = 0] for a fair
// simple walk S, exactly, given tau(m) = t.
inline double simple_walk_return_probability(std::int64_t t) {
  if (t % 2 != 0) return 0.0;
  const double half = static_cast<double>(t / 2);
  // C(2h, h) / 4^h = Gamma(h + 1/2) / (sqrt(pi) Gamma(h + 1))
  return boost::math::tgamma_delta_ratio(half + 0.5, 0.5) / std::sqrt(3.141592653589793238462643383279502884);
}

// a + b, saturated at the cap on tau.
inline std::int64_t saturating_add(std::int64_t a, std::int64_t b) {
  return a > kSibuyaCap - b ? kSibuyaCap : a + b;
}

// Exact sampler for tau(m) = T_1 + ... + T_m. Draws at most `cutoff` are
// aggregated through tables of the 2^i-fold convolutions of the truncated law,
// so a sum of m draws costs O(log m) table lookups plus one Gamma-ratio
// inversion per draw above the cutoff.
class SibuyaSumSampler {
 public:
  SibuyaSumSampler(double alpha, std::int64_t max_count, std::int64_t cutoff = 16384)
      : alpha_(alpha), cutoff_(cutoff) {
    check_alpha(alpha);
    require(max_count >= 1 && cutoff >= 2, "SibuyaSumSampler needs max_count >= 1 and cutoff >= 2");
    big_ = subordinator_survival(alpha, static_cast<double>(cutoff));
    std::vector<double> base(static_cast<std::size_t>(cutoff));
    for (std::int64_t k = 1; k <= cutoff; ++k)
      base[static_cast<std::size_t>(k - 1)] = subordinator_pmf(alpha, k) / (1.0 - big_);
    Table t0 = make_table(1, std::move(base));
    tables_.push_back(std::move(t0));
    while ((std::int64_t{1} << tables_.size()) <= max_count) tables_.push_back(square(tables_.back()));
  }

  double alpha() const { return alpha_; }
  std::int64_t cutoff() const { return cutoff_; }
  double large_probability() const { return big_; }

  std::int64_t operator()(std::int64_t count, Rng& rng) const {
    require(count >= 0 && count < (std::int64_t{1} << tables_.size()), "SibuyaSumSampler: count out of range");
    std::int64_t large = 0;
    if (count > 0) large = std::binomial_distribution<std::int64_t>(count, big_)(rng);
    const std::int64_t small = count - large;
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < tables_.size(); ++i)
      if ((small >> i) & 1) sum = saturating_add(sum, tables_[i].sample(rng));
    for (std::int64_t j = 0; j < large; ++j)
      sum = saturating_add(sum, subordinator_quantile(alpha_, uniform_pos(rng) * big_));
    return sum;
  }

 private:
  struct Table {
    std::int64_t offset = 0;
    std::vector<double> pmf;
    std::vector<double> cdf;
    std::vector<std::uint32_t> guide;

    std::int64_t sample(Rng& rng) const {
      const double u = uniform01(rng);
      std::size_t i = guide[static_cast<std::size_t>(u * static_cast<double>(guide.size()))];
      while (i + 1 < cdf.size() && cdf[i] <= u) ++i;
      return offset + static_cast<std::int64_t>(i);
    }
  };

  static Table make_table(std::int64_t offset, std::vector<double> pmf) {
    // Entries under 1e-14 of the peak are FFT round-off; zero them, trim the
    // ends to 1e-15 of mass, renormalize.
    constexpr double kTrim = 1e-15;
    const double peak = *std::max_element(pmf.begin(), pmf.end());
    for (double& p : pmf)
      if (p < 1e-14 * peak) p = 0.0;
    std::size_t lo = 0, hi = pmf.size();
    double acc = 0.0;
    while (lo < hi && acc + pmf[lo] < kTrim) acc += pmf[lo++];
    acc = 0.0;
    while (hi > lo && acc + pmf[hi - 1] < kTrim) acc += pmf[--hi];
    Table t;
    t.offset = offset + static_cast<std::int64_t>(lo);
    t.pmf.assign(pmf.begin() + static_cast<std::ptrdiff_t>(lo), pmf.begin() + static_cast<std::ptrdiff_t>(hi));
    double total = 0.0;
    for (double p : t.pmf) total += p;
    for (double& p : t.pmf) p /= total;
    t.cdf.resize(t.pmf.size());
    double c = 0.0;
    for (std::size_t i = 0; i < t.pmf.size(); ++i) t.cdf[i] = (c += t.pmf[i]);
    t.cdf.back() = 1.0;
    t.guide.resize(t.pmf.size());
    std::size_t i = 0;
    for (std::size_t j = 0; j < t.guide.size(); ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(t.guide.size());
      while (i + 1 < t.cdf.size() && t.cdf[i] <= u) ++i;
      t.guide[j] = static_cast<std::uint32_t>(i);
    }
    return t;
  }

  static Table square(const Table& t) {
    const std::size_t n = t.pmf.size();
    const std::size_t out = 2 * n - 1;
    std::size_t len = 1;
    while (len < out) len <<= 1;
    std::vector<double> buf(len, 0.0);
    std::copy(t.pmf.begin(), t.pmf.end(), buf.begin());
    std::vector<std::complex<double>> spec(len / 2 + 1);
    auto* cspec = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.data(), cspec, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), cspec, buf.data(), FFTW_ESTIMATE);
    fftw_execute(fwd);
    for (auto& z : spec) z = z * z / static_cast<double>(len);
    fftw_execute(inv);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    buf.resize(out);
    return make_table(2 * t.offset, std::move(buf));
  }

  double alpha_;
  std::int64_t cutoff_;
  double big_ = 0;
  std::vector<Table> tables_;
};

}  // namespace rrw
