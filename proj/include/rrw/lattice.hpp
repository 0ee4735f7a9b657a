#pragma once

// Parity structure of the lattice reflecting coordinates, essential classes of
// the lattice reflected walk, and the constant-map witness built from the
// Euclidean algorithm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rrw/measures.hpp"
#include "rrw/walk.hpp"

namespace rrw {

// P(Y even), P(Y odd) for a lattice law, tails included.
inline std::pair<double, double> parity_masses(const Measure1D& m) {
  require(m.is_lattice(), "parity masses need a lattice law");
  double even = 0, odd = 0;
  const auto& pmf = m.prefix_pmf();
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const std::int64_t k = m.prefix_lo() + static_cast<std::int64_t>(i);
    ((k % 2 == 0) ? even : odd) += pmf[i];
  }
  if (m.has_analytic_tail()) {
    const auto& t = *m.analytic_tail();
    // Odd atoms beyond the prefix: k = 2j + 1 on each side, summed blockwise.
    auto odd_side = [&](bool upper) {
      const double mass = upper ? t.upper_mass : t.lower_mass;
      if (mass == 0.0) return 0.0;
      const std::int64_t edge = upper ? m.prefix_hi() + 1 : -(m.prefix_lo() - 1);
      std::int64_t j = edge / 2;  // 2j + 1 >= edge
      if (2 * j + 1 < edge) ++j;
      auto f = [&](double jj) { return t.pmf(upper ? 2.0 * jj + 1.0 : -(2.0 * jj + 1.0)); };
      double s = 0.0;
      std::int64_t a = j;
      for (int lvl = 0; lvl < 61 && a < (std::int64_t{1} << 61); ++lvl) {
        const std::int64_t b = std::max(a, std::int64_t{2} * a) + 1;
        s += detail::integer_range_sum(f, a, b - 1);
        a = b;
      }
      return s;
    };
    const double o = odd_side(true) + odd_side(false);
    odd += o;
    even += t.upper_mass + t.lower_mass - o;
  }
  return {even, odd};
}

struct ParityDecomposition {
  int r1 = 0;
  std::vector<std::uint32_t> generators;  // distinct parity images of the support
  std::vector<std::uint32_t> basis;       // GF(2) basis of Gamma
  std::vector<std::uint32_t> gamma;       // elements of Gamma, ascending
  // Cosets Gamma^(1), ..., Gamma^(2^d). The subgroup itself is listed last.
  std::vector<std::vector<std::uint32_t>> cosets;
  int d = 0;

  int coset_of(std::uint32_t eps) const {
    for (std::size_t j = 0; j < cosets.size(); ++j)
      if (std::binary_search(cosets[j].begin(), cosets[j].end(), eps)) return static_cast<int>(j);
    return -1;
  }
};

inline std::string parity_string(std::uint32_t eps, int r1) {
  std::string s = "(";
  for (int i = 0; i < r1; ++i) {
    if (i) s += ",";
    s += ((eps >> i) & 1) ? "1" : "0";
  }
  return s + ")";
}

namespace detail {

// Parity images of the support on the lattice reflecting coordinates.
inline std::vector<std::uint32_t> parity_images(const JointMeasure& j) {
  const int r1 = j.dims().r1;
  std::set<std::uint32_t> imgs;
  if (j.is_finite()) {
    for (const auto& p : j.points()) {
      std::uint32_t m = 0;
      for (int i = 0; i < r1; ++i)
        if (std::fmod(std::abs(p[static_cast<std::size_t>(i)]), 2.0) != 0.0) m |= 1u << i;
      imgs.insert(m);
    }
    return {imgs.begin(), imgs.end()};
  }
  imgs.insert(0);
  for (int i = 0; i < r1; ++i) {
    const auto [even, odd] = parity_masses(j.factors()[static_cast<std::size_t>(i)]);
    std::set<std::uint32_t> next;
    for (auto m : imgs) {
      if (even > 0) next.insert(m);
      if (odd > 0) next.insert(m | (1u << i));
    }
    imgs = std::move(next);
  }
  return {imgs.begin(), imgs.end()};
}

}  // namespace detail

inline ParityDecomposition parity_group(const JointMeasure& j) {
  const int r1 = j.dims().r1;
  require(r1 >= 1, "parity group needs r1 >= 1");
  require(r1 <= 20, "parity group supports r1 <= 20");
  ParityDecomposition pd;
  pd.r1 = r1;
  pd.generators = detail::parity_images(j);
  require(std::any_of(pd.generators.begin(), pd.generators.end(), [](auto g) { return g != 0; }),
          "all parity images are zero; the lattice marginals are not normalized");
  // Xor basis, reduced on leading bits.
  for (auto g : pd.generators) {
    for (auto b : pd.basis) g = std::min(g, g ^ b);
    if (g) pd.basis.push_back(g);
  }
  pd.gamma = {0};
  for (auto b : pd.basis) {
    const std::size_t n = pd.gamma.size();
    for (std::size_t i = 0; i < n; ++i) pd.gamma.push_back(pd.gamma[i] ^ b);
  }
  std::sort(pd.gamma.begin(), pd.gamma.end());
  pd.d = r1 - static_cast<int>(pd.basis.size());
  std::vector<bool> seen(std::size_t{1} << r1, false);
  for (std::uint32_t e = 0; e < (1u << r1); ++e) {
    if (seen[e]) continue;
    std::vector<std::uint32_t> c;
    for (auto g : pd.gamma) {
      c.push_back(e ^ g);
      seen[e ^ g] = true;
    }
    std::sort(c.begin(), c.end());
    pd.cosets.push_back(std::move(c));
  }
  std::rotate(pd.cosets.begin(), pd.cosets.begin() + 1, pd.cosets.end());
  return pd;
}

// Translation-invariant kernel p(e, e') = q(e xor e') on Z_2^{r1}.
struct HypercubeChain {
  int r1 = 0;
  std::vector<double> q;  // q[delta] = mu((2Z)^{r1} + delta)
  double p(std::uint32_t from, std::uint32_t to) const { return q[from ^ to]; }
};

inline HypercubeChain hypercube_chain(const JointMeasure& j) {
  const int r1 = j.dims().r1;
  require(r1 >= 1 && r1 <= 20, "hypercube chain needs 1 <= r1 <= 20");
  HypercubeChain h;
  h.r1 = r1;
  h.q.assign(std::size_t{1} << r1, 0.0);
  if (j.is_finite()) {
    for (std::size_t k = 0; k < j.points().size(); ++k) {
      std::uint32_t m = 0;
      for (int i = 0; i < r1; ++i)
        if (std::fmod(std::abs(j.points()[k][static_cast<std::size_t>(i)]), 2.0) != 0.0) m |= 1u << i;
      h.q[m] += j.probs()[k];
    }
    return h;
  }
  std::vector<std::pair<double, double>> pm;
  for (int i = 0; i < r1; ++i) pm.push_back(parity_masses(j.factors()[static_cast<std::size_t>(i)]));
  for (std::uint32_t m = 0; m < h.q.size(); ++m) {
    double p = 1.0;
    for (int i = 0; i < r1; ++i) p *= ((m >> i) & 1) ? pm[static_cast<std::size_t>(i)].second : pm[static_cast<std::size_t>(i)].first;
    h.q[m] = p;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Essential classes

using IPoint = std::vector<std::int64_t>;

struct EssentialClassReport {
  int coset = 0;  // 1-based index into ParityDecomposition::cosets
  std::int64_t window = 0;
  std::int64_t margin = 0;
  std::string certificate;  // "exact_bounded" or "windowed"
  std::vector<IPoint> members;
  std::vector<IPoint> transient;                     // window points of the coset outside the class
  std::vector<std::vector<IPoint>> transient_groups;  // their communicating classes
};

namespace detail {

// Iterative Tarjan; returns the component id of every node.
inline std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj, int& count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<char> on_stack(n, 0);
  std::vector<std::pair<int, std::size_t>> call;
  int next = 0;
  count = 0;
  for (int s = 0; s < n; ++s) {
    if (index[s] >= 0) continue;
    call.emplace_back(s, 0);
    index[s] = low[s] = next++;
    stack.push_back(s);
    on_stack[s] = 1;
    while (!call.empty()) {
      auto& [v, it] = call.back();
      if (it < adj[v].size()) {
        const int w = adj[v][it++];
        if (index[w] < 0) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
          if (w == v) break;
        }
        ++count;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

}  // namespace detail

inline std::vector<EssentialClassReport> essential_classes(const JointMeasure& law, std::int64_t window,
                                                           std::int64_t margin) {
  const Dims& dims = law.dims();
  require(dims.r2 == 0, "essential classes need purely lattice reflection (r2 = 0)");
  require(dims.r1 >= 1, "essential classes need r1 >= 1");
  require(law.is_finite(), "essential classes need a finite-support law");
  require(window >= 1 && margin >= 0, "window must be >= 1 and margin >= 0");
  const JointMeasure refl = law.reflected_part();
  const int r = dims.r1;

  std::vector<IPoint> supp;
  for (const auto& p : refl.points()) {
    IPoint y;
    for (double c : p) y.push_back(static_cast<std::int64_t>(c));
    supp.push_back(y);
  }
  // Bounded coordinates: nonnegative support with finite max N_i.
  std::vector<std::int64_t> cap(r), win(r);
  std::vector<bool> bounded(r);
  bool all_bounded = true;
  std::int64_t max_n = 0;
  for (int i = 0; i < r; ++i) {
    std::int64_t lo = supp[0][i], hi = supp[0][i], step = 0;
    for (const auto& y : supp) {
      lo = std::min(lo, y[i]);
      hi = std::max(hi, y[i]);
      step = std::max(step, std::abs(y[i]));
    }
    bounded[i] = lo >= 0;
    if (bounded[i]) {
      cap[i] = hi;
      max_n = std::max(max_n, hi);
    } else {
      all_bounded = false;
      require(margin >= step, "margin " + std::to_string(margin) + " is smaller than the largest step " +
                                  std::to_string(step) + " in coordinate " + std::to_string(i + 1) +
                                  "; the window cannot be certified");
      cap[i] = window + margin;
    }
    win[i] = std::min(window, cap[i]);
  }
  const std::string certificate = (all_bounded && window >= max_n) ? "exact_bounded" : "windowed";

  // Mixed-radix indexing of the region.
  std::vector<std::int64_t> stride(r);
  std::int64_t total = 1;
  for (int i = 0; i < r; ++i) {
    stride[i] = total;
    total *= cap[i] + 1;
  }
  require(total <= 50'000'000, "region too large");
  const int n = static_cast<int>(total);
  auto decode = [&](int idx) {
    IPoint x(r);
    for (int i = 0; i < r; ++i) x[i] = (idx / stride[i]) % (cap[i] + 1);
    return x;
  };
  auto encode = [&](const IPoint& x) {
    std::int64_t idx = 0;
    for (int i = 0; i < r; ++i) {
      if (x[i] < 0 || x[i] > cap[i]) return -1;
      idx += x[i] * stride[i];
    }
    return static_cast<int>(idx);
  };
  auto in_window = [&](const IPoint& x) {
    for (int i = 0; i < r; ++i)
      if (x[i] > win[i]) return false;
    return true;
  };

  std::vector<std::vector<int>> adj(n);
  std::vector<char> escapes(n, 0);
  for (int v = 0; v < n; ++v) {
    const IPoint x = decode(v);
    for (const auto& y : supp) {
      IPoint z(r);
      for (int i = 0; i < r; ++i) z[i] = std::abs(x[i] - y[i]);
      const int w = encode(z);
      if (w < 0) escapes[v] = 1;
      else adj[v].push_back(w);
    }
    std::sort(adj[v].begin(), adj[v].end());
    adj[v].erase(std::unique(adj[v].begin(), adj[v].end()), adj[v].end());
  }
  int ncomp = 0;
  const std::vector<int> comp = detail::strongly_connected(adj, ncomp);

  // Core classes: components meeting the window that can only be left from margin points.
  std::vector<char> meets_window(ncomp, 0), leaves_from_window(ncomp, 0);
  for (int v = 0; v < n; ++v) {
    const bool w = in_window(decode(v));
    if (w) meets_window[comp[v]] = 1;
    bool leaves = escapes[v];
    for (int u : adj[v]) leaves = leaves || comp[u] != comp[v];
    if (leaves && w) leaves_from_window[comp[v]] = 1;
  }

  const ParityDecomposition pd = parity_group(refl);
  auto parity_of = [&](const IPoint& x) {
    std::uint32_t m = 0;
    for (int i = 0; i < r; ++i)
      if (x[i] % 2) m |= 1u << i;
    return m;
  };

  auto forward_closure = [&](std::vector<int> seeds) {
    std::vector<char> mark(n, 0);
    for (int s : seeds) mark[s] = 1;
    while (!seeds.empty()) {
      const int v = seeds.back();
      seeds.pop_back();
      for (int u : adj[v])
        if (!mark[u]) {
          mark[u] = 1;
          seeds.push_back(u);
        }
    }
    return mark;
  };

  // Points with a predecessor outside the region through an unbounded coordinate.
  std::vector<int> far_seeds;
  if (!all_bounded) {
    for (int v = 0; v < n; ++v) {
      const IPoint q = decode(v);
      bool found = false;
      for (const auto& y : supp) {
        if (found) break;
        // z_i in {y_i + q_i, y_i - q_i}, z_i >= 0; enumerate sign choices.
        for (std::uint32_t s = 0; s < (1u << r) && !found; ++s) {
          bool valid = true, outside = false;
          for (int i = 0; i < r && valid; ++i) {
            const std::int64_t z = ((s >> i) & 1) ? y[i] - q[i] : y[i] + q[i];
            if (z < 0 || (((s >> i) & 1) && q[i] == 0)) valid = false;
            else if (bounded[i] && z > cap[i]) valid = false;
            else if (!bounded[i] && z > cap[i]) outside = true;
          }
          found = valid && outside;
        }
      }
      if (found) far_seeds.push_back(v);
    }
  }
  const std::vector<char> far = forward_closure(far_seeds);

  std::vector<EssentialClassReport> out;
  std::map<int, std::size_t> class_of_core;
  std::vector<int> core_ids;
  for (int c = 0; c < ncomp; ++c)
    if (meets_window[c] && !leaves_from_window[c]) core_ids.push_back(c);

  std::vector<std::vector<char>> member_marks;
  for (int c : core_ids) {
    std::vector<int> seeds;
    for (int v = 0; v < n; ++v)
      if (comp[v] == c) seeds.push_back(v);
    member_marks.push_back(forward_closure(seeds));
    EssentialClassReport rep;
    rep.coset = pd.coset_of(parity_of(decode(seeds.front()))) + 1;
    out.push_back(std::move(rep));
  }
  // Far-reachable window points join the class of their coset.
  for (int v = 0; v < n; ++v) {
    if (!far[v]) continue;
    const IPoint x = decode(v);
    if (!in_window(x)) continue;
    const int cs = pd.coset_of(parity_of(x)) + 1;
    std::size_t k = 0;
    while (k < out.size() && out[k].coset != cs) ++k;
    if (k == out.size()) {
      EssentialClassReport rep;
      rep.coset = cs;
      out.push_back(std::move(rep));
      member_marks.emplace_back(n, 0);
    }
    member_marks[k][v] = 1;
  }

  std::vector<char> any_member(n, 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& rep = out[k];
    rep.window = window;
    rep.margin = margin;
    rep.certificate = certificate;
    for (int v = 0; v < n; ++v) {
      const IPoint x = decode(v);
      if (member_marks[k][v] && in_window(x)) {
        rep.members.push_back(x);
        any_member[v] = 1;
      }
    }
  }
  // Transient window points, grouped by communicating class, attached to the class of their coset.
  std::map<int, std::vector<IPoint>> groups;
  for (int v = 0; v < n; ++v) {
    const IPoint x = decode(v);
    if (!in_window(x) || any_member[v]) continue;
    groups[comp[v]].push_back(x);
  }
  for (auto& [c, pts] : groups) {
    const int cs = pd.coset_of(parity_of(pts.front())) + 1;
    for (auto& rep : out) {
      if (rep.coset != cs) continue;
      rep.transient.insert(rep.transient.end(), pts.begin(), pts.end());
      rep.transient_groups.push_back(pts);
      break;
    }
  }
  for (auto& rep : out) {
    std::sort(rep.members.begin(), rep.members.end());
    std::sort(rep.transient.begin(), rep.transient.end());
    for (auto& g : rep.transient_groups) std::sort(g.begin(), g.end());
    std::sort(rep.transient_groups.begin(), rep.transient_groups.end());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.coset != b.coset ? a.coset < b.coset : a.members < b.members;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Constant-map witness

struct WitnessGenerator {
  std::int64_t value = 0;       // y_k > 0
  std::int64_t source = 0;      // support element it came from
  ContractionWord word{1};      // realizes f_{y_k} on N_0
};

struct WitnessRow {
  int k = 0, n = 0;
  std::int64_t odd_image = 0;   // h^k(2n - 1)
  std::int64_t even_image = 0;  // h^k(2n - 2)
  bool pass = false;
};

struct ConstantMapWitness {
  std::vector<WitnessGenerator> generators;  // y_0 < ... < y_m
  std::vector<std::int64_t> gcds;            // d_k = gcd(y_0, ..., y_k)
  std::vector<ContractionWord> g;            // g_k agrees with f_{d_k} on {0, ..., d_k}
  ContractionWord h{1};                      // h = g_m o g_m
  int range = 0;
  std::vector<WitnessRow> table;
  bool all_pass = false;
};

inline std::int64_t eval_word(const ContractionWord& w, std::int64_t x) {
  for (std::size_t i = 0; i < w.size(); ++i) x = std::abs(x - static_cast<std::int64_t>(w.letter(i)[0]));
  return x;
}

inline ConstantMapWitness constant_map_witness(const Measure1D& m, int range = 50) {
  require(m.is_lattice(), "witness needs a lattice law");
  require(!m.has_analytic_tail(), "witness needs a finite support");
  require(range >= 1, "range must be >= 1");
  const auto supp = m.support();
  require(m.support_gcd() == 1, "support gcd must be 1");
  std::int64_t b = 0;
  for (auto y : supp)
    if (y > 0 && (b == 0 || y < b)) b = y;
  require(b > 0, "support has no positive element");

  // Step 1: negative a -> a + (floor(-a/b) + 1) b via f_b^{q} o f_a.
  std::vector<WitnessGenerator> cand;
  for (auto a : supp) {
    WitnessGenerator g;
    g.source = a;
    if (a > 0) {
      g.value = a;
      g.word.push(static_cast<double>(a));
    } else if (a < 0) {
      const std::int64_t q = (-a) / b + 1;
      g.value = a + q * b;
      g.word.push(static_cast<double>(a));
      for (std::int64_t t = 0; t < q; ++t) g.word.push(static_cast<double>(b));
    } else {
      continue;
    }
    cand.push_back(g);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    return x.value != y.value ? x.value < y.value : x.word.size() < y.word.size();
  });

  ConstantMapWitness w;
  w.range = range;
  std::int64_t d = 0;
  for (const auto& c : cand) {
    const std::int64_t nd = std::gcd(d, c.value);
    if (d != 0 && nd >= d) continue;
    w.generators.push_back(c);
    w.gcds.push_back(nd);
    d = nd;
    if (d == 1) break;
  }
  require(d == 1, "generators do not reach gcd 1");

  // Step 2: Euclid on (y_k, d_{k-1}) with h_i = h_{i-1}^{q_{i-1}} o h_{i-2}.
  w.g.push_back(w.generators[0].word);
  for (std::size_t k = 1; k < w.generators.size(); ++k) {
    std::int64_t a_prev = w.generators[k].value, a_cur = w.gcds[k - 1];
    ContractionWord h_prev = w.generators[k].word, h_cur = w.g.back();
    while (a_cur != 0) {
      const std::int64_t q = a_prev / a_cur, rem = a_prev % a_cur;
      if (rem == 0) break;
      ContractionWord next = h_prev;
      next.append(h_cur, static_cast<int>(q));
      h_prev = std::move(h_cur);
      h_cur = std::move(next);
      a_prev = a_cur;
      a_cur = rem;
    }
    w.g.push_back(h_cur);
  }
  // Step 3
  w.h = w.g.back().then(w.g.back());

  w.all_pass = true;
  for (int k = 1; k <= range; ++k) {
    for (int n = 1; n <= k; ++n) {
      WitnessRow row;
      row.k = k;
      row.n = n;
      std::int64_t xo = 2 * n - 1, xe = 2 * n - 2;
      for (int t = 0; t < k; ++t) {
        xo = eval_word(w.h, xo);
        xe = eval_word(w.h, xe);
      }
      row.odd_image = xo;
      row.even_image = xe;
      row.pass = xo == 1 && xe == 0;
      w.all_pass = w.all_pass && row.pass;
      w.table.push_back(row);
    }
  }
  return w;
}

}  // namespace rrw
