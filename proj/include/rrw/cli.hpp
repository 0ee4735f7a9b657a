#pragma once

// Subcommand implementations behind the `rrw` binary. Each command reads a
// JSON config, writes its artifacts plus metadata.json into the output
// directory, and prints a short summary.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrw/backward.hpp"
#include "rrw/config.hpp"
#include "rrw/diagnostics.hpp"
#include "rrw/exact_1d.hpp"
#include "rrw/lattice.hpp"

namespace rrw {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

class OutputError : public std::runtime_error {
 public:
  explicit OutputError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline json point_json(const Point& p) {
  json a = json::array();
  for (double c : p) a.push_back(c);
  return a;
}

inline json ipoint_json(const IPoint& p) {
  json a = json::array();
  for (auto c : p) a.push_back(c);
  return a;
}

inline json evidence_json(const RecurrenceEvidence& e) {
  json j;
  j["category"] = to_string(e.category);
  j["replicas"] = e.replicas;
  j["budgets"] = e.budgets;
  j["visits"] = e.visits;
  j["mean_return_time"] = json::array();
  j["mean_return_se"] = json::array();
  for (int i = 0; i < kCheckpoints; ++i) {
    j["mean_return_time"].push_back(std::isfinite(e.mean_return_time[i]) ? json(e.mean_return_time[i]) : json(nullptr));
    j["mean_return_se"].push_back(std::isfinite(e.mean_return_se[i]) ? json(e.mean_return_se[i]) : json(nullptr));
  }
  j["drift"] = std::isfinite(e.drift) ? json(e.drift) : json(nullptr);
  j["growth_per_doubling"] = std::isfinite(e.growth) ? json(e.growth) : json(nullptr);
  j["count_growth_slope"] = e.count_growth_slope;
  j["escape_fraction"] = e.escape_fraction;
  return j;
}

inline json thresholds_json(const EvidenceThresholds& t) {
  return {{"positive_max_drift", t.positive_max_drift},
          {"null_min_growth", t.null_min_growth},
          {"transient_fraction", t.transient_fraction},
          {"burn_in_fraction", t.burn_in_fraction},
          {"min_budget", kMinBudget}};
}

struct CliContext {
  std::string command;
  json cfg;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out;
  std::ostream& stdout_;
  std::vector<std::string> artifacts;
  EvidenceThresholds thresholds;

  Params params() { return Params(cfg[command]); }

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw OutputError("cannot create output directory '" + out.string() + "': " + ec.message());
    const auto path = out / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw OutputError("cannot write '" + path.string() + "'");
    f << content;
    f.close();
    if (!f) throw OutputError("failed writing '" + path.string() + "'");
    if (std::find(artifacts.begin(), artifacts.end(), name) == artifacts.end()) artifacts.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

inline EvidenceThresholds thresholds_from(json& cfg) {
  Params p(cfg["thresholds"]);
  EvidenceThresholds t;
  t.positive_max_drift = p.get("positive_max_drift", t.positive_max_drift);
  t.null_min_growth = p.get("null_min_growth", t.null_min_growth);
  t.transient_fraction = p.get("transient_fraction", t.transient_fraction);
  t.burn_in_fraction = p.get("burn_in_fraction", t.burn_in_fraction);
  return t;
}

// ---------------------------------------------------------------------------

inline void cmd_simulate(CliContext& c) {
  const WalkSpec spec(law_from_config(c.cfg));
  Params p = c.params();
  const auto steps = p.get<std::int64_t>("steps", 1000);
  const auto start = p.get<std::vector<double>>("start", std::vector<double>(static_cast<std::size_t>(spec.size()), 0.0));
  const Trajectory t = simulate(spec, start, steps, c.seed);
  std::string csv = "k";
  for (int i = 0; i < spec.size(); ++i) csv += ",x" + std::to_string(i + 1);
  csv += "\n";
  for (std::int64_t k = 0; k <= t.steps; ++k) {
    csv += std::to_string(k);
    for (double v : t.state(k)) csv += "," + fmt(v);
    csv += "\n";
  }
  c.write("trajectory.csv", csv);
  c.stdout_ << "simulated " << steps << " steps; final state";
  for (double v : t.state(steps)) c.stdout_ << ' ' << fmt(v);
  c.stdout_ << "\n";
}

inline void cmd_invariant(CliContext& c) {
  const Measure1D m = measure_from_config(c.cfg);
  const InvariantMeasure1D nu = invariant_measure_nonneg(m);
  Params p = c.params();
  std::string csv;
  if (nu.lattice) {
    const auto max_x = p.get<std::int64_t>("max_x", m.bounded_above() ? static_cast<std::int64_t>(m.sup_support()) : 100);
    csv = "x,mass\n";
    for (std::int64_t x = 0; x <= max_x; ++x) csv += std::to_string(x) + "," + fmt(nu.at(static_cast<double>(x))) + "\n";
  } else {
    const double hi = p.get("max_x", std::isfinite(m.sup_support()) ? m.sup_support() : 10.0);
    const auto points = p.get<std::int64_t>("grid_points", 101);
    require(points >= 2, "grid_points must be >= 2");
    csv = "x,density\n";
    for (std::int64_t k = 0; k < points; ++k) {
      const double x = hi * static_cast<double>(k) / static_cast<double>(points - 1);
      csv += fmt(x) + "," + fmt(nu.at(x)) + "\n";
    }
  }
  csv += "total_mass," + (nu.mass_finite ? fmt(nu.total_mass) : std::string("inf")) + "\n";
  c.write("invariant.csv", csv);
  c.stdout_ << csv;
}

inline void cmd_criteria(CliContext& c) {
  const Measure1D m = measure_from_config(c.cfg);
  Params p = c.params();
  const int level = p.get("truncation_level", kMaxDyadicLevel);
  require(level >= 1 && level <= kMaxDyadicLevel, "truncation_level must lie in [1, 62]");
  const Criteria cr = recurrence_criteria(m, std::ldexp(1.0, level));
  json j{{"cond_i", to_string(cr.cond_i)},
         {"cond_ii", to_string(cr.cond_ii)},
         {"cond_iii", to_string(cr.cond_iii)},
         {"truncation_level", cr.max_level}};
  try {
    const Classification cl = classify_positive_recurrence(m);
    j["classification"] = {{"verdict", to_string(cl.verdict)}, {"reason", cl.reason}};
  } catch (const PreconditionError& e) {
    j["classification"] = {{"verdict", "not_applicable"}, {"reason", e.what()}};
  }
  c.write_json("criteria.json", j);
  c.stdout_ << "(i)   E(sqrt Y) < inf:          " << to_string(cr.cond_i) << "\n"
            << "(ii)  sum P(Y > k)^2 < inf:     " << to_string(cr.cond_ii) << "\n"
            << "(iii) dyadic tail condition:    " << to_string(cr.cond_iii) << "\n"
            << "truncation: blocks up to 2^" << cr.max_level << "\n";
}

inline void cmd_ladder(CliContext& c) {
  const Measure1D m = measure_from_config(c.cfg);
  Params p = c.params();
  std::string method = p.get<std::string>("method", "auto");
  const bool skip_free = m.is_lattice() && m.inf_support() >= -1.0;
  if (method == "auto") method = skip_free ? "exact" : "monte_carlo";
  LadderDecomposition ld;
  if (method == "exact") {
    ld = ladder_exact_skip_free(m);
  } else if (method == "monte_carlo") {
    const auto samples = p.get<std::int64_t>("samples", 100000);
    const auto cap = p.get<std::int64_t>("step_cap", kLadderStepCap);
    ld = ladder_monte_carlo(m, samples, c.seed, cap, c.threads);
  } else {
    throw ConfigError("ladder method must be auto, exact or monte_carlo");
  }
  std::string csv = "x,mass,standard_error\n";
  const auto& pmf = ld.mbar.prefix_pmf();
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double se = i < ld.standard_errors.size() ? ld.standard_errors[i] : 0.0;
    csv += std::to_string(ld.mbar.prefix_lo() + static_cast<std::int64_t>(i)) + "," + fmt(pmf[i]) + "," + fmt(se) + "\n";
  }
  c.write("ladder.csv", csv);
  c.write_json("ladder.json", {{"method", ld.method}, {"q", ld.q}, {"samples", ld.samples}, {"capped", ld.capped}});
  c.stdout_ << "ladder law (" << ld.method << "), " << pmf.size() << " atoms from " << ld.mbar.prefix_lo() << "\n";
}

inline void cmd_classes(CliContext& c) {
  const JointMeasure law = law_from_config(c.cfg);
  Params p = c.params();
  const auto window = p.get<std::int64_t>("window", 20);
  const auto margin = p.get<std::int64_t>("margin", 6);
  const ParityDecomposition pd = parity_group(law);
  const auto reports = essential_classes(law, window, margin);
  json j;
  j["r1"] = pd.r1;
  j["d"] = pd.d;
  j["gamma"] = json::array();
  for (auto e : pd.gamma) j["gamma"].push_back(parity_string(e, pd.r1));
  j["cosets"] = json::array();
  for (const auto& cs : pd.cosets) {
    json a = json::array();
    for (auto e : cs) a.push_back(parity_string(e, pd.r1));
    j["cosets"].push_back(a);
  }
  j["classes"] = json::array();
  for (const auto& r : reports) {
    json k{{"coset", r.coset}, {"window", r.window}, {"margin", r.margin}, {"certificate", r.certificate}};
    k["members"] = json::array();
    for (const auto& x : r.members) k["members"].push_back(ipoint_json(x));
    k["transient"] = json::array();
    for (const auto& x : r.transient) k["transient"].push_back(ipoint_json(x));
    k["transient_groups"] = json::array();
    for (const auto& g : r.transient_groups) {
      json a = json::array();
      for (const auto& x : g) a.push_back(ipoint_json(x));
      k["transient_groups"].push_back(a);
    }
    j["classes"].push_back(k);
  }
  c.write_json("classes.json", j);
  c.stdout_ << "Gamma has " << pd.gamma.size() << " elements, " << pd.cosets.size() << " coset(s)\n";
  for (const auto& r : reports)
    c.stdout_ << "class " << r.coset << ": " << r.members.size() << " points in window, " << r.transient.size()
              << " transient (" << r.certificate << ")\n";
}

inline void cmd_witness(CliContext& c) {
  const Measure1D m = measure_from_config(c.cfg);
  Params p = c.params();
  const int range = p.get("range", 50);
  const ConstantMapWitness w = constant_map_witness(m, range);
  json j;
  j["generators"] = json::array();
  for (const auto& g : w.generators)
    j["generators"].push_back({{"value", g.value}, {"source", g.source}, {"word", g.word.to_string()}});
  j["gcds"] = w.gcds;
  j["g"] = json::array();
  for (const auto& g : w.g) j["g"].push_back(g.to_string());
  j["h"] = w.h.to_string();
  j["h_length"] = w.h.size();
  j["range"] = w.range;
  j["all_pass"] = w.all_pass;
  c.write_json("witness.json", j);
  std::string csv = "k,n,odd_image,even_image,pass\n";
  for (const auto& r : w.table)
    csv += std::to_string(r.k) + "," + std::to_string(r.n) + "," + std::to_string(r.odd_image) + "," +
           std::to_string(r.even_image) + "," + (r.pass ? "1" : "0") + "\n";
  c.write("witness.csv", csv);
  c.stdout_ << "witness h has " << w.h.size() << " letters; table k <= " << w.range << ": "
            << (w.all_pass ? "all rows pass" : "FAILED") << "\n";
}

inline void cmd_backward(CliContext& c) {
  const WalkSpec spec(law_from_config(c.cfg));
  Params p = c.params();
  const auto horizon = p.get<std::int64_t>("horizon", std::int64_t{1} << 20);
  const auto samples = p.get<std::int64_t>("samples", 1000);
  const auto eps = p.get<std::uint32_t>("parity", 0);
  const double window = p.get("window", 0.0);
  require(samples >= 1, "samples must be >= 1");
  struct Out {
    BackwardSample s;
  };
  const bool pair = p.has("x") && p.has("y");
  Point x, y;
  if (pair) {
    x = p.require_key<std::vector<double>>("x");
    y = p.require_key<std::vector<double>>("y");
  }
  auto res = run_replicas<Out>(samples, c.seed, c.threads, [&](std::int64_t, Rng& rng) {
    return Out{pair ? backward_sample(spec, x, y, horizon, rng) : backward_sample(spec, eps, horizon, rng, window)};
  });
  std::string csv = "sample";
  for (int i = 0; i < spec.dims().r(); ++i) csv += ",x" + std::to_string(i + 1);
  csv += ",converged,blocks\n";
  std::int64_t conv = 0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    csv += std::to_string(k);
    for (double v : res[k].s.value) csv += "," + fmt(v);
    csv += std::string(",") + (res[k].s.converged ? "1" : "0") + "," + std::to_string(res[k].s.blocks) + "\n";
    conv += res[k].s.converged;
  }
  c.write("backward.csv", csv);
  c.stdout_ << conv << " of " << samples << " samples coalesced within horizon " << horizon << "\n";
}

// ---------------------------------------------------------------------------
// experiment probes

inline std::vector<std::int64_t> grid_from(Params& p, int lo_def, int hi_def) {
  const int lo = p.get("grid_lo_exp", lo_def), hi = p.get("grid_hi_exp", hi_def);
  require(lo >= 0 && lo <= hi && hi <= 40, "grid exponents must satisfy 0 <= lo <= hi <= 40");
  return geometric_grid(lo, hi);
}

inline std::string regression_csv(const Slope& s, const std::string& series) {
  std::string csv;
  for (const auto& pt : s.points) csv += series + "," + fmt(pt.n) + "," + fmt(pt.p) + "," + fmt(pt.se) + "\n";
  return csv;
}

inline json slope_json(const Slope& s) { return {{"slope", s.slope}, {"se", s.se}, {"intercept", s.intercept}}; }

inline std::string law_csv(const Law& a, const Law& b, const std::string& na, const std::string& nb) {
  std::set<Point> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  std::string csv = "point," + na + "," + nb + "\n";
  for (const auto& k : keys) {
    std::string key;
    for (std::size_t i = 0; i < k.size(); ++i) key += (i ? " " : "") + fmt(k[i]);
    auto ia = a.find(k);
    auto ib = b.find(k);
    csv += key + "," + fmt(ia == a.end() ? 0.0 : ia->second) + "," + fmt(ib == b.end() ? 0.0 : ib->second) + "\n";
  }
  return csv;
}

inline void cmd_experiment(CliContext& c) {
  Params p = c.params();
  const std::string probe = p.require_key<std::string>("probe");
  json rep{{"probe", probe}};
  if (probe == "return_time") {
    const WalkSpec spec(law_from_config(c.cfg));
    const auto start = p.get<std::vector<double>>("start", std::vector<double>(static_cast<std::size_t>(spec.size()), 0.0));
    const double w = p.get("window", 0.0);
    const auto budget = p.get<std::int64_t>("budget", 1000000);
    const auto replicas = p.get<std::int64_t>("replicas", 16);
    const Window win = default_window(spec.dims(), w);
    const ReturnReport r = return_time_stats(spec, start, win, budget, replicas, c.seed, c.threads, c.thresholds);
    rep["evidence"] = evidence_json(r.evidence);
    rep["target"] = r.stats.target;
    rep["max_displacement"] = r.stats.max_displacement;
    rep["seeds"] = r.stats.seeds;
    std::string times = "replica,index,time\n";
    for (std::size_t i = 0; i < r.stats.return_times.size(); ++i)
      for (std::size_t k = 0; k < r.stats.return_times[i].size(); ++k)
        times += std::to_string(i) + "," + std::to_string(k) + "," + std::to_string(r.stats.return_times[i][k]) + "\n";
    c.write("return_times.csv", times);
    std::string hist = "cell,visits\n";
    for (const auto& [cell, n] : r.stats.histogram) {
      std::string key;
      for (std::size_t i = 0; i < cell.size(); ++i) key += (i ? " " : "") + fmt(cell[i]);
      hist += key + "," + std::to_string(n) + "\n";
    }
    c.write("histogram.csv", hist);
  } else if (probe == "occupation") {
    const JointMeasure law = law_from_config(c.cfg);
    const WalkSpec spec(law);
    const auto steps = p.get<std::int64_t>("steps", 1000000);
    const auto burn = p.get<std::int64_t>("burn_in", 10000);
    const auto start = p.get<std::vector<double>>("start", std::vector<double>(static_cast<std::size_t>(spec.size()), 0.0));
    const Law exact = spec.dims().size() == 1 ? invariant_law_1d(law.marginal(0)) : stationary_law_bounded(law, start);
    const OccupationReport r = occupation_vs_invariant(spec, exact, steps, burn, c.seed, start);
    rep["tv"] = r.tv;
    c.write("occupation.csv", law_csv(r.empirical, r.exact, "empirical", "exact"));
  } else if (probe == "symmetrization") {
    const JointMeasure law = law_from_config(c.cfg);
    const auto x = p.get<std::vector<double>>("start", std::vector<double>(static_cast<std::size_t>(law.dims().size()), 0.0));
    const auto n = p.get<std::int64_t>("n", 6);
    const std::string mode = p.get<std::string>("mode", "exact_enumeration");
    if (mode != "exact_enumeration" && mode != "monte_carlo") throw ConfigError("mode must be exact_enumeration or monte_carlo");
    const auto samples = p.get<std::int64_t>("samples", 100000);
    const auto r = symmetrization_check(
        law, x, n, mode == "monte_carlo" ? SymmetrizationMode::monte_carlo : SymmetrizationMode::exact_enumeration,
        c.seed, samples);
    rep["discrepancy"] = r.discrepancy;
    rep["ci"] = r.ci;
    c.write("symmetrization.csv", law_csv(r.reflected, r.folded, "reflected", "folded"));
  } else if (probe == "coupling") {
    const JointMeasure law = law_from_config(c.cfg);
    const auto x = p.get<std::vector<double>>("start", std::vector<double>(static_cast<std::size_t>(law.dims().size()), 0.0));
    const auto n = p.get<std::int64_t>("n", 10000);
    const auto paths = p.get<std::int64_t>("paths", 100);
    auto first = run_replicas<std::int64_t>(paths, c.seed, c.threads,
                                            [&](std::int64_t, Rng& rng) { return symmetrization_coupling_check(law, x, n, rng); });
    std::int64_t bad = 0;
    for (auto f : first) bad += f >= 0;
    rep["paths"] = paths;
    rep["mismatched_paths"] = bad;
  } else if (probe == "cesaro") {
    const JointMeasure law = law_from_config(c.cfg);
    const WalkSpec spec(law);
    const auto a1 = p.get<std::vector<std::int64_t>>("A1", {});
    const auto a2 = p.get<std::vector<std::int64_t>>("A2", {});
    const auto steps = p.get<std::int64_t>("steps", 1000000);
    const Law nu1 = invariant_law_1d(law.marginal(0)), nu2 = invariant_law_1d(law.marginal(1));
    const CesaroReport r = cesaro_lower_bound(nu1, nu2, {a1.begin(), a1.end()}, {a2.begin(), a2.end()}, spec, steps, c.seed);
    rep["bound"] = r.bound;
    rep["empirical"] = r.empirical;
    rep["ci"] = r.ci;
    rep["asserted"] = r.asserted;
    rep["ok"] = r.ok;
  } else if (probe == "reflected_free") {
    const WalkSpec spec(law_from_config(c.cfg));
    const auto budget = p.get<std::int64_t>("budget", 1000000);
    const double w = p.get("window", 0.0);
    const auto replicas = p.get<std::int64_t>("replicas", 64);
    const auto cycles = p.get<std::int64_t>("wald_cycles", 100000);
    const auto r = reflected_plus_free_experiment(spec, budget, w, replicas, c.seed, cycles, c.threads, c.thresholds);
    rep["evidence"] = evidence_json(r.evidence);
    rep["window"] = r.window.describe();
    rep["wald"] = {{"cycles", r.wald.cycles},       {"mean_cycle_length", r.wald.mean_cycle_length},
                   {"drift", r.wald.drift},         {"mean_z", r.wald.mean_z},
                   {"deviation", r.wald.deviation}, {"standard_error", r.wald.standard_error},
                   {"pass", r.wald.pass}};
  } else if (probe == "product") {
    const JointMeasure law = law_from_config(c.cfg);
    require(law.dims().size() == 2 && law.dims().r1 == 2, "product probe needs a two-coordinate lattice law");
    const auto y = p.get<std::vector<std::int64_t>>("y", {0, 0});
    require(y.size() == 2, "y must have two coordinates");
    const auto grid = grid_from(p, 6, 14);
    const auto replicas = p.get<std::int64_t>("replicas", 100000);
    const auto r = product_null_recurrence_probe(law.marginal(0), law.marginal(1), {y[0], y[1]}, grid, replicas, c.seed,
                                                 c.threads);
    rep["first"] = slope_json(r.first);
    rep["second"] = slope_json(r.second);
    rep["joint"] = slope_json(r.joint);
    c.write("regression.csv", "series,n,p,se\n" + regression_csv(r.first, "first") + regression_csv(r.second, "second") +
                                  regression_csv(r.joint, "joint"));
  } else if (probe == "dimension") {
    const JointMeasure law = law_from_config(c.cfg);
    const auto budget = p.get<std::int64_t>("budget", 1000000);
    const auto replicas = p.get<std::int64_t>("replicas", 200);
    const double wr = p.get("window_radius", 2.0);
    const double er = p.get("exit_radius", 0.0);
    const auto r = dimension_transience_probe(law, budget, replicas, c.seed, wr, er, c.threads, c.thresholds);
    rep["escape_fraction"] = r.escape_fraction;
    rep["window_radius"] = r.window_radius;
    rep["exit_radius"] = r.exit_radius;
    rep["evidence"] = evidence_json(r.evidence);
    std::string csv = "replica,min_distance_after_burn_in\n";
    for (std::size_t i = 0; i < r.min_distance.size(); ++i) csv += std::to_string(i) + "," + fmt(r.min_distance[i]) + "\n";
    c.write("min_distance.csv", csv);
  } else if (probe == "subordinated") {
    const double alpha = p.require_key<double>("alpha");
    const auto grid = grid_from(p, 6, 14);
    const auto replicas = p.get<std::int64_t>("replicas", 100000);
    const auto cutoff = p.get<std::int64_t>("cutoff", 0);
    const auto r = subordinated_return_probe(alpha, grid, replicas, c.seed, c.threads, cutoff);
    rep["alpha"] = r.alpha;
    rep["exponent"] = r.exponent;
    rep["se"] = r.se;
    rep["target"] = r.target;
    c.write("regression.csv", "series,n,p,se\n" + regression_csv(r.fit, "return"));
  } else if (probe == "subordinated_reflected") {
    const double alpha = p.require_key<double>("alpha");
    const auto budget = p.get<std::int64_t>("budget", 1000000);
    const auto replicas = p.get<std::int64_t>("replicas", 64);
    const double w = p.get("window", 0.0);
    rep["evidence"] = evidence_json(subordinated_reflected_evidence(alpha, budget, replicas, c.seed, w, c.threads, c.thresholds));
  } else if (probe == "symmetric_equivalence") {
    const Measure1D m = measure_from_config(c.cfg);
    const auto budget = p.get<std::int64_t>("budget", 1000000);
    const double w = p.get("window", 0.0);
    const auto replicas = p.get<std::int64_t>("replicas", 32);
    const auto r = symmetric_equivalence_check(m, budget, w, replicas, c.seed, c.threads, c.thresholds);
    rep["free_walk"] = evidence_json(r.free_walk);
    rep["reflected"] = evidence_json(r.reflected);
    rep["agree"] = r.agree;
  } else {
    throw ConfigError("unknown probe '" + probe + "'");
  }
  c.write_json("evidence.json", rep);
  c.stdout_ << rep.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// validate: dry-run precondition report; never fails.

inline json validate_config(const json& cfg) {
  json rep{{"ok", true}, {"errors", json::array()}, {"warnings", json::array()}};
  auto fail = [&](const std::string& m) {
    rep["ok"] = false;
    rep["errors"].push_back(m);
  };
  auto check_marginal = [&](const Measure1D& m, const std::string& what, bool reflected, bool lattice) {
    if (reflected && !(m.tail(0.0) > 0.0))
      fail(what + " violates the nontriviality condition mu((0,inf)) > 0");
    if (lattice && m.is_lattice() && !m.has_analytic_tail()) {
      const auto g = m.support_gcd();
      if (g > 1)
        rep["warnings"].push_back(what + " is not normalized: gcd of support is " + std::to_string(g) +
                                  "; divide the support by kappa = " + std::to_string(g));
    }
  };
  try {
    if (cfg.contains("law")) {
      const json& l = cfg["law"];
      const Dims d = parse_dims(l.at("dims"));
      if (d.s() > 2) fail("only the cases s in {0, 1, 2} of free coordinates are supported (s = " + std::to_string(d.s()) + ")");
      if (d.r() < 1) fail("a walk needs at least one reflected coordinate");
      if (l.contains("factors")) {
        if (static_cast<int>(l["factors"].size()) != d.size()) fail("product law needs one factor per coordinate");
        for (int i = 0; i < static_cast<int>(l["factors"].size()); ++i)
          check_marginal(parse_measure(l["factors"][static_cast<std::size_t>(i)]), "marginal " + std::to_string(i + 1),
                         d.is_reflected(i), i < d.r1);
      } else {
        double total = 0;
        for (const auto& pr : l.at("probs")) total += parse_probability(pr);
        if (std::abs(total - 1.0) > kMassTolerance) fail("joint probabilities sum to " + fmt(total) + ", not 1");
        for (int i = 0; i < d.size(); ++i) {
          std::map<std::int64_t, double> atoms;
          const auto& pts = l.at("points");
          const auto& prs = l.at("probs");
          for (std::size_t k = 0; k < pts.size() && k < prs.size(); ++k)
            atoms[static_cast<std::int64_t>(pts[k].at(static_cast<std::size_t>(i)).get<double>())] += parse_probability(prs[k]) / total;
          check_marginal(Measure1D::lattice(atoms), "marginal " + std::to_string(i + 1), d.is_reflected(i), i < d.r1);
        }
      }
    } else if (cfg.contains("measure")) {
      check_marginal(parse_measure(cfg["measure"]), "measure", true, true);
    } else {
      fail("config needs a 'law' or a 'measure'");
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------

inline int error_exit(std::ostream& err, int code, const std::string& kind, const std::string& msg) {
  err << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << "\n";
  return code;
}

// Exit codes: 0 success, 1 malformed config, 2 precondition refused,
// 3 output not writable, 4 internal error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Reflected random walk toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool seed_given = false;
  const std::vector<std::string> names{"simulate", "invariant", "criteria", "ladder", "classes",
                                       "witness",  "backward",  "experiment", "validate"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "JSON config (or a metadata.json to rerun)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; },
                                            "master seed");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    return error_exit(err, 1, "usage", e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    json cfg = load_config_file(config_path);
    if (command == "validate") {
      const json rep = validate_config(cfg);
      out << rep.dump(2) << "\n";
      return 0;
    }
    if (seed_given) cfg["seed"] = seed;
    if (!cfg.contains("seed")) cfg["seed"] = 1;
    if (!out_dir.empty()) cfg["out"] = out_dir;
    if (!cfg.contains("out")) cfg["out"] = "rrw_out";
    cfg["command"] = command;
    CliContext ctx{command, cfg, 0, 1, {}, out, {}, {}};
    try {
      ctx.seed = ctx.cfg["seed"].get<std::uint64_t>();
      ctx.out = ctx.cfg["out"].get<std::string>();
    } catch (const json::exception&) {
      throw ConfigError("'seed' must be an unsigned integer and 'out' a string");
    }
    ctx.threads = resolve_threads(threads);
    ctx.thresholds = thresholds_from(ctx.cfg);
    if (command == "simulate") cmd_simulate(ctx);
    else if (command == "invariant") cmd_invariant(ctx);
    else if (command == "criteria") cmd_criteria(ctx);
    else if (command == "ladder") cmd_ladder(ctx);
    else if (command == "classes") cmd_classes(ctx);
    else if (command == "witness") cmd_witness(ctx);
    else if (command == "backward") cmd_backward(ctx);
    else cmd_experiment(ctx);
    json meta{{"schema", "rrw-metadata"},
              {"schema_version", kSchemaVersion},
              {"tool_version", kToolVersion},
              {"command", command},
              {"seed", ctx.seed},
              {"stream_seed_rule", "stream i: s = seed ^ (i * 0xd1b54a32d192ed03), two splitmix64 rounds"},
              {"threads", ctx.threads},
              {"thresholds", thresholds_json(ctx.thresholds)},
              {"config", ctx.cfg},
              {"artifacts", ctx.artifacts}};
    ctx.write_json("metadata.json", meta);
    return 0;
  } catch (const ConfigError& e) {
    return error_exit(err, 1, "config", e.what());
  } catch (const json::exception& e) {
    return error_exit(err, 1, "config", e.what());
  } catch (const PreconditionError& e) {
    return error_exit(err, 2, "precondition", e.what());
  } catch (const OutputError& e) {
    return error_exit(err, 3, "output", e.what());
  } catch (const std::exception& e) {
    return error_exit(err, 4, "internal", e.what());
  }
}

}  // namespace rrw
