#pragma once

// Finite-sample recurrence evidence. The categories are fixed functions of
// window-visit counts at the budgets B/8, B/4, B/2, B.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rrw/error.hpp"

namespace rrw {

enum class EvidenceCategory { positive_evidence, null_evidence, transient_evidence, inconclusive };

inline const char* to_string(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::positive_evidence: return "positive_evidence";
    case EvidenceCategory::null_evidence: return "null_evidence";
    case EvidenceCategory::transient_evidence: return "transient_evidence";
    default: return "inconclusive";
  }
}

struct EvidenceThresholds {
  double positive_max_drift = 0.10;   // relative drift of the mean return time across budgets
  double null_min_growth = 0.25;      // per-doubling growth of the mean return time
  double transient_fraction = 0.90;   // replicas without a visit after burn-in
  double burn_in_fraction = 0.10;
};

inline constexpr std::int64_t kMinBudget = 1000;
inline constexpr int kCheckpoints = 4;

inline std::array<std::int64_t, kCheckpoints> checkpoints(std::int64_t budget) {
  return {budget / 8, budget / 4, budget / 2, budget};
}

struct RecurrenceEvidence {
  EvidenceCategory category = EvidenceCategory::inconclusive;
  std::int64_t replicas = 0;
  std::array<std::int64_t, kCheckpoints> budgets{};
  std::array<std::int64_t, kCheckpoints> visits{};        // summed over replicas
  std::array<double, kCheckpoints> mean_return_time{};   // replicas * b / visits (Kac)
  std::array<double, kCheckpoints> mean_return_se{};     // delta method over replicas
  double count_growth_slope = 0;  // d log(visits) / d log(budget) between B/8 and B
  double drift = 0;          // max_b |m_b - m_B| / m_B
  double growth = 0;         // geometric mean per-doubling growth of m_b
  double escape_fraction = 0;
  EvidenceThresholds thresholds;
};

// Per-replica visit record.
struct VisitCounts {
  std::array<std::int64_t, kCheckpoints> visits{};  // cumulative at each checkpoint
  bool visited_after_burn_in = false;
};

inline RecurrenceEvidence decide_evidence(std::int64_t budget, const std::vector<VisitCounts>& reps,
                                          const EvidenceThresholds& th = {}) {
  require(budget >= kMinBudget, "budget below 1000 steps is meaningless");
  RecurrenceEvidence ev;
  ev.thresholds = th;
  ev.replicas = static_cast<std::int64_t>(reps.size());
  ev.budgets = checkpoints(budget);
  std::int64_t escaped = 0;
  std::array<double, kCheckpoints> sq{};
  for (const auto& r : reps) {
    for (int i = 0; i < kCheckpoints; ++i) {
      ev.visits[i] += r.visits[i];
      sq[i] += static_cast<double>(r.visits[i]) * static_cast<double>(r.visits[i]);
    }
    if (!r.visited_after_burn_in) ++escaped;
  }
  const double n = static_cast<double>(ev.replicas);
  ev.escape_fraction = n > 0 ? static_cast<double>(escaped) / n : 0.0;
  for (int i = 0; i < kCheckpoints; ++i)
    ev.mean_return_time[i] = ev.visits[i] > 0 ? n * static_cast<double>(ev.budgets[i]) / static_cast<double>(ev.visits[i])
                                              : std::numeric_limits<double>::infinity();
  for (int i = 0; i < kCheckpoints; ++i) {
    const double v = static_cast<double>(ev.visits[i]) / n;
    const double var = n > 1 ? std::max(0.0, (sq[i] - n * v * v) / (n - 1)) : 0.0;
    ev.mean_return_se[i] = v > 0 ? ev.mean_return_time[i] * std::sqrt(var / n) / v : std::numeric_limits<double>::infinity();
  }
  if (ev.visits[0] > 0)
    ev.count_growth_slope = std::log(static_cast<double>(ev.visits[kCheckpoints - 1]) / static_cast<double>(ev.visits[0])) /
                            std::log(static_cast<double>(ev.budgets[kCheckpoints - 1]) / static_cast<double>(ev.budgets[0]));
  const double last = ev.mean_return_time[kCheckpoints - 1];
  const double first = ev.mean_return_time[0];
  if (std::isfinite(last) && std::isfinite(first)) {
    for (int i = 0; i < kCheckpoints; ++i) ev.drift = std::max(ev.drift, std::abs(ev.mean_return_time[i] - last) / last);
    ev.growth = std::pow(last / first, 1.0 / (kCheckpoints - 1)) - 1.0;
  } else {
    ev.drift = std::numeric_limits<double>::infinity();
    ev.growth = std::numeric_limits<double>::infinity();
  }

  if (ev.escape_fraction >= th.transient_fraction) {
    ev.category = EvidenceCategory::transient_evidence;
  } else if (ev.drift < th.positive_max_drift) {
    ev.category = EvidenceCategory::positive_evidence;
  } else if (std::isfinite(ev.growth) && ev.visits[kCheckpoints - 1] > ev.visits[0] && ev.growth >= th.null_min_growth) {
    ev.category = EvidenceCategory::null_evidence;
  }
  return ev;
}

// Walks a replica for `budget` steps; step() advances the state, in_window()
// tests it. Returns cumulative visit counts at the checkpoints.
template <class Step, class InWindow, class OnVisit>
VisitCounts count_visits(std::int64_t budget, Step&& step, InWindow&& in_window, OnVisit&& on_visit,
                         double burn_in_fraction = 0.10) {
  VisitCounts vc;
  const auto cps = checkpoints(budget);
  const auto burn = static_cast<std::int64_t>(burn_in_fraction * static_cast<double>(budget));
  std::int64_t count = 0;
  int next_cp = 0;
  for (std::int64_t k = 1; k <= budget; ++k) {
    step();
    if (in_window()) {
      ++count;
      on_visit(k);
      if (k > burn) vc.visited_after_burn_in = true;
    }
    while (next_cp < kCheckpoints && k == cps[next_cp]) vc.visits[next_cp++] = count;
  }
  return vc;
}

}  // namespace rrw
