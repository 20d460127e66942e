#pragma once

// First-order optimal-cost effects of line switching from the OPF
// multipliers, plus the price-difference baselines.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "otr/action.hpp"
#include "otr/dcopf.hpp"

namespace otr {

enum class Method { kM0, kM1, kM2, kM3, kM4, kRuiz };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kM0: return "M0";
    case Method::kM1: return "M1";
    case Method::kM2: return "M2";
    case Method::kM3: return "M3";
    case Method::kM4: return "M4";
    case Method::kRuiz: return "RUIZ";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  std::string u(s);
  for (char& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (u == "M0") return Method::kM0;
  if (u == "M1") return Method::kM1;
  if (u == "M2") return Method::kM2;
  if (u == "M3") return Method::kM3;
  if (u == "M4") return Method::kM4;
  if (u == "RUIZ") return Method::kRuiz;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

struct LineSensitivity {
  int line = -1;
  double dv_db = 0.0;    // $ per p.u. susceptance
  double delta_v = 0.0;  // $, first-order effect of opening
  Method method = Method::kM2;
};

struct RankedAction {
  CandidateAction action;
  double score = 0.0;
  Method method = Method::kM2;
};

struct CandidateRanking {
  std::vector<RankedAction> entries;
  std::string tie_policy;

  bool empty() const { return entries.empty(); }
  size_t size() const { return entries.size(); }
};

namespace detail {

inline const Line& in_service_line(const DcOpfSolution& sol, int line) {
  const Network& net = sol.network();
  if (line < 0 || line >= net.num_lines() || !net.lines[line].in_service)
    throw ValidationError("line " + std::to_string(line) + " is not in service");
  return net.lines[line];
}

// Lines whose opening keeps the network connected.
inline std::vector<int> switchable_lines(const Network& net) {
  const auto bridges = bridge_lines(net);
  std::vector<int> out;
  for (const Line& l : net.lines)
    if (l.in_service && !bridges[l.id]) out.push_back(l.id);
  return out;
}

inline int element_id(const CandidateAction& a) {
  if (const auto* o = std::get_if<LineOpening>(&a)) return o->line;
  return std::get<SplitSpec>(a).bus;
}

}  // namespace detail

// dv/db = (mu_hi - mu_lo + lambda_i - lambda_j)(theta_i - theta_j) and the
// first-order change of removing the whole susceptance.
inline LineSensitivity line_switch_sensitivity(const DcOpfSolution& sol, int line) {
  const Line& l = detail::in_service_line(sol, line);
  const double k = sol.mu_hi[line] - sol.mu_lo[line] + sol.lambda[l.from] - sol.lambda[l.to];
  LineSensitivity s;
  s.line = line;
  s.dv_db = k * (sol.theta[l.from] - sol.theta[l.to]);
  s.delta_v = -s.dv_db * l.b;
  s.method = Method::kM2;
  return s;
}

// Congestion-rent metric without the price-difference term.
inline LineSensitivity ruiz_metric(const DcOpfSolution& sol, int line) {
  const Line& l = detail::in_service_line(sol, line);
  LineSensitivity s;
  s.line = line;
  s.delta_v = -(sol.mu_hi[line] - sol.mu_lo[line]) * sol.flows[line];
  s.dv_db = -s.delta_v / l.b;
  s.method = Method::kRuiz;
  return s;
}

// Ascending by first-order delta_v, ties by line id. Islanding lines are
// left out.
inline CandidateRanking rank_lines(const DcOpfSolution& sol, Method method = Method::kM2) {
  if (method != Method::kM2 && method != Method::kRuiz)
    throw ValidationError("rank_lines takes M2 or RUIZ");
  CandidateRanking r;
  r.tie_policy = "score ascending, then line id";
  for (int id : detail::switchable_lines(sol.network())) {
    const auto s = method == Method::kM2 ? line_switch_sensitivity(sol, id) : ruiz_metric(sol, id);
    r.entries.push_back({LineOpening{id}, s.delta_v, method});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score < b.score;
    return detail::element_id(a.action) < detail::element_id(b.action);
  });
  return r;
}

// M0 ranks |pi_i - pi_j|, M1 ranks |f (pi_i - pi_j)|, both over lines with
// f (pi_i - pi_j) < 0; descending by score, ties by line id.
inline CandidateRanking baseline_criterion(const DcOpfSolution& sol, Method mode) {
  if (mode != Method::kM0 && mode != Method::kM1)
    throw ValidationError("baseline_criterion takes M0 or M1");
  const Network& net = sol.network();
  CandidateRanking r;
  r.tie_policy = "score descending, then line id";
  // Relative to the price level, so flat prices with roundoff do not qualify.
  const double tol = 1e-9 * std::max(1.0, sol.lambda.cwiseAbs().maxCoeff());
  for (int id : detail::switchable_lines(net)) {
    const Line& l = net.lines[id];
    const double dpi = sol.lambda[l.from] - sol.lambda[l.to];
    const double profit = sol.flows[id] * dpi;
    if (!(profit < 0) || std::abs(dpi) <= tol) continue;
    const double score = mode == Method::kM0 ? std::abs(dpi) : std::abs(profit);
    r.entries.push_back({LineOpening{id}, score, mode});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return detail::element_id(a.action) < detail::element_id(b.action);
  });
  return r;
}

// d v for a unit transfer injected at h and withdrawn at k.
inline double transfer_sensitivity(const DcOpfSolution& sol, int h, int k) {
  return sol.lambda[k] - sol.lambda[h];
}

// d v / d b_hk for adding susceptance between h and k (new or parallel line).
inline double line_addition_sensitivity(const DcOpfSolution& sol, int h, int k) {
  return (sol.lambda[h] - sol.lambda[k]) * (sol.theta[h] - sol.theta[k]);
}

}  // namespace otr
