#pragma once

// One-step simplex pivot refinement of first-order action rankings.
//
// Opening line(s) i-j, or moving them onto a new busbar, changes exactly the
// columns theta+_i, theta+_j, theta-_i, theta-_j of A, and the change is an
// outer product A' = A + w v', with v = (+1, -1, -1, +1) on those columns and
// w = B_L (e_i - e_j) on the balance rows minus the flow-row coefficients of
// the lines. When some of the columns are basic the basis moves by the
// rank-1 term w v_B', handled with Sherman-Morrison.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "otr/action.hpp"
#include "otr/bus_split.hpp"
#include "otr/dcopf.hpp"
#include "otr/sensitivity.hpp"
#include "otr/simplex.hpp"

namespace otr {

inline constexpr double kReducedCostTol = 1e-9;
inline constexpr double kRatioTol = 1e-10;
inline constexpr double kShermanMorrisonTol = 1e-10;
inline constexpr double kFeasTol = 1e-9;

// Smallest improvement treated as real, relative to the objective.
inline double benefit_tol(double objective) { return 1e-9 * std::max(1.0, std::abs(objective)); }

enum class PivotPath { kNonbasicOnly, kRank1Feasible, kRank1Repaired, kInfeasibleDiscarded };

inline std::string_view to_string(PivotPath p) {
  switch (p) {
    case PivotPath::kNonbasicOnly: return "nonbasic_only";
    case PivotPath::kRank1Feasible: return "rank1_feasible";
    case PivotPath::kRank1Repaired: return "rank1_repaired";
    case PivotPath::kInfeasibleDiscarded: return "infeasible_discarded";
  }
  return "?";
}

// B(delta) = B + delta u v', v indexed by basis position.
struct Rank1Update {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double delta = 0.0;
};

struct ColumnDelta {
  CandidateAction action;
  std::vector<int> modified_cols;  // theta+_i, theta+_j, theta-_i, theta-_j
  std::vector<Eigen::VectorXd> new_cols;
  Eigen::VectorXd rhs_delta;
  bool basis_touched = false;
  std::optional<Rank1Update> rank1;

  Eigen::VectorXd w;           // A' = A + w v_col'
  std::vector<double> v_col;   // aligned with modified_cols

  bool rhs_changed() const { return rhs_delta.size() > 0 && rhs_delta.cwiseAbs().maxCoeff() > 0; }
};

struct PivotEstimate {
  CandidateAction action;
  std::optional<double> delta_cost;  // $, absent when discarded
  PivotPath path = PivotPath::kInfeasibleDiscarded;
  std::optional<int> entering_col;
  std::string reason;
};

struct RecheckResult {
  bool still_optimal = true;
  std::vector<int> entering;              // J
  std::vector<double> modified_reduced;   // aligned with ColumnDelta::modified_cols
};

struct Rank1Result {
  Eigen::VectorXd x_b;
  double cost = 0.0;
  double denominator = 1.0;
};

// ---------------------------------------------------------------------------

inline ColumnDelta column_delta(const DcOpfSolution& sol, const CandidateAction& action) {
  const DcOpfProblem& prob = *sol.problem;
  const StandardFormLp& lp = *sol.lp;
  const Network& net = prob.net;
  if (prob.formulation != Formulation::kAngle)
    throw ValidationError("column_delta needs the angle formulation");

  int bi = -1, bj = -1;
  std::vector<int> lines;
  double p_new = 0.0;
  if (const auto* open = std::get_if<LineOpening>(&action)) {
    if (open->line < 0 || open->line >= net.num_lines() || !net.lines[open->line].in_service)
      throw ValidationError("line " + std::to_string(open->line) + " is not an in-service line");
    const Line& l = net.lines[open->line];
    bi = l.from;
    bj = l.to;
    lines = {l.id};
  } else {
    const auto& spec = std::get<SplitSpec>(action);
    check_split(net, spec);
    if (!spec.restricted())
      throw ValidationError("the pivot model takes splits that move a single neighbor");
    bi = spec.bus;
    bj = spec.moved_neighbors.front();
    lines = moved_lines(net, spec);
    p_new = spec.p_new;
  }

  ColumnDelta d;
  d.action = action;
  double b_sum = 0.0;
  for (int id : lines) b_sum += net.lines[id].b;

  d.w = Eigen::VectorXd::Zero(lp.rows());
  d.w[prob.balance_row[bi]] += b_sum;
  d.w[prob.balance_row[bj]] -= b_sum;
  for (int id : lines) {
    const Line& l = net.lines[id];
    const double s = l.from == bi ? 1.0 : -1.0;
    d.w[prob.flow_upper_row[id]] -= s * l.b;
    d.w[prob.flow_lower_row[id]] += s * l.b;
  }
  d.modified_cols = {prob.theta_plus_col[bi], prob.theta_plus_col[bj],
                     prob.theta_minus_col[bi], prob.theta_minus_col[bj]};
  d.v_col = {1.0, -1.0, -1.0, 1.0};
  for (size_t c = 0; c < 4; ++c)
    d.new_cols.push_back(lp.column(d.modified_cols[c]) + d.w * d.v_col[c]);

  d.rhs_delta = Eigen::VectorXd::Zero(lp.rows());
  if (p_new != 0.0) {
    // The busbar injection now enters at the moved neighbor and rides on the
    // moved lines, whose flow rows keep only their slacks.
    d.rhs_delta[prob.balance_row[bi]] += p_new;
    d.rhs_delta[prob.balance_row[bj]] -= p_new;
    for (int id : lines) {
      const Line& l = net.lines[id];
      const double f = (l.from == bi ? 1.0 : -1.0) * p_new * l.b / b_sum;
      d.rhs_delta[prob.flow_upper_row[id]] -= f;
      d.rhs_delta[prob.flow_lower_row[id]] += f;
    }
  }

  const BasisState& basis = sol.basis;
  Eigen::VectorXd vb = Eigen::VectorXd::Zero(lp.rows());
  for (size_t c = 0; c < 4; ++c) {
    const int pos = basis.position[d.modified_cols[c]];
    if (pos >= 0) {
      d.basis_touched = true;
      vb[pos] = d.v_col[c];
    }
  }
  if (d.basis_touched) d.rank1 = Rank1Update{d.w / -b_sum, vb, -b_sum};
  return d;
}

// Reduced costs of the modified columns against the unchanged duals.
inline RecheckResult nonbasic_recheck(const DcOpfSolution& sol, const ColumnDelta& delta) {
  const StandardFormLp& lp = *sol.lp;
  RecheckResult r;
  for (size_t c = 0; c < delta.modified_cols.size(); ++c) {
    const int j = delta.modified_cols[c];
    const double dj = lp.c[j] - sol.basis.y.dot(delta.new_cols[c]);
    r.modified_reduced.push_back(dj);
    if (!sol.basis.is_basic(j) && dj < -kReducedCostTol) r.entering.push_back(j);
  }
  r.still_optimal = r.entering.empty();
  return r;
}

// x_B(delta) = x0 - B^-1 u (delta v' x0) / (1 + delta v' B^-1 u), with
// x0 = B^-1 rhs (the optimal x_B when rhs is b).
inline Rank1Result rank1_basis_update(const StandardFormLp& lp, const BasisState& basis,
                                      const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                      double delta, const Eigen::VectorXd* rhs = nullptr) {
  if (!basis.factorization) throw ValidationError("basis has no factorization");
  const Eigen::VectorXd x0 = rhs ? basis.factorization->solve(*rhs) : basis.x_b;
  const Eigen::VectorXd q = basis.factorization->solve(u);
  Rank1Result r;
  r.denominator = 1.0 + delta * v.dot(q);
  if (std::abs(r.denominator) <= kShermanMorrisonTol)
    throw SingularError("rank-1 basis update is singular (1 + v'B^-1u = " +
                        std::to_string(r.denominator) + ")");
  r.x_b = x0 - q * (delta * v.dot(x0) / r.denominator);
  for (size_t p = 0; p < basis.basic_idx.size(); ++p) r.cost += lp.c[basis.basic_idx[p]] * r.x_b[p];
  return r;
}

// The LP after the action, for exact re-solves.
inline StandardFormLp modified_lp(const StandardFormLp& lp, const ColumnDelta& delta) {
  StandardFormLp out = lp;
  std::set<int> mod(delta.modified_cols.begin(), delta.modified_cols.end());
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < lp.cols(); ++j) {
    if (mod.count(j)) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(lp.a, j); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), j, it.value());
  }
  for (size_t c = 0; c < delta.modified_cols.size(); ++c)
    for (int r = 0; r < lp.rows(); ++r)
      if (delta.new_cols[c][r] != 0.0) t.emplace_back(r, delta.modified_cols[c], delta.new_cols[c][r]);
  out.a.setZero();
  out.a.setFromTriplets(t.begin(), t.end());
  out.a.prune(0.0);
  out.a.makeCompressed();
  if (delta.rhs_delta.size() > 0) out.b += delta.rhs_delta;
  return out;
}

// Shared, read-only data for refining many candidates off one optimum.
class PivotContext {
 public:
  explicit PivotContext(const DcOpfSolution& sol) : sol_(sol) {
    const StandardFormLp& lp = *sol.lp;
    const BasisState& basis = sol.basis;
    const int m = lp.rows();
    binv_ = basis.factorization->solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m)));
    c_b_.resize(m);
    for (int p = 0; p < m; ++p) c_b_[p] = lp.c[basis.basic_idx[p]];
    base_cost_ = c_b_.dot(basis.x_b);
    nb_index_.assign(lp.cols(), -1);
    binv_an_.resize(m, static_cast<Eigen::Index>(basis.nonbasic_idx.size()));
    for (size_t k = 0; k < basis.nonbasic_idx.size(); ++k) {
      const int j = basis.nonbasic_idx[k];
      nb_index_[j] = static_cast<int>(k);
      Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
      for (Eigen::SparseMatrix<double>::InnerIterator it(lp.a, j); it; ++it)
        z.noalias() += it.value() * binv_.col(it.row());
      binv_an_.col(static_cast<Eigen::Index>(k)) = z;
    }
  }

  const DcOpfSolution& solution() const { return sol_; }
  const Eigen::MatrixXd& binv() const { return binv_; }
  const Eigen::VectorXd& c_b() const { return c_b_; }
  double base_cost() const { return base_cost_; }  // c_B' x*_B (shifted objective)

  // B^-1 A'_j for a nonbasic column j under `delta`.
  Eigen::VectorXd binv_column(const ColumnDelta& delta, const Eigen::VectorXd& binv_w, int j) const {
    Eigen::VectorXd z = binv_an_.col(nb_index_[j]);
    for (size_t c = 0; c < delta.modified_cols.size(); ++c)
      if (delta.modified_cols[c] == j) z += binv_w * delta.v_col[c];
    return z;
  }

 private:
  const DcOpfSolution& sol_;
  Eigen::MatrixXd binv_;
  Eigen::MatrixXd binv_an_;
  std::vector<int> nb_index_;
  Eigen::VectorXd c_b_;
  double base_cost_ = 0.0;
};

namespace detail {

inline bool nonnegative(const Eigen::VectorXd& x) { return x.size() == 0 || x.minCoeff() >= -kFeasTol; }

// B(delta)^-1 from B^-1: identity when the basis is untouched, else
// Sherman-Morrison with B(delta) = B + w v_B'.
struct NewBasisSolver {
  bool touched = false;
  Eigen::VectorXd q;   // B^-1 w
  Eigen::VectorXd vb;  // v over basis positions
  double den = 1.0;

  Eigen::VectorXd apply(const Eigen::VectorXd& z) const {
    if (!touched) return z;
    return z - q * (vb.dot(z) / den);
  }
};

}  // namespace detail

// Ratio test for each entering j from the basic solution x (x*_B, or
// B^-1 b' for a split); the transfer cost c_B'(x - x*_B) is added on top.
inline PivotEstimate one_step_pivot_nonbasic(const PivotContext& ctx, const ColumnDelta& delta,
                                             const RecheckResult& recheck,
                                             const Eigen::VectorXd& x) {
  const DcOpfSolution& sol = ctx.solution();
  PivotEstimate e;
  e.action = delta.action;
  e.path = PivotPath::kNonbasicOnly;
  const double transfer = ctx.c_b().dot(x) - ctx.base_cost();
  if (recheck.entering.empty()) {
    e.delta_cost = transfer;
    return e;
  }
  const Eigen::VectorXd binv_w = ctx.binv() * delta.w;
  double best = std::numeric_limits<double>::infinity();
  for (int j : recheck.entering) {
    const Eigen::VectorXd col = ctx.binv_column(delta, binv_w, j);
    double alpha = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < col.size(); ++i)
      if (col[i] > kRatioTol) alpha = std::min(alpha, std::max(x[i], 0.0) / col[i]);
    if (!std::isfinite(alpha)) continue;
    size_t c = 0;
    while (delta.modified_cols[c] != j) ++c;
    const double change = alpha * recheck.modified_reduced[c];
    if (change < best) {
      best = change;
      e.entering_col = j;
    }
  }
  (void)sol;
  if (!e.entering_col) {
    e.path = PivotPath::kInfeasibleDiscarded;
    e.reason = "no blocking row for any entering column";
    return e;
  }
  e.delta_cost = transfer + best;
  return e;
}

// Repairs a basic solution with negative entries by one entering column:
// D_j = -B(delta)^-1 A'_j, step within [d_j, alpha_j].
inline PivotEstimate restore_feasibility(const PivotContext& ctx, const ColumnDelta& delta,
                                         const detail::NewBasisSolver& solver,
                                         const Eigen::VectorXd& x) {
  const DcOpfSolution& sol = ctx.solution();
  const StandardFormLp& lp = *sol.lp;
  PivotEstimate e;
  e.action = delta.action;
  const Eigen::VectorXd binv_w = ctx.binv() * delta.w;
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  for (int j : sol.basis.nonbasic_idx) {
    const Eigen::VectorXd dj = -solver.apply(ctx.binv_column(delta, binv_w, j));
    bool blocked = false;
    double lo = 0.0, hi = inf;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < -kFeasTol) {
        if (dj[i] <= kRatioTol) {
          blocked = true;
          break;
        }
        lo = std::max(lo, -x[i] / dj[i]);
      } else if (dj[i] < -kRatioTol) {
        hi = std::min(hi, std::max(x[i], 0.0) / -dj[i]);
      }
    }
    if (blocked || lo > hi) continue;
    const double step = std::isfinite(hi) ? hi : lo;
    const double cost = ctx.c_b().dot(x + step * dj) + lp.c[j] * step - ctx.base_cost();
    if (cost < best) {
      best = cost;
      e.entering_col = j;
    }
  }
  if (!e.entering_col) {
    e.path = PivotPath::kInfeasibleDiscarded;
    e.reason = "feasibility cannot be restored with one entering column";
    return e;
  }
  e.path = PivotPath::kRank1Repaired;
  e.delta_cost = best;
  return e;
}

// Routes one candidate through the pivot path its column delta calls for.
inline PivotEstimate refine(const PivotContext& ctx, const CandidateAction& action) {
  const DcOpfSolution& sol = ctx.solution();
  const ColumnDelta delta = column_delta(sol, action);
  Eigen::VectorXd x = sol.basis.x_b;
  if (delta.rhs_changed()) x += ctx.binv() * delta.rhs_delta;

  detail::NewBasisSolver solver;
  if (!delta.basis_touched) {
    if (detail::nonnegative(x))
      return one_step_pivot_nonbasic(ctx, delta, nonbasic_recheck(sol, delta), x);
    return restore_feasibility(ctx, delta, solver, x);
  }

  solver.touched = true;
  solver.q = ctx.binv() * delta.w;
  solver.vb = delta.rank1->v;
  solver.den = 1.0 + solver.vb.dot(solver.q);
  if (std::abs(solver.den) <= kShermanMorrisonTol) {
    PivotEstimate e;
    e.action = action;
    e.path = PivotPath::kInfeasibleDiscarded;
    e.reason = "singular rank-1 basis update";
    return e;
  }
  const Eigen::VectorXd xd = solver.apply(x);
  if (detail::nonnegative(xd)) {
    PivotEstimate e;
    e.action = action;
    e.path = PivotPath::kRank1Feasible;
    e.delta_cost = ctx.c_b().dot(xd) - ctx.base_cost();
    return e;
  }
  return restore_feasibility(ctx, delta, solver, xd);
}

// ---------------------------------------------------------------------------
// Improved heuristic

struct CandidateReport {
  CandidateAction action;
  double first_order_dv = 0.0;
  PivotEstimate estimate;
  std::optional<double> oracle_cost;  // true re-solved cost, when evaluated
  bool feasible = false;              // the pivot produced an estimate
  std::string note;
};

struct RankingReport {
  std::string case_name;
  double base_cost = 0.0;
  int top_t = 6;
  std::vector<CandidateReport> candidates;  // refined order
  std::optional<CandidateAction> best;
  std::string status;
  std::vector<std::string> log;
};

namespace detail {

inline bool refined_before(const CandidateReport& a, const CandidateReport& b) {
  const double inf = std::numeric_limits<double>::infinity();
  const double da = a.estimate.delta_cost.value_or(inf), db = b.estimate.delta_cost.value_or(inf);
  if (da != db) return da < db;
  if (is_line(a.action) != is_line(b.action)) return is_line(a.action);
  return element_id(a.action) < element_id(b.action);
}

}  // namespace detail

inline RankingReport improved_heuristic(const DcOpfSolution& sol, int top_t = 6) {
  if (top_t <= 0) throw ValidationError("T must be positive");
  const Network& net = sol.network();
  RankingReport rep;
  rep.case_name = net.name;
  rep.base_cost = sol.objective;
  rep.top_t = top_t;

  const CandidateRanking lines = rank_lines(sol, Method::kM2);
  const CandidateRanking splits = rank_splits(sol, &rep.log);

  std::vector<RankedAction> picked;
  for (size_t k = 0; k < splits.size() && k < static_cast<size_t>(top_t); ++k)
    picked.push_back(splits.entries[k]);
  // A no-transfer split that moves exactly one line duplicates that line's
  // opening; the split record is kept.
  std::set<int> covered;
  for (const auto& e : picked) {
    const auto& spec = std::get<SplitSpec>(e.action);
    const auto mv = moved_lines(net, spec);
    if (spec.scenario == SplitScenario::kNone && mv.size() == 1) covered.insert(mv.front());
  }
  for (size_t k = 0; k < lines.size() && k < static_cast<size_t>(top_t); ++k) {
    const int id = std::get<LineOpening>(lines.entries[k].action).line;
    if (covered.count(id)) {
      rep.log.push_back("line " + describe(net, lines.entries[k].action) +
                        " dropped in favor of the equivalent split record");
      continue;
    }
    picked.push_back(lines.entries[k]);
  }

  const PivotContext ctx(sol);
  for (const auto& e : picked) {
    CandidateReport c;
    c.action = e.action;
    c.first_order_dv = e.score;
    c.estimate = refine(ctx, e.action);
    c.feasible = c.estimate.delta_cost.has_value();
    c.note = c.estimate.reason;
    rep.candidates.push_back(std::move(c));
  }
  std::stable_sort(rep.candidates.begin(), rep.candidates.end(), detail::refined_before);

  const double tol = benefit_tol(sol.objective);
  if (!rep.candidates.empty() && rep.candidates.front().estimate.delta_cost &&
      *rep.candidates.front().estimate.delta_cost < -tol) {
    rep.best = rep.candidates.front().action;
    rep.status = "ok";
  } else {
    rep.status = "no beneficial action";
  }
  return rep;
}

inline RankingReport improved_heuristic(const Network& net, int top_t = 6) {
  return improved_heuristic(solve_opf(net), top_t);
}

// ---------------------------------------------------------------------------
// Iterative line opening

struct IterationTrace {
  Network final_network;
  std::vector<double> costs;  // base first, then after each opening
  std::vector<int> opened;    // line ids
  std::string status;
};

// Line candidates of a line-only method, best first.
inline std::vector<int> line_candidates(const DcOpfSolution& sol, Method method) {
  std::vector<int> out;
  if (method == Method::kM0 || method == Method::kM1) {
    for (const auto& e : baseline_criterion(sol, method).entries)
      out.push_back(std::get<LineOpening>(e.action).line);
  } else if (method == Method::kM2 || method == Method::kRuiz) {
    const double tol = benefit_tol(sol.objective);
    for (const auto& e : rank_lines(sol, method).entries)
      if (e.score < -tol) out.push_back(std::get<LineOpening>(e.action).line);
  } else {
    throw ValidationError("iterative opening takes M0, M1 or M2");
  }
  return out;
}

inline IterationTrace iterative_line_opening(const Network& net, Method method, int max_open,
                                             const SimplexOptions& opts = {}) {
  IterationTrace tr;
  tr.final_network = net;
  DcOpfSolution sol = solve_opf(net, Formulation::kAngle, opts);
  tr.costs.push_back(sol.objective);
  tr.status = "max_open reached";
  for (int step = 0; step < max_open; ++step) {
    bool opened = false;
    for (int id : line_candidates(sol, method)) {
      Network next = tr.final_network;
      next.lines[id].in_service = false;
      if (!is_connected(next)) continue;
      try {
        DcOpfSolution s = solve_opf(next, Formulation::kAngle, opts);
        tr.final_network = std::move(next);
        tr.opened.push_back(id);
        tr.costs.push_back(s.objective);
        sol = std::move(s);
        opened = true;
        break;
      } catch (const InfeasibleError&) {
      }
    }
    if (!opened) {
      tr.status = "no feasible line to open";
      break;
    }
  }
  if (max_open <= 0) tr.status = "max_open reached";
  return tr;
}

}  // namespace otr
