#pragma once

// DC optimal power flow with a linear cost, posed as a standard-form LP with
// the column layout x = (pg, theta+, theta-, fbar+, funder+, pbar+, punder+),
// solved by the revised simplex, and mapped back to the Lagrangian
// multipliers (lambda, mu, nu) of the bound-form problem.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <memory>
#include <vector>

#include "otr/error.hpp"
#include "otr/network.hpp"
#include "otr/simplex.hpp"

namespace otr {

enum class Formulation { kAngle, kPtdf };

// Index maps of one OPF instance. Per-line maps hold -1 for lines that are
// out of service (no flow rows are generated for them).
struct DcOpfProblem {
  Network net;
  Formulation formulation = Formulation::kAngle;

  std::vector<int> pg_col, theta_plus_col, theta_minus_col;
  std::vector<int> flow_upper_slack, flow_lower_slack;
  std::vector<int> gen_upper_slack, gen_lower_slack;

  std::vector<int> balance_row;  // per bus (angle form)
  int power_sum_row = -1;        // ptdf form
  std::vector<int> flow_upper_row, flow_lower_row;
  std::vector<int> gen_upper_row, gen_lower_row;

  // pg = x_pg + pg_shift; nonzero only where p_min < 0.
  Eigen::VectorXd pg_shift;
  Eigen::MatrixXd ptdf;  // ptdf form only

  int num_rows = 0;
  int num_cols = 0;
};

namespace detail {

inline void check_capacity(const Network& net) {
  double pmax = 0, pmin = 0, load = 0;
  for (const auto& g : net.generators) {
    pmax += g.p_max;
    pmin += g.p_min;
  }
  for (const auto& b : net.buses) load += b.pd;
  if (pmax < load - 1e-9)
    throw InfeasibleError("total generation capacity " + std::to_string(pmax * net.base_mva) +
                          " MW is below total load " + std::to_string(load * net.base_mva) +
                          " MW");
  if (pmin > load + 1e-9)
    throw InfeasibleError("total minimum generation exceeds total load");
}

inline void layout_common(DcOpfProblem& p, int& col, int& row) {
  const Network& net = p.net;
  const int ng = net.num_generators(), m = net.num_lines();
  p.flow_upper_slack.assign(m, -1);
  p.flow_lower_slack.assign(m, -1);
  p.flow_upper_row.assign(m, -1);
  p.flow_lower_row.assign(m, -1);
  for (const Line& l : net.lines)
    if (l.in_service) p.flow_upper_slack[l.id] = col++;
  for (const Line& l : net.lines)
    if (l.in_service) p.flow_lower_slack[l.id] = col++;
  p.gen_upper_slack.resize(ng);
  p.gen_lower_slack.resize(ng);
  for (int g = 0; g < ng; ++g) p.gen_upper_slack[g] = col++;
  for (int g = 0; g < ng; ++g) p.gen_lower_slack[g] = col++;

  for (const Line& l : net.lines)
    if (l.in_service) p.flow_upper_row[l.id] = row++;
  for (const Line& l : net.lines)
    if (l.in_service) p.flow_lower_row[l.id] = row++;
  p.gen_upper_row.resize(ng);
  p.gen_lower_row.resize(ng);
  for (int g = 0; g < ng; ++g) p.gen_upper_row[g] = row++;
  for (int g = 0; g < ng; ++g) p.gen_lower_row[g] = row++;

  p.pg_shift = Eigen::VectorXd::Zero(ng);
  for (int g = 0; g < ng; ++g)
    if (net.generators[g].p_min < 0) p.pg_shift[g] = net.generators[g].p_min;
}

}  // namespace detail

// Angle formulation: B0 theta = pg - pd, flow and generation bounds.
inline DcOpfProblem build_opf(const Network& net) {
  require_connected(net);
  detail::check_capacity(net);
  DcOpfProblem p;
  p.net = net;
  p.formulation = Formulation::kAngle;
  const int n = net.num_buses(), ng = net.num_generators();
  int col = 0, row = 0;
  p.pg_col.resize(ng);
  for (int g = 0; g < ng; ++g) p.pg_col[g] = col++;
  p.theta_plus_col.resize(n);
  p.theta_minus_col.resize(n);
  for (int k = 0; k < n; ++k) p.theta_plus_col[k] = col++;
  for (int k = 0; k < n; ++k) p.theta_minus_col[k] = col++;
  p.balance_row.resize(n);
  for (int k = 0; k < n; ++k) p.balance_row[k] = row++;
  detail::layout_common(p, col, row);
  p.num_rows = row;
  p.num_cols = col;
  return p;
}

// PTDF formulation: 1'(pg - pd) = 0, fmin <= Psi (pg - pd) <= fmax.
inline DcOpfProblem build_opf_ptdf(const Network& net) {
  require_connected(net);
  detail::check_capacity(net);
  DcOpfProblem p;
  p.net = net;
  p.formulation = Formulation::kPtdf;
  const int ng = net.num_generators();
  int col = 0, row = 0;
  p.pg_col.resize(ng);
  for (int g = 0; g < ng; ++g) p.pg_col[g] = col++;
  p.power_sum_row = row++;
  detail::layout_common(p, col, row);
  p.ptdf = ptdf_matrix(net);
  p.num_rows = row;
  p.num_cols = col;
  return p;
}

inline StandardFormLp to_standard_form(const DcOpfProblem& p) {
  const Network& net = p.net;
  const int ng = net.num_generators();
  std::vector<Eigen::Triplet<double>> t;
  StandardFormLp lp;
  lp.b = Eigen::VectorXd::Zero(p.num_rows);
  lp.c = Eigen::VectorXd::Zero(p.num_cols);
  lp.column_tags.resize(p.num_cols);
  lp.row_tags.resize(p.num_rows);
  const Eigen::VectorXd pd = net.load();

  for (int g = 0; g < ng; ++g) {
    lp.c[p.pg_col[g]] = net.generators[g].cost * net.base_mva;
    lp.column_tags[p.pg_col[g]] = {ColumnKind::kPg, g};
  }

  if (p.formulation == Formulation::kAngle) {
    const int n = net.num_buses();
    for (int k = 0; k < n; ++k) {
      lp.column_tags[p.theta_plus_col[k]] = {ColumnKind::kThetaPlus, k};
      lp.column_tags[p.theta_minus_col[k]] = {ColumnKind::kThetaMinus, k};
      lp.row_tags[p.balance_row[k]] = {RowKind::kBalance, k};
      lp.b[p.balance_row[k]] = pd[k];
    }
    for (int g = 0; g < ng; ++g) {
      const int bus = net.generators[g].bus;
      t.emplace_back(p.balance_row[bus], p.pg_col[g], 1.0);
      lp.b[p.balance_row[bus]] -= p.pg_shift[g];
    }
    // -B0 theta+ + B0 theta- in the balance rows.
    for (const Line& l : net.lines) {
      if (!l.in_service) continue;
      const int i = l.from, j = l.to;
      for (auto [r, c, v] : {std::tuple{i, i, l.b}, std::tuple{j, j, l.b},
                             std::tuple{i, j, -l.b}, std::tuple{j, i, -l.b}}) {
        t.emplace_back(p.balance_row[r], p.theta_plus_col[c], -v);
        t.emplace_back(p.balance_row[r], p.theta_minus_col[c], v);
      }
      const int ru = p.flow_upper_row[l.id], rl = p.flow_lower_row[l.id];
      t.emplace_back(ru, p.theta_plus_col[i], l.b);
      t.emplace_back(ru, p.theta_plus_col[j], -l.b);
      t.emplace_back(ru, p.theta_minus_col[i], -l.b);
      t.emplace_back(ru, p.theta_minus_col[j], l.b);
      t.emplace_back(rl, p.theta_plus_col[i], -l.b);
      t.emplace_back(rl, p.theta_plus_col[j], l.b);
      t.emplace_back(rl, p.theta_minus_col[i], l.b);
      t.emplace_back(rl, p.theta_minus_col[j], -l.b);
      lp.b[ru] = l.f_max;
      lp.b[rl] = -l.f_min;
    }
  } else {
    lp.row_tags[p.power_sum_row] = {RowKind::kPowerSum, 0};
    lp.b[p.power_sum_row] = pd.sum() - p.pg_shift.sum();
    const Eigen::VectorXd psi_pd = p.ptdf * pd;
    for (int g = 0; g < ng; ++g) t.emplace_back(p.power_sum_row, p.pg_col[g], 1.0);
    for (const Line& l : net.lines) {
      if (!l.in_service) continue;
      const int ru = p.flow_upper_row[l.id], rl = p.flow_lower_row[l.id];
      double shift = 0.0;
      for (int g = 0; g < ng; ++g) {
        const double psi = p.ptdf(l.id, net.generators[g].bus);
        shift += psi * p.pg_shift[g];
        if (psi == 0.0) continue;
        t.emplace_back(ru, p.pg_col[g], psi);
        t.emplace_back(rl, p.pg_col[g], -psi);
      }
      lp.b[ru] = l.f_max + psi_pd[l.id] - shift;
      lp.b[rl] = -l.f_min - psi_pd[l.id] + shift;
    }
  }

  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    const int su = p.flow_upper_slack[l.id], sl = p.flow_lower_slack[l.id];
    t.emplace_back(p.flow_upper_row[l.id], su, 1.0);
    t.emplace_back(p.flow_lower_row[l.id], sl, 1.0);
    lp.column_tags[su] = {ColumnKind::kSlackFlowUpper, l.id};
    lp.column_tags[sl] = {ColumnKind::kSlackFlowLower, l.id};
    lp.row_tags[p.flow_upper_row[l.id]] = {RowKind::kFlowUpper, l.id};
    lp.row_tags[p.flow_lower_row[l.id]] = {RowKind::kFlowLower, l.id};
  }
  for (int g = 0; g < ng; ++g) {
    const auto& gen = net.generators[g];
    const int ru = p.gen_upper_row[g], rl = p.gen_lower_row[g];
    t.emplace_back(ru, p.pg_col[g], 1.0);
    t.emplace_back(ru, p.gen_upper_slack[g], 1.0);
    t.emplace_back(rl, p.pg_col[g], -1.0);
    t.emplace_back(rl, p.gen_lower_slack[g], 1.0);
    lp.b[ru] = gen.p_max - p.pg_shift[g];
    lp.b[rl] = -gen.p_min + p.pg_shift[g];
    lp.column_tags[p.gen_upper_slack[g]] = {ColumnKind::kSlackGenUpper, g};
    lp.column_tags[p.gen_lower_slack[g]] = {ColumnKind::kSlackGenLower, g};
    lp.row_tags[ru] = {RowKind::kGenUpper, g};
    lp.row_tags[rl] = {RowKind::kGenLower, g};
  }

  lp.a.resize(p.num_rows, p.num_cols);
  lp.a.setFromTriplets(t.begin(), t.end());
  lp.a.makeCompressed();
  return lp;
}

// Optimal primal-dual point of the OPF. Prices are in $ per p.u. (divide by
// base_mva for $/MWh); angles in radians; powers in p.u.
struct DcOpfSolution {
  std::shared_ptr<const DcOpfProblem> problem;
  std::shared_ptr<const StandardFormLp> lp;
  BasisState basis;

  double objective = 0.0;  // $
  Eigen::VectorXd pg, theta, flows;
  Eigen::VectorXd lambda;        // per bus
  Eigen::VectorXd mu_lo, mu_hi;  // per line id, zero when out of service
  Eigen::VectorXd nu_lo, nu_hi;  // per generator
  bool degenerate = false;       // some basic variable sits at zero

  const Network& network() const { return problem->net; }
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double duality_gap = 0.0;  // |c'x - b'y| / max(1, |c'x|)

  double max() const {
    return std::max({stationarity, primal, dual, complementarity, duality_gap});
  }
};

// Residuals of the bound-form KKT system; multiplier terms are scaled by the
// largest cost coefficient so that tolerances are unit-free.
inline KktResiduals kkt_residuals(const DcOpfSolution& s) {
  const Network& net = s.network();
  KktResiduals r;
  double cscale = 1.0;
  for (const auto& g : net.generators) cscale = std::max(cscale, std::abs(g.cost * net.base_mva));

  if (s.problem->formulation == Formulation::kAngle) {
    for (int g = 0; g < net.num_generators(); ++g) {
      const auto& gen = net.generators[g];
      const double res = gen.cost * net.base_mva - s.lambda[gen.bus] + s.nu_hi[g] - s.nu_lo[g];
      r.stationarity = std::max(r.stationarity, std::abs(res) / cscale);
    }
    Incidence inc = incidence_and_weight(net);
    Eigen::VectorXd th = susceptance_matrix(net) * s.lambda +
                         inc.a0 * inc.weights.asDiagonal() * (s.mu_hi - s.mu_lo);
    r.stationarity = std::max(r.stationarity, th.cwiseAbs().maxCoeff() / cscale);
    Eigen::VectorXd bal = susceptance_matrix(net) * s.theta - net.bus_generation(s.pg) + net.load();
    r.primal = bal.cwiseAbs().maxCoeff();
  } else {
    r.primal = std::abs(s.pg.sum() - net.load().sum());
  }
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    const double f = s.flows[l.id];
    r.primal = std::max({r.primal, f - l.f_max, l.f_min - f});
    r.dual = std::max({r.dual, -s.mu_hi[l.id] / cscale, -s.mu_lo[l.id] / cscale});
    r.complementarity = std::max({r.complementarity,
                                  std::abs(s.mu_hi[l.id] * (l.f_max - f)) / cscale,
                                  std::abs(s.mu_lo[l.id] * (f - l.f_min)) / cscale});
  }
  for (int g = 0; g < net.num_generators(); ++g) {
    const auto& gen = net.generators[g];
    r.primal = std::max({r.primal, s.pg[g] - gen.p_max, gen.p_min - s.pg[g]});
    r.dual = std::max({r.dual, -s.nu_hi[g] / cscale, -s.nu_lo[g] / cscale});
    r.complementarity = std::max({r.complementarity,
                                  std::abs(s.nu_hi[g] * (gen.p_max - s.pg[g])) / cscale,
                                  std::abs(s.nu_lo[g] * (s.pg[g] - gen.p_min)) / cscale});
  }
  const double dual_obj = s.lp->b.dot(s.basis.y);
  const double primal_obj = s.basis.objective;
  r.duality_gap = std::abs(primal_obj - dual_obj) / std::max(1.0, std::abs(primal_obj));
  return r;
}

// Maps the optimal basis back to OPF quantities and multipliers. The bound
// pg >= p_min coincides with x_pg >= 0, so the reduced cost of each pg column
// is folded into nu_lo.
inline DcOpfSolution extract_duals(std::shared_ptr<const DcOpfProblem> prob,
                                   std::shared_ptr<const StandardFormLp> lp,
                                   BasisState basis) {
  const Network& net = prob->net;
  const int n = net.num_buses(), m = net.num_lines(), ng = net.num_generators();
  DcOpfSolution s;
  const Eigen::VectorXd x = basis.primal(lp->cols());
  const Eigen::VectorXd& y = basis.y;
  const Eigen::VectorXd& d = basis.reduced_costs;

  s.pg.resize(ng);
  for (int g = 0; g < ng; ++g) s.pg[g] = x[prob->pg_col[g]] + prob->pg_shift[g];
  s.objective = basis.objective;
  for (int g = 0; g < ng; ++g)
    s.objective += lp->c[prob->pg_col[g]] * prob->pg_shift[g];

  s.mu_lo = Eigen::VectorXd::Zero(m);
  s.mu_hi = Eigen::VectorXd::Zero(m);
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    s.mu_hi[l.id] = -y[prob->flow_upper_row[l.id]];
    s.mu_lo[l.id] = -y[prob->flow_lower_row[l.id]];
  }
  s.nu_lo.resize(ng);
  s.nu_hi.resize(ng);
  for (int g = 0; g < ng; ++g) {
    s.nu_hi[g] = -y[prob->gen_upper_row[g]];
    s.nu_lo[g] = -y[prob->gen_lower_row[g]] + d[prob->pg_col[g]];
  }
  // Bound multipliers within roundoff of zero are reported as zero.
  const double zero_tol = 1e-9 * std::max(1.0, lp->c.cwiseAbs().maxCoeff());
  for (Eigen::VectorXd* v : {&s.mu_lo, &s.mu_hi, &s.nu_lo, &s.nu_hi})
    for (auto& e : *v)
      if (e < 0 && e > -zero_tol) e = 0.0;

  if (prob->formulation == Formulation::kAngle) {
    s.theta.resize(n);
    s.lambda.resize(n);
    for (int k = 0; k < n; ++k) {
      s.theta[k] = x[prob->theta_plus_col[k]] - x[prob->theta_minus_col[k]];
      s.lambda[k] = y[prob->balance_row[k]];
    }
    s.flows = Eigen::VectorXd::Zero(m);
    for (const Line& l : net.lines)
      if (l.in_service) s.flows[l.id] = l.b * (s.theta[l.from] - s.theta[l.to]);
  } else {
    // LMP = d v / d pd = y_sum + Psi' (y_upper - y_lower).
    s.lambda = Eigen::VectorXd::Constant(n, y[prob->power_sum_row]);
    s.lambda -= prob->ptdf.transpose() * (s.mu_hi - s.mu_lo);
    DcFlow flow = dc_power_flow(net, net.bus_generation(s.pg) - net.load());
    s.theta = flow.theta;
    s.flows = flow.flows;
  }

  for (int r = 0; r < lp->rows(); ++r)
    if (std::abs(basis.x_b[r]) <= 1e-9) s.degenerate = true;

  s.problem = std::move(prob);
  s.lp = std::move(lp);
  s.basis = std::move(basis);

  const KktResiduals res = kkt_residuals(s);
  if (res.stationarity > 1e-5)
    throw ConsistencyError("dual extraction failed stationarity check (residual " +
                           std::to_string(res.stationarity) + ")");
  return s;
}

inline DcOpfSolution solve_opf(const Network& net,
                               Formulation form = Formulation::kAngle,
                               const SimplexOptions& opts = {}) {
  auto prob = std::make_shared<const DcOpfProblem>(
      form == Formulation::kAngle ? build_opf(net) : build_opf_ptdf(net));
  auto lp = std::make_shared<const StandardFormLp>(to_standard_form(*prob));
  SimplexOptions o = opts;
  o.factorize = true;
  BasisState basis = simplex_solve(*lp, o);
  return extract_duals(std::move(prob), std::move(lp), std::move(basis));
}

// Objective only; skips the final factorization and dual bookkeeping.
inline double solve_opf_cost(const Network& net, const SimplexOptions& opts = {}) {
  DcOpfProblem prob = build_opf(net);
  StandardFormLp lp = to_standard_form(prob);
  SimplexOptions o = opts;
  o.factorize = false;
  BasisState basis = simplex_solve(lp, o);
  double obj = basis.objective;
  for (int g = 0; g < net.num_generators(); ++g)
    obj += lp.c[prob.pg_col[g]] * prob.pg_shift[g];
  return obj;
}

}  // namespace otr
