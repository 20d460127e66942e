#include <gtest/gtest.h>

#include <random>

#include "otr/pivot.hpp"
#include "test_util.hpp"

using namespace otr;
using otr::test::load;

namespace {

// Line openings plus the no-transfer and load-only restricted splits: the
// actions whose modified LP is the post-action OPF.
std::vector<CandidateAction> exact_actions(const DcOpfSolution& sol) {
  std::vector<CandidateAction> out;
  for (int id : detail::switchable_lines(sol.network())) out.push_back(LineOpening{id});
  for (const SplitSpec& s : enumerate_splits(sol))
    if (s.scenario == SplitScenario::kNone || s.scenario == SplitScenario::kLoadOnly) out.push_back(s);
  return out;
}

std::optional<double> true_delta(const DcOpfSolution& sol, const CandidateAction& a) {
  try {
    return solve_opf_cost(apply_action(sol.network(), a)) - sol.objective;
  } catch (const InfeasibleError&) {
    return std::nullopt;
  } catch (const IslandingError&) {
    return std::nullopt;
  }
}

}  // namespace

TEST(ColumnDelta, LineOpeningTouchesFourAngleColumns) {
  const auto sol = solve_opf(load("fixtures/tri3.m"));
  const ColumnDelta d = column_delta(sol, LineOpening{1});
  ASSERT_EQ(d.modified_cols.size(), 4u);
  ASSERT_EQ(d.new_cols.size(), 4u);
  EXPECT_FALSE(d.rhs_changed());
  for (int j : d.modified_cols) {
    const auto kind = sol.lp->column_tags[j].kind;
    EXPECT_TRUE(kind == ColumnKind::kThetaPlus || kind == ColumnKind::kThetaMinus);
  }
  // an opened line leaves no coupling between its ends
  const Line& l = sol.network().lines[1];
  EXPECT_NEAR(d.new_cols[0][sol.problem->flow_upper_row[1]], 0.0, 1e-12);
  EXPECT_NEAR(d.new_cols[0][sol.problem->balance_row[l.to]], 0.0, 1e-12);
}

TEST(ColumnDelta, LoadSplitMovesRightHandSide) {
  const auto sol = solve_opf(load("fixtures/tri3.m"));
  bool seen = false;
  for (const SplitSpec& s : enumerate_splits(sol)) {
    const ColumnDelta d = column_delta(sol, s);
    EXPECT_EQ(d.rhs_changed(), s.p_new != 0.0) << describe(sol.network(), s);
    seen |= s.scenario == SplitScenario::kLoadOnly;
  }
  EXPECT_TRUE(seen);
}

TEST(ColumnDelta, RejectsOutOfServiceAndWideSplits) {
  Network net = load("cases/case14.m");
  net.lines[0].in_service = false;
  const auto sol = solve_opf(net);
  EXPECT_THROW(column_delta(sol, LineOpening{0}), ValidationError);
  EXPECT_THROW(column_delta(sol, LineOpening{999}), ValidationError);
  const int bus = 3;  // external bus 4
  const auto nb = net.neighbors(bus);
  ASSERT_GE(nb.size(), 3u);
  EXPECT_THROW(column_delta(sol, SplitSpec{bus, {nb[0], nb[1]}, SplitScenario::kNone, 0.0}), ValidationError);
  const auto ptdf_sol = solve_opf(net, Formulation::kPtdf);
  EXPECT_THROW(column_delta(ptdf_sol, LineOpening{1}), ValidationError);
}

class ModifiedLp : public ::testing::TestWithParam<const char*> {};

TEST_P(ModifiedLp, ResolveMatchesPostActionOpf) {
  const auto sol = solve_opf(load(GetParam()));
  int checked = 0;
  for (const CandidateAction& a : exact_actions(sol)) {
    const auto truth = true_delta(sol, a);
    if (!truth) continue;
    const StandardFormLp lp = modified_lp(*sol.lp, column_delta(sol, a));
    const double dv = simplex_solve(lp).objective - sol.basis.objective;
    EXPECT_NEAR(dv, *truth, 1e-6 * std::max(1.0, std::abs(sol.objective))) << describe(sol.network(), a);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST_P(ModifiedLp, RecheckAgreesWithFullPricing) {
  const auto sol = solve_opf(load(GetParam()));
  for (const CandidateAction& a : exact_actions(sol)) {
    const ColumnDelta d = column_delta(sol, a);
    const StandardFormLp lp = modified_lp(*sol.lp, d);
    const Eigen::VectorXd full = lp.c - lp.a.transpose() * sol.basis.y;
    std::vector<int> entering;
    for (int j : sol.basis.nonbasic_idx)
      if (full[j] < -kReducedCostTol) entering.push_back(j);
    auto rc = nonbasic_recheck(sol, d);
    std::sort(rc.entering.begin(), rc.entering.end());
    EXPECT_EQ(rc.entering, entering) << describe(sol.network(), a);
  }
}

TEST_P(ModifiedLp, PivotEstimateNeverBeatsTheOptimum) {
  const auto sol = solve_opf(load(GetParam()));
  const PivotContext ctx(sol);
  const double tol = 1e-6 * std::max(1.0, std::abs(sol.objective));
  int estimated = 0;
  for (const CandidateAction& a : exact_actions(sol)) {
    const PivotEstimate e = refine(ctx, a);
    if (!e.delta_cost) continue;
    const auto truth = true_delta(sol, a);
    if (!truth) continue;
    EXPECT_GE(*e.delta_cost, *truth - tol) << describe(sol.network(), a) << " " << to_string(e.path);
    ++estimated;
  }
  EXPECT_GT(estimated, 0);
}

INSTANTIATE_TEST_SUITE_P(Cases, ModifiedLp,
                         ::testing::Values("fixtures/tri3.m", "fixtures/case14_congested.m"),
                         [](const auto& info) {
                           std::string s = info.param;
                           s = s.substr(s.find('/') + 1);
                           return s.substr(0, s.find('.'));
                         });

TEST(Recheck, UnchangedColumnsStayOptimal) {
  const auto sol = solve_opf(load("fixtures/case14_congested.m"));
  ColumnDelta d = column_delta(sol, LineOpening{0});
  for (size_t c = 0; c < d.modified_cols.size(); ++c) d.new_cols[c] = sol.lp->column(d.modified_cols[c]);
  const auto r = nonbasic_recheck(sol, d);
  EXPECT_TRUE(r.still_optimal);
  for (size_t c = 0; c < d.modified_cols.size(); ++c)
    EXPECT_NEAR(r.modified_reduced[c], sol.basis.reduced_costs[d.modified_cols[c]], 1e-9);
}

TEST(Rank1, ZeroPerturbationIsIdentity) {
  const auto sol = solve_opf(load("fixtures/tri3.m"));
  const int m = sol.lp->rows();
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(m, 0.1, 1.0);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  const auto a = rank1_basis_update(*sol.lp, sol.basis, Eigen::VectorXd::Zero(m), v, 0.3);
  const auto b = rank1_basis_update(*sol.lp, sol.basis, u, v, 0.0);
  EXPECT_LT((a.x_b - sol.basis.x_b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.x_b - sol.basis.x_b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(b.cost, sol.basis.objective, 1e-9);
}

TEST(Rank1, MatchesRefactoredBasisOnRandomPerturbations) {
  const auto sol = solve_opf(load("fixtures/case14_congested.m"));
  const Eigen::MatrixXd b0 = sol.basis.factorization->matrix();
  const int m = sol.lp->rows();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd u(m), v(m);
    for (int i = 0; i < m; ++i) u[i] = unif(rng), v[i] = unif(rng);
    const double delta = 0.05 * unif(rng);
    Rank1Result r;
    try {
      r = rank1_basis_update(*sol.lp, sol.basis, u, v, delta);
    } catch (const SingularError&) {
      continue;
    }
    const Eigen::MatrixXd b1 = b0 + delta * u * v.transpose();
    const Eigen::VectorXd direct = b1.partialPivLu().solve(sol.lp->b);
    EXPECT_LT((r.x_b - direct).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Rank1, SingularUpdateIsReported) {
  const auto sol = solve_opf(load("fixtures/tri3.m"));
  const int m = sol.lp->rows();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  v[0] = 1.0;
  const Eigen::VectorXd u = sol.basis.factorization->matrix().col(0);
  EXPECT_THROW(rank1_basis_update(*sol.lp, sol.basis, u, v, -1.0), SingularError);
}

TEST(ImprovedHeuristic, UncongestedCaseHasNoBeneficialAction) {
  const auto rep = improved_heuristic(load("cases/case118.m"));
  EXPECT_EQ(rep.status, "no beneficial action");
  EXPECT_FALSE(rep.best);
  EXPECT_EQ(rep.top_t, 6);
  EXPECT_LE(rep.candidates.size(), 12u);
}

TEST(ImprovedHeuristic, RefinedOrderAndBestOnTri3) {
  const auto sol = solve_opf(load("fixtures/tri3.m"));
  const auto rep = improved_heuristic(sol, 6);
  ASSERT_FALSE(rep.candidates.empty());
  for (size_t k = 1; k < rep.candidates.size(); ++k) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_LE(rep.candidates[k - 1].estimate.delta_cost.value_or(inf),
              rep.candidates[k].estimate.delta_cost.value_or(inf));
  }
  for (const auto& c : rep.candidates) EXPECT_EQ(c.feasible, c.estimate.delta_cost.has_value());
  if (rep.best) {
    EXPECT_EQ(rep.status, "ok");
    EXPECT_LT(*rep.candidates.front().estimate.delta_cost, 0.0);
  }
  EXPECT_THROW(improved_heuristic(sol, 0), ValidationError);
}

TEST(ImprovedHeuristic, Deterministic) {
  const auto sol = solve_opf(load("fixtures/case14_congested.m"));
  const auto a = improved_heuristic(sol, 6), b = improved_heuristic(sol, 6);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (size_t k = 0; k < a.candidates.size(); ++k) {
    EXPECT_EQ(a.candidates[k].action, b.candidates[k].action);
    EXPECT_EQ(a.candidates[k].estimate.delta_cost, b.candidates[k].estimate.delta_cost);
  }
}

TEST(IterativeOpening, ZeroBudgetKeepsBase) {
  const Network net = load("fixtures/tri3.m");
  const auto tr = iterative_line_opening(net, Method::kM2, 0);
  ASSERT_EQ(tr.costs.size(), 1u);
  EXPECT_TRUE(tr.opened.empty());
  EXPECT_NEAR(tr.costs[0], solve_opf_cost(net), 1e-9);
}

TEST(IterativeOpening, UncongestedOpensNothing) {
  const auto tr = iterative_line_opening(load("cases/case118.m"), Method::kM2, 3);
  EXPECT_TRUE(tr.opened.empty());
  EXPECT_EQ(tr.status, "no feasible line to open");
}

TEST(IterativeOpening, NeverIslandsAndCostsMatchResolves) {
  for (Method m : {Method::kM0, Method::kM1, Method::kM2}) {
    const auto tr = iterative_line_opening(load("fixtures/case14_congested.m"), m, 3);
    EXPECT_EQ(tr.costs.size(), tr.opened.size() + 1);
    EXPECT_TRUE(is_connected(tr.final_network));
    EXPECT_NEAR(tr.costs.back(), solve_opf_cost(tr.final_network), 1e-6 * tr.costs.back());
    for (int id : tr.opened) EXPECT_FALSE(tr.final_network.lines[id].in_service);
  }
  EXPECT_THROW(iterative_line_opening(load("fixtures/tri3.m"), Method::kM3, 1), ValidationError);
}
