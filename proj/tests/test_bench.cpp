#include <gtest/gtest.h>

#include <cstdlib>

#include "oracle_values.hpp"
#include "otr/bench.hpp"
#include "test_util.hpp"

using namespace otr;
using otr::test::load;

namespace {

MethodResult row(std::string case_name, Method m, std::optional<double> cost, std::string label) {
  MethodResult r;
  r.case_name = std::move(case_name);
  r.method = m;
  r.cost = cost;
  r.wall_time = 0.125;
  r.action_label = std::move(label);
  return r;
}

}  // namespace

TEST(RunMethod, UncongestedCaseKeepsBaseCost) {
  const Network net = load("cases/case118.m");
  for (Method m : {Method::kM0, Method::kM1, Method::kM2, Method::kM3, Method::kRuiz}) {
    const auto r = run_method(net, m);
    ASSERT_TRUE(r.cost);
    EXPECT_EQ(*r.cost, r.base_cost);
    EXPECT_FALSE(r.action);
    EXPECT_EQ(r.action_label, "none");
    EXPECT_EQ(r.note, "no action selected");
    EXPECT_GE(r.wall_time, 0.0);
  }
}

TEST(RunMethod, ReportedCostIsAResolve) {
  const Network net = load("fixtures/case14_congested.m");
  for (Method m : {Method::kM0, Method::kM2, Method::kM3, Method::kM4}) {
    const auto r = run_method(net, m);
    if (!r.action || !r.cost) continue;
    EXPECT_NEAR(*r.cost, solve_opf_cost(apply_action(net, *r.action)), 1e-9 * *r.cost);
    EXPECT_EQ(r.action_label, describe(net, *r.action));
  }
}

TEST(RunMethod, M2OnTri3FindsTheBestLine) {
  const auto r = run_method(load("fixtures/tri3.m"), Method::kM2);
  ASSERT_TRUE(r.action);
  EXPECT_EQ(std::get<LineOpening>(*r.action).line, oracle::kTri3BestLine);
  EXPECT_NEAR(*r.cost, oracle::kTri3BestLineCost, 1e-6 * oracle::kTri3BestLineCost);
}

TEST(Oracle, TwoBusHasNoFeasibleAction) {
  const auto r = otr::oracle(test::two_bus(), OracleScope::kBoth, 1);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].status, "islanded");
  EXPECT_FALSE(r.best_action);
  const Json j = to_json(test::two_bus(), r);
  EXPECT_EQ(j["best_cost"], "N/A");
}

struct OracleFixture {
  const char* file;
  int best_line;
  double best_line_cost;
  int split_count;
  double best_split_cost;
  double best_cost;
};

class OracleAgreement : public ::testing::TestWithParam<OracleFixture> {};

TEST_P(OracleAgreement, MatchesIndependentEnumeration) {
  const auto& f = GetParam();
  const Network net = load(f.file);
  const auto lines = otr::oracle(net, OracleScope::kLines, 2);
  ASSERT_TRUE(lines.best_action);
  EXPECT_EQ(std::get<LineOpening>(*lines.best_action).line, f.best_line);
  EXPECT_NEAR(*lines.best_cost, f.best_line_cost, 1e-6 * f.best_line_cost);
  const auto splits = otr::oracle(net, OracleScope::kSplits, 2);
  EXPECT_EQ(static_cast<int>(splits.entries.size()), f.split_count);
  EXPECT_NEAR(*splits.best_cost, f.best_split_cost, 1e-6 * f.best_split_cost);
  const auto both = otr::oracle(net, OracleScope::kBoth, 2);
  EXPECT_EQ(both.entries.size(), lines.entries.size() + splits.entries.size());
  EXPECT_NEAR(*both.best_cost, f.best_cost, 1e-6 * f.best_cost);
  for (const auto& e : both.entries) {
    EXPECT_EQ(e.cost.has_value(), e.status == "ok");
    if (e.cost) EXPECT_GE(*e.cost, *both.best_cost);
  }
}

TEST_P(OracleAgreement, ThreadCountDoesNotChangeResult) {
  const Network net = load(GetParam().file);
  const auto a = otr::oracle(net, OracleScope::kLines, 1);
  const auto b = otr::oracle(net, OracleScope::kLines, 4);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (size_t k = 0; k < a.entries.size(); ++k) {
    EXPECT_EQ(a.entries[k].status, b.entries[k].status);
    EXPECT_EQ(a.entries[k].cost, b.entries[k].cost);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Fixtures, OracleAgreement,
    ::testing::Values(OracleFixture{"fixtures/tri3.m", oracle::kTri3BestLine, oracle::kTri3BestLineCost,
                                    oracle::kTri3SplitCount, oracle::kTri3BestSplitCost,
                                    oracle::kTri3BestActionCost},
                      OracleFixture{"fixtures/case14_congested.m", oracle::kCase14CongestedBestLine,
                                    oracle::kCase14CongestedBestLineCost,
                                    oracle::kCase14CongestedSplitCount,
                                    oracle::kCase14CongestedBestSplitCost,
                                    oracle::kCase14CongestedBestActionCost}),
    [](const auto& info) {
      std::string s = info.param.file;
      s = s.substr(s.find('/') + 1);
      return s.substr(0, s.find('.'));
    });

TEST(Oracle, ThreadsFromEnvironment) {
  ::setenv("OTR_THREADS", "3", 1);
  EXPECT_EQ(oracle_threads(), 3u);
  ::setenv("OTR_THREADS", "0", 1);
  EXPECT_GE(oracle_threads(), 1u);
  ::setenv("OTR_THREADS", "junk", 1);
  EXPECT_GE(oracle_threads(), 1u);
  ::unsetenv("OTR_THREADS");
  EXPECT_GE(oracle_threads(), 1u);
}

TEST(Oracle, ScopeNames) {
  EXPECT_EQ(parse_scope("splits"), OracleScope::kSplits);
  EXPECT_EQ(to_string(parse_scope("both")), "both");
  EXPECT_THROW(parse_scope("all"), ValidationError);
}

TEST(Report, EmptyInputGivesHeaderOnly) {
  EXPECT_EQ(emit_report({}, ReportFormat::kCsv), "case,method,cost,time_s,action\n");
  EXPECT_EQ(emit_report({}, ReportFormat::kJson), "[]\n");
  const std::string md = emit_report({}, ReportFormat::kMarkdown);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2);
}

TEST(Report, SingleRowInEveryFormat) {
  const std::vector<MethodResult> rs{row("case14", Method::kM2, 5180.5, "line 3 (2,3)")};
  const auto csv = parse_csv(emit_report(rs, ReportFormat::kCsv));
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[1], (std::vector<std::string>{"case14", "M2", "5180.5", "0.125", "line 3 (2,3)"}));
  const Json j = Json::parse(emit_report(rs, ReportFormat::kJson));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["cost"].get<double>(), 5180.5);
  EXPECT_EQ(j[0]["action"], "line 3 (2,3)");
  EXPECT_NE(emit_report(rs, ReportFormat::kMarkdown).find("| case14 | M2 | 5180.50 | 0.125 | line 3 (2,3) |"),
            std::string::npos);
}

TEST(Report, CsvRoundTripKeepsMissingCosts) {
  const std::vector<MethodResult> rs{row("a", Method::kM0, std::nullopt, "none"),
                                     row("b, quoted", Method::kM4, 1.0 / 3.0, "bus 4 split {5} \"both\"")};
  const auto csv = parse_csv(emit_report(rs, ReportFormat::kCsv));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[1][2], "N/A");
  EXPECT_EQ(csv[2][0], "b, quoted");
  EXPECT_EQ(std::stod(csv[2][2]), 1.0 / 3.0);
  EXPECT_EQ(csv[2][4], "bus 4 split {5} \"both\"");
}

TEST(Report, JsonRecordsRoundTrip) {
  const MethodResult r = row("case9", Method::kRuiz, std::nullopt, "none");
  const MethodResult back = method_result_from_json(to_json(r));
  EXPECT_EQ(back.case_name, "case9");
  EXPECT_EQ(back.method, Method::kRuiz);
  EXPECT_FALSE(back.cost);
  EXPECT_THROW(method_result_from_json(Json{{"case", "x"}}), ValidationError);
  EXPECT_EQ(parse_format("md"), ReportFormat::kMarkdown);
  EXPECT_THROW(parse_format("xml"), ValidationError);
}

TEST(ImprovedHeuristic, TopSixCoversTheBestLine) {
  const auto sol = solve_opf(load("fixtures/case14_congested.m"));
  const auto r = rank_lines(sol, Method::kM2);
  bool found = false;
  for (size_t k = 0; k < r.size() && k < 6; ++k)
    found |= std::get<LineOpening>(r.entries[k].action).line == oracle::kCase14CongestedBestLine;
  EXPECT_TRUE(found);
}
