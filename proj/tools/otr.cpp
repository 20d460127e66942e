// otr: command-line front end for the switching and splitting toolkit.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "otr/bench.hpp"

namespace fs = std::filesystem;
using namespace otr;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

#ifndef OTR_DATA_DIR
#define OTR_DATA_DIR "data"
#endif

// A path, or a bare case name looked up under $OTR_DATA_DIR or the bundled
// data directory.
std::string resolve_case(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const char* env = std::getenv("OTR_DATA_DIR");
  const fs::path root = env && *env ? env : OTR_DATA_DIR;
  for (const char* sub : {"cases", "fixtures"})
    for (const char* ext : {"", ".m"}) {
      fs::path p = root / sub / (arg + ext);
      if (fs::exists(p)) return p.string();
    }
  throw ValidationError("case file not found: " + arg);
}

struct CaseArgs {
  std::string path;
  bool drop_bad_x = false;

  Network load() const {
    ParseOptions po;
    po.drop_nonpositive_reactance = drop_bad_x;
    return load_case(resolve_case(path), po);
  }
};

void add_case(CLI::App* cmd, CaseArgs& c) {
  cmd->add_option("case", c.path, "MATPOWER case file or bundled case name")->required();
  cmd->add_flag("--drop-nonpositive-x", c.drop_bad_x,
                "drop branches with zero or negative reactance instead of rejecting the case");
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A JSON array, or any sequence of JSON objects (NDJSON or concatenated
// pretty-printed records from `otr run`).
void collect_results(const std::string& text, std::vector<MethodResult>& out) {
  std::istringstream in(text);
  while (in >> std::ws && in.peek() != std::char_traits<char>::eof()) {
    Json j;
    try {
      in >> j;
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("report input is not JSON: ") + e.what());
    }
    if (j.is_array())
      for (const auto& e : j) out.push_back(method_result_from_json(e));
    else
      out.push_back(method_result_from_json(j));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line switching and bus splitting on the DC optimal power flow"};
  app.require_subcommand(1);

  CaseArgs ca;
  std::string method_name = "m2", scope_name = "both", format_name;
  int top = 0, max_open = 5;
  bool ptdf = false, with_oracle = false;
  std::vector<std::string> inputs;

  auto* solve = app.add_subcommand("solve", "solve the DC-OPF and print the primal-dual point");
  add_case(solve, ca);
  solve->add_flag("--ptdf", ptdf, "use the PTDF formulation");

  auto* rank = app.add_subcommand("rank", "rank candidate actions by first-order effect");
  add_case(rank, ca);
  rank->add_option("--method", method_name, "m0, m1, m2, m3 or ruiz")->capture_default_str();
  rank->add_option("--top", top, "keep the first T entries (0 keeps all)")->check(CLI::NonNegativeNumber);
  rank->add_option("--format", format_name, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* run = app.add_subcommand("run", "apply one method's action and re-solve");
  add_case(run, ca);
  run->add_option("--method", method_name, "m0..m4, ruiz, or all")->capture_default_str();
  run->add_option("--format", format_name, "json, csv or markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown"}));

  auto* refine_cmd = app.add_subcommand("refine", "pivot-refined candidate report");
  add_case(refine_cmd, ca);
  refine_cmd->add_option("--top", top, "candidates per class")->check(CLI::PositiveNumber);
  refine_cmd->add_flag("--with-oracle", with_oracle, "re-solve every candidate");

  auto* orc = app.add_subcommand("oracle", "re-solve every single action");
  add_case(orc, ca);
  orc->add_option("--scope", scope_name, "lines, splits or both")
      ->check(CLI::IsMember({"lines", "splits", "both"}))
      ->capture_default_str();

  auto* iter = app.add_subcommand("iterate", "open lines one at a time");
  add_case(iter, ca);
  iter->add_option("--method", method_name, "m0, m1 or m2")->capture_default_str();
  iter->add_option("--max-open", max_open, "number of openings")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* report = app.add_subcommand("report", "tabulate method results read from files or stdin");
  report->add_option("--format", format_name, "json, csv or markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown"}))
      ->required();
  report->add_option("--input,inputs", inputs, "result files from `otr run` (default: stdin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*solve) {
      const Network net = ca.load();
      const auto sol = solve_opf(net, ptdf ? Formulation::kPtdf : Formulation::kAngle);
      std::cout << to_json(sol).dump(2) << "\n";
    } else if (*rank) {
      const Network net = ca.load();
      const Method m = parse_method(method_name);
      const auto sol = solve_opf(net);
      CandidateRanking r;
      if (m == Method::kM0 || m == Method::kM1) r = baseline_criterion(sol, m);
      else if (m == Method::kM2 || m == Method::kRuiz) r = rank_lines(sol, m);
      else if (m == Method::kM3) r = rank_combined(sol);
      else throw ValidationError("rank takes m0, m1, m2, m3 or ruiz");
      if (top > 0 && r.entries.size() > static_cast<size_t>(top)) r.entries.resize(top);
      if (format_name == "csv") std::cout << to_csv(net, r);
      else std::cout << to_json(net, r).dump(2) << "\n";
    } else if (*run) {
      const Network net = ca.load();
      std::vector<Method> methods;
      if (method_name == "all")
        methods = {Method::kM0, Method::kM1, Method::kM2, Method::kM3, Method::kM4};
      else
        methods = {parse_method(method_name)};
      std::vector<MethodResult> results;
      for (Method m : methods) results.push_back(run_method(net, m));
      if (!format_name.empty()) {
        std::cout << emit_report(results, parse_format(format_name));
      } else if (results.size() == 1) {
        std::cout << to_json(results.front()).dump(2) << "\n";
      } else {
        Json arr = Json::array();
        for (const auto& r : results) arr.push_back(to_json(r));
        std::cout << arr.dump(2) << "\n";
      }
    } else if (*refine_cmd) {
      const Network net = ca.load();
      auto rep = improved_heuristic(net, top > 0 ? top : 6);
      if (with_oracle)
        for (auto& c : rep.candidates) {
          try {
            c.oracle_cost = solve_opf_cost(apply_action(net, c.action));
          } catch (const InfeasibleError&) {
          } catch (const IslandingError&) {
          }
        }
      std::cout << to_json(net, rep).dump(2) << "\n";
    } else if (*orc) {
      const Network net = ca.load();
      std::cout << to_json(net, oracle(net, parse_scope(scope_name))).dump(2) << "\n";
    } else if (*iter) {
      const Network net = ca.load();
      const Method m = parse_method(method_name);
      std::cout << to_json(net, iterative_line_opening(net, m, max_open), m).dump(2) << "\n";
    } else if (*report) {
      std::vector<MethodResult> results;
      if (inputs.empty()) {
        collect_results(read_all(std::cin), results);
      } else {
        for (const auto& path : inputs) {
          std::ifstream in(path);
          if (!in) throw ValidationError("cannot read " + path);
          collect_results(read_all(in), results);
        }
      }
      std::cout << emit_report(results, parse_format(format_name));
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "otr: infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "otr: parse error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "otr: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const IslandingError& e) {
    std::cerr << "otr: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "otr: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
