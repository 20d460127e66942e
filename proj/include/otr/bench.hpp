#pragma once

// Method runs, the brute-force single-action oracle, and result tables.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "otr/io.hpp"
#include "otr/pivot.hpp"

namespace otr {

struct MethodResult {
  std::string case_name;
  Method method = Method::kM2;
  std::optional<double> cost;  // re-solved objective after the action; empty = N/A
  double wall_time = 0.0;      // s
  std::optional<CandidateAction> action;
  std::string action_label = "none";
  double base_cost = 0.0;
  std::string note;
};

// The single action a method commits to, if any.
inline std::optional<CandidateAction> select_action(const DcOpfSolution& sol, Method method) {
  const double tol = benefit_tol(sol.objective);
  switch (method) {
    case Method::kM0:
    case Method::kM1: {
      const auto r = baseline_criterion(sol, method);
      if (r.empty()) return std::nullopt;
      return r.entries.front().action;
    }
    case Method::kM2:
    case Method::kRuiz: {
      const auto r = rank_lines(sol, method);
      if (r.empty() || !(r.entries.front().score < -tol)) return std::nullopt;
      return r.entries.front().action;
    }
    case Method::kM3: {
      const auto r = rank_combined(sol);
      if (r.empty() || !(r.entries.front().score < -tol)) return std::nullopt;
      return r.entries.front().action;
    }
    case Method::kM4:
      return improved_heuristic(sol, 6).best;
  }
  return std::nullopt;
}

inline MethodResult run_method(const Network& net, Method method) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  MethodResult res;
  res.case_name = net.name;
  res.method = method;
  const DcOpfSolution sol = solve_opf(net);
  res.base_cost = sol.objective;
  res.action = select_action(sol, method);
  if (!res.action) {
    res.cost = sol.objective;
    res.note = "no action selected";
  } else {
    res.action_label = describe(net, *res.action);
    try {
      res.cost = solve_opf_cost(apply_action(net, *res.action));
    } catch (const IslandingError&) {
      res.note = "action islands the network";
    } catch (const InfeasibleError&) {
      res.note = "post-action OPF infeasible";
    }
  }
  res.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Oracle

enum class OracleScope { kLines, kSplits, kBoth };

inline std::string_view to_string(OracleScope s) {
  switch (s) {
    case OracleScope::kLines: return "lines";
    case OracleScope::kSplits: return "splits";
    case OracleScope::kBoth: return "both";
  }
  return "?";
}

inline OracleScope parse_scope(std::string_view s) {
  if (s == "lines") return OracleScope::kLines;
  if (s == "splits") return OracleScope::kSplits;
  if (s == "both") return OracleScope::kBoth;
  throw ValidationError("unknown oracle scope '" + std::string(s) + "'");
}

struct OracleEntry {
  CandidateAction action;
  std::optional<double> cost;
  std::string status;  // ok, islanded, infeasible
};

struct OracleResult {
  std::string case_name;
  OracleScope scope = OracleScope::kBoth;
  double base_cost = 0.0;
  std::optional<CandidateAction> best_action;
  std::optional<double> best_cost;
  std::vector<OracleEntry> entries;  // lines by id, then splits in enumeration order
};

// OTR_THREADS if set and positive, else the hardware count.
inline unsigned oracle_threads() {
  if (const char* env = std::getenv("OTR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline OracleResult oracle(const Network& net, OracleScope scope, unsigned threads = 0) {
  const DcOpfSolution sol = solve_opf(net);
  OracleResult res;
  res.case_name = net.name;
  res.scope = scope;
  res.base_cost = sol.objective;
  if (scope != OracleScope::kSplits)
    for (const Line& l : net.lines)
      if (l.in_service) res.entries.push_back({LineOpening{l.id}, std::nullopt, ""});
  if (scope != OracleScope::kLines)
    for (SplitSpec& s : enumerate_splits(sol)) res.entries.push_back({std::move(s), std::nullopt, ""});

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k = next++; k < res.entries.size(); k = next++) {
      OracleEntry& e = res.entries[k];
      try {
        e.cost = solve_opf_cost(apply_action(net, e.action));
        e.status = "ok";
      } catch (const IslandingError&) {
        e.status = "islanded";
      } catch (const InfeasibleError&) {
        e.status = "infeasible";
      }
    }
  };
  if (threads == 0) threads = oracle_threads();
  threads = static_cast<unsigned>(std::min<size_t>(threads, std::max<size_t>(1, res.entries.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& e : res.entries)
    if (e.cost && (!res.best_cost || *e.cost < *res.best_cost)) {
      res.best_cost = e.cost;
      res.best_action = e.action;
    }
  return res;
}

inline Json to_json(const Network& net, const OracleResult& r) {
  Json j;
  j["case"] = r.case_name;
  j["scope"] = std::string(to_string(r.scope));
  j["base_cost"] = r.base_cost;
  j["best_action"] = r.best_action ? to_json(net, *r.best_action) : Json();
  j["best_cost"] = r.best_cost ? Json(*r.best_cost) : Json("N/A");
  Json rows = Json::array();
  for (const auto& e : r.entries)
    rows.push_back({{"action", to_json(net, e.action)},
                    {"cost", e.cost ? Json(*e.cost) : Json("N/A")},
                    {"status", e.status}});
  j["entries"] = rows;
  return j;
}

inline Json to_json(const Network& net, const IterationTrace& tr, Method method) {
  Json j;
  j["case"] = net.name;
  j["method"] = std::string(to_string(method));
  j["costs"] = tr.costs;
  Json opened = Json::array();
  for (int id : tr.opened) opened.push_back(to_json(net, CandidateAction{LineOpening{id}}));
  j["opened"] = opened;
  j["final_cost"] = tr.costs.back();
  j["status"] = tr.status;
  return j;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { kJson, kCsv, kMarkdown };

inline ReportFormat parse_format(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw ValidationError("unknown report format '" + std::string(s) + "'");
}

inline Json to_json(const MethodResult& r) {
  Json j;
  j["case"] = r.case_name;
  j["method"] = std::string(to_string(r.method));
  j["cost"] = r.cost ? Json(*r.cost) : Json("N/A");
  j["time_s"] = r.wall_time;
  j["action"] = r.action_label;
  j["base_cost"] = r.base_cost;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline MethodResult method_result_from_json(const Json& j) {
  try {
    MethodResult r;
    r.case_name = j.at("case").get<std::string>();
    r.method = parse_method(j.at("method").get<std::string>());
    const Json& c = j.at("cost");
    if (c.is_number()) r.cost = c.get<double>();
    r.wall_time = j.at("time_s").get<double>();
    r.action_label = j.value("action", std::string("none"));
    r.base_cost = j.value("base_cost", 0.0);
    r.note = j.value("note", std::string());
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad result record: ") + e.what());
  }
}

inline std::string emit_report(const std::vector<MethodResult>& results, ReportFormat format) {
  auto cost_text = [](const MethodResult& r, const char* fmt) {
    if (!r.cost) return std::string("N/A");
    if (!fmt) return format_number(*r.cost);
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *r.cost);
    return std::string(buf);
  };
  std::string out;
  switch (format) {
    case ReportFormat::kJson: {
      Json rows = Json::array();
      for (const auto& r : results) {
        Json j = to_json(r);
        rows.push_back({{"case", j["case"]},
                        {"method", j["method"]},
                        {"cost", j["cost"]},
                        {"time_s", j["time_s"]},
                        {"action", j["action"]}});
      }
      out = rows.dump(2) + "\n";
      break;
    }
    case ReportFormat::kCsv:
      out = "case,method,cost,time_s,action\n";
      for (const auto& r : results)
        out += csv_field(r.case_name) + "," + std::string(to_string(r.method)) + "," +
               cost_text(r, nullptr) + "," + format_number(r.wall_time) + "," +
               csv_field(r.action_label) + "\n";
      break;
    case ReportFormat::kMarkdown: {
      out = "| case | method | cost | time_s | action |\n|---|---|---|---|---|\n";
      char t[32];
      for (const auto& r : results) {
        std::snprintf(t, sizeof t, "%.3f", r.wall_time);
        out += "| " + r.case_name + " | " + std::string(to_string(r.method)) + " | " +
               cost_text(r, "%.2f") + " | " + t + " | " + r.action_label + " |\n";
      }
      break;
    }
  }
  return out;
}

}  // namespace otr
