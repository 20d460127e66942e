#pragma once

// JSON and CSV views of solutions, actions and rankings. Bus numbers in
// every serialized form are the case file's external numbers.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "otr/pivot.hpp"

namespace otr {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

inline int external_bus(const Network& net, int k) { return net.buses.at(k).id; }

inline int internal_bus(const Network& net, int external_id) {
  const int k = net.bus_index(external_id);
  if (k < 0) throw ValidationError("unknown bus " + std::to_string(external_id));
  return k;
}

}  // namespace detail

// Shortest round-trip decimal form.
inline std::string format_number(double x) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline Json to_json(const DcOpfSolution& s) {
  Json j;
  j["objective"] = s.objective;
  j["pg"] = detail::to_std(s.pg);
  j["theta"] = detail::to_std(s.theta);
  j["flows"] = detail::to_std(s.flows);
  j["lambda"] = detail::to_std(s.lambda);
  j["mu_lo"] = detail::to_std(s.mu_lo);
  j["mu_hi"] = detail::to_std(s.mu_hi);
  j["nu_lo"] = detail::to_std(s.nu_lo);
  j["nu_hi"] = detail::to_std(s.nu_hi);
  j["degenerate"] = s.degenerate;
  return j;
}

inline Json to_json(const Network& net, const SplitSpec& s) {
  Json j;
  j["bus"] = detail::external_bus(net, s.bus);
  Json moved = Json::array();
  for (int k : s.moved_neighbors) moved.push_back(detail::external_bus(net, k));
  j["moved_neighbors"] = moved;
  j["scenario"] = std::string(to_string(s.scenario));
  j["p_new"] = s.p_new;
  return j;
}

inline SplitSpec split_from_json(const Network& net, const Json& j) {
  try {
    SplitSpec s;
    s.bus = detail::internal_bus(net, j.at("bus").get<int>());
    for (const auto& k : j.at("moved_neighbors"))
      s.moved_neighbors.push_back(detail::internal_bus(net, k.get<int>()));
    s.scenario = parse_scenario(j.at("scenario").get<std::string>());
    s.p_new = j.value("p_new", 0.0);
    return s;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad split record: ") + e.what());
  }
}

inline Json to_json(const Network& net, const CandidateAction& a) {
  Json j;
  if (const auto* o = std::get_if<LineOpening>(&a)) {
    const Line& l = net.lines.at(o->line);
    j["type"] = "line";
    j["line"] = o->line;
    j["from"] = detail::external_bus(net, l.from);
    j["to"] = detail::external_bus(net, l.to);
  } else {
    j = to_json(net, std::get<SplitSpec>(a));
    j["type"] = "split";
  }
  j["label"] = describe(net, a);
  return j;
}

inline Json to_json(const Network& net, const CandidateRanking& r) {
  Json rows = Json::array();
  for (const auto& e : r.entries) {
    Json row;
    row["action_type"] = is_line(e.action) ? "line" : "split";
    row["element"] = describe(net, e.action);
    row["score_usd"] = e.score;
    row["method"] = std::string(to_string(e.method));
    row["action"] = to_json(net, e.action);
    rows.push_back(row);
  }
  return Json{{"tie_policy", r.tie_policy}, {"entries", rows}};
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const Network& net, const CandidateRanking& r) {
  std::string out = "action_type,element,score_usd,method\n";
  for (const auto& e : r.entries) {
    out += is_line(e.action) ? "line," : "split,";
    out += csv_field(describe(net, e.action)) + ",";
    out += format_number(e.score) + ",";
    out += std::string(to_string(e.method)) + "\n";
  }
  return out;
}

// RFC 4180 rows (quoted fields, doubled quotes).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted CSV field", 0);
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Network& net, const RankingReport& rep) {
  Json j;
  j["case"] = rep.case_name;
  j["base_cost"] = rep.base_cost;
  j["top_t"] = rep.top_t;
  j["status"] = rep.status;
  j["best"] = rep.best ? to_json(net, *rep.best) : Json();
  Json cands = Json::array();
  for (const auto& c : rep.candidates) {
    Json row;
    row["action"] = to_json(net, c.action);
    row["first_order_dv"] = c.first_order_dv;
    row["pivot_path"] = std::string(to_string(c.estimate.path));
    row["pivot_dcost"] = c.estimate.delta_cost ? Json(*c.estimate.delta_cost) : Json();
    if (c.oracle_cost) row["oracle_cost"] = *c.oracle_cost;
    row["feasible"] = c.feasible;
    if (!c.note.empty()) row["note"] = c.note;
    cands.push_back(row);
  }
  j["candidates"] = cands;
  j["log"] = rep.log;
  return j;
}

}  // namespace otr
