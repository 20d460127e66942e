#pragma once

// Bus-branch network model: MATPOWER case ingestion, graph matrices
// (susceptance Laplacian, incidence, PTDF), connectivity queries and the
// physical realization of topology actions.

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "otr/action.hpp"
#include "otr/error.hpp"

namespace otr {

// Flow bound used for RATE_A = 0 ("unlimited") branches [p.u.].
inline constexpr double kUnlimitedFlow = 1e6;

struct Bus {
  int id = 0;    // external (case file) number
  int type = 1;  // MATPOWER bus type; 3 = reference
  double pd = 0.0;  // load [p.u.]
};

struct Generator {
  int bus = 0;        // internal bus index
  double cost = 0.0;  // linear cost [$ per MW]
  double p_min = 0.0;
  double p_max = 0.0;  // [p.u.]
};

struct Line {
  int id = 0;  // row position in the case's branch table
  int from = 0;
  int to = 0;  // internal bus indices
  double b = 0.0;  // negative susceptance 1/x [p.u.]
  double f_min = -kUnlimitedFlow;
  double f_max = kUnlimitedFlow;
  bool in_service = true;
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  int reference_bus = 0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_in_service() const {
    return static_cast<int>(std::count_if(
        lines.begin(), lines.end(), [](const Line& l) { return l.in_service; }));
  }

  // Internal index of an external bus number, or -1.
  int bus_index(int external_id) const {
    for (int k = 0; k < num_buses(); ++k)
      if (buses[k].id == external_id) return k;
    return -1;
  }

  Eigen::VectorXd load() const {
    Eigen::VectorXd pd(num_buses());
    for (int k = 0; k < num_buses(); ++k) pd[k] = buses[k].pd;
    return pd;
  }

  // Sum generator outputs per bus.
  Eigen::VectorXd bus_generation(const Eigen::VectorXd& pg) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_buses());
    for (int g = 0; g < num_generators(); ++g) out[generators[g].bus] += pg[g];
    return out;
  }

  bool has_generator(int bus) const {
    return std::any_of(generators.begin(), generators.end(),
                       [bus](const Generator& g) { return g.bus == bus; });
  }

  // In-service lines joining buses a and b, in id order.
  std::vector<int> lines_between(int a, int b) const {
    std::vector<int> out;
    for (const Line& l : lines)
      if (l.in_service &&
          ((l.from == a && l.to == b) || (l.from == b && l.to == a)))
        out.push_back(l.id);
    return out;
  }

  // Distinct in-service neighbors of a bus, ascending.
  std::vector<int> neighbors(int bus) const {
    std::set<int> s;
    for (const Line& l : lines) {
      if (!l.in_service) continue;
      if (l.from == bus) s.insert(l.to);
      if (l.to == bus) s.insert(l.from);
    }
    return {s.begin(), s.end()};
  }
};

struct ParseOptions {
  // Drop (instead of rejecting) branch rows with BR_X <= 0.
  bool drop_nonpositive_reactance = false;
};

namespace detail {

struct Table {
  int first_line = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline double parse_number(std::string_view tok, int line) {
  if (tok == "Inf" || tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-Inf" || tok == "-inf")
    return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  return v;
}

// Splits one row of a numeric table; separators are blanks, tabs and commas.
inline std::vector<double> parse_row(std::string_view s, int line) {
  std::vector<double> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) ||
                            s[i] == ','))
      ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) &&
           s[j] != ',')
      ++j;
    if (j > i) out.push_back(parse_number(s.substr(i, j - i), line));
    i = j;
  }
  return out;
}

inline std::string_view strip_comment(std::string_view s) {
  auto p = s.find('%');
  return p == std::string_view::npos ? s : s.substr(0, p);
}

}  // namespace detail

inline void validate(const Network& net);

// Parses the MATPOWER subset used by the toolkit: baseMVA, bus, gen, branch
// and gencost. Quantities are converted to p.u. on baseMVA; generator costs
// keep only the linear polynomial coefficient.
inline Network parse_case(std::string_view text, const ParseOptions& opts = {}) {
  std::map<std::string, detail::Table> tables;
  std::optional<double> base_mva;

  std::vector<std::string_view> lines;
  for (size_t pos = 0; pos <= text.size();) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }

  for (size_t li = 0; li < lines.size(); ++li) {
    const int lineno = static_cast<int>(li) + 1;
    std::string_view s = detail::trim(detail::strip_comment(lines[li]));
    if (!s.starts_with("mpc.")) continue;
    auto eq = s.find('=');
    if (eq == std::string_view::npos) continue;
    std::string name(detail::trim(s.substr(4, eq - 4)));
    std::string_view rhs = detail::trim(s.substr(eq + 1));

    if (name == "baseMVA") {
      if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
      base_mva = detail::parse_number(detail::trim(rhs), lineno);
      continue;
    }
    if (rhs.empty() || rhs.front() != '[') continue;  // strings, cells

    detail::Table table;
    table.first_line = lineno;
    std::string_view body = rhs.substr(1);
    size_t lj = li;
    bool closed = false;
    while (true) {
      const int cur = static_cast<int>(lj) + 1;
      auto close = body.find(']');
      std::string_view chunk = close == std::string_view::npos ? body : body.substr(0, close);
      size_t start = 0;
      while (start <= chunk.size()) {
        size_t semi = chunk.find(';', start);
        if (semi == std::string_view::npos) semi = chunk.size();
        auto row = detail::parse_row(chunk.substr(start, semi - start), cur);
        if (!row.empty()) {
          if (!table.rows.empty() && row.size() != table.rows.front().size())
            throw ParseError("table mpc." + name + " has rows of unequal length (" +
                                 std::to_string(row.size()) + " vs " +
                                 std::to_string(table.rows.front().size()) + ")",
                             cur);
          table.rows.push_back(std::move(row));
          table.row_lines.push_back(cur);
        }
        start = semi + 1;
      }
      if (close != std::string_view::npos) {
        closed = true;
        break;
      }
      if (++lj >= lines.size()) break;
      body = detail::strip_comment(lines[lj]);
    }
    if (!closed)
      throw ParseError("unterminated table mpc." + name, table.first_line);
    li = lj;
    tables[name] = std::move(table);
  }

  if (!base_mva) throw ParseError("missing mpc.baseMVA", 0);
  if (!(*base_mva > 0)) throw ValidationError("baseMVA must be positive");
  for (const char* req : {"bus", "gen", "branch", "gencost"})
    if (!tables.count(req))
      throw ParseError(std::string("missing table mpc.") + req, 0);

  auto need_cols = [&](const std::string& name, size_t cols) {
    const auto& t = tables[name];
    if (!t.rows.empty() && t.rows.front().size() < cols)
      throw ParseError("table mpc." + name + " needs at least " +
                           std::to_string(cols) + " columns",
                       t.row_lines.front());
  };
  need_cols("bus", 3);
  need_cols("gen", 10);
  need_cols("branch", 11);
  need_cols("gencost", 5);

  Network net;
  net.base_mva = *base_mva;
  const double base = net.base_mva;

  std::map<int, int> index;
  const auto& bus_t = tables["bus"];
  for (size_t r = 0; r < bus_t.rows.size(); ++r) {
    const auto& row = bus_t.rows[r];
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.type = static_cast<int>(row[1]);
    b.pd = row[2] / base;
    if (!std::isfinite(b.pd))
      throw ValidationError("bus " + std::to_string(b.id) + " has non-finite load");
    if (index.count(b.id))
      throw ValidationError("duplicate bus number " + std::to_string(b.id) +
                            " (line " + std::to_string(bus_t.row_lines[r]) + ")");
    index[b.id] = static_cast<int>(net.buses.size());
    net.buses.push_back(b);
  }
  if (net.buses.empty()) throw ValidationError("case has no buses");

  auto lookup = [&](double id, const char* what, int line) {
    auto it = index.find(static_cast<int>(id));
    if (it == index.end())
      throw ValidationError(std::string(what) + " references bus " +
                            std::to_string(static_cast<int>(id)) +
                            " absent from the bus table (line " +
                            std::to_string(line) + ")");
    return it->second;
  };

  const auto& gen_t = tables["gen"];
  const auto& cost_t = tables["gencost"];
  if (cost_t.rows.size() < gen_t.rows.size())
    throw ValidationError("mpc.gencost has fewer rows than mpc.gen");
  for (size_t r = 0; r < gen_t.rows.size(); ++r) {
    const auto& row = gen_t.rows[r];
    const int line = gen_t.row_lines[r];
    int bus = lookup(row[0], "generator", line);
    if (row[7] <= 0) continue;  // GEN_STATUS
    const auto& cr = cost_t.rows[r];
    if (static_cast<int>(cr[0]) != 2)
      throw ValidationError("only polynomial gencost rows are supported (line " +
                            std::to_string(cost_t.row_lines[r]) + ")");
    const int ncost = static_cast<int>(cr[3]);
    if (ncost < 1 || 4 + static_cast<size_t>(ncost) > cr.size())
      throw ParseError("gencost NCOST inconsistent with row length",
                       cost_t.row_lines[r]);
    Generator g;
    g.bus = bus;
    g.cost = ncost >= 2 ? cr[4 + ncost - 2] : 0.0;
    g.p_max = row[8] / base;
    g.p_min = row[9] / base;
    if (!(g.p_min <= g.p_max))
      throw ValidationError("generator at bus " +
                            std::to_string(static_cast<int>(row[0])) +
                            " has PMIN > PMAX (line " + std::to_string(line) + ")");
    if (!std::isfinite(g.cost))
      throw ValidationError("non-finite generator cost (line " +
                            std::to_string(cost_t.row_lines[r]) + ")");
    net.generators.push_back(g);
  }

  const auto& br_t = tables["branch"];
  for (size_t r = 0; r < br_t.rows.size(); ++r) {
    const auto& row = br_t.rows[r];
    const int line = br_t.row_lines[r];
    Line l;
    l.from = lookup(row[0], "branch", line);
    l.to = lookup(row[1], "branch", line);
    if (l.from == l.to)
      throw ValidationError("branch is a self-loop (line " + std::to_string(line) + ")");
    const double x = row[3];
    if (!(x > 0)) {
      if (opts.drop_nonpositive_reactance) continue;
      throw ValidationError("branch reactance must be positive (line " +
                            std::to_string(line) + ")");
    }
    l.id = static_cast<int>(net.lines.size());
    l.b = 1.0 / x;
    const double rate = row[5];
    const double lim = rate > 0 ? rate / base : kUnlimitedFlow;
    l.f_min = -lim;
    l.f_max = lim;
    l.in_service = row[10] > 0;
    net.lines.push_back(l);
  }

  net.reference_bus = 0;
  for (int k = 0; k < net.num_buses(); ++k)
    if (net.buses[k].type == 3) {
      net.reference_bus = k;
      break;
    }
  validate(net);
  return net;
}

inline Network load_case(const std::string& path, const ParseOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file '" + path + "'", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  Network net = parse_case(ss.str(), opts);
  auto slash = path.find_last_of('/');
  std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
  net.name = stem;
  return net;
}

inline void validate(const Network& net) {
  const int n = net.num_buses();
  for (const Generator& g : net.generators) {
    if (g.bus < 0 || g.bus >= n) throw ValidationError("generator bus out of range");
    if (!(g.p_min <= g.p_max)) throw ValidationError("generator p_min > p_max");
  }
  for (const Line& l : net.lines) {
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
      throw ValidationError("line " + std::to_string(l.id) + " endpoint out of range");
    if (l.from == l.to)
      throw ValidationError("line " + std::to_string(l.id) + " is a self-loop");
    if (l.in_service && !(l.b > 0))
      throw ValidationError("line " + std::to_string(l.id) +
                            " has non-positive susceptance");
    if (!(l.f_min <= 0 && 0 <= l.f_max))
      throw ValidationError("line " + std::to_string(l.id) +
                            " flow bounds must bracket zero");
  }
}

// ---------------------------------------------------------------------------
// Connectivity

// Components of the in-service graph, each sorted; ordered by smallest member.
inline std::vector<std::vector<int>> connected_components(const Network& net) {
  const int n = net.num_buses();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Line& l : net.lines)
    if (l.in_service) parent[find(l.from)] = find(l.to);
  std::map<int, std::vector<int>> groups;
  for (int k = 0; k < n; ++k) groups[find(k)].push_back(k);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

inline bool is_connected(const Network& net) {
  return connected_components(net).size() == 1;
}

inline void require_connected(const Network& net) {
  auto comps = connected_components(net);
  if (comps.size() != 1) throw IslandingError(std::move(comps));
}

// In-service lines whose removal disconnects the graph (parallel lines are
// never bridges).
inline std::vector<bool> bridge_lines(const Network& net) {
  const int n = net.num_buses();
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, line)
  for (const Line& l : net.lines)
    if (l.in_service) {
      adj[l.from].push_back({l.to, l.id});
      adj[l.to].push_back({l.from, l.id});
    }
  std::vector<bool> bridge(net.lines.size(), false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    int v, parent_edge;
    size_t next;
  };
  for (int s = 0; s < n; ++s) {
    if (disc[s] >= 0) continue;
    std::vector<Frame> stack{{s, -1, 0}};
    disc[s] = low[s] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.v].size()) {
        auto [w, e] = adj[f.v][f.next++];
        if (e == f.parent_edge) continue;
        if (disc[w] < 0) {
          disc[w] = low[w] = timer++;
          stack.push_back({w, e, 0});
        } else {
          low[f.v] = std::min(low[f.v], disc[w]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          int p = stack.back().v;
          low[p] = std::min(low[p], low[done.v]);
          if (low[done.v] > disc[p]) bridge[done.parent_edge] = true;
        }
      }
    }
  }
  return bridge;
}

// ---------------------------------------------------------------------------
// Graph matrices

// B0: weighted Laplacian over in-service lines (parallel lines summed).
inline Eigen::MatrixXd susceptance_matrix(const Network& net) {
  const int n = net.num_buses();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    B(l.from, l.from) += l.b;
    B(l.to, l.to) += l.b;
    B(l.from, l.to) -= l.b;
    B(l.to, l.from) -= l.b;
  }
  return B;
}

struct Incidence {
  Eigen::MatrixXd a0;       // n x m, +1 at from, -1 at to
  Eigen::VectorXd weights;  // diagonal of D

  Eigen::MatrixXd d() const { return weights.asDiagonal(); }
};

// Out-of-service lines keep their column index but contribute a zero column
// and a zero weight.
inline Incidence incidence_and_weight(const Network& net) {
  const int n = net.num_buses(), m = net.num_lines();
  Incidence out{Eigen::MatrixXd::Zero(n, m), Eigen::VectorXd::Zero(m)};
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    out.a0(l.from, l.id) = 1.0;
    out.a0(l.to, l.id) = -1.0;
    out.weights[l.id] = l.b;
  }
  return out;
}

// Moore-Penrose pseudoinverse of a connected-graph Laplacian.
inline Eigen::MatrixXd laplacian_pinv(const Eigen::MatrixXd& laplacian) {
  const auto n = laplacian.rows();
  const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  return Eigen::MatrixXd((laplacian + j).partialPivLu().inverse()) - j;
}

// Psi = D A0^T B0^+, m x n.
inline Eigen::MatrixXd ptdf_matrix(const Network& net) {
  require_connected(net);
  Incidence inc = incidence_and_weight(net);
  Eigen::MatrixXd pinv = laplacian_pinv(susceptance_matrix(net));
  return inc.weights.asDiagonal() * inc.a0.transpose() * pinv;
}

struct DcFlow {
  Eigen::VectorXd theta;  // zero-mean angles
  Eigen::VectorXd flows;  // per line id, zero when out of service
};

// DC power flow for a balanced injection vector.
inline DcFlow dc_power_flow(const Network& net, const Eigen::VectorXd& p) {
  require_connected(net);
  DcFlow out;
  out.theta = laplacian_pinv(susceptance_matrix(net)) * p;
  out.flows = Eigen::VectorXd::Zero(net.num_lines());
  for (const Line& l : net.lines)
    if (l.in_service) out.flows[l.id] = l.b * (out.theta[l.from] - out.theta[l.to]);
  return out;
}

// ---------------------------------------------------------------------------
// Actions

inline void check_split(const Network& net, const SplitSpec& spec) {
  if (spec.bus < 0 || spec.bus >= net.num_buses())
    throw ValidationError("split bus out of range");
  if (spec.moved_neighbors.empty())
    throw ValidationError("split moves no neighbor");
  const auto nbrs = net.neighbors(spec.bus);
  std::set<int> moved(spec.moved_neighbors.begin(), spec.moved_neighbors.end());
  if (moved.size() != spec.moved_neighbors.size())
    throw ValidationError("split lists a neighbor twice");
  for (int k : moved)
    if (!std::binary_search(nbrs.begin(), nbrs.end(), k))
      throw ValidationError("bus " + std::to_string(net.buses[k].id) +
                            " is not an in-service neighbor of bus " +
                            std::to_string(net.buses[spec.bus].id));
  if (moved.size() >= nbrs.size())
    throw ValidationError("split must leave at least one neighbor on bus " +
                          std::to_string(net.buses[spec.bus].id));
}

// Returns the network after the action. A split appends one bus (next free
// external number) that receives the moved lines and, per the scenario, the
// load and/or generators of the split bus.
inline Network apply_action(const Network& net, const CandidateAction& action) {
  Network out = net;
  if (const auto* open = std::get_if<LineOpening>(&action)) {
    if (open->line < 0 || open->line >= net.num_lines() ||
        !net.lines[open->line].in_service)
      throw ValidationError("line " + std::to_string(open->line) +
                            " is not an in-service line");
    out.lines[open->line].in_service = false;
  } else {
    const auto& spec = std::get<SplitSpec>(action);
    check_split(net, spec);
    int max_id = 0;
    for (const Bus& b : net.buses) max_id = std::max(max_id, b.id);
    const int nb = net.num_buses();
    Bus busbar;
    busbar.id = max_id + 1;
    busbar.type = 1;
    out.buses.push_back(busbar);
    std::set<int> moved(spec.moved_neighbors.begin(), spec.moved_neighbors.end());
    for (Line& l : out.lines) {
      if (!l.in_service) continue;
      if (l.from == spec.bus && moved.count(l.to)) l.from = nb;
      if (l.to == spec.bus && moved.count(l.from)) l.to = nb;
    }
    const bool move_load = spec.scenario == SplitScenario::kLoadOnly ||
                           spec.scenario == SplitScenario::kBoth;
    const bool move_gen = spec.scenario == SplitScenario::kGenOnly ||
                          spec.scenario == SplitScenario::kBoth;
    if (move_load) {
      out.buses[nb].pd = out.buses[spec.bus].pd;
      out.buses[spec.bus].pd = 0.0;
    }
    if (move_gen)
      for (Generator& g : out.generators)
        if (g.bus == spec.bus) g.bus = nb;
  }
  require_connected(out);
  return out;
}

inline std::string describe(const Network& net, const CandidateAction& action) {
  if (const auto* open = std::get_if<LineOpening>(&action)) {
    const Line& l = net.lines.at(open->line);
    return "line " + std::to_string(l.id) + " (" +
           std::to_string(net.buses[l.from].id) + "," +
           std::to_string(net.buses[l.to].id) + ")";
  }
  const auto& s = std::get<SplitSpec>(action);
  std::string out = "bus " + std::to_string(net.buses.at(s.bus).id) + " split {";
  for (size_t i = 0; i < s.moved_neighbors.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(net.buses.at(s.moved_neighbors[i]).id);
  }
  out += "} ";
  out += to_string(s.scenario);
  return out;
}

}  // namespace otr
