#pragma once

// Bus split as an equivalent injection change on the unsplit network:
// Kron reduction of the new busbar, fictitious tie flow, BSDF, the
// (delta_p, delta_B) decomposition and the first-order cost change.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "otr/action.hpp"
#include "otr/dcopf.hpp"
#include "otr/network.hpp"
#include "otr/sensitivity.hpp"

namespace otr {

// In-service lines between the split bus and the moved neighbors.
inline std::vector<int> moved_lines(const Network& net, const SplitSpec& spec) {
  std::set<int> moved(spec.moved_neighbors.begin(), spec.moved_neighbors.end());
  std::vector<int> out;
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    if ((l.from == spec.bus && moved.count(l.to)) || (l.to == spec.bus && moved.count(l.from)))
      out.push_back(l.id);
  }
  return out;
}

// In-service lines that stay on the split bus.
inline std::vector<int> retained_lines(const Network& net, const SplitSpec& spec) {
  std::set<int> moved(spec.moved_neighbors.begin(), spec.moved_neighbors.end());
  std::vector<int> out;
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    if ((l.from == spec.bus && !moved.count(l.to)) || (l.to == spec.bus && !moved.count(l.from)))
      out.push_back(l.id);
  }
  return out;
}

inline int other_end(const Line& l, int bus) { return l.from == bus ? l.to : l.from; }

inline double sigma(const Network& net, const SplitSpec& spec) {
  check_split(net, spec);
  double s = 0.0;
  for (int id : moved_lines(net, spec)) s += net.lines[id].b;
  return s;
}

// Common denominator of the fictitious flow and the BSDF:
//   Sigma - sum_{k' moved} sum_{k moved} PTDF_{k'n,kn} b_nk,
// with the moved lines oriented towards the split bus. By KCL at the split
// bus this equals -sum_{j retained} sum_k PTDF_{nj,kn} b_nk.
inline double split_denominator(const Network& net, const SplitSpec& spec,
                                const Eigen::MatrixXd& ptdf) {
  const int n = spec.bus;
  const auto moved = moved_lines(net, spec);
  double s = 0.0;
  for (int rid : moved) {
    const Line& r = net.lines[rid];
    const double orient = r.to == n ? 1.0 : -1.0;
    for (int mid : moved) {
      const int k = other_end(net.lines[mid], n);
      s += orient * (ptdf(rid, k) - ptdf(rid, n)) * net.lines[mid].b;
    }
  }
  return sigma(net, spec) - s;
}

struct FictitiousFlow {
  double initial = 0.0;     // tie flow n+1 -> n before the split
  double equivalent = 0.0;  // equivalent transfer after the split
  double denominator = 0.0;
};

// `theta` are pre-split angles; spec.p_new is the injection carried by the
// new busbar.
inline FictitiousFlow fictitious_flow(const Network& net, const SplitSpec& spec,
                                      const Eigen::VectorXd& theta,
                                      const Eigen::MatrixXd& ptdf) {
  FictitiousFlow f;
  const double sig = sigma(net, spec);
  f.denominator = split_denominator(net, spec, ptdf);
  f.initial = spec.p_new;
  for (int id : moved_lines(net, spec)) {
    const Line& l = net.lines[id];
    f.initial -= l.b * (theta[spec.bus] - theta[other_end(l, spec.bus)]);
  }
  if (std::abs(f.denominator) < 1e-10)
    throw SingularError("split of bus " + std::to_string(net.buses[spec.bus].id) +
                        " cuts every flow path (singular denominator)");
  f.equivalent = f.initial * sig / f.denominator;
  return f;
}

inline FictitiousFlow fictitious_flow(const Network& net, const SplitSpec& spec,
                                      const DcOpfSolution& sol) {
  return fictitious_flow(net, spec, sol.theta, ptdf_matrix(net));
}

// BSDF of every line (per line id, oriented from -> to).
inline Eigen::VectorXd bsdf(const Network& net, const SplitSpec& spec,
                            const Eigen::MatrixXd& ptdf) {
  const double den = split_denominator(net, spec, ptdf);
  if (std::abs(den) < 1e-10)
    throw SingularError("split of bus " + std::to_string(net.buses[spec.bus].id) +
                        " cuts every flow path (singular denominator)");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.num_lines());
  for (int mid : moved_lines(net, spec)) {
    const int k = other_end(net.lines[mid], spec.bus);
    out += (ptdf.col(k) - ptdf.col(spec.bus)) * net.lines[mid].b;
  }
  return out / den;
}

inline double bsdf(const Network& net, const SplitSpec& spec, int line) {
  return bsdf(net, spec, ptdf_matrix(net))[line];
}

struct SplitPerturbation {
  Eigen::VectorXd delta_p;
  Eigen::MatrixXd delta_b;
};

// p + delta_p = (B0 + delta_B) theta' after Kron-eliminating the new busbar.
inline SplitPerturbation split_as_perturbation(const Network& net, const SplitSpec& spec) {
  const int nb = net.num_buses(), n = spec.bus;
  const double sig = sigma(net, spec);
  Eigen::VectorXd bk = Eigen::VectorXd::Zero(nb);  // b_nk summed over parallel lines
  for (int id : moved_lines(net, spec)) bk[other_end(net.lines[id], n)] += net.lines[id].b;

  SplitPerturbation out{Eigen::VectorXd::Zero(nb), Eigen::MatrixXd::Zero(nb, nb)};
  for (int k : spec.moved_neighbors) {
    out.delta_p[k] = bk[k] / sig * spec.p_new;
    out.delta_b(k, n) += bk[k];
    out.delta_b(n, k) += bk[k];
    for (int l : spec.moved_neighbors) out.delta_b(k, l) -= bk[k] * bk[l] / sig;
  }
  out.delta_p[n] = -spec.p_new;
  out.delta_b(n, n) -= sig;
  return out;
}

// Post-split DC flows for a pre-split injection vector p, three ways. Moved
// lines report their flow on the new busbar side.

// (a) the explicit two-busbar network.
inline DcFlow post_split_flows_explicit(const Network& net, const SplitSpec& spec,
                                        const Eigen::VectorXd& p) {
  SplitSpec shape = spec;
  shape.scenario = SplitScenario::kNone;
  Network post = apply_action(net, shape);
  Eigen::VectorXd q(post.num_buses());
  q.head(net.num_buses()) = p;
  q[spec.bus] -= spec.p_new;
  q[net.num_buses()] = spec.p_new;
  return dc_power_flow(post, q);
}

namespace detail {

inline Eigen::VectorXd flows_with_busbar(const Network& net, const SplitSpec& spec,
                                         const Eigen::VectorXd& theta) {
  const double sig = sigma(net, spec);
  const auto moved = moved_lines(net, spec);
  double busbar = spec.p_new;
  for (int id : moved) busbar += net.lines[id].b * theta[other_end(net.lines[id], spec.bus)];
  busbar /= sig;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(net.num_lines());
  std::set<int> mv(moved.begin(), moved.end());
  for (const Line& l : net.lines) {
    if (!l.in_service) continue;
    const double ti = mv.count(l.id) && l.from == spec.bus ? busbar : theta[l.from];
    const double tj = mv.count(l.id) && l.to == spec.bus ? busbar : theta[l.to];
    f[l.id] = l.b * (ti - tj);
  }
  return f;
}

}  // namespace detail

// (b) the Kron-reduced model (B0 + delta_B) theta' = p + delta_p.
inline Eigen::VectorXd post_split_flows_reduced(const Network& net, const SplitSpec& spec,
                                                const Eigen::VectorXd& p) {
  const auto pert = split_as_perturbation(net, spec);
  const Eigen::MatrixXd b = susceptance_matrix(net) + pert.delta_b;
  const Eigen::VectorXd theta = laplacian_pinv(b) * (p + pert.delta_p);
  return detail::flows_with_busbar(net, spec, theta);
}

// (c) the unchanged B0 with the equivalent injection of the closed-form
// fictitious flow.
inline Eigen::VectorXd post_split_flows_equivalent(const Network& net, const SplitSpec& spec,
                                                   const Eigen::VectorXd& p,
                                                   const Eigen::MatrixXd& ptdf) {
  const Eigen::MatrixXd pinv = laplacian_pinv(susceptance_matrix(net));
  const Eigen::VectorXd theta0 = pinv * p;
  const auto ff = fictitious_flow(net, spec, theta0, ptdf);
  const double sig = sigma(net, spec);
  Eigen::VectorXd pt = p;
  for (int id : moved_lines(net, spec))
    pt[other_end(net.lines[id], spec.bus)] += net.lines[id].b / sig * ff.equivalent;
  pt[spec.bus] -= ff.equivalent;
  return detail::flows_with_busbar(net, spec, pinv * pt);
}

struct SplitSensitivity {
  double dv1 = 0.0;  // injection transfer
  double dv2 = 0.0;  // moved lines leave bus n
  double dv3 = 0.0;  // moved lines join each other through bus n+1
  double total = 0.0;
};

inline SplitSensitivity split_sensitivity(const DcOpfSolution& sol, const SplitSpec& spec) {
  const Network& net = sol.network();
  const int n = spec.bus;
  const double sig = sigma(net, spec);
  const auto moved = moved_lines(net, spec);
  SplitSensitivity s;

  s.dv1 = spec.p_new * sol.lambda[n];
  for (int id : moved) {
    const Line& l = net.lines[id];
    s.dv1 -= l.b / sig * spec.p_new * sol.lambda[other_end(l, n)];
    s.dv2 += line_switch_sensitivity(sol, id).delta_v;
  }

  std::vector<int> ks(spec.moved_neighbors.begin(), spec.moved_neighbors.end());
  std::sort(ks.begin(), ks.end());
  for (size_t a = 0; a < ks.size(); ++a) {
    for (size_t c = a + 1; c < ks.size(); ++c) {
      const int i = ks[a], j = ks[c];
      double bin = 0.0, bjn = 0.0;
      for (int id : moved) {
        const int k = other_end(net.lines[id], n);
        if (k == i) bin += net.lines[id].b;
        if (k == j) bjn += net.lines[id].b;
      }
      // Existing i-j lines: susceptance-weighted multiplier, oriented i -> j.
      double mu = 0.0, bsum = 0.0;
      for (int id : net.lines_between(i, j)) {
        const Line& l = net.lines[id];
        const double orient = l.from == i ? 1.0 : -1.0;
        mu += orient * (sol.mu_hi[id] - sol.mu_lo[id]) * l.b;
        bsum += l.b;
      }
      if (bsum > 0) mu /= bsum;
      s.dv3 += (mu + sol.lambda[i] - sol.lambda[j]) * (sol.theta[i] - sol.theta[j]) * bin *
               bjn / sig;
    }
  }
  s.total = s.dv1 + s.dv2 + s.dv3;
  return s;
}

// Net injection moved to the new busbar under a scenario, from the dispatch pg.
inline double busbar_injection(const Network& net, const Eigen::VectorXd& pg, int bus,
                               SplitScenario scenario) {
  double gen = 0.0;
  for (int g = 0; g < net.num_generators(); ++g)
    if (net.generators[g].bus == bus) gen += pg[g];
  const double load = net.buses[bus].pd;
  switch (scenario) {
    case SplitScenario::kNone: return 0.0;
    case SplitScenario::kLoadOnly: return -load;
    case SplitScenario::kGenOnly: return gen;
    case SplitScenario::kBoth: return gen - load;
  }
  return 0.0;
}

inline std::vector<SplitScenario> applicable_scenarios(const Network& net, int bus) {
  const bool load = net.buses[bus].pd != 0.0;
  const bool gen = net.has_generator(bus);
  std::vector<SplitScenario> out{SplitScenario::kNone};
  if (load) out.push_back(SplitScenario::kLoadOnly);
  if (gen) out.push_back(SplitScenario::kGenOnly);
  if (load && gen) out.push_back(SplitScenario::kBoth);
  return out;
}

// Restricted splits: every bus with at least two distinct neighbors, every
// single neighbor, every applicable scenario.
inline std::vector<SplitSpec> enumerate_splits(const Network& net, const Eigen::VectorXd& pg) {
  std::vector<SplitSpec> out;
  for (int bus = 0; bus < net.num_buses(); ++bus) {
    const auto nbrs = net.neighbors(bus);
    if (nbrs.size() < 2) continue;
    const auto scen = applicable_scenarios(net, bus);
    for (int k : nbrs)
      for (SplitScenario sc : scen)
        out.push_back({bus, {k}, sc, busbar_injection(net, pg, bus, sc)});
  }
  return out;
}

inline std::vector<SplitSpec> enumerate_splits(const DcOpfSolution& sol) {
  return enumerate_splits(sol.network(), sol.pg);
}

// Restricted splits that keep the network connected, ascending by total
// first-order change; ties keep enumeration order (bus, neighbor, scenario).
inline CandidateRanking rank_splits(const DcOpfSolution& sol,
                                    std::vector<std::string>* log = nullptr) {
  const Network& net = sol.network();
  CandidateRanking r;
  r.tie_policy = "score ascending, then bus, neighbor, scenario";
  std::map<std::pair<int, int>, bool> cut;
  for (const SplitSpec& spec : enumerate_splits(sol)) {
    const auto key = std::make_pair(spec.bus, spec.moved_neighbors.front());
    auto it = cut.find(key);
    if (it == cut.end()) {
      Network probe = net;
      for (int id : moved_lines(net, spec)) probe.lines[id].in_service = false;
      it = cut.emplace(key, !is_connected(probe)).first;
    }
    if (it->second) {
      if (log) log->push_back("skip " + describe(net, spec) + ": split islands the network");
      continue;
    }
    r.entries.push_back({spec, split_sensitivity(sol, spec).total, Method::kM3});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const auto& a, const auto& b) { return a.score < b.score; });
  return r;
}

// Lines and restricted splits in one list: ascending score, lines before
// splits on ties, then element id.
inline CandidateRanking rank_combined(const DcOpfSolution& sol,
                                      std::vector<std::string>* log = nullptr) {
  CandidateRanking lines = rank_lines(sol, Method::kM2);
  CandidateRanking splits = rank_splits(sol, log);
  CandidateRanking r;
  r.tie_policy = "score ascending, lines before splits, then element id";
  for (auto& e : lines.entries) {
    e.method = Method::kM3;
    r.entries.push_back(e);
  }
  for (auto& e : splits.entries) r.entries.push_back(e);
  std::stable_sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score < b.score;
    if (is_line(a.action) != is_line(b.action)) return is_line(a.action);
    return detail::element_id(a.action) < detail::element_id(b.action);
  });
  return r;
}

}  // namespace otr
