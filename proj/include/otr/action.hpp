#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "otr/error.hpp"

namespace otr {

// Which injections follow the moved line(s) onto the new busbar.
enum class SplitScenario { kNone, kLoadOnly, kGenOnly, kBoth };

inline std::string_view to_string(SplitScenario s) {
  switch (s) {
    case SplitScenario::kNone: return "none";
    case SplitScenario::kLoadOnly: return "load_only";
    case SplitScenario::kGenOnly: return "gen_only";
    case SplitScenario::kBoth: return "both";
  }
  return "?";
}

inline SplitScenario parse_scenario(std::string_view s) {
  if (s == "none") return SplitScenario::kNone;
  if (s == "load_only") return SplitScenario::kLoadOnly;
  if (s == "gen_only") return SplitScenario::kGenOnly;
  if (s == "both") return SplitScenario::kBoth;
  throw ValidationError("unknown split scenario '" + std::string(s) + "'");
}

// Split of `bus` into two busbars. Every in-service line between `bus` and a
// member of `moved_neighbors` is re-homed on the new busbar. `p_new` is the
// net injection carried by the new busbar [p.u.]; positive means generation.
// Bus indices are internal (0-based).
struct SplitSpec {
  int bus = -1;
  std::vector<int> moved_neighbors;
  SplitScenario scenario = SplitScenario::kNone;
  double p_new = 0.0;

  bool restricted() const { return moved_neighbors.size() == 1; }
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct LineOpening {
  int line = -1;
  friend bool operator==(const LineOpening&, const LineOpening&) = default;
};

using CandidateAction = std::variant<LineOpening, SplitSpec>;

inline bool is_line(const CandidateAction& a) {
  return std::holds_alternative<LineOpening>(a);
}
inline bool is_split(const CandidateAction& a) {
  return std::holds_alternative<SplitSpec>(a);
}

}  // namespace otr
