#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace otr {

// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed case text; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// The in-service graph has more than one connected component.
class IslandingError : public Error {
 public:
  explicit IslandingError(std::vector<std::vector<int>> components)
      : Error(describe(components)), components_(std::move(components)) {}
  const std::vector<std::vector<int>>& components() const {
    return components_;
  }

 private:
  static std::string describe(const std::vector<std::vector<int>>& comps) {
    std::string s = "network is islanded into " +
                    std::to_string(comps.size()) + " components:";
    for (const auto& c : comps) {
      s += " {";
      for (size_t i = 0; i < c.size() && i < 8; ++i) {
        if (i) s += ",";
        s += std::to_string(c[i]);
      }
      if (c.size() > 8) s += ",...";
      s += "}";
    }
    return s;
  }
  std::vector<std::vector<int>> components_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

// Singular bus-split denominator or singular rank-1 update.
class SingularError : public Error {
 public:
  using Error::Error;
};

// Dual extraction failed its own stationarity check.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace otr
