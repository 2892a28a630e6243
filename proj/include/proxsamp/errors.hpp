#pragma once

#include <stdexcept>
#include <string>

namespace proxsamp {

// CLI exit codes. 0 = ok.
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverCap = 3;

// Malformed or inconsistent configuration (bad key, infeasible schedule window,
// invalid builtin parameters). Messages name the offending key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An iteration cap was exhausted (bundle loop, inner QP, rejection loop,
// minimizer certification). `detail` carries the relevant diagnostic: best
// dual gap, empirical acceptance rate, or last certificate value.
class SolverCapError : public std::runtime_error {
  public:
    SolverCapError(const std::string& what, double detail)
        : std::runtime_error(what), detail_(detail) {}

    double detail() const { return detail_; }

  private:
    double detail_;
};

}  // namespace proxsamp
