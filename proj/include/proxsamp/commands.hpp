// Library-level implementations of the CLI commands, so tests can drive them
// in-process. Each returns the process exit code; ConfigError/SolverCapError
// propagate for the CLI wrapper to translate.

#pragma once

#include "proxsamp/config.hpp"

namespace proxsamp {

int cmd_sample(const RunConfig& config, bool trace = false);
int cmd_verify(const RunConfig& config, bool negative_control = false);
int cmd_minimize(const RunConfig& config, bool trace = false);
int cmd_bench(const RunConfig& config);

}  // namespace proxsamp
