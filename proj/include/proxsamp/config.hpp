// Flat key = value configuration with [section] headers. Parsing is
// line-oriented and zero-dependency; every error names the offending key and
// line. Vectors are whitespace/comma separated, matrices use ';' between rows.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxsamp/asf.hpp"
#include "proxsamp/potential.hpp"

namespace proxsamp {

struct TargetSpec {
    std::string kind;  // zero | l1 | l2norm | max_affine | quadratic | huber
    std::size_t d = 0;
    std::optional<double> M;
    std::optional<double> threshold;
    std::vector<Vec> A;  // max_affine rows
    Vec b;               // max_affine offsets
    std::vector<Vec> S;  // quadratic matrix rows
    Vec x0;

    bool operator==(const TargetSpec&) const = default;
};

struct ScheduleSpec {
    std::optional<double> eps;
    std::optional<double> mu;
    std::optional<double> eta;
    std::optional<double> delta;
    std::optional<std::int64_t> T;
    std::optional<double> m4;
    std::optional<double> c_T;
    std::optional<Vec> x_min;
    CutPolicy cut_policy = CutPolicy::minimal;
    std::int64_t thinning = 1;

    bool operator==(const ScheduleSpec&) const = default;
};

struct RunConfig {
    TargetSpec target;
    ScheduleSpec schedule;
    std::uint64_t seed = 0;
    std::int64_t n_samples = 0;
    std::int64_t chains = 1;
    std::string out_dir = ".";

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config_text(const std::string& text, const std::string& source_name);
RunConfig parse_config_file(const std::string& path);

// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

// Instantiate the builtin potential described by `target` (validates all
// required fields, dimensions, and PSD-ness).
Potential build_target(const TargetSpec& target);

// Resolve the schedule: manual (eta, mu, delta, T all present) goes through
// the window-checked constructor; otherwise mu (given or derived from m4 via
// the convex rule) picks the strongly-convex or smooth factory.
Schedule resolve_schedule(const RunConfig& config, const Potential& f);

}  // namespace proxsamp
