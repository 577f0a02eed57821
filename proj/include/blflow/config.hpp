#pragma once
#include <cstdint>
#include <string>

#include "blflow/group_rep.hpp"
#include "blflow/params.hpp"
#include "blflow/sections.hpp"

namespace blflow {

// Everything a CLI run needs, collected from one "key = value" config file.
// Flow keys are spelled exactly as FlowParams::fingerprint() prints them, so
// a fingerprint dump is itself a loadable config.
struct RunConfig {
    FlowParams flow;
    SectionConfig section;
    ExponentTuple exponents = default_exponents();

    int d = 4;                      // representation dimension, multiple of 4
    int grid = 256;                 // points per certification / holonomy grid
    double grid_margin = 1e-3;      // distance kept from odd-integer separatrix values
    std::uint64_t seed = 20260814;  // RNG seed for sampled section starts
    int samples = 50;               // random starts per sampling sweep
    std::string out_dir = ".";
    bool svg = false;

    // Checks the run-level fields plus FlowParams/SectionConfig preconditions.
    // Exponent-tuple consistency is deliberately left to the verification
    // commands: an inconsistent tuple is a verification failure (exit 1), not
    // a malformed config (exit 2).
    void validate() const;

    // Round-trips through parse_config_text; used to record the effective
    // config next to every report.
    std::string to_text() const;
};

// Line-based parser for the shared config format: one "key = value" per line,
// '#' starts a comment, blank lines are skipped.  Integer lists (exponent
// rows) are comma-separated.  Throws SyntaxError with line/column for
// malformed lines or bad values, ConfigError for unknown keys.
RunConfig parse_config_text(const std::string& text);

// Reads the file and parses it; ConfigError if the file cannot be read.
RunConfig load_config(const std::string& path);

}  // namespace blflow
