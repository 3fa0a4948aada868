#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drstrat/ambiguity.hpp"
#include "drstrat/outer_bo.hpp"
#include "drstrat/problem.hpp"
#include "drstrat/sim_harness.hpp"

namespace drstrat {

// A fully validated experiment: the allocation problem, the input-model
// uncertainty, the simulator, and the solver settings.
struct Experiment {
    std::string name;
    std::uint64_t seed;
    int threads;
    std::string output_dir;
    Problem problem;
    std::vector<Pmf> nominals;
    std::vector<AmbiguitySet> sets;
    Simulator simulator;
    BOConfig bo;
};

// Parse + validate a JSON experiment config. Malformed JSON raises ConfigError
// with the line of the syntax error; schema/validation problems name the bad
// field. See configs/ for the shipped presets and README.md for the schema.
Experiment parse_experiment(const std::string& json_text);
Experiment load_experiment(const std::string& path);

// FNV-1a digest of the raw config text, recorded in run manifests.
std::string config_digest(const std::string& json_text);

} // namespace drstrat
