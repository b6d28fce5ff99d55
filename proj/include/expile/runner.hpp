#pragma once
// Experiment dispatch: a config maps to library calls, CSV artifacts under
// the output directory, and the list of executed checks with their gates.
// A run is clean iff every executed check passes.

#include "expile/config.hpp"

#include <string>
#include <vector>

namespace expile {

struct CheckResult {
    std::string name;
    double value = 0;
    double expected = 0;
    double tolerance = 0;       // pass iff |value - expected| <= tolerance
    bool pass = false;
    std::string note;           // exact forms / context
};

struct RunResult {
    std::vector<std::string> artifacts;   // paths written, summary.csv last
    std::vector<CheckResult> checks;
    bool all_pass = true;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// the summary.csv content for a result
std::string summary_csv(const RunResult& r);

} // namespace expile
