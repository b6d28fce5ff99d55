#pragma once
// Experiment configuration: a plain key/value sections file mapped onto the
// library entry points. Numeric literals keep their exact forms ("2/3",
// "sqrt2/16") all the way into spec construction, so golden tables never
// depend on a float round-trip.

#include "expile/observable.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace expile {

struct ExperimentConfig {
    std::string kind;                // piling-law | extremal-index | empirical-piling |
                                     // tail | functional-limit | dependence-bounds
    std::string example = "ex-3-4";  // registry id or "custom"
    MaximalSetSpec custom;           // finalized iff example == "custom"

    // budgets; 0 picks the kind default
    long long n = 0;                 // orbit length / level parameter
    long long trials = 0;            // starts / samples / paths / series
    long long clusters = 0;

    double tau = 0;                  // 0 = kind default
    long long q_n = 0;               // 0 = example default
    double eps = 0;                  // limit truncation; 0 = 1e-3
    int threads = 0;                 // 0 = all hardware threads
    uint64_t seed = 1;
    std::string output_dir = "out";
};

const std::vector<std::string>& experiment_kinds();

// throws SpecError naming the offending line
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// registry lookup, or the finalized custom block
MaximalSetSpec resolve_spec(const ExperimentConfig& cfg);

} // namespace expile
