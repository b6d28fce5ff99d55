#pragma once
// Orbit statistics against the closed forms: extremal index (exact and Monte
// Carlo), exceedance scans with cluster windows, conditional window sampling
// anchored at a ball, tail calibration of a_n, and the decay-rate bound table.

#include "expile/observable.hpp"
#include "expile/piling.hpp"

#include <functional>
#include <vector>

namespace expile {

// ---- closed-form extremal index ----

// Forward orbit return inside the run gap: the exceedance ball of `target`
// pulled back through f^j lands inside the anchor ball. A forced return has
// its preimage covering the whole anchor ball, so it carries no information
// about cluster starts; the closed form and the estimator both skip it. An
// anchor whose returns are all forced never starts a cluster.
struct OrbitReturn {
    long long j = 0;
    int target = -1;
    bool forced = false;
};
std::vector<OrbitReturn> orbit_returns(const MaximalSetSpec& spec, int anchor, long long q_n);

// exact index for the finite modes; countable mode handled by the double overload
Quad theoretical_extremal_index_exact(const MaximalSetSpec& spec, long long q_n);
double theoretical_extremal_index(const MaximalSetSpec& spec, long long q_n);

// ---- Monte Carlo estimator ----

struct EIConfig {
    long long n = 10000;            // threshold level
    double tau = 1.0;
    long long starts = 100000000;   // uniform starts
    long long q_n = 3;
    uint64_t seed = 1;
    int threads = 0;                // 0 = all available, 1 = serial reference
};

struct EIEstimate {
    long long starts = 0;
    long long hits = 0;             // exceedances at time zero
    long long clean = 0;            // hits with no spoiling return in (0, q_n]
    double theta_hat = 0;
    double se = 0;                  // binomial ratio error
};

EIEstimate estimate_extremal_index(const MaximalSetSpec& spec, const EIConfig& cfg);

// ---- exceedance scan over stationary orbits ----

struct ScanConfig {
    long long n = 10000;        // threshold level and orbit length
    double tau = 1.0;
    long long orbits = 1000;
    long long q_n = 3;
    long long k_n = 0;          // blocks per orbit; 0 = ceil(n^{1/3})
    long long t_n = 0;          // inter-block gap; 0 = ceil(log n)
    int window = 4;             // cluster window half-width
    long long max_clusters = 0; // 0 = unbounded
    uint64_t seed = 1;
};

struct WindowEntry {
    long long offset = 0;
    double scaled = INFINITY;   // threshold-scaled magnitude; < 1 marks an exceedance
    Pt direction{0, 0};
    int ball = -1;
};

struct ExceedanceCluster {
    long long t = 0;            // absolute orbit time of the exceedance
    long long orbit = 0;
    long long block = 0;        // t / r_n with r_n = n / k_n
    int anchor = -1;
    double u = 0;               // scaled magnitude at the anchor, in [0, 1)
    bool run_start = false;     // no exceedance in the preceding q_n steps
    std::vector<WindowEntry> window;
};

// emits one record per exceedance, orbit-major then time-ascending; returns
// the number of records emitted
long long scan_exceedances(const MaximalSetSpec& spec, const ScanConfig& cfg,
                           const std::function<void(const ExceedanceCluster&)>& sink);

// conditional window sampler: anchors a point inside a ball's exceedance
// region (ball picked by exceedance volume), reconstructs the backward digits
// uniformly and reads the window off the exact digit dynamics
struct PalmConfig {
    long long n = 1000000;
    double tau = 1.0;
    long long windows = 10000;
    int window = 4;
    uint64_t seed = 1;
};
void palm_windows(const MaximalSetSpec& spec, const PalmConfig& cfg,
                  const std::function<void(const ExceedanceCluster&)>& sink);

// ---- cluster statistics against the piling law ----

struct PilingStatsConfig {
    long long n = 10000;
    double tau = 10.0;
    long long clusters = 100000;
    long long q_n = 3;
    int window = 4;
    uint64_t seed = 1;
    bool use_palm = false;      // palm windows instead of orbit scans
};

struct RatioCell {
    int anchor = -1;
    long long offset = 0;
    long long count = 0;
    double mean = 0;            // mean of scaled(offset) / scaled(0)
};

struct PilingStats {
    long long clusters = 0;
    std::vector<long long> anchor_counts;            // by ball
    std::vector<long long> branch_counts;            // by law branch index
    std::vector<long long> branch_retained;          // after the negative-offset discard
    long long discarded = 0;
    std::vector<RatioCell> ratios;                   // retained records only
};

PilingStats empirical_piling_stats(const MaximalSetSpec& spec, const PilingLaw& law,
                                   const PilingStatsConfig& cfg);

// ---- tail calibration ----

struct TailConfig {
    long long n = 1000;
    std::vector<double> y_grid = {0.5, 1.0, 2.0, 4.0};
    long long samples = 10000000;
    double a_n_scale = 1.0;     // candidate rescaling when resolving a_n
    bool stratified = true;     // jittered-lattice stratification (unbiased)
    uint64_t seed = 1;
    int threads = 0;
};

struct TailRow {
    double y = 0;
    double n_p_hat = 0;         // n * empirical exceedance probability
    double target = 0;          // y^{-alpha d} times the ball/box volume ratio
    double rel_err = 0;
};

std::vector<TailRow> tail_check(const MaximalSetSpec& spec, const TailConfig& cfg);

// ---- decay-rate bound table ----

struct DependenceRow {
    long long n = 0;
    long long N = 0;            // truncation depth ceil(log n)
    double variation_bound = 0; // (1 + 2N) rho^N
    double block_bound = 0;     // (4N + 1) n rho^N
};

struct DependenceReport {
    std::vector<DependenceRow> rows;
    bool decays = false;        // variation bound nonincreasing; block bound's
                                // envelope halves decreasing (it is a sawtooth)
};

DependenceReport dependence_bound_report(const std::vector<long long>& n_grid, double rho);

} // namespace expile
