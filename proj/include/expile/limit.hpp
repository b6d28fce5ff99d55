#pragma once
// Limit objects: normalized cluster marks, the stable jump process built from
// them as a LePage series over Poisson arrivals, its excursion interpolation,
// and partial-sum paths of the dynamics for marginal comparison.

#include "expile/piling.hpp"

#include <vector>

namespace expile {

// one mark entry after normalization; q is the power-mapped value
struct QEntry {
    long long offset = 0;
    double norm = 1;        // >= 1, the minimum over entries is exactly 1
    Pt q{0, 0};
};

// shift-class representative of a cluster: offsets start at 0, the smallest
// entry norm is 1
struct QTilde {
    int anchor = -1;
    int branch = -1;
    std::vector<QEntry> entries;
    Pt cluster_sum{0, 0};   // sum of q over entries
};

QTilde sample_qtilde(const PilingLaw& law, Rng& rng);

struct LevyAtom {
    double T = 0;           // jump time, uniform on [0,1]
    double gamma = 0;       // Poisson arrival
    double U = 0;           // gamma / theta
    QTilde mark;
    Pt jump{0, 0};          // U^{-1/alpha} * cluster_sum
};

struct LevySeries {
    double theta = 1;
    double eps = 0;
    int dim = 1;
    Rational alpha = Rational(1, 2);    // stable index = tail index of |X| (alpha d)
    std::vector<LevyAtom> atoms;    // sorted by jump time T, so V(t) and the
                                    // excursion endpoints sum the same prefix
                                    // in the same order (exact identities)
    long long drawn = 0;            // arrivals examined including the stopped probe
};

// LePage series with iid cluster marks. Arrivals stop once the expected
// remaining jump mass falls below eps/4; that implies every discarded atom's
// own jump bound sits below eps and makes truncation runs at eps and eps/2
// agree at time 1 within eps on a shared seed.
LevySeries sample_levy(const PilingLaw& law, double theta, double eps, Rng& rng);

// V(t) = sum of jumps with T_i <= t; t must lie in [0,1]
Pt evaluate_V(const LevySeries& series, double t);

// excursion of atom i: climbs from V(T_i^-) at s=0 to V(T_i) at s=1 through
// the cluster partial sums under the floor(tan(pi(s-1/2))) time change;
// endpoints are evaluated exactly
Pt evaluate_excursion(const LevySeries& series, size_t atom, double s);

struct PartialSumPath {
    long long n = 0;
    std::vector<double> times;
    std::vector<Pt> values;         // (1/a_n) sum_{i < floor(n t)} X_i
    double largest_increment = 0;   // max_i |X_i| / a_n over the walked orbit
    uint64_t seed = 0, stream = 0;
};

PartialSumPath simulate_partial_sum(const MaximalSetSpec& spec, long long n,
                                    const std::vector<double>& grid,
                                    uint64_t seed, uint64_t stream = 0);

// first components of S_n(t) across independent orbits (parallel by stream)
std::vector<double> partial_sum_endpoints(const MaximalSetSpec& spec, long long n,
                                          double t, long long paths,
                                          uint64_t seed, int threads = 0);

struct MarginalComparison {
    double ks = 0;
    double critical_1pct = 0;
    bool below_1pct = false;
    long long n_a = 0, n_b = 0;
};

// two-sample Kolmogorov-Smirnov on arctan-transformed values (the transform
// is monotone, so the statistic is unchanged; the empirical CDFs just live
// on a compact range)
MarginalComparison compare_marginals(std::vector<double> a, std::vector<double> b);

// mean number of atoms per series whose jump norm exceeds each x
std::vector<double> mean_jump_counts(const PilingLaw& law, double theta, double eps,
                                     long long series, const std::vector<double>& x_grid,
                                     uint64_t seed, int threads = 0);

} // namespace expile
