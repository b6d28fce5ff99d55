#include "expile/limit.hpp"

#include "expile/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace expile {

QTilde sample_qtilde(const PilingLaw& law, Rng& rng) {
    PilingSample s = sample_piling(law, rng);
    QTilde out;
    out.anchor = s.anchor;
    out.branch = s.branch;
    if (s.entries.empty() || !(s.L > 0))
        throw std::logic_error("piling sample has no finite entries");
    long long first = s.entries.front().offset;
    const Rational alpha = law.spec.alpha_d();   // xi lives on the |X| tail scale
    const int dim = law.spec.dim();
    out.entries.reserve(s.entries.size());
    for (const auto& e : s.entries) {
        QEntry q;
        q.offset = e.offset - first;
        q.norm = e.norm / s.L;
        Pt scaled{e.vec[0] / s.L, e.vec[1] / s.L};
        q.q = xi_map_vec(scaled, dim, alpha);
        out.cluster_sum[0] += q.q[0];
        out.cluster_sum[1] += q.q[1];
        out.entries.push_back(q);
    }
    return out;
}

namespace {

// any normalized entry maps into the unit ball, so the cluster sum is
// bounded by the worst-case entry count
double cluster_sum_cap(const PilingLaw& law) {
    size_t fwd = 1;
    for (const auto& b : law.branches) fwd = std::max(fwd, b.entries.size());
    size_t back = 0;
    for (const auto& cands : law.back) back = std::max(back, cands.size());
    return (double)(fwd + back);
}

} // namespace

LevySeries sample_levy(const PilingLaw& law, double theta, double eps, Rng& rng) {
    if (!(theta > 0) || !(theta <= 1)) throw SpecError("extremal index must lie in (0, 1]");
    if (!(eps > 0)) throw SpecError("truncation threshold must be positive");
    double alpha = law.spec.alpha_d().to_double();
    if (!(alpha > 0) || !(alpha < 1)) throw SpecError("tail index must lie in (0, 1)");

    LevySeries out;
    out.theta = theta;
    out.eps = eps;
    out.dim = law.spec.dim();
    out.alpha = law.spec.alpha_d();

    const double inv_alpha = 1.0 / alpha;
    const double cap = cluster_sum_cap(law);
    double gamma = 0;
    for (;;) {
        gamma += rng.exponential();
        out.drawn++;
        // expected jump mass beyond this arrival:
        // cap * theta^{1/a} * gamma^{1-1/a} / (1/a - 1)
        double tail = cap * std::pow(theta, inv_alpha) *
                      std::pow(gamma, 1.0 - inv_alpha) / (inv_alpha - 1.0);
        if (tail < eps / 4) break;
        LevyAtom atom;
        atom.gamma = gamma;
        atom.U = gamma / theta;
        atom.T = rng.uniform();
        atom.mark = sample_qtilde(law, rng);
        double scale = std::pow(atom.U, -inv_alpha);
        atom.jump = {scale * atom.mark.cluster_sum[0], scale * atom.mark.cluster_sum[1]};
        out.atoms.push_back(std::move(atom));
    }
    std::sort(out.atoms.begin(), out.atoms.end(),
              [](const LevyAtom& a, const LevyAtom& b) { return a.T < b.T; });
    return out;
}

Pt evaluate_V(const LevySeries& series, double t) {
    if (!(t >= 0) || !(t <= 1)) throw SpecError("time outside [0,1]");
    Pt v{0, 0};
    for (const auto& a : series.atoms) {
        if (a.T <= t) {
            v[0] += a.jump[0];
            v[1] += a.jump[1];
        }
    }
    return v;
}

Pt evaluate_excursion(const LevySeries& series, size_t atom, double s) {
    if (atom >= series.atoms.size()) throw SpecError("atom index out of range");
    if (!(s >= 0) || !(s <= 1)) throw SpecError("time outside [0,1]");
    const LevyAtom& a = series.atoms[atom];
    // atoms are T-sorted: the index prefix is exactly {T_i < T} and matches
    // evaluate_V's summation order term for term
    Pt v{0, 0};
    for (size_t i = 0; i < atom; ++i) {
        v[0] += series.atoms[i].jump[0];
        v[1] += series.atoms[i].jump[1];
    }
    if (s == 0) return v;
    if (s == 1) return {v[0] + a.jump[0], v[1] + a.jump[1]};
    double reach = std::floor(std::tan(3.14159265358979323846 * (s - 0.5)));
    double scale = std::pow(a.U, -1.0 / series.alpha.to_double());
    for (const auto& e : a.mark.entries) {
        if ((double)e.offset <= reach) {
            v[0] += scale * e.q[0];
            v[1] += scale * e.q[1];
        }
    }
    return v;
}

PartialSumPath simulate_partial_sum(const MaximalSetSpec& spec, long long n,
                                    const std::vector<double>& grid,
                                    uint64_t seed, uint64_t stream) {
    if (!spec.finalized()) throw SpecError("spec must be finalized");
    if (n < 1) throw SpecError("need a positive orbit length");
    for (size_t g = 0; g < grid.size(); ++g) {
        if (!(grid[g] >= 0) || !(grid[g] <= 1)) throw SpecError("grid time outside [0,1]");
        if (g > 0 && grid[g] < grid[g - 1]) throw SpecError("grid times must ascend");
    }
    auto tf = threshold_family(spec, n);
    const double inv_an = 1.0 / tf.a_n();

    PartialSumPath path;
    path.n = n;
    path.seed = seed;
    path.stream = stream;
    path.times = grid;
    path.values.assign(grid.size(), Pt{0, 0});

    DigitOrbit orb = sample_stationary(spec.map, seed, stream);
    Pt acc{0, 0};
    size_t g = 0;
    while (g < grid.size() && (long long)std::floor((double)n * grid[g]) <= 0) {
        path.values[g] = acc;
        g++;
    }
    for (long long i = 0; i < n; ++i) {
        auto obs = evaluate_observable(spec, orb.point());
        if (obs.ball >= 0 && std::isfinite(obs.magnitude)) {
            acc[0] += obs.magnitude * obs.direction[0] * inv_an;
            acc[1] += obs.magnitude * obs.direction[1] * inv_an;
            double norm = obs.magnitude * inv_an;
            path.largest_increment = std::max(path.largest_increment, norm);
        }
        while (g < grid.size() && (long long)std::floor((double)n * grid[g]) == i + 1) {
            path.values[g] = acc;
            g++;
        }
        orb.step();
    }
    while (g < grid.size()) {
        path.values[g] = acc;
        g++;
    }
    return path;
}

std::vector<double> partial_sum_endpoints(const MaximalSetSpec& spec, long long n,
                                          double t, long long paths,
                                          uint64_t seed, int threads) {
    if (paths < 1) throw SpecError("need at least one path");
    struct Acc {
        std::vector<double> vals;
    };
    const long long blocks = std::min<long long>(256, paths);
    const long long per = (paths + blocks - 1) / blocks;
    std::vector<double> grid{t};
    Acc all = block_reduce<Acc>(
        blocks, threads,
        [&](long long b) {
            Acc acc;
            long long lo = b * per, hi = std::min(paths, lo + per);
            for (long long p = lo; p < hi; ++p) {
                auto path = simulate_partial_sum(spec, n, grid, seed, (uint64_t)p);
                acc.vals.push_back(path.values[0][0]);
            }
            return acc;
        },
        [](Acc& t_, const Acc& p) {
            t_.vals.insert(t_.vals.end(), p.vals.begin(), p.vals.end());
        });
    return all.vals;
}

MarginalComparison compare_marginals(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 1000 || b.size() < 1000)
        throw SpecError("marginal comparison needs at least 10^3 samples per side");
    for (auto& v : a) v = std::atan(v);
    for (auto& v : b) v = std::atan(v);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double ks = 0;
    const double na = (double)a.size(), nb = (double)b.size();
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) i++;
        else j++;
        ks = std::max(ks, std::fabs((double)i / na - (double)j / nb));
    }
    MarginalComparison cmp;
    cmp.ks = ks;
    cmp.n_a = (long long)a.size();
    cmp.n_b = (long long)b.size();
    cmp.critical_1pct = 1.6276 * std::sqrt((na + nb) / (na * nb));
    cmp.below_1pct = ks < cmp.critical_1pct;
    return cmp;
}

std::vector<double> mean_jump_counts(const PilingLaw& law, double theta, double eps,
                                     long long series, const std::vector<double>& x_grid,
                                     uint64_t seed, int threads) {
    if (series < 1) throw SpecError("need at least one series");
    struct Acc {
        std::vector<long long> counts;
    };
    const long long blocks = std::min<long long>(1024, series);
    const long long per = (series + blocks - 1) / blocks;
    Acc total = block_reduce<Acc>(
        blocks, threads,
        [&](long long b) {
            Acc acc;
            acc.counts.assign(x_grid.size(), 0);
            long long lo = b * per, hi = std::min(series, lo + per);
            for (long long s = lo; s < hi; ++s) {
                Rng rng(seed, (uint64_t)s);
                LevySeries ls = sample_levy(law, theta, eps, rng);
                for (const auto& atom : ls.atoms) {
                    double norm = std::hypot(atom.jump[0], atom.jump[1]);
                    for (size_t x = 0; x < x_grid.size(); ++x)
                        if (norm > x_grid[x]) acc.counts[x]++;
                }
            }
            return acc;
        },
        [&](Acc& t, const Acc& p) {
            if (t.counts.empty()) t.counts.assign(x_grid.size(), 0);
            for (size_t x = 0; x < x_grid.size(); ++x) t.counts[x] += p.counts[x];
        });
    std::vector<double> means(x_grid.size());
    for (size_t x = 0; x < x_grid.size(); ++x)
        means[x] = (double)total.counts[x] / (double)series;
    return means;
}

} // namespace expile
