#include "expile/empirics.hpp"

#include "expile/parallel.hpp"
#include "expile/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace expile {

namespace {

void require_unit_multiplicity(const MaximalSetSpec& spec, const char* what) {
    for (const auto& b : spec.balls)
        if (b.D != 1)
            throw SpecError(std::string(what) + " requires unit ball multiplicities");
}

long long map_determinant(const TorusMap& map) {
    long long det = 1;
    for (int s : map.slopes) det *= s;
    return det;
}

// folded circle distance of doubles, coordinates pre-reduced to [0,1)
inline double fold_abs(double d) {
    d = std::fabs(d);
    return d > 0.5 ? 1.0 - d : d;
}

} // namespace

// ---- closed-form extremal index ----

std::vector<OrbitReturn> orbit_returns(const MaximalSetSpec& spec, int anchor, long long q_n) {
    if (!spec.finalized())
        throw SpecError("spec must be finalized before computing returns");
    std::vector<OrbitReturn> out;
    const auto& bi = spec.balls[(size_t)anchor];
    for (long long j = 1; j <= q_n; ++j) {
        auto dp = derivative_power(spec.map, j);
        for (int l = 0; l < spec.ball_count(); ++l) {
            long long diff = spec.balls[(size_t)l].m - bi.m - j;
            bool on_orbit;
            if (spec.mode == SetMode::Periodic) {
                long long q = spec.period;
                on_orbit = ((diff % q) + q) % q == 0;
            } else {
                on_orbit = diff == 0;
            }
            if (!on_orbit) continue;
            Quad ratio = radius_ratio(spec, l, anchor);
            bool forced = true;
            for (int k = 0; k < spec.dim(); ++k)
                if (ratio < Quad(dp.factor[(size_t)k])) { forced = false; break; }
            out.push_back({j, l, forced});
        }
    }
    return out;
}

namespace {

// relative preimage measure of a non-forced return: prod_k ratio * beta_k^{-j}
Quad return_measure(const MaximalSetSpec& spec, const OrbitReturn& r, int anchor) {
    Quad ratio = radius_ratio(spec, r.target, anchor);
    auto dp = derivative_power(spec.map, -r.j);
    Quad m(1);
    for (int k = 0; k < spec.dim(); ++k) {
        Quad axis = ratio * Quad(dp.factor[(size_t)k]);
        if (axis > Quad(1))
            throw SpecError("return preimage straddles the anchor ball; no closed form");
        m = m * axis;
    }
    return m;
}

// semi-axes of one return's preimage relative to the anchor radius
std::array<Quad, 2> return_axes(const MaximalSetSpec& spec, const OrbitReturn& r, int anchor) {
    Quad ratio = radius_ratio(spec, r.target, anchor);
    auto dp = derivative_power(spec.map, -r.j);
    std::array<Quad, 2> ax{Quad(0), Quad(0)};
    for (int k = 0; k < spec.dim(); ++k)
        ax[(size_t)k] = ratio * Quad(dp.factor[(size_t)k]);
    return ax;
}

// union of nested preimages = the componentwise-largest one
Quad nonforced_union(const MaximalSetSpec& spec, const std::vector<OrbitReturn>& rets, int anchor) {
    Quad best(0);
    std::array<Quad, 2> best_ax{Quad(0), Quad(0)};
    for (const auto& r : rets) {
        if (r.forced) continue;
        auto ax = return_axes(spec, r, anchor);
        bool geq = true, leq = true;
        for (int k = 0; k < spec.dim(); ++k) {
            if (ax[(size_t)k] < best_ax[(size_t)k]) geq = false;
            if (ax[(size_t)k] > best_ax[(size_t)k]) leq = false;
        }
        if (!geq && !leq)
            throw SpecError("return preimages are not nested; no closed form");
        if (geq) {
            best_ax = ax;
            best = return_measure(spec, r, anchor);
        }
    }
    return best;
}

} // namespace

Quad theoretical_extremal_index_exact(const MaximalSetSpec& spec, long long q_n) {
    if (spec.mode == SetMode::Countable)
        throw SpecError("countable mode has no finite closed form; use the double overload");
    require_unit_multiplicity(spec, "extremal-index closed form");
    Quad num(0), den(0);
    for (int i = 0; i < spec.ball_count(); ++i) {
        Quad w = ball_weight(spec, i);
        den = den + w;
        auto rets = orbit_returns(spec, i, q_n);
        bool any_nonforced = false;
        for (const auto& r : rets)
            if (!r.forced) any_nonforced = true;
        Quad sub(0);
        if (!rets.empty())
            sub = any_nonforced ? w * nonforced_union(spec, rets, i) : w;
        num = num + (w - sub);
    }
    return num / den;
}

double theoretical_extremal_index(const MaximalSetSpec& spec, long long q_n) {
    if (spec.mode != SetMode::Countable)
        return theoretical_extremal_index_exact(spec, q_n).to_double();
    require_unit_multiplicity(spec, "extremal-index closed form");

    double rhat = quad_pow(countable_ratio(spec), spec.alpha_d())->to_double();
    double w1 = ball_weight(spec, 0).to_double();
    double total = w1 / (1.0 - rhat);
    double det = (double)map_determinant(spec.map);

    double subtracted = 0;
    if (!spec.ei_return_exponents.empty()) {
        // closed-form override: level i returns through the successor level
        // with contraction det^{-e_i}
        for (size_t i = 0; i < spec.ei_return_exponents.size(); ++i) {
            double w_next = w1 * std::pow(rhat, (double)(i + 1));
            double term = w_next * std::pow(det, -(double)spec.ei_return_exponents[i]);
            subtracted += term;
            if (term < 1e-30) break;
        }
        return 1.0 - subtracted / total;
    }

    // geometric rule on the materialized prefix; deeper levels have gaps
    // beyond any practical run gap and stay clean
    double prefix_w = 0, prefix_clean = 0;
    for (int i = 0; i < spec.ball_count(); ++i) {
        double w = ball_weight(spec, i).to_double();
        prefix_w += w;
        auto rets = orbit_returns(spec, i, q_n);
        bool any_nonforced = false;
        for (const auto& r : rets)
            if (!r.forced) any_nonforced = true;
        double sub = 0;
        if (!rets.empty())
            sub = any_nonforced ? w * nonforced_union(spec, rets, i).to_double() : w;
        prefix_clean += w - sub;
    }
    double tail_w = total - prefix_w;
    return (prefix_clean + tail_w) / total;
}

// ---- Monte Carlo estimator ----

EIEstimate estimate_extremal_index(const MaximalSetSpec& spec, const EIConfig& cfg) {
    if (!spec.finalized())
        throw SpecError("spec must be finalized before estimation");
    require_unit_multiplicity(spec, "extremal-index estimation");
    if (cfg.q_n < 1) throw SpecError("run gap must be positive");
    if (cfg.starts < 1) throw SpecError("need at least one start");

    const int B = spec.ball_count();
    const int d = spec.dim();
    std::vector<double> radius((size_t)B);
    for (int i = 0; i < B; ++i)
        radius[(size_t)i] = exceedance_radius(spec, i, cfg.n, cfg.tau);

    // regions must stay disjoint at this level or anchors are ambiguous
    for (int i = 0; i < B; ++i)
        for (int l = i + 1; l < B; ++l) {
            if (radius[(size_t)i] <= 0 || radius[(size_t)l] <= 0) continue;
            if (circle_distance(d, spec.center(i), spec.center(l)) <=
                radius[(size_t)i] + radius[(size_t)l])
                throw SpecError("exceedance regions overlap at this level");
        }

    // spoiler table from the live radii: forced returns are skipped, anchors
    // with only forced returns never start a cluster
    std::vector<std::vector<uint8_t>> skip((size_t)B);
    std::vector<uint8_t> never_clean((size_t)B, 0);
    for (int i = 0; i < B; ++i) {
        skip[(size_t)i].assign((size_t)((cfg.q_n + 1) * B), 0);
        if (radius[(size_t)i] <= 0) continue;
        bool any = false, any_nonforced = false;
        for (long long j = 1; j <= cfg.q_n; ++j) {
            for (int l = 0; l < B; ++l) {
                if (radius[(size_t)l] <= 0) continue;
                long long diff = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m - j;
                bool on_orbit = (spec.mode == SetMode::Periodic)
                    ? ((diff % spec.period) + spec.period) % spec.period == 0
                    : diff == 0;
                if (!on_orbit) continue;
                bool forced = true;
                for (int k = 0; k < d; ++k) {
                    double contraction = std::pow((double)spec.map.slopes[(size_t)k], -(double)j);
                    if (radius[(size_t)l] * contraction < radius[(size_t)i] * (1 - 1e-12))
                        forced = false;
                }
                any = true;
                if (forced) skip[(size_t)i][(size_t)(j * B + l)] = 1;
                else any_nonforced = true;
            }
        }
        never_clean[(size_t)i] = any && !any_nonforced;
    }

    struct Acc {
        long long hits = 0;
        long long clean = 0;
    };
    const long long blocks = std::min<long long>(4096, std::max<long long>(1, cfg.starts / 1024));
    const long long per = (cfg.starts + blocks - 1) / blocks;

    std::vector<double> centers_x((size_t)B), centers_y((size_t)B);
    for (int i = 0; i < B; ++i) {
        centers_x[(size_t)i] = spec.center(i)[0];
        centers_y[(size_t)i] = spec.center(i)[1];
    }

    Acc total = block_reduce<Acc>(
        blocks, cfg.threads,
        [&](long long b) {
            Acc acc;
            Rng rng(cfg.seed, (uint64_t)b);
            long long lo = b * per;
            long long hi = std::min(cfg.starts, lo + per);
            for (long long s = lo; s < hi; ++s) {
                double x0 = rng.uniform();
                double x1 = d == 2 ? rng.uniform() : 0.0;
                int anchor = -1;
                for (int i = 0; i < B; ++i) {
                    double r = radius[(size_t)i];
                    if (r <= 0) continue;
                    double dx = fold_abs(x0 - centers_x[(size_t)i]);
                    if (dx > r) continue;
                    if (d == 2) {
                        double dy = fold_abs(x1 - centers_y[(size_t)i]);
                        if (dx * dx + dy * dy > r * r) continue;
                    }
                    anchor = i;
                    break;
                }
                if (anchor < 0) continue;
                acc.hits++;
                if (never_clean[(size_t)anchor]) continue;
                bool spoiled = false;
                double y0 = x0, y1 = x1;
                for (long long j = 1; j <= cfg.q_n && !spoiled; ++j) {
                    y0 = y0 * spec.map.slopes[0];
                    y0 -= std::floor(y0);
                    if (d == 2) {
                        y1 = y1 * spec.map.slopes[1];
                        y1 -= std::floor(y1);
                    }
                    for (int l = 0; l < B; ++l) {
                        double r = radius[(size_t)l];
                        if (r <= 0) continue;
                        if (skip[(size_t)anchor][(size_t)(j * B + l)]) continue;
                        double dx = fold_abs(y0 - centers_x[(size_t)l]);
                        if (dx > r) continue;
                        if (d == 2) {
                            double dy = fold_abs(y1 - centers_y[(size_t)l]);
                            if (dx * dx + dy * dy > r * r) continue;
                        }
                        spoiled = true;
                        break;
                    }
                }
                if (!spoiled) acc.clean++;
            }
            return acc;
        },
        [](Acc& t, const Acc& p) {
            t.hits += p.hits;
            t.clean += p.clean;
        });

    if (total.hits == 0)
        throw SpecError("insufficient exceedances at this level; raise tau or starts");
    EIEstimate est;
    est.starts = cfg.starts;
    est.hits = total.hits;
    est.clean = total.clean;
    est.theta_hat = (double)total.clean / (double)total.hits;
    est.se = std::sqrt(std::max(est.theta_hat * (1 - est.theta_hat), 1e-12) / (double)total.hits);
    return est;
}

// ---- exceedance scan ----

long long scan_exceedances(const MaximalSetSpec& spec, const ScanConfig& cfg,
                           const std::function<void(const ExceedanceCluster&)>& sink) {
    if (!spec.finalized())
        throw SpecError("spec must be finalized before scanning");
    require_unit_multiplicity(spec, "exceedance scanning");
    if (cfg.window < 1) throw SpecError("window half-width must be positive");
    if (cfg.q_n < 1) throw SpecError("run gap must be positive");
    if (cfg.n <= 2 * cfg.window) throw SpecError("orbit too short for the window");

    long long k_n = cfg.k_n > 0 ? cfg.k_n : (long long)std::ceil(std::cbrt((double)cfg.n));
    long long t_n = cfg.t_n > 0 ? cfg.t_n : (long long)std::ceil(std::log((double)cfg.n));
    long long r_n = cfg.n / std::max<long long>(1, k_n);
    if (k_n * t_n > cfg.n)
        throw SpecError("block schedule exceeds the orbit length");
    if (cfg.q_n >= r_n)
        throw SpecError("run gap must be shorter than a block");

    auto tf = threshold_family(spec, cfg.n);
    const int W = cfg.window;
    const long long n = cfg.n;

    std::vector<double> scaled((size_t)n);
    std::vector<float> dirx((size_t)n), diry((size_t)n);
    std::vector<int8_t> ball((size_t)n);

    long long emitted = 0;
    for (long long o = 0; o < cfg.orbits; ++o) {
        DigitOrbit orb = sample_stationary(spec.map, cfg.seed, (uint64_t)o);
        for (long long t = 0; t < n; ++t) {
            auto obs = evaluate_observable(spec, orb.point());
            scaled[(size_t)t] = tf.u_inv(obs.magnitude) / cfg.tau;
            dirx[(size_t)t] = (float)obs.direction[0];
            diry[(size_t)t] = (float)obs.direction[1];
            ball[(size_t)t] = (int8_t)obs.ball;
            orb.step();
        }
        for (long long t = W; t < n - W; ++t) {
            if (!(scaled[(size_t)t] < 1.0)) continue;
            ExceedanceCluster rec;
            rec.t = t;
            rec.orbit = o;
            rec.block = t / std::max<long long>(1, r_n);
            rec.anchor = ball[(size_t)t];
            rec.u = scaled[(size_t)t];
            rec.run_start = true;
            for (long long b = std::max<long long>(0, t - cfg.q_n); b < t; ++b)
                if (scaled[(size_t)b] < 1.0) rec.run_start = false;
            rec.window.reserve((size_t)(2 * W + 1));
            for (long long off = -W; off <= W; ++off) {
                WindowEntry e;
                e.offset = off;
                e.scaled = scaled[(size_t)(t + off)];
                e.direction = {(double)dirx[(size_t)(t + off)], (double)diry[(size_t)(t + off)]};
                e.ball = ball[(size_t)(t + off)];
                rec.window.push_back(e);
            }
            sink(rec);
            emitted++;
            if (cfg.max_clusters > 0 && emitted >= cfg.max_clusters) return emitted;
        }
    }
    return emitted;
}

// ---- conditional window sampler ----

void palm_windows(const MaximalSetSpec& spec, const PalmConfig& cfg,
                  const std::function<void(const ExceedanceCluster&)>& sink) {
    if (!spec.finalized())
        throw SpecError("spec must be finalized before sampling windows");
    require_unit_multiplicity(spec, "window sampling");
    if (cfg.window < 1) throw SpecError("window half-width must be positive");

    const int B = spec.ball_count();
    const int d = spec.dim();
    const int W = cfg.window;
    auto tf = threshold_family(spec, cfg.n);

    std::vector<double> radius((size_t)B);
    std::vector<double> weight((size_t)B);
    double wsum = 0;
    for (int i = 0; i < B; ++i) {
        radius[(size_t)i] = exceedance_radius(spec, i, cfg.n, cfg.tau);
        weight[(size_t)i] = std::pow(radius[(size_t)i], (double)d);
        wsum += weight[(size_t)i];
    }
    if (wsum <= 0) throw SpecError("all exceedance regions are empty at this level");

    // digit depth: window reach plus the fixed-point precision window
    std::vector<long long> depth((size_t)d);
    for (int k = 0; k < d; ++k)
        depth[(size_t)k] = 2LL * W + fixed_window_digits(spec.map.slopes[(size_t)k]) + 8;

    // per-ball center digits at full depth, reused across draws
    std::vector<std::vector<FixedVec>> cdig((size_t)B);
    long long max_depth = 0;
    for (int k = 0; k < d; ++k) max_depth = std::max(max_depth, depth[(size_t)k]);
    for (int i = 0; i < B; ++i) cdig[(size_t)i] = spec.center_digits(i, max_depth);

    Rng rng(cfg.seed, 0);
    for (long long w = 0; w < cfg.windows; ++w) {
        // anchor by exceedance volume
        double pick = rng.uniform() * wsum;
        int anchor = B - 1;
        double cum = 0;
        for (int i = 0; i < B; ++i) {
            cum += weight[(size_t)i];
            if (pick < cum) { anchor = i; break; }
        }
        double r = radius[(size_t)anchor];

        // uniform displacement inside the ball
        std::array<double, 2> delta{0, 0};
        if (d == 1) {
            delta[0] = (2 * rng.uniform() - 1) * r;
        } else {
            do {
                delta[0] = 2 * rng.uniform() - 1;
                delta[1] = 2 * rng.uniform() - 1;
            } while (delta[0] * delta[0] + delta[1] * delta[1] > 1);
            delta[0] *= r;
            delta[1] *= r;
        }

        // exact digit vector: center + delta, then W uniform backward digits
        std::vector<FixedVec> vec((size_t)d);
        for (int k = 0; k < d; ++k) {
            vec[(size_t)k] = cdig[(size_t)anchor][(size_t)k];
            long long L = (long long)vec[(size_t)k].dig.size();
            long double baseL = std::pow((long double)spec.map.slopes[(size_t)k], (long double)L);
            i128 t = (i128)(delta[(size_t)k] * (double)baseL);
            vec[(size_t)k].add_scaled(t, L);
            std::vector<uint8_t> front((size_t)W);
            for (int p = 0; p < W; ++p)
                front[(size_t)p] = (uint8_t)rng.below((uint32_t)spec.map.slopes[(size_t)k]);
            vec[(size_t)k].prepend(front);
        }

        ExceedanceCluster rec;
        rec.t = 0;
        rec.orbit = w;
        rec.block = 0;
        rec.run_start = true;
        rec.window.reserve((size_t)(2 * W + 1));
        for (long long off = -W; off <= W; ++off) {
            WindowEntry e;
            e.offset = off;
            // first support ball hit decides the observation
            for (int l = 0; l < B; ++l) {
                double g0 = vec[0].signed_gap(W + off, cdig[(size_t)l][0]);
                double g1 = d == 2 ? vec[1].signed_gap(W + off, cdig[(size_t)l][1]) : 0.0;
                double dist = std::sqrt(g0 * g0 + g1 * g1);
                if (dist < spec.balls[(size_t)l].eps && dist > 0) {
                    e.scaled = tf.u_inv(h_eval(spec, l, dist)) / cfg.tau;
                    e.direction = {g0 / dist, g1 / dist};
                    e.ball = l;
                    break;
                }
            }
            rec.window.push_back(e);
        }
        rec.anchor = rec.window[(size_t)W].ball;
        rec.u = rec.window[(size_t)W].scaled;
        sink(rec);
    }
}

// ---- cluster statistics against the law ----

PilingStats empirical_piling_stats(const MaximalSetSpec& spec, const PilingLaw& law,
                                   const PilingStatsConfig& cfg) {
    PilingStats stats;
    stats.anchor_counts.assign((size_t)spec.ball_count(), 0);
    stats.branch_counts.assign(law.branches.size(), 0);
    stats.branch_retained.assign(law.branches.size(), 0);
    std::map<std::pair<int, long long>, std::pair<long long, double>> acc;

    auto handle = [&](const ExceedanceCluster& rec) {
        if (rec.anchor < 0) return;
        stats.clusters++;
        stats.anchor_counts[(size_t)rec.anchor]++;
        int bi = classify_branch(law, rec.anchor, rec.u);
        if (bi < 0) return;
        stats.branch_counts[(size_t)bi]++;

        // negative-offset exceedances outside the branch's own set mark the
        // record as a cluster continuation rather than a start
        const auto& br = law.branches[(size_t)bi];
        bool keep = true;
        for (const auto& e : rec.window) {
            if (e.offset >= 0 || !(e.scaled < 1.0)) continue;
            bool allowed = false;
            for (const auto& ent : br.entries)
                if (ent.offset == e.offset) { allowed = true; break; }
            if (!allowed) { keep = false; break; }
        }
        if (!keep) {
            stats.discarded++;
            return;
        }
        stats.branch_retained[(size_t)bi]++;
        double u0 = rec.u;
        if (!(u0 > 0)) return;
        for (const auto& e : rec.window) {
            if (e.offset <= 0 || !std::isfinite(e.scaled)) continue;
            auto& cell = acc[{rec.anchor, e.offset}];
            cell.first++;
            cell.second += e.scaled / u0;
        }
    };

    if (cfg.use_palm) {
        PalmConfig pc;
        pc.n = cfg.n;
        pc.tau = cfg.tau;
        pc.windows = cfg.clusters;
        pc.window = cfg.window;
        pc.seed = cfg.seed;
        palm_windows(spec, pc, handle);
    } else {
        ScanConfig sc;
        sc.n = cfg.n;
        sc.tau = cfg.tau;
        sc.q_n = cfg.q_n;
        sc.window = cfg.window;
        sc.seed = cfg.seed;
        sc.max_clusters = cfg.clusters;
        // expected exceedances per orbit scale with tau; take a 2x margin
        double per_orbit = std::max(0.25, cfg.tau);
        sc.orbits = (long long)std::ceil(2.0 * (double)cfg.clusters / per_orbit) + 1;
        scan_exceedances(spec, sc, handle);
    }

    for (const auto& [key, cell] : acc) {
        RatioCell rc;
        rc.anchor = key.first;
        rc.offset = key.second;
        rc.count = cell.first;
        rc.mean = cell.second / (double)cell.first;
        stats.ratios.push_back(rc);
    }
    return stats;
}

// ---- tail calibration ----

std::vector<TailRow> tail_check(const MaximalSetSpec& spec, const TailConfig& cfg) {
    if (!spec.finalized())
        throw SpecError("spec must be finalized before tail checks");
    if (cfg.samples < 1) throw SpecError("need at least one sample");
    if (cfg.y_grid.empty()) throw SpecError("empty y grid");

    const int B = spec.ball_count();
    const int d = spec.dim();
    auto tf = threshold_family(spec, cfg.n);
    const double alpha_d = spec.alpha_d().to_double();
    // the bookkeeping volume is 2r (d=1) or r^2 (d=2); actual ball volumes
    // carry pi in the plane
    const double volume_ratio = d == 2 ? 3.14159265358979323846 : 1.0;

    const size_t Y = cfg.y_grid.size();
    std::vector<std::vector<double>> radius(Y, std::vector<double>((size_t)B));
    for (size_t yi = 0; yi < Y; ++yi)
        for (int i = 0; i < B; ++i) {
            double level = cfg.y_grid[yi] * tf.a_n() * cfg.a_n_scale;
            radius[yi][(size_t)i] =
                std::min(h_inverse(spec, i, level), spec.balls[(size_t)i].eps);
        }
    std::vector<double> rmax((size_t)B, 0.0);
    for (int i = 0; i < B; ++i)
        for (size_t yi = 0; yi < Y; ++yi)
            rmax[(size_t)i] = std::max(rmax[(size_t)i], radius[yi][(size_t)i]);

    // stratified jittered lattice: one point uniform in each cell keeps the
    // estimator unbiased while boundary cells carry all the variance
    long long cells_x = 0, cells_y = 1, total = 0;
    if (cfg.stratified) {
        if (d == 1) {
            cells_x = cfg.samples;
            total = cells_x;
        } else {
            cells_x = (long long)std::ceil(std::sqrt((double)cfg.samples));
            cells_y = cells_x;
            total = cells_x * cells_y;
        }
    } else {
        total = cfg.samples;
    }

    struct Acc {
        std::vector<long long> count;
    };
    const long long blocks = std::min<long long>(4096, std::max<long long>(1, total / 1024));
    const long long per = (total + blocks - 1) / blocks;

    Acc sum = block_reduce<Acc>(
        blocks, cfg.threads,
        [&](long long b) {
            Acc acc;
            acc.count.assign(Y, 0);
            Rng rng(cfg.seed, (uint64_t)b);
            long long lo = b * per;
            long long hi = std::min(total, lo + per);
            for (long long s = lo; s < hi; ++s) {
                double x0, x1 = 0;
                if (cfg.stratified) {
                    if (d == 1) {
                        x0 = ((double)s + rng.uniform()) / (double)cells_x;
                    } else {
                        long long sx = s / cells_y, sy = s % cells_y;
                        x0 = ((double)sx + rng.uniform()) / (double)cells_x;
                        x1 = ((double)sy + rng.uniform()) / (double)cells_y;
                    }
                } else {
                    x0 = rng.uniform();
                    x1 = d == 2 ? rng.uniform() : 0.0;
                }
                for (int i = 0; i < B; ++i) {
                    double dx = fold_abs(x0 - spec.center(i)[0]);
                    if (dx > rmax[(size_t)i]) continue;
                    double d2;
                    if (d == 2) {
                        double dy = fold_abs(x1 - spec.center(i)[1]);
                        d2 = dx * dx + dy * dy;
                    } else {
                        d2 = dx * dx;
                    }
                    for (size_t yi = 0; yi < Y; ++yi) {
                        double r = radius[yi][(size_t)i];
                        if (d2 < r * r) acc.count[yi]++;
                    }
                    break;
                }
            }
            return acc;
        },
        [&](Acc& t, const Acc& p) {
            if (t.count.empty()) t.count.assign(Y, 0);
            for (size_t yi = 0; yi < Y; ++yi) t.count[yi] += p.count[yi];
        });

    std::vector<TailRow> rows;
    for (size_t yi = 0; yi < Y; ++yi) {
        TailRow row;
        row.y = cfg.y_grid[yi];
        row.n_p_hat = (double)cfg.n * (double)sum.count[yi] / (double)total;
        row.target = volume_ratio * std::pow(row.y, -alpha_d);
        row.rel_err = std::fabs(row.n_p_hat - row.target) / row.target;
        rows.push_back(row);
    }
    return rows;
}

// ---- decay-rate bound table ----

DependenceReport dependence_bound_report(const std::vector<long long>& n_grid, double rho) {
    if (rho <= 0 || rho >= 1) throw SpecError("decay rate must lie in (0, 1)");
    DependenceReport rep;
    for (long long n : n_grid) {
        if (n < 1) throw SpecError("grid values must be positive");
        DependenceRow row;
        row.n = n;
        row.N = n == 1 ? 0 : (long long)std::ceil(std::log((double)n));
        double rN = std::pow(rho, (double)row.N);
        row.variation_bound = (1.0 + 2.0 * (double)row.N) * rN;
        row.block_bound = (4.0 * (double)row.N + 1.0) * (double)n * rN;
        rep.rows.push_back(row);
    }

    bool var_ok = true;
    for (size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].variation_bound > rep.rows[i - 1].variation_bound + 1e-15)
            var_ok = false;
    // the block bound saws between truncation jumps; compare envelope halves
    bool block_ok = true;
    if (rep.rows.size() >= 4) {
        size_t half = rep.rows.size() / 2;
        double first = 0, second = 0;
        for (size_t i = 0; i < rep.rows.size(); ++i) {
            double v = rep.rows[i].block_bound;
            if (i < half) first = std::max(first, v);
            else second = std::max(second, v);
        }
        block_ok = second < first;
    }
    rep.decays = var_ok && block_ok;
    return rep;
}

} // namespace expile
