#include "expile/piling.hpp"
#include "expile/csv.hpp"

#include <algorithm>
#include <cmath>

namespace expile {

namespace {

constexpr double kPi = 3.14159265358979323846;

double det_slope(const TorusMap& map) {
    double d = 1;
    for (int b : map.slopes) d *= b;
    return d;
}

Quad quad_min(const Quad& a, const Quad& b) { return a < b ? a : b; }
Quad quad_max(const Quad& a, const Quad& b) { return a < b ? b : a; }

} // namespace

std::vector<Quad> compute_weights(const MaximalSetSpec& spec) {
    std::vector<Quad> w;
    if (spec.mode == SetMode::Countable) {
        Quad rh = [&] {
            auto r = quad_pow(countable_ratio(spec), spec.alpha_d());
            if (!r) throw SpecError("countable ratio power is not exact in Q(sqrt2)");
            return *r;
        }();
        if (!(rh < Quad(1))) throw SpecError("countable weight series diverges");
        Quad p = Quad(1) - rh;      // closed form over the whole family
        for (int i = 0; i < spec.ball_count(); ++i) {
            w.push_back(p);
            p = p * rh;
        }
        return w;
    }
    Quad total(0);
    for (int i = 0; i < spec.ball_count(); ++i) total += ball_weight(spec, i);
    for (int i = 0; i < spec.ball_count(); ++i) w.push_back(ball_weight(spec, i) / total);
    return w;
}

std::pair<Quad, Quad> contraction_bounds(const MaximalSetSpec& spec, int i, int l, long long s) {
    if (s != 0 && spec.mode != SetMode::Periodic)
        throw SpecError("period repeats only exist in periodic mode");
    long long e = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m - spec.period * s;
    if (e >= 0) throw SpecError("contraction bounds need a negative exponent");
    DerivativePower dp = derivative_power(spec.map, e);
    Quad lo(dp.factor[0]), hi(dp.factor[0]);
    for (int k = 1; k < spec.dim(); ++k) {
        lo = quad_min(lo, Quad(dp.factor[(size_t)k]));
        hi = quad_max(hi, Quad(dp.factor[(size_t)k]));
    }
    return {lo, hi};
}

std::pair<Quad, Quad> u_bounds(const MaximalSetSpec& spec, int i, int l, long long s) {
    auto [lmin, lmax] = contraction_bounds(spec, i, l, s);
    Quad ratio = radius_ratio(spec, l, i);
    return {ratio / lmin, ratio / lmax};
}

std::vector<AElem> build_A_set(const MaximalSetSpec& spec, int i) {
    std::vector<AElem> out;
    auto consider = [&](int l, long long s) {
        long long gap = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m - spec.period * s;
        // beyond the exact derivative range the expansion factor alone pushes
        // u_min past one (ratios never get within 3^-80 of zero)
        if (gap < -80) return false;
        // deep gaps overflow the exact division; a double is accurate to 1e-15
        // here, so a clear numeric margin settles the u_min >= 1 cases first
        auto [lmin, lmax] = contraction_bounds(spec, i, l, s);
        Quad ratio = radius_ratio(spec, l, i);
        if (ratio.to_double() > 1.5 * lmin.to_double()) return false;
        Quad umin = ratio / lmin, umax = ratio / lmax;
        if (!(umin < Quad(1))) return false;
        AElem e;
        e.offset = gap;
        e.ball = l;
        e.s = s;
        e.u_min = umin;
        e.u_max = umax;
        out.push_back(e);
        return true;
    };
    if (spec.mode == SetMode::Periodic) {
        for (int l = 0; l < spec.ball_count(); ++l) {
            long long d = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m;
            long long s = d < 0 ? 0 : 1;    // smallest s with a negative exponent
            // u_min grows by a slope power per repeat, so stop at the first miss
            while (consider(l, s)) ++s;
        }
    } else {
        for (int l = 0; l < i; ++l) consider(l, 0);
    }
    return out;
}

std::vector<AElem> check_interleaving(const MaximalSetSpec& spec, int i) {
    std::vector<AElem> elems = build_A_set(spec, i);
    std::sort(elems.begin(), elems.end(),
              [](const AElem& a, const AElem& b) { return a.u_max < b.u_max; });
    for (size_t p = 0; p + 1 < elems.size(); ++p)
        if (elems[p + 1].u_max < elems[p].u_min)
            throw SpecError("theorem inapplicable: interleaving violated");
    return elems;
}

std::string branch_case_name(BranchCase c) {
    switch (c) {
        case BranchCase::Zero: return "0";
        case BranchCase::I: return "I";
        case BranchCase::II: return "II";
        case BranchCase::III: return "III";
        case BranchCase::IV: return "IV";
    }
    return "?";
}

namespace {

PilingEntry make_entry(const MaximalSetSpec& spec, int i, int l, long long offset, long long s) {
    PilingEntry e;
    e.offset = offset;
    e.ball = l;
    e.s = s;
    e.deriv = derivative_power(spec.map, offset);
    e.factor = radius_ratio(spec, i, l);   // (c_i/c_l)^alpha
    return e;
}

std::vector<PilingEntry> positive_entries(const MaximalSetSpec& spec, int i, long long horizon) {
    std::vector<PilingEntry> out;
    out.push_back(make_entry(spec, i, i, 0, 0));
    if (spec.mode == SetMode::Periodic) {
        for (int l = 0; l < spec.ball_count(); ++l)
            for (long long s = 0;; ++s) {
                long long j = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m + spec.period * s;
                if (j > horizon) break;
                if (j > 0) out.push_back(make_entry(spec, i, l, j, s));
            }
    } else {
        for (int l = i + 1; l < spec.ball_count(); ++l) {
            long long j = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m;
            if (j <= horizon) out.push_back(make_entry(spec, i, l, j, 0));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const PilingEntry& a, const PilingEntry& b) { return a.offset < b.offset; });
    return out;
}

std::vector<BackCand> back_candidates(const MaximalSetSpec& spec, int i, long long horizon) {
    struct Raw { long long offset; int ball; long long s; };
    std::vector<Raw> raw;
    if (spec.mode == SetMode::Periodic) {
        for (int l = 0; l < spec.ball_count(); ++l)
            for (long long s = (spec.balls[(size_t)l].m < spec.balls[(size_t)i].m) ? 0 : 1;; ++s) {
                long long j = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m - spec.period * s;
                if (j < -horizon) break;
                if (j < 0) raw.push_back({j, l, s});
            }
    } else {
        for (int l = 0; l < i; ++l) {
            long long j = spec.balls[(size_t)l].m - spec.balls[(size_t)i].m;
            if (j >= -horizon) raw.push_back({j, l, 0});
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const Raw& a, const Raw& b) { return a.offset > b.offset; });
    std::vector<BackCand> out;
    double det = det_slope(spec.map);
    long long prev = 0;
    for (const Raw& r : raw) {
        BackCand c;
        c.offset = r.offset;
        c.ball = r.ball;
        c.s = r.s;
        DerivativePower dp = derivative_power(spec.map, r.offset);
        for (int k = 0; k < spec.dim(); ++k) c.g[k] = dp.factor[(size_t)k].to_double();
        c.factor = radius_ratio(spec, i, r.ball).to_double();
        c.hop_prob = std::pow(det, -(double)(prev - r.offset));
        prev = r.offset;
        out.push_back(c);
    }
    return out;
}

} // namespace

PilingLaw build_piling_law(const MaximalSetSpec& spec_in, long long horizon) {
    PilingLaw law;
    law.spec = spec_in;
    if (!law.spec.finalized()) law.spec.finalize();
    const MaximalSetSpec& spec = law.spec;
    law.horizon = horizon;
    law.mode_tag = spec.mode == SetMode::Periodic ? "periodic"
                 : spec.mode == SetMode::Countable ? "countable" : "non-periodic";

    law.raw_weights = compute_weights(spec);
    if (spec.mode == SetMode::Countable) {
        Quad prefix(0);
        for (const Quad& p : law.raw_weights) prefix += p;
        law.discarded_mass = Quad(1) - prefix;
        for (const Quad& p : law.raw_weights) law.weights.push_back(p / prefix);
    } else {
        law.weights = law.raw_weights;
    }

    for (int i = 0; i < spec.ball_count(); ++i) {
        std::vector<PilingEntry> pos = positive_entries(spec, i, horizon);
        std::vector<AElem> A = check_interleaving(spec, i);
        auto with_neg = [&](size_t upto) {     // entries with negatives e_1..e_upto
            std::vector<PilingEntry> es = pos;
            for (size_t p = 0; p < upto; ++p)
                es.push_back(make_entry(spec, i, A[p].ball, A[p].offset, A[p].s));
            std::sort(es.begin(), es.end(),
                      [](const PilingEntry& a, const PilingEntry& b) { return a.offset < b.offset; });
            return es;
        };
        auto push = [&](BranchCase cs, int p, Quad prob, Quad lo, Quad hi,
                        SphereLaw theta, std::vector<PilingEntry> es) {
            if (prob == Quad(0)) return;
            if (prob < Quad(0)) throw std::logic_error("negative branch probability");
            PilingBranch b;
            b.anchor = i;
            b.branch_case = cs;
            b.case_p = p;
            b.probability = prob;
            b.u_lo = lo;
            b.u_hi = hi;
            b.theta = theta;
            b.entries = std::move(es);
            law.branches.push_back(std::move(b));
        };
        SphereLaw uni;
        if (A.empty()) {
            push(BranchCase::Zero, 0, law.weights[(size_t)i], Quad(0), Quad(1), uni, pos);
        } else {
            push(BranchCase::I, 0, law.weights[(size_t)i] * A[0].u_max,
                 Quad(0), A[0].u_max, uni, with_neg(0));
            for (size_t p = 0; p < A.size(); ++p) {
                SphereLaw cond;
                cond.kind = SphereLaw::Kind::Conditional;
                cond.rho = A[p].offset;
                cond.ratio = radius_ratio(spec, A[p].ball, i);   // (c_l/c_i)^alpha
                push(BranchCase::II, (int)p + 1, law.weights[(size_t)i] * (A[p].u_min - A[p].u_max),
                     A[p].u_max, A[p].u_min, cond, with_neg(p + 1));
                if (p + 1 < A.size())
                    push(BranchCase::III, (int)p + 1,
                         law.weights[(size_t)i] * (A[p + 1].u_max - A[p].u_min),
                         A[p].u_min, A[p + 1].u_max, uni, with_neg(p + 1));
            }
            push(BranchCase::IV, (int)A.size(), law.weights[(size_t)i] * (Quad(1) - A.back().u_min),
                 A.back().u_min, Quad(1), uni, with_neg(A.size()));
        }
        law.back.push_back(back_candidates(spec, i, horizon));
    }

    Quad total(0);
    for (const PilingBranch& b : law.branches) total += b.probability;
    if (!(total == Quad(1))) throw std::logic_error("branch probabilities do not sum to one");
    for (int i = 0; i < spec.ball_count(); ++i) {
        Quad per(0);
        for (const PilingBranch& b : law.branches)
            if (b.anchor == i) per += b.probability;
        if (!(per == law.weights[(size_t)i]))
            throw std::logic_error("per-anchor branch mass mismatch");
    }
    return law;
}

// ---- sampling ----

Pt sample_conditional_theta(Rng& rng, int dim, double g1, double g2, double bound,
                            bool rejection) {
    if (dim == 1) {
        if (g1 < bound * (1 - 1e-12)) throw SpecError("conditional direction set is empty");
        return {rng.below(2) ? 1.0 : -1.0, 0.0};
    }
    if (rejection) {
        for (int it = 0; it < 10000; ++it) {
            double phi = 2 * kPi * rng.uniform();
            double w1 = std::cos(phi), w2 = std::sin(phi);
            if (std::hypot(g1 * w1, g2 * w2) >= bound * (1 - 1e-12)) return {w1, w2};
        }
        throw std::runtime_error("conditional direction sampling exceeded retry cap");
    }
    double ghi = std::max(g1, g2), glo = std::min(g1, g2);
    if (bound <= glo) {
        double phi = 2 * kPi * rng.uniform();
        return {std::cos(phi), std::sin(phi)};
    }
    if (bound > ghi * (1 + 1e-12)) throw SpecError("conditional direction set is empty");
    // |w_hi| >= t carves two symmetric arcs around the strong axis
    double t2 = (bound * bound - glo * glo) / (ghi * ghi - glo * glo);
    double a = std::acos(std::sqrt(std::min(1.0, t2)));
    double phi = (2 * rng.uniform() - 1) * a + (rng.below(2) ? kPi : 0.0);
    if (g2 > g1) phi += kPi / 2;
    return {std::cos(phi), std::sin(phi)};
}

namespace {

Pt sample_sphere(Rng& rng, int dim) {
    if (dim == 1) return {rng.below(2) ? 1.0 : -1.0, 0.0};
    double phi = 2 * kPi * rng.uniform();
    return {std::cos(phi), std::sin(phi)};
}

PilingSampleEntry eval_entry(const PilingEntry& e, int dim, double U, const Pt& theta) {
    PilingSampleEntry s;
    s.offset = e.offset;
    s.ball = e.ball;
    double f = e.factor.to_double();
    double n2 = 0;
    for (int k = 0; k < dim; ++k) {
        double v = U * e.deriv.factor[(size_t)k].to_double() * theta[(size_t)k] * f;
        s.vec[(size_t)k] = v;
        n2 += v * v;
    }
    s.norm = std::sqrt(n2);
    return s;
}

int pick_index(Rng& rng, const std::vector<double>& cum) {
    double x = rng.uniform() * cum.back();
    return (int)(std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
}

} // namespace

int classify_branch(const PilingLaw& law, int anchor, double U) {
    for (size_t b = 0; b < law.branches.size(); ++b) {
        const PilingBranch& br = law.branches[b];
        if (br.anchor != anchor) continue;
        if (U >= br.u_lo.to_double() && U < br.u_hi.to_double()) return (int)b;
    }
    return -1;
}

PilingSample sample_piling(const PilingLaw& law, Rng& rng, const SampleOptions& opt) {
    const MaximalSetSpec& spec = law.spec;
    const int dim = spec.dim();
    PilingSample out;

    if (opt.mode == SampleMode::TableBranch) {
        int bi = opt.force_branch;
        if (bi < 0) {
            std::vector<double> cum;
            double acc = 0;
            for (const PilingBranch& b : law.branches) cum.push_back(acc += b.probability.to_double());
            bi = pick_index(rng, cum);
        }
        const PilingBranch& br = law.branches[(size_t)bi];
        double lo = br.u_lo.to_double(), hi = br.u_hi.to_double();
        double U = opt.force_U >= 0 ? opt.force_U : lo + rng.uniform() * (hi - lo);
        Pt theta;
        if (br.theta.kind == SphereLaw::Kind::Conditional) {
            DerivativePower dp = derivative_power(spec.map, br.theta.rho);
            theta = sample_conditional_theta(rng, dim, dp.factor[0].to_double(),
                                             dp.factor[1].to_double(),
                                             br.theta.ratio.to_double() / U, opt.sphere_rejection);
        } else {
            theta = sample_sphere(rng, dim);
        }
        out.anchor = br.anchor;
        out.branch = bi;
        out.U = U;
        out.theta = theta;
        for (const PilingEntry& e : br.entries) out.entries.push_back(eval_entry(e, dim, U, theta));
        out.L = out.entries.front().norm;
        for (const auto& e : out.entries) out.L = std::min(out.L, e.norm);
        return out;
    }

    // conditioned mode: resample until no realized negative entry falls below 1
    std::vector<double> cum;
    double acc = 0;
    for (const Quad& w : law.weights) cum.push_back(acc += w.to_double());
    for (long long attempt = 1; attempt <= 10000000; ++attempt) {
        int i = pick_index(rng, cum);
        double U = opt.force_U >= 0 ? opt.force_U : rng.uniform();
        Pt theta = sample_sphere(rng, dim);

        std::vector<PilingSampleEntry> neg;
        bool rejected = false;
        for (const BackCand& c : law.back[(size_t)i]) {
            if (rng.uniform() >= c.hop_prob) break;    // backward walk left the orbit
            PilingSampleEntry s;
            s.offset = c.offset;
            s.ball = c.ball;
            double n2 = 0;
            for (int k = 0; k < dim; ++k) {
                double v = U * c.g[k] * theta[(size_t)k] * c.factor;
                s.vec[(size_t)k] = v;
                n2 += v * v;
            }
            s.norm = std::sqrt(n2);
            if (s.norm < 1) { rejected = true; break; }   // an earlier exceedance: not a cluster start
            neg.push_back(s);
        }
        if (rejected) continue;

        int bi = classify_branch(law, i, U);
        if (bi < 0) {
            // U-intervals partition [0,1) per anchor; the right endpoint can
            // only be reached through force_U
            for (size_t b = 0; b < law.branches.size(); ++b)
                if (law.branches[b].anchor == i) bi = (int)b;
        }
        out.anchor = i;
        out.branch = bi;
        out.U = U;
        out.theta = theta;
        out.attempts = attempt;
        out.entries = std::move(neg);
        std::reverse(out.entries.begin(), out.entries.end());
        const PilingBranch& br = law.branches[(size_t)bi];
        for (const PilingEntry& e : br.entries)
            if (e.offset >= 0) out.entries.push_back(eval_entry(e, dim, U, theta));
        out.L = out.entries.front().norm;
        for (const auto& e : out.entries) out.L = std::min(out.L, e.norm);
        return out;
    }
    throw std::runtime_error("piling sampler rejection cap exceeded");
}

// ---- polar pieces ----

double xi_map_norm(double norm, const Rational& alpha) {
    if (std::isinf(norm)) return 0;
    if (norm <= 0) throw SpecError("xi map needs a nonzero input");
    return std::pow(norm, -1.0 / alpha.to_double());
}

Pt xi_map_vec(const Pt& x, int dim, const Rational& alpha) {
    double n2 = 0;
    for (int k = 0; k < dim; ++k) n2 += x[(size_t)k] * x[(size_t)k];
    double norm = std::sqrt(n2);
    if (std::isinf(norm)) return {0, 0};
    if (norm <= 0) throw SpecError("xi map needs a nonzero input");
    double scale = std::pow(norm, -1.0 / alpha.to_double()) / norm;
    Pt out{0, 0};
    for (int k = 0; k < dim; ++k) out[(size_t)k] = x[(size_t)k] * scale;
    return out;
}

PolarPair polar_decompose(const std::vector<PilingSampleEntry>& entries) {
    if (entries.empty()) throw SpecError("polar decomposition needs a finite entry");
    PolarPair out;
    out.L = entries.front().norm;
    for (const auto& e : entries) out.L = std::min(out.L, e.norm);
    out.Q = entries;
    for (auto& e : out.Q) {
        e.norm /= out.L;
        e.vec[0] /= out.L;
        e.vec[1] /= out.L;
    }
    return out;
}

std::string law_to_csv(const PilingLaw& law) {
    CsvWriter csv({"anchor", "case", "probability", "u_lo", "u_hi", "theta",
                   "offset", "ball", "coeff_x", "coeff_y", "factor"});
    for (const PilingBranch& b : law.branches) {
        std::string theta = "uniform";
        if (b.theta.kind == SphereLaw::Kind::Conditional)
            theta = "cond(rho=" + std::to_string(b.theta.rho) + ";ratio=" + b.theta.ratio.str() + ")";
        for (const PilingEntry& e : b.entries) {
            csv.append_row({std::to_string(b.anchor + 1),
                            branch_case_name(b.branch_case),
                            b.probability.str(),
                            b.u_lo.str(),
                            b.u_hi.str(),
                            theta,
                            std::to_string(e.offset),
                            std::to_string(e.ball + 1),
                            e.deriv.factor[0].str(),
                            law.spec.dim() == 2 ? e.deriv.factor[1].str() : "",
                            e.factor.str()});
        }
    }
    return csv.text();
}

} // namespace expile
