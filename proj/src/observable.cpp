#include "expile/observable.hpp"

#include <cmath>
#include <algorithm>
#include <set>

namespace expile {

void validate_tail_indices(const std::vector<Rational>& alphas) {
    for (size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] == alphas[0]))
            throw SpecError("mixed tail indices are not supported: the heaviest index dominates "
                            "and every other ball's weight degenerates to zero");
}

namespace {

// helper: exact Quad^rational for rational bases
Quad quad_pow_q(const Quad& base, const Rational& e) {
    if (e.is_integer()) return base.pow((long long)e.num());
    if (!base.is_rational())
        throw SpecError("fractional power of an irrational weight is outside the exact field");
    auto r = quad_pow(base.rat_part(), e);
    if (!r) throw SpecError("weight power " + base.str() + "^" + e.str() + " is not exact in Q(sqrt2)");
    return *r;
}

} // namespace

void MaximalSetSpec::finalize() {
    map.validate();
    if ((int)zeta.size() != dim()) throw SpecError("zeta must have one seed per coordinate");
    if (alpha.sign() <= 0) throw SpecError("tail index alpha must be positive");
    if (!(alpha_d() < Rational(1)))
        throw SpecError("alpha * dim must be below 1 (heavy-tail regime)");
    if (balls.empty()) throw SpecError("at least one ball is required");
    if (balls[0].m != 0) throw SpecError("the first ball must sit at zeta itself (m_1 = 0)");
    for (size_t i = 0; i < balls.size(); ++i) {
        if (balls[i].c.sign() <= 0) throw SpecError("ball weights must be positive");
        if (balls[i].D < 1) throw SpecError("ball multiplicities must be >= 1");
        if (i && balls[i].m <= balls[i - 1].m) throw SpecError("ball orbit offsets must increase");
    }
    if (mode == SetMode::Periodic) {
        if (period < 1) throw SpecError("periodic mode requires a period q >= 1");
        if (balls.back().m >= period)
            throw SpecError("ball offsets must lie inside one period");
        // exact periodicity for rational coordinates: beta^q * p = p (mod q_den)
        for (int k = 0; k < dim(); ++k) {
            const auto& sc = zeta[(size_t)k];
            if (sc.kind == SeedCoord::Kind::Rat) {
                auto residue = [&](long long steps) {
                    i128 r = sc.p;
                    for (long long s = 0; s < steps; ++s) r = (r * map.slopes[(size_t)k]) % sc.q;
                    return r;
                };
                if (residue(period) != sc.p)
                    throw SpecError("zeta is not periodic with the declared period");
                for (long long qq = 1; qq < period; ++qq)
                    if (residue(qq) == sc.p && dim() == 1)
                        throw SpecError("declared period is not minimal");
            } else {
                throw SpecError("periodic mode currently supports rational seeds only");
            }
        }
        // joint minimality in 2D: some coordinate must break every smaller period
        if (dim() == 2) {
            for (long long qq = 1; qq < period; ++qq) {
                bool all_fixed = true;
                for (int k = 0; k < dim(); ++k) {
                    const auto& sc = zeta[(size_t)k];
                    i128 r = sc.p;
                    for (long long s = 0; s < qq; ++s) r = (r * map.slopes[(size_t)k]) % sc.q;
                    if (r != sc.p) { all_fixed = false; break; }
                }
                if (all_fixed) throw SpecError("declared period is not minimal");
            }
        }
    }
    if (mode == SetMode::NonPeriodic) {
        // rational seeds are eventually periodic, which contradicts a free orbit
        bool any_irrational = false;
        for (const auto& sc : zeta)
            if (sc.kind != SeedCoord::Kind::Rat) any_irrational = true;
        if (!any_irrational)
            throw SpecError("non-periodic mode needs an irrational seed coordinate");
    }
    if (mode == SetMode::Countable) {
        if (!countable) throw SpecError("countable mode requires the generative rule");
        if (balls.size() < 2) throw SpecError("countable mode needs at least two materialized balls");
        // materialized prefix must follow the generator
        Quad c = balls[0].c;
        long long m = 1;
        for (size_t i = 1; i < balls.size(); ++i) {
            c = c * Quad(countable->c_ratio);
            m = (i == 1) ? countable->power_base : m * countable->power_base;
            if (balls[i].m != m)
                throw SpecError("countable ball offsets must follow the generator powers");
            if (!(balls[i].c == c))
                throw SpecError("countable ball weights must follow the generator ratio");
            if (balls[i].D != balls[0].D)
                throw SpecError("countable balls share a single multiplicity");
        }
    }

    // center positions and pairwise gaps
    centers_.clear();
    gaps_.assign(balls.size(), 0.0);
    streams_.clear();
    for (int k = 0; k < dim(); ++k)
        streams_.push_back(std::make_shared<DigitStream>(zeta[(size_t)k], map.slopes[(size_t)k]));
    const int W = 300;
    for (const auto& b : balls) {
        Pt c{0, 0};
        for (int k = 0; k < dim(); ++k) {
            auto& st = *streams_[(size_t)k];
            st.ensure(b.m + W);
            double acc = 0, scale = 1;
            int P = fixed_window_digits(map.slopes[(size_t)k]);
            for (int i = 0; i < P; ++i) {
                scale /= map.slopes[(size_t)k];
                acc += scale * st.digit(b.m + i);
            }
            c[(size_t)k] = acc;
        }
        centers_.push_back(c);
    }
    if (mode == SetMode::Countable) {
        // gaps follow the generator: the next center's leading digit distance
        for (size_t i = 0; i < balls.size(); ++i) {
            long long next_m = (i + 1 < balls.size())
                ? balls[i + 1].m
                : balls[i].m * countable->power_base;  // next level not materialized
            long long lead = (i == 0) ? countable->power_base : next_m - balls[i].m;
            gaps_[i] = (i == 0)
                ? circle_distance(dim(), centers_[0], centers_[1])
                : std::pow((double)countable->power_base, -(double)lead);
        }
    } else {
        for (size_t i = 0; i < balls.size(); ++i) {
            double g = 1.0;
            for (size_t j = 0; j < balls.size(); ++j) {
                if (i == j) continue;
                double sum2 = 0;
                for (int k = 0; k < dim(); ++k) {
                    auto a = center_digits((int)i, W);
                    auto bd = center_digits((int)j, W);
                    double d = std::fabs(a[(size_t)k].signed_gap(0, bd[(size_t)k]));
                    d = std::min(d, 1.0 - d);
                    sum2 += d * d;
                }
                g = std::min(g, std::sqrt(sum2));
            }
            if (balls.size() == 1) g = 0.5;
            if (g <= 0) throw SpecError("ball centers must be pairwise distinct");
            gaps_[i] = g;
        }
    }
    for (size_t i = 0; i < balls.size(); ++i)
        if (balls[i].eps <= 0)
            balls[i].eps = std::min(gaps_[i] / 3.0, 0.1);
}

std::vector<FixedVec> MaximalSetSpec::center_digits(int i, long long count) const {
    std::vector<FixedVec> out;
    for (int k = 0; k < dim(); ++k) {
        auto& st = *streams_[(size_t)k];
        st.ensure(balls[(size_t)i].m + count);
        FixedVec v;
        v.base = map.slopes[(size_t)k];
        v.dig.assign(st.buffer().begin() + balls[(size_t)i].m,
                     st.buffer().begin() + balls[(size_t)i].m + count);
        out.push_back(std::move(v));
    }
    return out;
}

double h_eval(const MaximalSetSpec& spec, int ball, double t) {
    if (t <= 0) return INFINITY;
    double inv_alpha = 1.0 / spec.alpha.to_double();
    return spec.balls[(size_t)ball].c.to_double() * std::pow(t, -inv_alpha);
}

double h_inverse(const MaximalSetSpec& spec, int ball, double value) {
    if (value <= 0) return INFINITY;
    double a = spec.alpha.to_double();
    return std::pow(value / spec.balls[(size_t)ball].c.to_double(), -a);
}

ObservationValue evaluate_observable(const MaximalSetSpec& spec, const Pt& x) {
    ObservationValue out;
    for (int i = 0; i < spec.ball_count(); ++i) {
        double diff[2] = {0, 0};
        double sum2 = 0;
        for (int k = 0; k < spec.dim(); ++k) {
            double d = x[(size_t)k] - spec.center(i)[(size_t)k];
            d -= std::round(d);   // representative in (-1/2, 1/2]
            diff[k] = d;
            sum2 += d * d;
        }
        double dist = std::sqrt(sum2);
        if (dist < spec.balls[(size_t)i].eps) {
            out.ball = i;
            out.magnitude = h_eval(spec, i, dist);
            if (dist > 0)
                for (int k = 0; k < spec.dim(); ++k) out.direction[(size_t)k] = diff[k] / dist;
            else
                out.direction[0] = 1.0;
            return out;
        }
    }
    return out;
}

Quad ball_weight(const MaximalSetSpec& spec, int i) {
    return Quad(Rational(spec.balls[(size_t)i].D)) * quad_pow_q(spec.balls[(size_t)i].c, spec.alpha_d());
}

Quad an_sum(const MaximalSetSpec& spec) {
    Quad vd = spec.dim() == 1 ? Quad(2) : Quad(1);  // interval length vs unit-disc bookkeeping
    Quad s(0);
    if (spec.mode == SetMode::Countable) {
        // closed form over the full countable family: sum_i ratio^{alpha d (i-1)}
        Quad r = quad_pow_q(Quad(countable_ratio(spec)), spec.alpha_d());
        Quad first = ball_weight(spec, 0);
        return vd * first / (Quad(1) - r);
    }
    for (int i = 0; i < spec.ball_count(); ++i) s += ball_weight(spec, i);
    return vd * s;
}

Rational countable_ratio(const MaximalSetSpec& spec) {
    if (!spec.countable) throw SpecError("not a countable spec");
    return spec.countable->c_ratio;
}

Quad an_coefficient(const MaximalSetSpec& spec) {
    Rational inv = Rational(1) / spec.alpha_d();
    if (!inv.is_integer())
        throw SpecError("normalizing coefficient needs 1/(alpha d) integral for exact display");
    return an_sum(spec).pow((long long)inv.num());
}

ThresholdFamily threshold_family(const MaximalSetSpec& spec, long long n) {
    ThresholdFamily tf;
    tf.alpha = spec.alpha_d();
    tf.n = n;
    double ad = spec.alpha_d().to_double();
    tf.a_n_value = std::pow(an_sum(spec).to_double() * (double)n, 1.0 / ad);
    return tf;
}

double ThresholdFamily::u(double tau) const {
    return std::pow(tau, -1.0 / alpha.to_double()) * a_n_value;
}

double ThresholdFamily::u_inv(double z) const {
    return std::pow(z / a_n_value, -alpha.to_double());
}

double exceedance_radius(const MaximalSetSpec& spec, int ball, long long n, double tau) {
    ThresholdFamily tf = threshold_family(spec, n);
    return std::min(h_inverse(spec, ball, tf.u(tau)), spec.balls[(size_t)ball].eps);
}

Quad radius_ratio(const MaximalSetSpec& spec, int l, int i) {
    Quad ratio = spec.balls[(size_t)l].c / spec.balls[(size_t)i].c;
    return quad_pow_q(ratio, spec.alpha);
}

} // namespace expile
