#include "expile/examples.hpp"

#include <cmath>
#include <map>

namespace expile {

namespace {

SeedCoord rat(long long p, long long q) {
    SeedCoord s;
    s.kind = SeedCoord::Kind::Rat;
    s.p = p;
    s.q = q;
    return s;
}

SeedCoord sqrt_rat(long long p, long long q, long long rad = 2) {
    SeedCoord s;
    s.kind = SeedCoord::Kind::SqrtRat;
    s.p = p;
    s.q = q;
    s.rad = rad;
    return s;
}

SeedCoord power_gaps(long long base) {
    SeedCoord s;
    s.kind = SeedCoord::Kind::PowerGaps;
    s.gap_base = base;
    return s;
}

BallSpec ball(long long m, Quad c) {
    BallSpec b;
    b.m = m;
    b.c = c;
    return b;
}

// 1D doubling map, three unit-weight centers on the orbit of sqrt(2)/16
MaximalSetSpec make_ex_3_4() {
    MaximalSetSpec s;
    s.name = "ex-3-4";
    s.map.slopes = {2};
    s.zeta = {sqrt_rat(1, 16)};
    s.alpha = Rational(1, 2);
    s.mode = SetMode::NonPeriodic;
    s.balls = {ball(0, Quad(1)), ball(1, Quad(1)), ball(3, Quad(1))};
    return s;
}

// same orbit, middle center upweighted so its exceedance ball dominates
MaximalSetSpec make_ex_3_6() {
    MaximalSetSpec s = make_ex_3_4();
    s.name = "ex-3-6";
    s.balls[1].c = Quad(9);
    return s;
}

// 2D product map (2x, 3y), two centers, heavier tail on the second
MaximalSetSpec make_ex_3_10() {
    MaximalSetSpec s;
    s.name = "ex-3-10";
    s.map.slopes = {2, 3};
    s.zeta = {sqrt_rat(1, 2), sqrt_rat(1, 2)};
    s.alpha = Rational(1, 4);
    s.mode = SetMode::NonPeriodic;
    s.balls = {ball(0, Quad(1)), ball(1, Quad(256))};
    return s;
}

// periodic variant: seed (1/7, 0) has prime period 3 under (2x, 3y)
MaximalSetSpec make_ex_3_14() {
    MaximalSetSpec s = make_ex_3_10();
    s.name = "ex-3-14";
    s.zeta = {rat(1, 7), rat(0, 1)};
    s.mode = SetMode::Periodic;
    s.period = 3;
    return s;
}

// countable family on the tripling map: centers at orbit offsets 3^{i-1},
// weights halving per level. The materialized prefix carries six levels; the
// closed-form tail handles the rest.
MaximalSetSpec make_ex_4_2() {
    MaximalSetSpec s;
    s.name = "ex-4-2";
    s.map.slopes = {3};
    s.zeta = {power_gaps(3)};
    s.alpha = Rational(1, 2);
    s.mode = SetMode::Countable;
    CountableGen gen;
    gen.power_base = 3;
    gen.c_ratio = Rational(1, 2);
    s.countable = gen;
    Quad c(1);
    long long m = 0;
    for (int i = 0; i < 6; ++i) {
        s.balls.push_back(ball(m, c));
        m = (m == 0) ? 3 : m * 3;
        c = c * Quad(Rational(1, 2));
    }
    // closed-form returns concentrate on the successor level with these
    // contraction exponents (3 + 3^{i-1}); the raw center gaps would place
    // the first return earlier and give a smaller index
    s.ei_return_exponents = {4, 6, 12, 30, 84, 246};
    return s;
}

} // namespace

const std::vector<std::string>& example_ids() {
    static const std::vector<std::string> ids = {
        "ex-3-4", "ex-3-6", "ex-3-10", "ex-3-14", "ex-4-2"};
    return ids;
}

bool is_example_id(const std::string& id) {
    for (const auto& s : example_ids())
        if (s == id) return true;
    return false;
}

MaximalSetSpec example_spec(const std::string& id) {
    MaximalSetSpec s;
    if (id == "ex-3-4") s = make_ex_3_4();
    else if (id == "ex-3-6") s = make_ex_3_6();
    else if (id == "ex-3-10") s = make_ex_3_10();
    else if (id == "ex-3-14") s = make_ex_3_14();
    else if (id == "ex-4-2") s = make_ex_4_2();
    else throw SpecError("unknown example id: " + id);
    s.finalize();
    return s;
}

long long countable_truncation(long long n) {
    if (n < 3) return 1;
    return (long long)std::ceil(std::log((double)n));
}

long long example_run_gap(const std::string& id, long long n) {
    if (id == "ex-3-4") return 3;
    if (id == "ex-3-6") return 3;
    if (id == "ex-3-10") return 1;
    if (id == "ex-3-14") return 4;
    if (id == "ex-4-2") return countable_truncation(n);
    throw SpecError("unknown example id: " + id);
}

} // namespace expile
