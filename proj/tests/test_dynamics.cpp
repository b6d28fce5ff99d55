#include <doctest.h>

#include "expile/dynamics.hpp"

#include <cmath>

using namespace expile;

namespace {

// reference digits of a value in [0,1) straight from long double arithmetic;
// trustworthy for the first ~50 binary digits
std::vector<uint8_t> float_digits(long double x, int base, int count) {
    std::vector<uint8_t> out;
    for (int i = 0; i < count; ++i) {
        x *= base;
        int d = (int)x;
        out.push_back((uint8_t)d);
        x -= d;
    }
    return out;
}

} // namespace

TEST_CASE("rational digit streams repeat their period") {
    SeedCoord s;
    s.kind = SeedCoord::Kind::Rat;
    s.p = 1;
    s.q = 7;
    auto d = seed_digits(s, 2, 12);
    // 1/7 = 0.(001) in base 2
    std::vector<uint8_t> want{0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1};
    CHECK(d == want);

    s.q = 3;
    CHECK(seed_digits(s, 2, 6) == std::vector<uint8_t>{0, 1, 0, 1, 0, 1});
    s.q = 5;
    CHECK(seed_digits(s, 10, 4) == std::vector<uint8_t>{2, 0, 0, 0});
}

TEST_CASE("sqrt spigot matches the float expansion on its reliable prefix") {
    auto seed = parse_seed("sqrt2/16");
    REQUIRE(seed.has_value());
    auto d = seed_digits(*seed, 2, 40);
    auto want = float_digits(std::sqrt(2.0L) / 16.0L, 2, 40);
    CHECK(d == want);

    auto s3 = parse_seed("1/2*sqrt3");
    REQUIRE(s3.has_value());
    CHECK(seed_digits(*s3, 3, 30) == float_digits(std::sqrt(3.0L) / 2.0L, 3, 30));
}

TEST_CASE("power-gap seeds place ones at powers of the base") {
    auto seed = parse_seed("series3");
    REQUIRE(seed.has_value());
    CHECK(seed->kind == SeedCoord::Kind::PowerGaps);
    auto d = seed_digits(*seed, 3, 30);
    for (int i = 0; i < 30; ++i) {
        int pos = i + 1;
        bool gap = pos == 3 || pos == 9 || pos == 27;
        CHECK(d[(size_t)i] == (gap ? 1 : 0));
    }
    // the digits only exist in the seed's own base
    CHECK_THROWS_AS((void)seed_digits(*seed, 2, 5), std::invalid_argument);
}

TEST_CASE("seed grammar accepts the shipped forms and rejects junk") {
    CHECK(parse_seed("1/7")->kind == SeedCoord::Kind::Rat);
    CHECK(parse_seed("sqrt2/16")->rad == 2);
    CHECK(parse_seed("sqrt2/16")->q == 16);
    CHECK(parse_seed("uniform")->kind == SeedCoord::Kind::Uniform);
    CHECK(parse_seed("series3")->gap_base == 3);
    CHECK(parse_seed("0")->p == 0);
    CHECK(!parse_seed("7/3").has_value());    // outside [0,1)
    CHECK(!parse_seed("sqrt2").has_value());  // sqrt2 >= 1
    CHECK(!parse_seed("series1").has_value());
    CHECK(!parse_seed("x").has_value());
    // round-trip through str()
    auto s = parse_seed("3/8*sqrt2");
    REQUIRE(s.has_value());
    auto back = parse_seed(s->str());
    REQUIRE(back.has_value());
    CHECK(back->p == s->p);
    CHECK(back->q == s->q);
    CHECK(back->rad == s->rad);
}

TEST_CASE("digit orbit agrees with double iteration while doubles stay sane") {
    TorusMap map{{2}};
    std::vector<SeedCoord> seeds{*parse_seed("sqrt2/16")};
    DigitOrbit orb(map, seeds);
    Pt x{seeds[0].approx(), 0};
    for (int t = 0; t <= 30; ++t) {
        Pt ref = iterate(map, x, t);
        CHECK(std::fabs(orb.coord(0) - ref[0]) <= 1e-7);
        orb.step();
    }

    TorusMap map3{{3, 3}};
    std::vector<SeedCoord> seeds3{*parse_seed("sqrt2/16"), *parse_seed("sqrt3/4")};
    DigitOrbit orb3(map3, seeds3);
    Pt y{seeds3[0].approx(), seeds3[1].approx()};
    for (int t = 0; t <= 18; ++t) {
        Pt ref = iterate(map3, y, t);
        CHECK(std::fabs(orb3.coord(0) - ref[0]) <= 1e-6);
        CHECK(std::fabs(orb3.coord(1) - ref[1]) <= 1e-6);
        orb3.step();
    }
}

TEST_CASE("absolute-time reads leave the cursor alone") {
    TorusMap map{{2}};
    DigitOrbit orb(map, {*parse_seed("sqrt2/16")});
    std::vector<double> trace;
    for (int t = 0; t < 100; ++t) {
        trace.push_back(orb.coord(0));
        orb.step();
    }
    CHECK(orb.time() == 100);
    for (int t = 0; t < 100; ++t)
        CHECK(std::fabs(orb.coord_at(0, t) - trace[(size_t)t]) <= 1e-15);
    CHECK(orb.time() == 100);
}

TEST_CASE("stationary orbits are reproducible by seed and stream") {
    TorusMap map{{2}};
    DigitOrbit a = sample_stationary(map, 42, 7);
    DigitOrbit b = sample_stationary(map, 42, 7);
    DigitOrbit c = sample_stationary(map, 42, 8);
    bool differs = false;
    for (int t = 0; t < 50; ++t) {
        CHECK(a.coord(0) == b.coord(0));
        differs = differs || a.coord(0) != c.coord(0);
        a.step();
        b.step();
        c.step();
    }
    CHECK(differs);
}

TEST_CASE("derivative powers are exact rationals per coordinate") {
    TorusMap map{{2, 3}};
    auto d3 = derivative_power(map, 3);
    CHECK(d3.factor[0] == Rational(8));
    CHECK(d3.factor[1] == Rational(27));
    auto dm2 = derivative_power(map, -2);
    CHECK(dm2.factor[0] == Rational(1, 4));
    CHECK(dm2.factor[1] == Rational(1, 9));
    CHECK_THROWS_AS((void)derivative_power(map, 81), std::domain_error);
}

TEST_CASE("circle metric wraps both ways") {
    CHECK(circle_dist_coord(0.1, 0.9) == doctest::Approx(0.2));
    CHECK(circle_dist_coord(0.9, 0.1) == doctest::Approx(0.2));
    CHECK(circle_dist_coord(0.25, 0.5) == doctest::Approx(0.25));
    CHECK(circle_distance(1, {0.95, 0.0}, {0.05, 0.0}) == doctest::Approx(0.1));
    CHECK(circle_distance(2, {0.95, 0.1}, {0.05, 0.9}) ==
          doctest::Approx(std::hypot(0.1, 0.2)));
}

TEST_CASE("digitwise gaps keep relative precision for tiny separations") {
    DigitStream sa(*parse_seed("sqrt2/16"), 2);
    DigitStream sb(*parse_seed("1/7"), 2);
    FixedVec a = FixedVec::from_stream(sa, 200);
    FixedVec b = FixedVec::from_stream(sb, 200);

    long double xa = std::sqrt(2.0L) / 16.0L, xb = 1.0L / 7.0L;
    for (long long j = 0; j <= 12; ++j) {
        long double sh = xa;
        for (long long k = 0; k < j; ++k) sh = sh * 2 - (long long)(sh * 2);
        long double diff = sh - xb;
        diff -= std::floor((double)diff);
        if (diff > 0.5L) diff -= 1.0L;
        CHECK(std::fabs(a.signed_gap(j, b) - (double)diff) <= 1e-13);
    }

    // a gap of 2^-40 between two otherwise equal vectors comes out exact
    FixedVec c = a;
    c.add_scaled(1, 40);
    CHECK(c.signed_gap(0, a) == doctest::Approx(std::pow(2.0, -40)).epsilon(1e-12));
    CHECK(a.signed_gap(0, c) == doctest::Approx(-std::pow(2.0, -40)).epsilon(1e-12));
}

TEST_CASE("fixed windows stay below 63 bits") {
    CHECK(fixed_window_digits(2) == 62);
    CHECK(fixed_window_digits(3) >= 39);
    CHECK(fixed_window_digits(10) >= 18);
    for (int base : {2, 3, 5, 10}) {
        int P = fixed_window_digits(base);
        long double v = std::pow((long double)base, (long double)P);
        CHECK(v < std::pow(2.0L, 63.0L));
        CHECK(v * base >= std::pow(2.0L, 63.0L));
    }
}
