#include <doctest.h>

#include "expile/examples.hpp"
#include "expile/piling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace expile;

namespace {

const PilingBranch& branch_of(const PilingLaw& law, int anchor, BranchCase cs) {
    for (const auto& b : law.branches)
        if (b.anchor == anchor && b.branch_case == cs) return b;
    throw std::logic_error("no such branch");
}

// 1D entry coefficient: realized norm is U times this
Quad entry_coeff(const PilingEntry& e) { return e.factor * Quad(e.deriv.factor[0]); }

} // namespace

TEST_CASE("anchor weights are the exact exceedance shares") {
    CHECK(build_piling_law(example_spec("ex-3-4")).weights ==
          std::vector<Quad>{Quad(Rational(1, 3)), Quad(Rational(1, 3)), Quad(Rational(1, 3))});
    CHECK(build_piling_law(example_spec("ex-3-6")).weights ==
          std::vector<Quad>{Quad(Rational(1, 5)), Quad(Rational(3, 5)), Quad(Rational(1, 5))});
    CHECK(build_piling_law(example_spec("ex-3-10")).weights ==
          std::vector<Quad>{Quad(Rational(1, 17)), Quad(Rational(16, 17))});

    PilingLaw cnt = build_piling_law(example_spec("ex-4-2"));
    CHECK(cnt.discarded_mass == Quad(Rational(1, 8)));   // (1/sqrt2)^6 beyond the prefix
    for (size_t i = 0; i + 1 < cnt.weights.size(); ++i)
        CHECK(cnt.weights[i + 1] / cnt.weights[i] == Quad(Rational(0), Rational(1, 2)));
    // raw leading weight is 1 - 1/sqrt2
    CHECK(cnt.raw_weights[0] == Quad(Rational(1), Rational(-1, 2)));
}

TEST_CASE("branch masses always sum to one exactly") {
    for (const auto& id : example_ids()) {
        PilingLaw law = build_piling_law(example_spec(id));
        Quad total(0);
        for (const auto& b : law.branches) total += b.probability;
        CHECK(total == Quad(1));
    }
}

TEST_CASE("three-ball chain splits into pure forward branches") {
    PilingLaw law = build_piling_law(example_spec("ex-3-4"));
    REQUIRE(law.branches.size() == 3);
    for (const auto& b : law.branches) {
        CHECK(b.branch_case == BranchCase::Zero);
        CHECK(b.probability == Quad(Rational(1, 3)));
        CHECK(b.u_lo == Quad(0));
        CHECK(b.u_hi == Quad(1));
    }
    // forward coefficients double per step of the orbit gap
    const auto& b0 = law.branches[0];
    REQUIRE(b0.entries.size() == 3);
    CHECK(b0.entries[0].offset == 0);
    CHECK(entry_coeff(b0.entries[1]) == Quad(2));
    CHECK(b0.entries[1].offset == 1);
    CHECK(entry_coeff(b0.entries[2]) == Quad(8));
    CHECK(b0.entries[2].offset == 3);
    CHECK(entry_coeff(law.branches[1].entries[1]) == Quad(4));
}

TEST_CASE("upweighted middle ball gains a predecessor branch pair") {
    PilingLaw law = build_piling_law(example_spec("ex-3-6"));
    REQUIRE(law.branches.size() == 4);

    const auto& one = branch_of(law, 1, BranchCase::I);
    CHECK(one.probability == Quad(Rational(2, 5)));
    CHECK(one.u_lo == Quad(0));
    CHECK(one.u_hi == Quad(Rational(2, 3)));

    const auto& four = branch_of(law, 1, BranchCase::IV);
    CHECK(four.probability == Quad(Rational(1, 5)));
    CHECK(four.u_lo == Quad(Rational(2, 3)));
    CHECK(four.u_hi == Quad(1));
    REQUIRE(four.entries.front().offset == -1);
    CHECK(four.entries.front().ball == 0);
    CHECK(entry_coeff(four.entries.front()) == Quad(Rational(3, 2)));

    CHECK(branch_of(law, 0, BranchCase::Zero).probability == Quad(Rational(1, 5)));
    CHECK(branch_of(law, 2, BranchCase::Zero).probability == Quad(Rational(1, 5)));
    // the forward neighbor of the light anchor is the stronger exceedance
    CHECK(entry_coeff(branch_of(law, 0, BranchCase::Zero).entries[1]) == Quad(Rational(2, 3)));
}

TEST_CASE("anisotropic plane map opens a conditional-direction branch") {
    PilingLaw law = build_piling_law(example_spec("ex-3-10"));
    REQUIRE(law.branches.size() == 4);
    CHECK(branch_of(law, 0, BranchCase::Zero).probability == Quad(Rational(1, 17)));

    const auto& one = branch_of(law, 1, BranchCase::I);
    CHECK(one.probability == Quad(Rational(8, 17)));
    CHECK(one.u_hi == Quad(Rational(1, 2)));

    const auto& two = branch_of(law, 1, BranchCase::II);
    CHECK(two.probability == Quad(Rational(4, 17)));
    CHECK(two.u_lo == Quad(Rational(1, 2)));
    CHECK(two.u_hi == Quad(Rational(3, 4)));
    CHECK(two.theta.kind == SphereLaw::Kind::Conditional);
    CHECK(two.theta.rho == -1);
    CHECK(two.theta.ratio == Quad(Rational(1, 4)));

    const auto& four = branch_of(law, 1, BranchCase::IV);
    CHECK(four.probability == Quad(Rational(4, 17)));
    CHECK(four.u_lo == Quad(Rational(3, 4)));
    CHECK(four.u_hi == Quad(1));

    // the same interval endpoints from the exact bound helper
    auto [umin, umax] = u_bounds(example_spec("ex-3-10"), 1, 0, 0);
    CHECK(umin == Quad(Rational(3, 4)));
    CHECK(umax == Quad(Rational(1, 2)));
}

TEST_CASE("periodic orbit keeps the branch split and repeats entries") {
    PilingLaw law = build_piling_law(example_spec("ex-3-14"));
    REQUIRE(law.branches.size() == 4);
    CHECK(branch_of(law, 0, BranchCase::Zero).probability == Quad(Rational(1, 17)));
    CHECK(branch_of(law, 1, BranchCase::I).probability == Quad(Rational(8, 17)));
    CHECK(branch_of(law, 1, BranchCase::II).probability == Quad(Rational(4, 17)));
    CHECK(branch_of(law, 1, BranchCase::IV).probability == Quad(Rational(4, 17)));

    // the light anchor sees the whole period-3 return train ahead
    const auto& zero = branch_of(law, 0, BranchCase::Zero);
    std::vector<long long> want{0, 1, 3, 4, 6, 7};
    for (size_t k = 0; k < want.size(); ++k) CHECK(zero.entries[k].offset == want[k]);
    CHECK(zero.entries.back().offset <= law.horizon);

    // the heavy anchor's one predecessor sits a single step back
    const auto& four = branch_of(law, 1, BranchCase::IV);
    CHECK(four.entries.front().offset == -1);
    CHECK(four.entries.front().ball == 0);
}

TEST_CASE("countable prefix is all forward chains") {
    PilingLaw law = build_piling_law(example_spec("ex-4-2"));
    REQUIRE(law.branches.size() == 6);
    for (const auto& b : law.branches) CHECK(b.branch_case == BranchCase::Zero);
    const auto& b0 = law.branches[0];
    std::vector<long long> offs{0, 3, 9, 27};   // 81 and beyond sit past the horizon
    REQUIRE(b0.entries.size() == offs.size());
    for (size_t k = 0; k < offs.size(); ++k) CHECK(b0.entries[k].offset == offs[k]);
    CHECK(b0.entries[1].factor == Quad::sqrt2());
    CHECK(b0.entries[2].factor == Quad(2));
}

TEST_CASE("overlapping predecessor windows reject the construction") {
    MaximalSetSpec s;
    s.name = "custom";
    s.map.slopes = {2, 3};
    s.zeta = {*parse_seed("sqrt2/4"), *parse_seed("sqrt3/4")};
    s.alpha = Rational(1, 4);
    // radius ratios 1/16 and 1/4 put the two predecessor intervals
    // [1/4, 9/16) and [1/2, 3/4) astride each other
    s.balls = {BallSpec{0, Quad(1), 0, 1}, BallSpec{1, Quad(256), 0, 1},
               BallSpec{2, Quad(65536), 0, 1}};
    s.finalize();
    CHECK_THROWS_WITH_AS((void)build_piling_law(s),
                         "theorem inapplicable: interleaving violated", SpecError);
}

TEST_CASE("xi map inverts the observable tail exactly") {
    CHECK(xi_map_norm(2.0, Rational(1, 2)) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(xi_map_norm(8.0, Rational(1, 2)) == doctest::Approx(1.0 / 64).epsilon(1e-14));
    CHECK(xi_map_norm(1.0, Rational(1, 2)) == 1.0);
    CHECK(xi_map_norm(INFINITY, Rational(1, 2)) == 0.0);
    CHECK_THROWS_AS((void)xi_map_norm(0.0, Rational(1, 2)), SpecError);

    Pt v = xi_map_vec({3, 4}, 2, Rational(1, 2));
    CHECK(v[0] == doctest::Approx(3.0 / 125).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(4.0 / 125).epsilon(1e-14));
}

TEST_CASE("polar split divides out the strongest entry") {
    std::vector<PilingSampleEntry> es(3);
    es[0].norm = 2;
    es[1].norm = 1.5;
    es[2].norm = 12;
    for (auto& e : es) e.vec = {e.norm, 0};
    PolarPair p = polar_decompose(es);
    CHECK(p.L == 1.5);
    CHECK(p.Q[0].norm == doctest::Approx(4.0 / 3).epsilon(1e-15));
    CHECK(p.Q[1].norm == 1.0);
    CHECK(p.Q[2].norm == 8.0);
}

TEST_CASE("conditioned sampler produces the chain shapes with uniform strength") {
    PilingLaw law = build_piling_law(example_spec("ex-3-4"));
    Rng rng(11, 0);
    const long long N = 20000;
    std::map<int, long long> anchors;
    double mean_u = 0;
    std::vector<double> Ls;
    for (long long k = 0; k < N; ++k) {
        PilingSample s = sample_piling(law, rng);
        anchors[s.anchor]++;
        mean_u += s.U;
        Ls.push_back(s.L);
        REQUIRE(!s.entries.empty());
        CHECK(s.entries.front().offset == 0);   // this chain never keeps a past
        CHECK(s.branch == classify_branch(law, s.anchor, s.U));
        double l = s.entries.front().norm;
        for (const auto& e : s.entries) l = std::min(l, e.norm);
        CHECK(s.L == l);
        // shape per anchor: {1,2,8}, {1,4}, {1} relative to the anchor entry
        std::vector<double> rel;
        for (const auto& e : s.entries) rel.push_back(e.norm / s.entries.front().norm);
        if (s.anchor == 0) {
            REQUIRE(rel.size() == 3);
            CHECK(rel[1] == doctest::Approx(2.0).epsilon(1e-12));
            CHECK(rel[2] == doctest::Approx(8.0).epsilon(1e-12));
        } else if (s.anchor == 1) {
            REQUIRE(rel.size() == 2);
            CHECK(rel[1] == doctest::Approx(4.0).epsilon(1e-12));
        } else {
            CHECK(rel.size() == 1);
        }
    }
    mean_u /= (double)N;
    CHECK(std::fabs(mean_u - 0.5) <= 3.0 * 0.29 / std::sqrt((double)N));

    // cluster starts thin the chain anchors to {1, 1/2, 3/4} acceptance
    double r0 = (double)anchors[0] / (double)N;
    double r1 = (double)anchors[1] / (double)N;
    double r2 = (double)anchors[2] / (double)N;
    CHECK(std::fabs(r0 - 4.0 / 9) <= 0.015);
    CHECK(std::fabs(r1 - 2.0 / 9) <= 0.015);
    CHECK(std::fabs(r2 - 3.0 / 9) <= 0.015);

    // minimum strength across the cluster is uniform on [0,1)
    std::sort(Ls.begin(), Ls.end());
    double ks = 0;
    for (size_t k = 0; k < Ls.size(); ++k) {
        double f = (double)(k + 1) / (double)Ls.size();
        ks = std::max(ks, std::fabs(f - Ls[k]));
    }
    CHECK(ks <= 1.63 / std::sqrt((double)N) * 1.5);
}

TEST_CASE("conditioned sampler never emits a sub-threshold predecessor") {
    for (const auto& id : example_ids()) {
        PilingLaw law = build_piling_law(example_spec(id));
        Rng rng(5, 1);
        for (int k = 0; k < 5000; ++k) {
            PilingSample s = sample_piling(law, rng);
            // a kept predecessor is a past non-exceedance by construction
            for (const auto& e : s.entries)
                if (e.offset < 0) CHECK(e.norm >= 1.0 - 1e-12);
        }
    }
}

TEST_CASE("table sampler obeys forced branch and forced strength") {
    PilingLaw law = build_piling_law(example_spec("ex-3-6"));
    int iv = -1;
    for (size_t b = 0; b < law.branches.size(); ++b)
        if (law.branches[b].anchor == 1 && law.branches[b].branch_case == BranchCase::IV)
            iv = (int)b;
    REQUIRE(iv >= 0);

    Rng rng(3, 0);
    SampleOptions opt;
    opt.mode = SampleMode::TableBranch;
    opt.force_branch = iv;
    opt.force_U = 0.7;
    PilingSample s = sample_piling(law, rng, opt);
    CHECK(s.anchor == 1);
    CHECK(s.U == 0.7);
    REQUIRE(s.entries.size() == 3);
    CHECK(s.entries[0].offset == -1);
    CHECK(s.entries[0].norm == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(s.entries[1].norm == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(s.entries[2].norm == doctest::Approx(8.4).epsilon(1e-12));
    CHECK(s.L == doctest::Approx(0.7).epsilon(1e-12));

    // branch frequencies follow the table masses
    opt.force_branch = -1;
    opt.force_U = -1;
    std::vector<long long> counts(law.branches.size(), 0);
    const long long N = 40000;
    for (long long k = 0; k < N; ++k) counts[(size_t)sample_piling(law, rng, opt).branch]++;
    for (size_t b = 0; b < counts.size(); ++b) {
        double p = law.branches[b].probability.to_double();
        double se = std::sqrt(p * (1 - p) / (double)N);
        CHECK(std::fabs((double)counts[b] / (double)N - p) <= 4 * se + 1e-9);
    }
}

TEST_CASE("the right endpoint falls into the last branch of its anchor") {
    PilingLaw law = build_piling_law(example_spec("ex-3-6"));
    CHECK(classify_branch(law, 1, 0.0) >= 0);
    CHECK(law.branches[(size_t)classify_branch(law, 1, 0.5)].branch_case == BranchCase::I);
    CHECK(law.branches[(size_t)classify_branch(law, 1, 0.7)].branch_case == BranchCase::IV);
    CHECK(classify_branch(law, 1, 1.0) == -1);

    Rng rng(9, 0);
    SampleOptions opt;
    opt.force_U = 1.0;
    for (int k = 0; k < 200; ++k) {
        PilingSample s = sample_piling(law, rng, opt);
        CHECK(law.branches[(size_t)s.branch].u_hi == Quad(1));
    }
}

TEST_CASE("conditional direction sampling: inversion agrees with rejection") {
    DerivativePower g = derivative_power(TorusMap{{2, 3}}, -1);
    double g1 = g.factor[0].to_double(), g2 = g.factor[1].to_double();
    double bound = 0.4;     // between 1/3 and 1/2, both arcs genuinely cut

    Rng ra(21, 0), rb(21, 1);
    const int N = 20000;
    double ma = 0, mb = 0, sa = 0, sb = 0;
    for (int k = 0; k < N; ++k) {
        Pt a = sample_conditional_theta(ra, 2, g1, g2, bound, false);
        Pt b = sample_conditional_theta(rb, 2, g1, g2, bound, true);
        double na = std::hypot(g1 * a[0], g2 * a[1]);
        double nb = std::hypot(g1 * b[0], g2 * b[1]);
        CHECK(na >= bound * (1 - 1e-9));
        CHECK(nb >= bound * (1 - 1e-9));
        ma += na;
        mb += nb;
        sa += a[0];
        sb += b[0];
    }
    CHECK(std::fabs(ma - mb) / N <= 0.002);
    CHECK(std::fabs(sa) / N <= 0.02);    // arcs are symmetric
    CHECK(std::fabs(sb) / N <= 0.02);

    // bound below the weak axis: no conditioning left
    Rng rc(4, 0);
    Pt c = sample_conditional_theta(rc, 2, g1, g2, 0.2, false);
    CHECK(std::hypot(c[0], c[1]) == doctest::Approx(1.0).epsilon(1e-12));
    // bound above the strong axis: empty set
    CHECK_THROWS_AS((void)sample_conditional_theta(rc, 2, g1, g2, 0.6, false), SpecError);
}
