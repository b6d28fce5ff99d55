#pragma once
// Cluster-shape law around a high exceedance. Conditioned on the exceedance
// at time 0 hitting ball i, the window of scaled observations has atoms only
// at the orbit offsets of the set; each finite entry is a deterministic
// multiple of the anchor magnitude U. Negative offsets carry finite entries
// only under fake expansion: the weight ratio (c_i/c_l)^alpha overcomes the
// backward contraction, which the u-bounds quantify.

#include "expile/observable.hpp"

#include <optional>
#include <string>
#include <vector>

namespace expile {

// one finite window entry: value = U * (deriv applied to Theta) * factor
struct PilingEntry {
    long long offset = 0;             // window index j; 0 is the anchor
    int ball = -1;                    // which center the orbit visits there
    long long s = 0;                  // period repeat (provenance)
    DerivativePower deriv;            // slope^j per coordinate, exact
    Quad factor = Quad(1);            // (c_i/c_l)^alpha
};

struct SphereLaw {
    enum class Kind { Uniform, Conditional };
    Kind kind = Kind::Uniform;
    // Conditional: accept w iff ||Df^rho(w)|| >= ratio / u
    long long rho = 0;
    Quad ratio = Quad(1);
};

enum class BranchCase { Zero, I, II, III, IV };
std::string branch_case_name(BranchCase c);

struct PilingBranch {
    int anchor = 0;
    BranchCase branch_case = BranchCase::Zero;
    int case_p = 0;                   // which A-element for II/III
    Quad probability = Quad(0);
    Quad u_lo = Quad(0), u_hi = Quad(1);    // U uniform on [u_lo, u_hi)
    SphereLaw theta;
    std::vector<PilingEntry> entries;       // offset-sorted, includes j=0
};

// element of A^(i): a negative offset where fake expansion admits entries
struct AElem {
    long long offset = 0;             // m_l - m_i (- q s), < 0
    int ball = -1;                    // l
    long long s = 0;
    Quad u_min = Quad(0), u_max = Quad(0);
};

// backward-orbit candidate used by the conditioned sampler: every negative
// orbit offset, fake-expanding or not, since the realized chain can reach it
struct BackCand {
    long long offset = 0;
    int ball = -1;
    long long s = 0;
    double g[2] = {1, 1};             // |slope^offset| per coordinate
    double factor = 1;                // (c_i/c_l)^alpha
    double hop_prob = 1;              // det^{-(gap to the previous candidate)}
};

struct PilingLaw {
    MaximalSetSpec spec;
    std::string mode_tag;                  // "non-periodic" | "periodic" | "countable"
    std::vector<Quad> weights;             // anchor weights p_i (renormalized over the prefix)
    std::vector<Quad> raw_weights;         // countable: closed-form weights of the full family
    Quad discarded_mass = Quad(0);         // countable: mass beyond the materialized prefix
    std::vector<PilingBranch> branches;    // grouped by anchor, ascending u_lo
    std::vector<std::vector<BackCand>> back;   // per anchor, offset descending (-1 first)
    long long horizon = 64;                // offset materialization cap
};

std::vector<Quad> compute_weights(const MaximalSetSpec& spec);

// backward contraction range over the sphere at exponent e = m_l - m_i - q s < 0
std::pair<Quad, Quad> contraction_bounds(const MaximalSetSpec& spec, int i, int l, long long s);
// (u_min, u_max) = ratio / lambda_{min,max}; u_max <= u_min always
std::pair<Quad, Quad> u_bounds(const MaximalSetSpec& spec, int i, int l, long long s);

std::vector<AElem> build_A_set(const MaximalSetSpec& spec, int i);

// orders A by u-bounds; throws "theorem inapplicable: interleaving violated"
// when the [u_max, u_min] intervals overlap (cannot happen in 1D)
std::vector<AElem> check_interleaving(const MaximalSetSpec& spec, int i);

PilingLaw build_piling_law(const MaximalSetSpec& spec, long long horizon = 64);

// ---- sampling ----

struct PilingSampleEntry {
    long long offset = 0;
    double norm = 0;
    Pt vec{0, 0};
    int ball = -1;
};

struct PilingSample {
    int anchor = -1;
    int branch = -1;                  // index into law.branches
    double U = 0;
    Pt theta{0, 0};
    std::vector<PilingSampleEntry> entries;   // offset-sorted, finite only
    double L = 0;                     // min finite norm
    long long attempts = 1;           // resamples used by the conditioning
};

// Conditioned: realizes the window law of the dynamics (anchor ~ p, U and
// Theta unconditioned, backward orbit chain at one inverse-determinant per
// step, full resample when a realized negative entry has norm < 1).
// TableBranch: draws a branch row of the law directly and materializes it;
// reproduces the table including its conditional Theta-laws.
enum class SampleMode { Conditioned, TableBranch };

struct SampleOptions {
    SampleMode mode = SampleMode::Conditioned;
    int force_branch = -1;            // TableBranch: fix the branch
    double force_U = -1;              // fix U (must lie in the branch interval)
    bool sphere_rejection = false;    // Conditional Theta via capped rejection instead of arc inversion
};

PilingSample sample_piling(const PilingLaw& law, Rng& rng, const SampleOptions& opt = {});

// direction on S^{d-1} with ||diag(g) w|| >= bound; arc inversion by default
Pt sample_conditional_theta(Rng& rng, int dim, double g1, double g2, double bound,
                            bool rejection = false);

// ---- polar pieces ----

// x -> ||x||^{-1/alpha} * x/||x||; infinity -> 0
Pt xi_map_vec(const Pt& x, int dim, const Rational& alpha);
double xi_map_norm(double norm, const Rational& alpha);

struct PolarPair {
    double L = 0;
    std::vector<PilingSampleEntry> Q;   // j=0 representative, min norm 1
};
PolarPair polar_decompose(const std::vector<PilingSampleEntry>& entries);

// branch lookup for a realized (anchor, U)
int classify_branch(const PilingLaw& law, int anchor, double U);

// exact human-readable table, one row per (branch, entry)
std::string law_to_csv(const PilingLaw& law);

} // namespace expile
