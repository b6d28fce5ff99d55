#pragma once
// The observed process: a vector observable peaking on a finite (or countable)
// forward-orbit set M = {xi_1, xi_2, ...}, xi_i = f^{m_i}(zeta), with
// magnitude h_i(t) = c_i * t^{-1/alpha} inside the support ball of xi_i and
// zero elsewhere. Threshold levels are calibrated so that n * P(|X| > u_n(tau))
// is asymptotically linear in tau (up to the bookkeeping convention v_1 = 2,
// v_2 = 1 for ball volumes).

#include "expile/dynamics.hpp"
#include "expile/quadratic.hpp"

#include <stdexcept>
#include <string>
#include <vector>
#include <optional>

namespace expile {

struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

struct BallSpec {
    long long m = 0;     // orbit offset: center = f^m(zeta)
    Quad c = Quad(1);    // weight coefficient, > 0
    double eps = 0;      // support radius; 0 = auto (a third of the gap to the nearest other center)
    long long D = 1;     // multiplicity
};

enum class SetMode { NonPeriodic, Periodic, Countable };

// generative rule for countable sets: m_1 = 0, m_i = power_base^{i-1} (i >= 2),
// c_i = c_1 * ratio^{i-1}
struct CountableGen {
    long long power_base = 3;
    Rational c_ratio = Rational(1, 2);
};

struct MaximalSetSpec {
    std::string name = "custom";
    TorusMap map;
    std::vector<SeedCoord> zeta;
    Rational alpha = Rational(1, 2);
    SetMode mode = SetMode::NonPeriodic;
    long long period = 0;                       // Periodic: minimal q with f^q(zeta) = zeta
    std::vector<BallSpec> balls;                // materialized prefix when Countable
    std::optional<CountableGen> countable;
    // countable theoretical-EI override: per-level return exponents e_i
    // (successor preimage factor det(Df)^{-e_i}); empty = derive from geometry
    std::vector<long long> ei_return_exponents;

    int dim() const { return map.dim(); }
    Rational alpha_d() const { return alpha * Rational(dim()); }
    int ball_count() const { return (int)balls.size(); }

    void finalize();                            // validates, fills eps defaults, caches centers
    bool finalized() const { return !centers_.empty(); }
    const Pt& center(int i) const { return centers_.at((size_t)i); }
    double center_gap(int i) const { return gaps_.at((size_t)i); }  // distance to nearest other center

    // digit streams for the center of ball i (per coordinate)
    std::vector<FixedVec> center_digits(int i, long long count) const;

private:
    std::vector<Pt> centers_;
    std::vector<double> gaps_;
    std::vector<std::shared_ptr<DigitStream>> streams_;  // zeta digits, one per coordinate
};

// geometric weight ratio of a countable family (throws when not countable)
Rational countable_ratio(const MaximalSetSpec& spec);

// single tail index across the set; mixed indices make the weight limit degenerate
void validate_tail_indices(const std::vector<Rational>& alphas);

// magnitude profile and its inverse
double h_eval(const MaximalSetSpec& spec, int ball, double t);
double h_inverse(const MaximalSetSpec& spec, int ball, double value);

struct ObservationValue {
    double magnitude = 0;    // |Psi(x)|, 0 outside all supports
    Pt direction{0, 0};      // unit vector from the center in the flat chart
    int ball = -1;
};
ObservationValue evaluate_observable(const MaximalSetSpec& spec, const Pt& x);

// normalizing sequence: a_n = (S n)^{1/(alpha d)} with
// S = sum_i D_i v_d c_i^{alpha d}, v_1 = 2, v_2 = 1
Quad an_sum(const MaximalSetSpec& spec);           // S, exact
Quad an_coefficient(const MaximalSetSpec& spec);   // K with a_n = K n^{1/(alpha d)} when 1/(alpha d) is integral

struct ThresholdFamily {
    double a_n_value = 0;
    Rational alpha;                    // tail index of |X|, i.e. alpha d
    long long n = 0;
    double a_n() const { return a_n_value; }
    double u(double tau) const;        // u_n(tau) = tau^{-1/alpha} a_n, so n P(|X| > u_n(tau)) -> tau
    double u_inv(double z) const;      // (z / a_n)^{-alpha}, the asymptotic frequency of level z
};
ThresholdFamily threshold_family(const MaximalSetSpec& spec, long long n);

// radius of {|Psi| > u_n(tau)} around center i (capped by the support radius)
double exceedance_radius(const MaximalSetSpec& spec, int ball, long long n, double tau);

// exact radius ratio r_l / r_i = (c_l / c_i)^alpha  (support caps ignored)
Quad radius_ratio(const MaximalSetSpec& spec, int l, int i);

// exact ball-volume ratios in the v_d bookkeeping: vol_i = D_i c_i^{alpha d}
Quad ball_weight(const MaximalSetSpec& spec, int i);

} // namespace expile
