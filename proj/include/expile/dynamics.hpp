#pragma once
// Piecewise-linear expanding torus maps with exact symbolic orbits.
// A point is its base-beta digit stream per coordinate; applying the map is
// a digit shift, so orbits never lose precision over long horizons. A 63-bit
// fixed-point window over the upcoming digits gives O(1) stepping with
// ~1e-19 absolute position accuracy.

#include "expile/rational.hpp"
#include "expile/rng.hpp"

#include <array>
#include <vector>
#include <string>
#include <memory>
#include <optional>
#include <cstdint>

namespace expile {

using Pt = std::array<double, 2>;

struct TorusMap {
    std::vector<int> slopes;  // integer slope per coordinate, each >= 2
    int dim() const { return (int)slopes.size(); }
    void validate() const;
    bool operator==(const TorusMap& o) const { return slopes == o.slopes; }
};

// one application: x_k -> frac(slope_k * x_k); double precision, short horizons only
Pt iterate(const TorusMap& map, Pt x, long long steps);

double circle_dist_coord(double a, double b);
double circle_distance(int dim, const Pt& a, const Pt& b);

// per-coordinate slope^j as exact rationals, j may be negative
struct DerivativePower {
    std::array<Rational, 2> factor;
    int dim;
};
DerivativePower derivative_power(const TorusMap& map, long long j);

// ---- seed descriptions for digit streams ----

struct SeedCoord {
    enum class Kind { Rat, SqrtRat, PowerGaps, Uniform };
    Kind kind = Kind::Rat;
    long long p = 0, q = 1;    // Rat: p/q; SqrtRat: (p/q)*sqrt(rad); both in [0,1)
    long long rad = 2;         // radicand for SqrtRat
    long long gap_base = 3;    // PowerGaps: digit 1 exactly at positions gap_base^j, j >= 1
    double approx() const;
    std::string str() const;
};

std::optional<SeedCoord> parse_seed(const std::string& text);

// first `count` digits of the seed in the given base (Uniform consumes rng)
std::vector<uint8_t> seed_digits(const SeedCoord& seed, int base, long long count, Rng* rng = nullptr);

// ---- lazily extended digit source ----

class DigitStream {
public:
    DigitStream(SeedCoord seed, int base, uint64_t rng_seed = 0, uint64_t rng_stream = 0);
    uint8_t digit(long long idx);                 // 0-based
    void ensure(long long count);
    const std::vector<uint8_t>& buffer() const { return digits_; }
    int base() const { return base_; }

private:
    void extend(long long upto);
    SeedCoord seed_;
    int base_;
    std::vector<uint8_t> digits_;
    // rational state
    i128 rat_rem_ = 0;
    // sqrt spigot state
    struct Spigot;
    std::shared_ptr<Spigot> spig_;
    // power-gap state
    long long next_gap_ = 0;
    // uniform state
    std::optional<Rng> rng_;
};

// ---- exact orbit with O(1) stepping ----

class DigitOrbit {
public:
    // guard: digits kept resolved beyond the fixed-point window
    DigitOrbit(const TorusMap& map, std::vector<SeedCoord> seeds,
               uint64_t rng_seed = 0, uint64_t rng_stream = 0, int guard = 64);

    void step();                  // one application of the map
    long long time() const { return t_; }
    Pt point() const;             // current point, ~1e-19 per coordinate
    double coord(int k) const;
    int dim() const { return (int)coords_.size(); }

    // absolute-time access without disturbing the cursor (reads digits directly)
    double coord_at(int k, long long time) const;

private:
    struct CoordState {
        std::unique_ptr<DigitStream> stream;
        uint64_t window = 0;      // fixed-point accumulator of the next P digits
        uint64_t modulus = 0;     // base^P
        int P = 0;
        int base = 0;
    };
    std::vector<CoordState> coords_;
    long long t_ = 0;
    int guard_;
};

// stationary start: iid uniform digits in every coordinate
DigitOrbit sample_stationary(const TorusMap& map, uint64_t rng_seed, uint64_t rng_stream = 0, int guard = 64);

// ---- fixed-point digit vectors (conditional window sampling) ----

// value = sum_k dig[k] * base^-(k+1); finite precision stand-in for a point
// coordinate, exact add/subtract mod 1
struct FixedVec {
    int base = 2;
    std::vector<uint8_t> dig;

    static FixedVec from_stream(DigitStream& s, long long count);
    // x += t * base^-scale (mod 1), |t| < base^scale
    void add_scaled(i128 t, long long scale);
    void prepend(const std::vector<uint8_t>& front);
    double value(long long from = 0, int len = -1) const;
    // signed circular gap between this shifted by `shift` digits and `other`:
    // exact digitwise subtraction first, then conversion, so tiny gaps keep
    // full relative precision
    double signed_gap(long long shift, const FixedVec& other) const;
};

int fixed_window_digits(int base);   // P with base^P < 2^63

} // namespace expile
