#include "expile/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <algorithm>
#include <cassert>

namespace expile {

void TorusMap::validate() const {
    if (slopes.empty() || slopes.size() > 2)
        throw std::invalid_argument("map must have 1 or 2 coordinates");
    for (int b : slopes)
        if (b < 2) throw std::invalid_argument("every slope must be an integer >= 2");
}

Pt iterate(const TorusMap& map, Pt x, long long steps) {
    for (long long s = 0; s < steps; ++s)
        for (int k = 0; k < map.dim(); ++k) {
            double v = x[(size_t)k] * map.slopes[(size_t)k];
            x[(size_t)k] = v - std::floor(v);
        }
    return x;
}

double circle_dist_coord(double a, double b) {
    double d = std::fabs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

double circle_distance(int dim, const Pt& a, const Pt& b) {
    if (dim == 1) return circle_dist_coord(a[0], b[0]);
    double dx = circle_dist_coord(a[0], b[0]);
    double dy = circle_dist_coord(a[1], b[1]);
    return std::sqrt(dx * dx + dy * dy);
}

DerivativePower derivative_power(const TorusMap& map, long long j) {
    if (j > 80 || j < -80) throw std::domain_error("derivative power exponent out of exact range");
    DerivativePower out;
    out.dim = map.dim();
    for (int k = 0; k < map.dim(); ++k)
        out.factor[(size_t)k] = Rational(map.slopes[(size_t)k]).pow(j);
    return out;
}

double SeedCoord::approx() const {
    switch (kind) {
        case Kind::Rat: return (double)p / (double)q;
        case Kind::SqrtRat: return (double)p / (double)q * std::sqrt((double)rad);
        case Kind::PowerGaps: {
            double v = 0, g = (double)gap_base;
            for (double pos = g; pos < 200; pos *= g) v += std::pow((double)gap_base, -pos);
            return v;
        }
        case Kind::Uniform: return 0.5;
    }
    return 0;
}

std::string SeedCoord::str() const {
    switch (kind) {
        case Kind::Rat: return q == 1 ? std::to_string(p) : std::to_string(p) + "/" + std::to_string(q);
        case Kind::SqrtRat: {
            std::string s = "sqrt" + std::to_string(rad);
            if (p != 1) s = std::to_string(p) + "*" + s;
            if (q != 1) s += "/" + std::to_string(q);
            return s;
        }
        case Kind::PowerGaps: return "series" + std::to_string(gap_base);
        case Kind::Uniform: return "uniform";
    }
    return "?";
}

std::optional<SeedCoord> parse_seed(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace((unsigned char)c)) s.push_back(c);
    SeedCoord out;
    if (s == "uniform") { out.kind = SeedCoord::Kind::Uniform; return out; }
    if (s.rfind("series", 0) == 0) {
        out.kind = SeedCoord::Kind::PowerGaps;
        out.gap_base = std::strtoll(s.c_str() + 6, nullptr, 10);
        if (out.gap_base < 2) return std::nullopt;
        return out;
    }
    // forms: p/q | p | sqrtD/q | p/q*sqrtD | sqrtD
    auto star = s.find('*');
    std::string mult = "1", rest = s;
    if (star != std::string::npos) { mult = s.substr(0, star); rest = s.substr(star + 1); }
    if (rest.rfind("sqrt", 0) == 0) {
        out.kind = SeedCoord::Kind::SqrtRat;
        auto slash = rest.find('/');
        std::string rads = slash == std::string::npos ? rest.substr(4) : rest.substr(4, slash - 4);
        out.rad = std::strtoll(rads.c_str(), nullptr, 10);
        out.q = slash == std::string::npos ? 1 : std::strtoll(rest.c_str() + slash + 1, nullptr, 10);
        auto mslash = mult.find('/');
        out.p = std::strtoll(mult.c_str(), nullptr, 10);
        if (mslash != std::string::npos) out.q *= std::strtoll(mult.c_str() + mslash + 1, nullptr, 10);
        if (out.rad < 2 || out.q < 1 || out.p < 0) return std::nullopt;
        if ((double)out.p * std::sqrt((double)out.rad) >= (double)out.q) return std::nullopt;
        return out;
    }
    if (star != std::string::npos) return std::nullopt;
    out.kind = SeedCoord::Kind::Rat;
    auto slash = s.find('/');
    char* end = nullptr;
    out.p = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str()) return std::nullopt;
    out.q = slash == std::string::npos ? 1 : std::strtoll(s.c_str() + slash + 1, nullptr, 10);
    if (out.q < 1 || out.p < 0 || out.p >= out.q) {
        if (!(out.p == 0 && out.q == 1)) return std::nullopt;
    }
    return out;
}

// ---- small big-unsigned helper for the square-root spigot ----

namespace {

struct BigU {
    std::vector<uint32_t> limb;  // little endian, base 2^32

    static BigU from_u128(u128 v) {
        BigU b;
        while (v) { b.limb.push_back((uint32_t)(v & 0xffffffffu)); v >>= 32; }
        return b;
    }
    bool zero() const { return limb.empty(); }
    void trim() { while (!limb.empty() && limb.back() == 0) limb.pop_back(); }

    static int cmp(const BigU& a, const BigU& b) {
        if (a.limb.size() != b.limb.size()) return a.limb.size() < b.limb.size() ? -1 : 1;
        for (size_t i = a.limb.size(); i-- > 0;)
            if (a.limb[i] != b.limb[i]) return a.limb[i] < b.limb[i] ? -1 : 1;
        return 0;
    }

    void add(const BigU& o) {
        uint64_t carry = 0;
        size_t n = std::max(limb.size(), o.limb.size());
        limb.resize(n, 0);
        for (size_t i = 0; i < n; ++i) {
            uint64_t s = carry + limb[i] + (i < o.limb.size() ? o.limb[i] : 0);
            limb[i] = (uint32_t)s;
            carry = s >> 32;
        }
        if (carry) limb.push_back((uint32_t)carry);
    }

    void sub(const BigU& o) {  // requires *this >= o
        int64_t borrow = 0;
        for (size_t i = 0; i < limb.size(); ++i) {
            int64_t s = (int64_t)limb[i] - borrow - (i < o.limb.size() ? o.limb[i] : 0);
            if (s < 0) { s += ((int64_t)1 << 32); borrow = 1; } else borrow = 0;
            limb[i] = (uint32_t)s;
        }
        assert(borrow == 0);
        trim();
    }

    void mul_small(uint64_t m) {
        if (m == 0) { limb.clear(); return; }
        uint64_t carry = 0;
        for (size_t i = 0; i < limb.size(); ++i) {
            u128 prod = (u128)limb[i] * m + carry;
            limb[i] = (uint32_t)(prod & 0xffffffffu);
            carry = (uint64_t)(prod >> 32);
        }
        while (carry) { limb.push_back((uint32_t)(carry & 0xffffffffu)); carry >>= 32; }
    }

    // quotient into *this, returns remainder
    uint64_t divmod_small(uint64_t d) {
        uint64_t rem = 0;
        for (size_t i = limb.size(); i-- > 0;) {
            u128 cur = ((u128)rem << 32) | limb[i];
            limb[i] = (uint32_t)(cur / d);
            rem = (uint64_t)(cur % d);
        }
        trim();
        return rem;
    }
};

} // namespace

// digit-by-digit square root: maintains N_k = floor(sqrt(A * base^{2k})) and
// remainder R_k = A*base^{2k} - N_k^2; emits digits of sqrt(A)/q
struct DigitStream::Spigot {
    BigU N, R, Dprev;
    uint64_t q;
    int base;

    Spigot(u128 A, uint64_t q_, int base_) : q(q_), base(base_) {
        // integer sqrt of A (A fits u128)
        u128 lo = 0, hi = (u128)1 << 64;
        while (lo < hi) {
            u128 mid = lo + (hi - lo + 1) / 2;
            if (mid <= A / (mid ? mid : 1) && mid * mid <= A) lo = mid; else hi = mid - 1;
        }
        N = BigU::from_u128(lo);
        BigU a = BigU::from_u128(A), n2 = BigU::from_u128(lo * lo);
        a.sub(n2);
        R = a;
        Dprev = N;
        uint64_t r0 = Dprev.divmod_small(q);
        (void)r0;  // integer part, zero for seeds < 1
    }

    uint8_t next_digit() {
        // N' = base*N + t, largest t in [0, base) with base^2*R >= t*(2*base*N + t)
        R.mul_small((uint64_t)base * (uint64_t)base);
        BigU twoBN = N;
        twoBN.mul_small(2ull * (uint64_t)base);
        int t_pick = 0;
        BigU need_pick;
        for (int t = base - 1; t >= 1; --t) {
            BigU need = twoBN;
            need.mul_small((uint64_t)t);
            need.add(BigU::from_u128((u128)((uint64_t)t) * (uint64_t)t));
            if (BigU::cmp(R, need) >= 0) { t_pick = t; need_pick = need; break; }
        }
        if (t_pick) R.sub(need_pick);
        N.mul_small((uint64_t)base);
        if (t_pick) N.add(BigU::from_u128((u128)t_pick));
        // digit of sqrt(A)/q: floor(N/q) - base*floor(N_prev/q)
        BigU D = N;
        D.divmod_small(q);
        BigU scaled = Dprev;
        scaled.mul_small((uint64_t)base);
        BigU diff = D;
        diff.sub(scaled);
        Dprev = D;
        uint64_t d = diff.zero() ? 0 : diff.limb[0];
        assert(d < (uint64_t)base);
        return (uint8_t)d;
    }
};

DigitStream::DigitStream(SeedCoord seed, int base, uint64_t rng_seed, uint64_t rng_stream)
    : seed_(seed), base_(base) {
    if (base < 2) throw std::invalid_argument("digit base must be >= 2");
    switch (seed_.kind) {
        case SeedCoord::Kind::Rat:
            if (seed_.q < 1 || seed_.p < 0 || seed_.p >= seed_.q)
                if (!(seed_.p == 0 && seed_.q >= 1)) throw std::invalid_argument("rational seed outside [0,1)");
            rat_rem_ = seed_.p;
            break;
        case SeedCoord::Kind::SqrtRat: {
            u128 A = (u128)seed_.rad * (u128)seed_.p * (u128)seed_.p;
            if (A >= (u128)seed_.q * (u128)seed_.q)
                throw std::invalid_argument("sqrt seed outside [0,1)");
            spig_ = std::make_shared<Spigot>(A, (uint64_t)seed_.q, base);
            break;
        }
        case SeedCoord::Kind::PowerGaps:
            if (seed_.gap_base != base)
                throw std::invalid_argument("power-gap seed digits are defined in its own base");
            next_gap_ = seed_.gap_base;
            break;
        case SeedCoord::Kind::Uniform:
            rng_.emplace(rng_seed, rng_stream);
            break;
    }
}

void DigitStream::ensure(long long count) {
    if ((long long)digits_.size() >= count) return;
    extend(count);
}

uint8_t DigitStream::digit(long long idx) {
    if (idx >= (long long)digits_.size()) extend(idx + 1);
    return digits_[(size_t)idx];
}

void DigitStream::extend(long long upto) {
    while ((long long)digits_.size() < upto) {
        switch (seed_.kind) {
            case SeedCoord::Kind::Rat: {
                rat_rem_ = checked_mul(rat_rem_, base_);
                digits_.push_back((uint8_t)(rat_rem_ / seed_.q));
                rat_rem_ %= seed_.q;
                break;
            }
            case SeedCoord::Kind::SqrtRat:
                digits_.push_back(spig_->next_digit());
                break;
            case SeedCoord::Kind::PowerGaps: {
                long long pos = (long long)digits_.size() + 1;  // digit positions are 1-based
                if (pos == next_gap_) {
                    digits_.push_back(1);
                    if (next_gap_ > (1ll << 55) / seed_.gap_base) next_gap_ = -1;  // beyond any horizon
                    else next_gap_ *= seed_.gap_base;
                } else {
                    digits_.push_back(0);
                }
                break;
            }
            case SeedCoord::Kind::Uniform:
                digits_.push_back((uint8_t)rng_->below((uint32_t)base_));
                break;
        }
    }
}

int fixed_window_digits(int base) {
    int P = 0;
    unsigned long long v = 1;
    while (v < (1ull << 63) / (unsigned long long)base) { v *= (unsigned long long)base; ++P; }
    return P;
}

DigitOrbit::DigitOrbit(const TorusMap& map, std::vector<SeedCoord> seeds,
                       uint64_t rng_seed, uint64_t rng_stream, int guard)
    : guard_(guard) {
    map.validate();
    if ((int)seeds.size() != map.dim())
        throw std::invalid_argument("seed count must match map dimension");
    for (int k = 0; k < map.dim(); ++k) {
        CoordState cs;
        cs.base = map.slopes[(size_t)k];
        cs.P = fixed_window_digits(cs.base);
        cs.modulus = 1;
        for (int i = 0; i < cs.P; ++i) cs.modulus *= (uint64_t)cs.base;
        cs.stream = std::make_unique<DigitStream>(seeds[(size_t)k], cs.base,
                                                  rng_seed, rng_stream * 2 + (uint64_t)k);
        cs.stream->ensure(cs.P + guard_);
        cs.window = 0;
        for (int i = 0; i < cs.P; ++i)
            cs.window = cs.window * (uint64_t)cs.base + cs.stream->digit(i);
        coords_.push_back(std::move(cs));
    }
}

void DigitOrbit::step() {
    ++t_;
    for (auto& cs : coords_) {
        cs.window = (cs.window * (uint64_t)cs.base) % cs.modulus
                  + cs.stream->digit(t_ + cs.P - 1);
    }
}

double DigitOrbit::coord(int k) const {
    const auto& cs = coords_[(size_t)k];
    return (double)cs.window / (double)cs.modulus;
}

Pt DigitOrbit::point() const {
    Pt p{0.0, 0.0};
    for (int k = 0; k < dim(); ++k) p[(size_t)k] = coord(k);
    return p;
}

double DigitOrbit::coord_at(int k, long long time) const {
    const auto& cs = coords_[(size_t)k];
    uint64_t w = 0;
    for (int i = 0; i < cs.P; ++i)
        w = w * (uint64_t)cs.base + const_cast<DigitStream&>(*cs.stream).digit(time + i);
    return (double)w / (double)cs.modulus;
}

DigitOrbit sample_stationary(const TorusMap& map, uint64_t rng_seed, uint64_t rng_stream, int guard) {
    std::vector<SeedCoord> seeds((size_t)map.dim());
    for (auto& s : seeds) s.kind = SeedCoord::Kind::Uniform;
    return DigitOrbit(map, std::move(seeds), rng_seed, rng_stream, guard);
}

std::vector<uint8_t> seed_digits(const SeedCoord& seed, int base, long long count, Rng* rng) {
    uint64_t rs = 0;
    if (seed.kind == SeedCoord::Kind::Uniform && rng) {
        std::vector<uint8_t> out((size_t)count);
        for (auto& d : out) d = (uint8_t)rng->below((uint32_t)base);
        return out;
    }
    DigitStream s(seed, base, rs, 0);
    s.ensure(count);
    return std::vector<uint8_t>(s.buffer().begin(), s.buffer().begin() + count);
}

// ---- FixedVec ----

FixedVec FixedVec::from_stream(DigitStream& s, long long count) {
    FixedVec v;
    v.base = s.base();
    s.ensure(count);
    v.dig.assign(s.buffer().begin(), s.buffer().begin() + count);
    return v;
}

void FixedVec::add_scaled(i128 t, long long scale) {
    if (scale > (long long)dig.size())
        throw std::invalid_argument("scale beyond fixed-point precision");
    if (t == 0) return;
    bool neg = t < 0;
    u128 mag = neg ? (u128)(-t) : (u128)t;
    // digits of |t| in base, aligned so least significant sits at index scale-1
    std::vector<uint8_t> td;
    while (mag) { td.push_back((uint8_t)(mag % (u128)base)); mag /= (u128)base; }
    if ((long long)td.size() > scale)
        throw std::invalid_argument("offset magnitude exceeds scale");
    int carry = 0;
    for (long long i = 0; i < (long long)dig.size() && (i < (long long)td.size() || carry); ++i) {
        long long idx = scale - 1 - i;
        if (idx < 0) break;
        int v = dig[(size_t)idx] + carry + (neg ? -(i < (long long)td.size() ? td[(size_t)i] : 0)
                                               : (i < (long long)td.size() ? td[(size_t)i] : 0));
        carry = 0;
        while (v < 0) { v += base; carry -= 1; }
        while (v >= base) { v -= base; carry += 1; }
        dig[(size_t)idx] = (uint8_t)v;
        if (idx == 0) break;  // wrap mod 1: drop carry past the point
    }
}

void FixedVec::prepend(const std::vector<uint8_t>& front) {
    dig.insert(dig.begin(), front.begin(), front.end());
}

double FixedVec::value(long long from, int len) const {
    int P = fixed_window_digits(base);
    if (len < 0) len = P;
    double acc = 0, scale = 1;
    for (long long i = from; i < std::min<long long>(from + len, (long long)dig.size()); ++i) {
        scale /= base;
        acc += scale * dig[(size_t)i];
    }
    return acc;
}

double FixedVec::signed_gap(long long shift, const FixedVec& other) const {
    // delta = frac(this >> shift) - other, computed digitwise so tiny gaps
    // keep full relative precision; result in (-1/2, 1/2]
    long long n = std::min<long long>((long long)dig.size() - shift, (long long)other.dig.size());
    if (n <= 0) throw std::invalid_argument("not enough digits for gap at this shift");
    // first differing digit decides the sign
    long long i = 0;
    while (i < n && dig[(size_t)(shift + i)] == other.dig[(size_t)i]) ++i;
    if (i == n) return 0.0;
    // forward difference a - b, may be negative
    double acc = 0, scale = 1;
    int P = fixed_window_digits(base) + 4;
    for (long long k = i; k < std::min(n, i + P); ++k) {
        scale = std::pow((double)base, -(double)(k + 1));
        acc += scale * ((int)dig[(size_t)(shift + k)] - (int)other.dig[(size_t)k]);
    }
    // wrap to circle
    if (acc > 0.5) acc -= 1.0;
    if (acc <= -0.5) acc += 1.0;
    return acc;
}

} // namespace expile
