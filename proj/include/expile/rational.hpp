#pragma once
// Exact rationals on __int128. Magnitudes in this project stay small
// (worst case: integer powers like 3^80 for far window offsets), so a
// fixed-width numerator/denominator with overflow checks is enough.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <numeric>

namespace expile {

using i128 = __int128;
using u128 = unsigned __int128;

struct exact_overflow : std::runtime_error {
    exact_overflow() : std::runtime_error("exact arithmetic overflow (value outside supported range)") {}
};

inline i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw exact_overflow();
    return r;
}
inline i128 checked_add(i128 a, i128 b) {
    i128 r;
    if (__builtin_add_overflow(a, b, &r)) throw exact_overflow();
    return r;
}

inline u128 u128_gcd(u128 a, u128 b) {
    while (b) { u128 t = a % b; a = b; b = t; }
    return a;
}

inline std::string i128_to_string(i128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    u128 u = neg ? (u128)(-(v + 1)) + 1 : (u128)v;
    std::string s;
    while (u) { s.push_back(char('0' + (int)(u % 10))); u /= 10; }
    if (neg) s.push_back('-');
    return std::string(s.rbegin(), s.rend());
}

class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(i128 n, i128 d) : num_(n), den_(d) { normalize(); }

    static Rational of(long long n, long long d) { return Rational((i128)n, (i128)d); }

    i128 num() const { return num_; }
    i128 den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

    Rational operator-() const { Rational r; r.num_ = -num_; r.den_ = den_; return r; }

    friend Rational operator+(const Rational& x, const Rational& y) {
        return Rational(checked_add(checked_mul(x.num_, y.den_), checked_mul(y.num_, x.den_)),
                        checked_mul(x.den_, y.den_));
    }
    friend Rational operator-(const Rational& x, const Rational& y) { return x + (-y); }
    friend Rational operator*(const Rational& x, const Rational& y) {
        return Rational(checked_mul(x.num_, y.num_), checked_mul(x.den_, y.den_));
    }
    friend Rational operator/(const Rational& x, const Rational& y) {
        if (y.num_ == 0) throw std::domain_error("rational division by zero");
        return Rational(checked_mul(x.num_, y.den_), checked_mul(x.den_, y.num_));
    }

    Rational& operator+=(const Rational& y) { *this = *this + y; return *this; }
    Rational& operator-=(const Rational& y) { *this = *this - y; return *this; }
    Rational& operator*=(const Rational& y) { *this = *this * y; return *this; }
    Rational& operator/=(const Rational& y) { *this = *this / y; return *this; }

    friend bool operator==(const Rational& x, const Rational& y) {
        return x.num_ == y.num_ && x.den_ == y.den_;
    }
    friend bool operator!=(const Rational& x, const Rational& y) { return !(x == y); }
    friend bool operator<(const Rational& x, const Rational& y) {
        return checked_mul(x.num_, y.den_) < checked_mul(y.num_, x.den_);
    }
    friend bool operator<=(const Rational& x, const Rational& y) { return !(y < x); }
    friend bool operator>(const Rational& x, const Rational& y) { return y < x; }
    friend bool operator>=(const Rational& x, const Rational& y) { return !(x < y); }

    double to_double() const { return (double)num_ / (double)den_; }

    Rational abs() const { return num_ < 0 ? -*this : *this; }

    // integer exponent power, e < 0 inverts
    Rational pow(long long e) const {
        if (e == 0) return Rational(1);
        Rational base = *this;
        if (e < 0) { base = Rational(1) / base; e = -e; }
        Rational acc(1);
        while (e) {
            if (e & 1) acc *= base;
            base = (e > 1) ? base * base : base;
            e >>= 1;
        }
        return acc;
    }

    std::string str() const {
        if (den_ == 1) return i128_to_string(num_);
        return i128_to_string(num_) + "/" + i128_to_string(den_);
    }

private:
    void normalize() {
        if (den_ == 0) throw std::domain_error("rational with zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        if (num_ == 0) { den_ = 1; return; }
        u128 a = num_ < 0 ? (u128)(-num_) : (u128)num_;
        u128 g = u128_gcd(a, (u128)den_);
        num_ /= (i128)g;
        den_ /= (i128)g;
    }
    i128 num_, den_;
};

// floor of k-th root if u is a perfect k-th power, else nullopt-like flag
inline bool perfect_kth_root(u128 u, int k, u128& root_out) {
    if (u == 0) { root_out = 0; return true; }
    if (u == 1) { root_out = 1; return true; }
    // binary search, values < 2^128
    u128 lo = 1, hi = u;
    // tighten hi: root <= 2^(128/k)+1
    {
        int bits = 0; u128 t = u;
        while (t) { ++bits; t >>= 1; }
        int rb = bits / k + 2;
        if (rb < 127) hi = ((u128)1 << rb);
    }
    while (lo < hi) {
        u128 mid = lo + (hi - lo + 1) / 2;
        // mid^k with overflow guard
        u128 acc = 1; bool over = false;
        for (int i = 0; i < k; ++i) {
            if (acc > u / mid) { over = true; break; }
            acc *= mid;
        }
        if (!over && acc <= u) lo = mid; else hi = mid - 1;
    }
    u128 acc = 1;
    for (int i = 0; i < k; ++i) acc *= lo;
    if (acc == u) { root_out = lo; return true; }
    return false;
}

} // namespace expile
