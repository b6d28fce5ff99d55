#pragma once
// Elements of Q(sqrt2): a + b*sqrt2 with rational a, b. Every exact value in
// the shipped examples (weights, branch probabilities, contraction bounds,
// normalizing coefficients like 24+16*sqrt2) lives in this field.

#include "expile/rational.hpp"

#include <optional>
#include <string>
#include <cmath>
#include <cctype>

namespace expile {

class Quad {
public:
    Quad() : a_(0), b_(0) {}
    Quad(long long n) : a_(n), b_(0) {}
    Quad(const Rational& a) : a_(a), b_(0) {}
    Quad(const Rational& a, const Rational& b) : a_(a), b_(b) {}

    static Quad sqrt2() { return Quad(Rational(0), Rational(1)); }

    const Rational& rat_part() const { return a_; }
    const Rational& surd_part() const { return b_; }
    bool is_rational() const { return b_.is_zero(); }
    bool is_zero() const { return a_.is_zero() && b_.is_zero(); }

    // exact sign; a^2 = 2b^2 cannot happen for nonzero rationals
    int sign() const {
        int sa = a_.sign(), sb = b_.sign();
        if (sb == 0) return sa;
        if (sa == 0) return sb;
        if (sa == sb) return sa;
        Rational d = a_ * a_ - Rational(2) * b_ * b_;
        return sa > 0 ? d.sign() : -d.sign();
    }

    Quad operator-() const { return Quad(-a_, -b_); }
    friend Quad operator+(const Quad& x, const Quad& y) { return Quad(x.a_ + y.a_, x.b_ + y.b_); }
    friend Quad operator-(const Quad& x, const Quad& y) { return Quad(x.a_ - y.a_, x.b_ - y.b_); }
    friend Quad operator*(const Quad& x, const Quad& y) {
        return Quad(x.a_ * y.a_ + Rational(2) * x.b_ * y.b_, x.a_ * y.b_ + x.b_ * y.a_);
    }
    friend Quad operator/(const Quad& x, const Quad& y) {
        Rational nrm = y.a_ * y.a_ - Rational(2) * y.b_ * y.b_;
        if (nrm.is_zero()) throw std::domain_error("division by zero in Q(sqrt2)");
        Quad conj(y.a_, -y.b_);
        Quad p = x * conj;
        return Quad(p.a_ / nrm, p.b_ / nrm);
    }
    Quad& operator+=(const Quad& y) { *this = *this + y; return *this; }
    Quad& operator-=(const Quad& y) { *this = *this - y; return *this; }
    Quad& operator*=(const Quad& y) { *this = *this * y; return *this; }
    Quad& operator/=(const Quad& y) { *this = *this / y; return *this; }

    friend bool operator==(const Quad& x, const Quad& y) { return x.a_ == y.a_ && x.b_ == y.b_; }
    friend bool operator!=(const Quad& x, const Quad& y) { return !(x == y); }
    friend bool operator<(const Quad& x, const Quad& y) { return (x - y).sign() < 0; }
    friend bool operator<=(const Quad& x, const Quad& y) { return (x - y).sign() <= 0; }
    friend bool operator>(const Quad& x, const Quad& y) { return (x - y).sign() > 0; }
    friend bool operator>=(const Quad& x, const Quad& y) { return (x - y).sign() >= 0; }

    double to_double() const { return a_.to_double() + b_.to_double() * 1.41421356237309504880168872420969808; }

    Quad pow(long long e) const {
        if (e == 0) return Quad(1);
        Quad base = *this;
        if (e < 0) { base = Quad(1) / base; e = -e; }
        Quad acc(1);
        while (e) {
            if (e & 1) acc *= base;
            base = (e > 1) ? base * base : base;
            e >>= 1;
        }
        return acc;
    }

    // canonical form: "p/q" if rational, else "a+b*sqrt2" with unit b folded
    std::string str() const {
        if (b_.is_zero()) return a_.str();
        std::string bs;
        Rational ab = b_.abs();
        if (ab == Rational(1)) bs = "sqrt2";
        else bs = ab.str() + "*sqrt2";
        if (a_.is_zero()) return (b_.sign() < 0 ? "-" : "") + bs;
        return a_.str() + (b_.sign() < 0 ? "-" : "+") + bs;
    }

private:
    Rational a_, b_;
};

// exact k-th root of a nonnegative rational inside Q(sqrt2), if it exists:
// either r = s^k, or (k even) r = 2^{k/2} s^k giving s*sqrt2.
inline std::optional<Quad> quad_root(const Rational& r, int k) {
    if (k <= 0) return std::nullopt;
    if (r.sign() < 0) return std::nullopt;
    if (r.is_zero()) return Quad(0);
    if (k == 1) return Quad(r);
    u128 np = (u128)r.num(), dp = (u128)r.den();
    u128 rn, rd;
    if (perfect_kth_root(np, k, rn) && perfect_kth_root(dp, k, rd))
        return Quad(Rational((i128)rn, (i128)rd));
    if (k % 2 == 0) {
        // try r / 2^{k/2} a perfect k-th power
        Rational half = r / Rational(2).pow(k / 2);
        u128 hn = (u128)half.num(), hd = (u128)half.den();
        if (perfect_kth_root(hn, k, rn) && perfect_kth_root(hd, k, rd))
            return Quad(Rational(0), Rational((i128)rn, (i128)rd));
    }
    return std::nullopt;
}

// base^(p/q) for rational base > 0, exact when the result lies in Q(sqrt2)
inline std::optional<Quad> quad_pow(const Rational& base, const Rational& expo) {
    if (base.sign() <= 0) return std::nullopt;
    Rational powed = base.pow((long long)expo.num());
    if (expo.den() == 1) return Quad(powed);
    if (expo.den() > 64) return std::nullopt;
    return quad_root(powed, (int)expo.den());
}

// ---- parsing of "2/3", "sqrt2/16", "24+16*sqrt2", "1-1/2*sqrt2" ----

namespace detail {
inline bool parse_uint(const std::string& s, size_t& i, i128& out) {
    size_t start = i;
    i128 v = 0;
    while (i < s.size() && std::isdigit((unsigned char)s[i])) {
        v = checked_mul(v, 10);
        v = checked_add(v, s[i] - '0');
        ++i;
    }
    if (i == start) return false;
    out = v;
    return true;
}

// term ::= [int['/'int]] ['*'] ['sqrt2' ['/'int]]   |   'sqrt2' ['/'int]
inline bool parse_term(const std::string& s, size_t& i, Quad& out) {
    Rational coef(1);
    bool have_num = false;
    i128 n = 0;
    if (i < s.size() && std::isdigit((unsigned char)s[i])) {
        if (!parse_uint(s, i, n)) return false;
        have_num = true;
        coef = Rational(n, 1);
        if (i < s.size() && s[i] == '/' && i + 1 < s.size() && std::isdigit((unsigned char)s[i + 1])) {
            ++i;
            i128 d;
            if (!parse_uint(s, i, d)) return false;
            coef = Rational(n, d);
        }
        if (i < s.size() && s[i] == '*') ++i;
    }
    if (s.compare(i, 5, "sqrt2") == 0) {
        i += 5;
        Rational div(1);
        if (i < s.size() && s[i] == '/') {
            ++i;
            i128 d;
            if (!parse_uint(s, i, d)) return false;
            div = Rational(d, 1);
        }
        out = Quad(Rational(0), coef / div);
        return true;
    }
    if (!have_num) return false;
    out = Quad(coef);
    return true;
}
} // namespace detail

inline std::optional<Quad> parse_quad(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace((unsigned char)c)) s.push_back(c);
    if (s.empty()) return std::nullopt;
    size_t i = 0;
    int sg = 1;
    if (s[0] == '+' || s[0] == '-') { sg = s[0] == '-' ? -1 : 1; i = 1; }
    Quad acc;
    Quad term;
    if (!detail::parse_term(s, i, term)) return std::nullopt;
    acc = sg < 0 ? -term : term;
    while (i < s.size()) {
        if (s[i] != '+' && s[i] != '-') return std::nullopt;
        int sg2 = s[i] == '-' ? -1 : 1;
        ++i;
        if (!detail::parse_term(s, i, term)) return std::nullopt;
        acc += sg2 < 0 ? -term : term;
    }
    return acc;
}

} // namespace expile
