#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "fracheat/errors.hpp"

namespace fracheat {

/// Exact rational with 64-bit numerator/denominator, normalized with den > 0.
/// Comparisons use 128-bit cross products, so values with dyadic denominators
/// up to 2^62 compare exactly.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw DomainError("Rational: zero denominator");
        normalize();
    }
    explicit Rational(std::int64_t n) : num_(n), den_(1) {}

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Exact rational form of a double (every finite double is m * 2^e).
    /// Returns nullopt when the dyadic form does not fit in int64 components.
    static std::optional<Rational> from_double(double x) {
        if (!std::isfinite(x)) return std::nullopt;
        if (x == 0.0) return Rational(0);
        int e = 0;
        double m = std::frexp(x, &e); // x = m * 2^e, |m| in [0.5, 1)
        auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
        int shift = 53 - e; // x = mant / 2^shift
        while (mant % 2 == 0 && shift > 0) { mant /= 2; --shift; }
        if (shift < 0) {
            if (-shift > 9) return std::nullopt; // avoid overflow for large magnitudes
            return Rational(mant << -shift, 1);
        }
        if (shift > 62) return std::nullopt;
        return Rational(mant, std::int64_t(1) << shift);
    }

    /// Parses "a", "a/b" or a plain decimal ("0.5" -> 1/2 exactly).
    static std::optional<Rational> parse(const std::string& s) {
        auto slash = s.find('/');
        try {
            if (slash != std::string::npos) {
                std::size_t p1 = 0, p2 = 0;
                std::int64_t a = std::stoll(s.substr(0, slash), &p1);
                std::int64_t b = std::stoll(s.substr(slash + 1), &p2);
                if (p1 != slash || p2 != s.size() - slash - 1 || b == 0) return std::nullopt;
                return Rational(a, b);
            }
            if (s.find('.') != std::string::npos || s.find('e') != std::string::npos ||
                s.find('E') != std::string::npos) {
                std::size_t pos = 0;
                double v = std::stod(s, &pos);
                if (pos != s.size()) return std::nullopt;
                return from_double(v);
            }
            std::size_t pos = 0;
            std::int64_t n = std::stoll(s, &pos);
            if (pos != s.size()) return std::nullopt;
            return Rational(n);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    Rational operator-() const { return Rational(-num_, den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(check_i64(i128(a.num_) * b.den_ + i128(b.num_) * a.den_),
                        check_i64(i128(a.den_) * b.den_));
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Rational x(a.num_, b.den_), y(b.num_, a.den_); // pre-cancel to limit growth
        return Rational(check_i64(i128(x.num_) * y.num_), check_i64(i128(x.den_) * y.den_));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw DomainError("Rational: division by zero");
        return a * Rational(b.den_, b.num_);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

private:
    using i128 = __int128;

    static std::int64_t check_i64(i128 v) {
        if (v > std::numeric_limits<std::int64_t>::max() ||
            v < std::numeric_limits<std::int64_t>::min())
            throw EvalError("Rational: arithmetic overflow");
        return static_cast<std::int64_t>(v);
    }

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace fracheat
