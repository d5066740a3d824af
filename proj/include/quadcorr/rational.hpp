#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "quadcorr/error.hpp"

namespace quadcorr {

namespace detail {
__extension__ using int128 = __int128;
__extension__ using uint128 = unsigned __int128;
}

/// Exact rational with 64-bit numerator and positive denominator, always in
/// lowest terms. Intermediate products use 128-bit arithmetic; a result that
/// does not fit back into 64 bits throws instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {} // NOLINT: implicit from integer is intended

    Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

    [[nodiscard]] constexpr std::int64_t numerator() const { return num_; }
    [[nodiscard]] constexpr std::int64_t denominator() const { return den_; }

    [[nodiscard]] double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    [[nodiscard]] std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// True when 0 <= value <= 1.
    [[nodiscard]] constexpr bool is_density() const { return num_ >= 0 && num_ <= den_; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::int128>(a.num_) * b.den_ + static_cast<detail::int128>(b.num_) * a.den_,
                         static_cast<detail::int128>(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::int128>(a.num_) * b.den_ - static_cast<detail::int128>(b.num_) * a.den_,
                         static_cast<detail::int128>(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::int128>(a.num_) * b.num_, static_cast<detail::int128>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw invalid_argument("Rational: division by zero");
        return from_wide(static_cast<detail::int128>(a.num_) * b.den_, static_cast<detail::int128>(a.den_) * b.num_);
    }
    Rational operator-() const { return from_wide(-static_cast<detail::int128>(num_), den_); }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend constexpr bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return static_cast<detail::int128>(a.num_) * b.den_ <=> static_cast<detail::int128>(b.num_) * a.den_;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    static detail::int128 gcd128(detail::int128 a, detail::int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) {
            detail::int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    static Rational from_wide(detail::int128 n, detail::int128 d) {
        if (d == 0) throw invalid_argument("Rational: zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const detail::int128 g = gcd128(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        constexpr detail::int128 lo = std::numeric_limits<std::int64_t>::min();
        constexpr detail::int128 hi = std::numeric_limits<std::int64_t>::max();
        if (n < lo || n > hi || d > hi) throw range_error("Rational: 64-bit overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    void assign(std::int64_t n, std::int64_t d) { *this = from_wide(n, d); }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Local densities (single elements and pairs) live in [0, 1].
using RationalDensity = Rational;

/// Integer power; throws on 64-bit overflow.
inline std::int64_t ipow(std::int64_t base, unsigned exp) {
    detail::int128 r = 1;
    for (unsigned i = 0; i < exp; ++i) {
        r *= base;
        if (r > std::numeric_limits<std::int64_t>::max() || r < std::numeric_limits<std::int64_t>::min())
            throw range_error("ipow: 64-bit overflow");
    }
    return static_cast<std::int64_t>(r);
}

} // namespace quadcorr
