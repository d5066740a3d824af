#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "quadcorr/error.hpp"

namespace quadcorr {

inline std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

/// All primes <= limit, ascending. Segmented odd-only sieve of Eratosthenes;
/// working memory is O(sqrt(limit)) plus the output.
inline std::vector<std::uint64_t> primes_up_to(std::uint64_t limit) {
    std::vector<std::uint64_t> out;
    if (limit < 2) return out;
    out.push_back(2);
    if (limit < 3) return out;

    const std::uint64_t root = isqrt(limit);
    std::vector<std::uint64_t> base;
    {
        std::vector<char> composite(root + 1, 0);
        for (std::uint64_t i = 3; i <= root; i += 2) {
            if (composite[i]) continue;
            base.push_back(i);
            for (std::uint64_t j = i * i; j <= root; j += 2 * i) composite[j] = 1;
        }
    }

    const auto estimate = static_cast<std::size_t>(1.3 * static_cast<double>(limit) / std::log(static_cast<double>(limit)));
    out.reserve(estimate + 16);

    constexpr std::uint64_t kSegment = std::uint64_t{1} << 18; // odd numbers per segment
    std::vector<char> composite(kSegment);
    for (std::uint64_t lo = 3; lo <= limit; lo += 2 * kSegment) {
        const std::uint64_t hi = std::min(limit, lo + 2 * kSegment - 1);
        const std::uint64_t count = (hi - lo) / 2 + 1;
        std::fill_n(composite.begin(), count, 0);
        for (std::uint64_t p : base) {
            if (p * p > hi) break;
            std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
            if (start % 2 == 0) start += p;
            for (std::uint64_t m = start; m <= hi; m += 2 * p) composite[(m - lo) / 2] = 1;
        }
        for (std::uint64_t i = 0; i < count; ++i)
            if (!composite[i]) out.push_back(lo + 2 * i);
    }
    return out;
}

/// Immutable ascending prime list covering [2, limit].
class PrimeTable {
public:
    explicit PrimeTable(std::uint64_t limit) : limit_(limit), primes_(primes_up_to(limit)) {}

    [[nodiscard]] std::uint64_t limit() const { return limit_; }
    [[nodiscard]] std::span<const std::uint64_t> primes() const { return primes_; }
    [[nodiscard]] std::size_t size() const { return primes_.size(); }

    /// Primes <= bound (bound may not exceed limit()).
    [[nodiscard]] std::span<const std::uint64_t> up_to(std::uint64_t bound) const {
        if (bound > limit_) throw range_error("PrimeTable: bound beyond table limit");
        auto end = std::upper_bound(primes_.begin(), primes_.end(), bound);
        return {primes_.data(), static_cast<std::size_t>(end - primes_.begin())};
    }

    /// Largest n whose factorization this table can complete by trial division.
    [[nodiscard]] std::uint64_t factor_limit() const {
        const long double l = static_cast<long double>(limit_);
        return l * l > 1.8e19L ? UINT64_MAX : limit_ * limit_ + 2 * limit_;
    }

private:
    std::uint64_t limit_;
    std::vector<std::uint64_t> primes_;
};

/// Process-wide table used for trial division (covers factorization up to ~1.1e12).
inline const PrimeTable& trial_division_table() {
    static const PrimeTable table(std::uint64_t{1} << 20);
    return table;
}

/// Exact p-adic valuation m_p(n).
inline unsigned multiplicity(std::uint64_t p, std::uint64_t n) {
    if (n == 0) throw invalid_argument("multiplicity: n must be positive");
    if (p < 2) throw invalid_argument("multiplicity: p must be >= 2");
    unsigned k = 0;
    while (n % p == 0) {
        n /= p;
        ++k;
    }
    return k;
}

using Factorization = std::vector<std::pair<std::uint64_t, unsigned>>;

/// Prime factorization by trial division with the shared table.
inline Factorization factorize(std::uint64_t n) {
    if (n == 0) throw invalid_argument("factorize: n must be positive");
    const PrimeTable& table = trial_division_table();
    if (n > table.factor_limit()) throw range_error("factorize: n beyond trial-division range");
    Factorization f;
    for (std::uint64_t p : table.primes()) {
        if (p * p > n) break;
        if (n % p != 0) continue;
        unsigned k = 0;
        while (n % p == 0) {
            n /= p;
            ++k;
        }
        f.emplace_back(p, k);
    }
    if (n > 1) f.emplace_back(n, 1);
    return f;
}

inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    const PrimeTable& table = trial_division_table();
    if (n <= table.limit()) return std::binary_search(table.primes().begin(), table.primes().end(), n);
    if (n > table.factor_limit()) throw range_error("is_prime: n beyond trial-division range");
    for (std::uint64_t p : table.primes()) {
        if (p * p > n) break;
        if (n % p == 0) return false;
    }
    return true;
}

/// Smallest-prime-factor table for bulk factorization of 1..limit.
class SmallestFactorTable {
public:
    explicit SmallestFactorTable(std::uint32_t limit) : spf_(static_cast<std::size_t>(limit) + 1, 0) {
        for (std::uint64_t i = 2; i <= limit; ++i) {
            if (spf_[i] != 0) continue;
            spf_[i] = static_cast<std::uint32_t>(i);
            for (std::uint64_t j = i * i; j <= limit; j += i)
                if (spf_[j] == 0) spf_[j] = static_cast<std::uint32_t>(i);
        }
    }

    [[nodiscard]] std::uint32_t limit() const { return static_cast<std::uint32_t>(spf_.size() - 1); }

    [[nodiscard]] Factorization factorize(std::uint32_t n) const {
        if (n == 0 || n > limit()) throw range_error("SmallestFactorTable: n out of range");
        Factorization f;
        while (n > 1) {
            const std::uint32_t p = spf_[n];
            unsigned k = 0;
            while (n % p == 0) {
                n /= p;
                ++k;
            }
            f.emplace_back(p, k);
        }
        return f;
    }

private:
    std::vector<std::uint32_t> spf_;
};

} // namespace quadcorr
