#pragma once

#include <cstdint>
#include <vector>

#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/rational.hpp"

namespace quadcorr {

/// Largest modulus p^k the residue-ring enumerations will touch.
inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

/// Value set of x^2 + d y^2 in Z/p^kZ, found by direct search.
///
/// Representability is invariant under multiplication by squares of units, so
/// each residue a = p^j u is reduced to the key (j, class of u modulo unit
/// squares) and the exhaustive search over y (is a - d y^2 a square?) runs once
/// per key. The key is the Legendre class of u for odd p and u mod 8 (or mod
/// 2^(k-j) when smaller) for p = 2.
class ResidueRing {
public:
    ResidueRing(form_id d, std::uint64_t p, unsigned k) : d_(d), p_(p), k_(k) {
        if (p < 2 || k == 0) throw invalid_argument("ResidueRing: need prime p and k >= 1");
        std::uint64_t m = 1;
        for (unsigned i = 0; i < k; ++i) {
            m *= p;
            if (m > kEnumerationBudget)
                throw budget_exceeded("ResidueRing: p^k exceeds enumeration budget of 1e7");
        }
        modulus_ = m;
        build();
    }

    [[nodiscard]] form_id form() const { return d_; }
    [[nodiscard]] std::uint64_t prime() const { return p_; }
    [[nodiscard]] unsigned level() const { return k_; }
    [[nodiscard]] std::uint64_t modulus() const { return modulus_; }

    [[nodiscard]] bool representable(std::uint64_t a) const { return mask_[a % modulus_] != 0; }
    [[nodiscard]] std::uint64_t representable_count() const { return count_; }

    /// #{a : a representable} / p^k.
    [[nodiscard]] RationalDensity density() const {
        return {static_cast<std::int64_t>(count_), static_cast<std::int64_t>(modulus_)};
    }

    /// #{a : a and a + h representable} / p^k.
    [[nodiscard]] RationalDensity pair_density(std::uint64_t h) const {
        if (h == 0) throw invalid_argument("pair_density: h must be positive");
        const std::uint64_t shift = h % modulus_;
        std::uint64_t hits = 0;
        for (std::uint64_t a = 0; a < modulus_; ++a) {
            std::uint64_t b = a + shift;
            if (b >= modulus_) b -= modulus_;
            hits += static_cast<std::uint64_t>(mask_[a] & mask_[b]);
        }
        return {static_cast<std::int64_t>(hits), static_cast<std::int64_t>(modulus_)};
    }

private:
    static std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
        return static_cast<std::uint64_t>(static_cast<detail::uint128>(a) * b % m);
    }

    [[nodiscard]] unsigned unit_class(std::uint64_t u, unsigned r) const {
        if (p_ == 2) {
            const std::uint64_t mod = r >= 3 ? 8 : (std::uint64_t{1} << r);
            return static_cast<unsigned>(u % mod);
        }
        // Euler's criterion mod p
        std::uint64_t base = u % p_, e = (p_ - 1) / 2, acc = 1;
        while (e > 0) {
            if (e & 1) acc = mulmod(acc, base, p_);
            base = mulmod(base, base, p_);
            e >>= 1;
        }
        return acc == 1 ? 1U : 0U;
    }

    void build() {
        const std::uint64_t m = modulus_;
        std::vector<char> is_square(m, 0);
        for (std::uint64_t x = 0; x < m; ++x) is_square[mulmod(x, x, m)] = 1;

        std::vector<char> seen(m, 0);
        std::vector<std::uint64_t> d_squares;
        const std::uint64_t dm = value(d_) % m;
        for (std::uint64_t y = 0; y < m; ++y) {
            const std::uint64_t t = mulmod(dm, mulmod(y, y, m), m);
            if (!seen[t]) {
                seen[t] = 1;
                d_squares.push_back(t);
            }
        }

        auto search = [&](std::uint64_t a) {
            for (std::uint64_t t : d_squares) {
                const std::uint64_t r = a >= t ? a - t : a + m - t;
                if (is_square[r]) return true;
            }
            return false;
        };

        // cache[j * 8 + class]: 0 unknown, 1 representable, 2 not
        std::vector<char> cache(static_cast<std::size_t>(k_) * 8, 0);
        mask_.assign(m, 0);
        mask_[0] = 1;
        count_ = 1;
        for (std::uint64_t a = 1; a < m; ++a) {
            unsigned j = 0;
            std::uint64_t u = a;
            while (u % p_ == 0) {
                u /= p_;
                ++j;
            }
            const std::size_t key = static_cast<std::size_t>(j) * 8 + unit_class(u, k_ - j);
            if (cache[key] == 0) cache[key] = search(a) ? 1 : 2;
            if (cache[key] == 1) {
                mask_[a] = 1;
                ++count_;
            }
        }
    }

    form_id d_;
    std::uint64_t p_;
    unsigned k_;
    std::uint64_t modulus_ = 1;
    std::uint64_t count_ = 0;
    std::vector<char> mask_;
};

/// Exact count of representable residues mod p^k divided by p^k.
inline RationalDensity enumerate_residue_density(form_id d, std::uint64_t p, unsigned k) {
    return ResidueRing(d, p, k).density();
}

/// Exact density of pairs (a, a + h) both representable mod p^k.
inline RationalDensity enumerate_pair_density(form_id d, std::uint64_t p, unsigned k, std::uint64_t h) {
    return ResidueRing(d, p, k).pair_density(h);
}

/// Limit extraction from levels k and k + 2.
///
/// Once k is past the multiplicity of h, the level-k density is
/// L + A p^-k + B (-p)^-k (the high-valuation residues repeat with period two
/// in the valuation), so levels k and k + 2 share the error coefficient and
/// (p^2 D_{k+2} - D_k) / (p^2 - 1) is exactly L.
inline Rational stabilized_limit(const Rational& at_k, const Rational& at_k_plus_2, std::uint64_t p) {
    const auto p2 = static_cast<std::int64_t>(p * p);
    return (Rational(p2) * at_k_plus_2 - at_k) / Rational(p2 - 1);
}

/// Result of driving the enumeration level up until the extracted limit repeats.
struct StabilizedDensity {
    RationalDensity limit;
    unsigned level; ///< first k whose extraction (k, k+2) matched that of (k+1, k+3)
};

/// Single-element limit density: raise k until the limits extracted from
/// (k, k+2) and (k+1, k+3) coincide.
inline StabilizedDensity converged_residue_density(form_id d, std::uint64_t p) {
    std::vector<Rational> levels;
    for (unsigned k = 1;; ++k) {
        std::uint64_t m = 1;
        for (unsigned i = 0; i < k; ++i) m *= p;
        if (m > kEnumerationBudget) throw budget_exceeded("converged_residue_density: no stabilization within budget");
        levels.push_back(enumerate_residue_density(d, p, k));
        if (levels.size() >= 4) {
            const std::size_t i = levels.size() - 4;
            const Rational a = stabilized_limit(levels[i], levels[i + 2], p);
            const Rational b = stabilized_limit(levels[i + 1], levels[i + 3], p);
            if (a == b) return {a, static_cast<unsigned>(i + 1)};
        }
    }
}

/// Pair limit density extracted from levels k and k + 2.
inline RationalDensity stabilized_pair_density(form_id d, std::uint64_t p, unsigned k, std::uint64_t h) {
    return stabilized_limit(enumerate_pair_density(d, p, k, h), enumerate_pair_density(d, p, k + 2, h), p);
}

} // namespace quadcorr
