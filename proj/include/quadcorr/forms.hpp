#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/primes.hpp"
#include "quadcorr/rational.hpp"
#include "quadcorr/residue_ring.hpp"

namespace quadcorr {

/// P: transparent primes, Q: even-multiplicity primes, R: the finite special set.
enum class PrimeClass { P, Q, R };

inline const char* to_string(PrimeClass c) {
    switch (c) {
    case PrimeClass::P: return "P";
    case PrimeClass::Q: return "Q";
    case PrimeClass::R: return "R";
    }
    return "?";
}

namespace detail {

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    b %= m;
    while (e > 0) {
        if (e & 1) r = static_cast<std::uint64_t>(static_cast<detail::uint128>(r) * b % m);
        b = static_cast<std::uint64_t>(static_cast<detail::uint128>(b) * b % m);
        e >>= 1;
    }
    return r;
}

/// Legendre symbol (-d / p) for an odd prime p not dividing d.
inline int legendre_minus_d(unsigned d, std::uint64_t p) {
    const std::uint64_t a = (p - d % p) % p;
    return powmod(a, (p - 1) / 2, p) == 1 ? 1 : -1;
}

/// Class of a prime known to be prime; no primality check.
inline PrimeClass classify_unchecked(form_id d, std::uint64_t p) {
    if (is_special_prime(d, p)) return PrimeClass::R;
    if (p == 2) return PrimeClass::Q; // only reachable for d = 3
    return legendre_minus_d(value(d), p) == 1 ? PrimeClass::P : PrimeClass::Q;
}

} // namespace detail

/// Classifies p into P_d, Q_d or R_d.
inline PrimeClass classify_prime(form_id d, std::uint64_t p) {
    if (!is_prime(p)) throw invalid_argument("classify_prime: " + std::to_string(p) + " is not prime");
    return detail::classify_unchecked(d, p);
}

/// True iff n = x^2 + d y^2 has a solution; decided from the factorization of n.
inline bool is_representable(form_id d, std::uint64_t n) {
    if (n == 0) throw invalid_argument("is_representable: n must be positive");
    for (auto [p, k] : factorize(n)) {
        if (is_special_prime(d, p)) {
            if (!special_rule_admits(d, p, k)) return false;
        } else if (k % 2 == 1 && in_q_by_congruence(d, p)) {
            return false;
        }
    }
    return true;
}

/// y = (1/2) sqrt(pi / e^gamma), the limit of the Mertens-to-Landau density ratio.
inline double universal_ratio_y() {
    return 0.5 * std::sqrt(std::numbers::pi / std::exp(std::numbers::egamma));
}

/// Truncated Euler-product estimate with a certified error bound.
struct BetaEstimate {
    double value = 0;
    double error_bound = 0;
    std::uint64_t truncation = 0;
};

/// Bound on sum_{p > P} p^-2. Uses pi(t) < 1.25506 t / ln t, giving 2.51012 / (P ln P).
inline double prime_square_tail(std::uint64_t truncation) {
    const auto P = static_cast<double>(truncation);
    return 2.51012 / (P * std::log(P));
}

/// sum over p in Q_d \ {2}, p <= P, of -log(1 - p^-2). Log space keeps 1e8 terms accurate.
inline double log_g_squared(form_id d, std::span<const std::uint64_t> primes) {
    double acc = 0;
    for (std::uint64_t p : primes) {
        if (p == 2 || is_special_prime(d, p) || !in_q_by_congruence(d, p)) continue;
        const double x = 1.0 / static_cast<double>(p);
        acc -= std::log1p(-x * x);
    }
    return acc;
}

inline double delta_value(form_id d) {
    switch (d) {
    case form_id::d3: return 2.0 / 3.0;
    case form_id::d4:
    case form_id::d7: return 0.75;
    default: return 1.0;
    }
}

/// L_d(1) from the class-number formula.
inline double l_function_at_one(form_id d) {
    constexpr double pi = std::numbers::pi;
    switch (d) {
    case form_id::d1:
    case form_id::d4: return pi / 4;
    case form_id::d2: return pi / (2 * std::numbers::sqrt2);
    case form_id::d3: return pi / (2 * std::numbers::sqrt3);
    case form_id::d7: return pi / (2 * std::sqrt(7.0));
    }
    return 0;
}

/// phi(2|d|)
inline unsigned totient_of_2d(form_id d) {
    switch (d) {
    case form_id::d1: return 1;
    case form_id::d2: return 2;
    case form_id::d3: return 2;
    case form_id::d4: return 4;
    case form_id::d7: return 6;
    }
    return 0;
}

/// L_d(1) 2|d| / (pi phi(2|d|)), the analytic factor shared by beta_d^2 and c_d.
inline double analytic_factor(form_id d) {
    return l_function_at_one(d) * 2.0 * value(d) / (std::numbers::pi * totient_of_2d(d));
}

/// beta_d = delta_d g_d sqrt(L_d(1) 2|d| / (pi phi(2|d|))), with g_d truncated at P.
inline BetaEstimate landau_beta(form_id d, const PrimeTable& table, std::uint64_t truncation, double precision_target) {
    if (truncation < 100'000) throw invalid_argument("landau_beta: truncation bound must be >= 1e5");
    const double log_g2 = log_g_squared(d, table.up_to(truncation));
    const double beta = delta_value(d) * std::sqrt(std::exp(log_g2) * analytic_factor(d));
    const double tail = prime_square_tail(truncation);
    // g_d^2 grows by at most exp(tail / (1 - P^-2)) past P; beta by the square root of that.
    const double P = static_cast<double>(truncation);
    const double bound = beta * std::expm1(0.5 * tail / (1 - 1 / (P * P))) + 64 * beta * 1e-16;
    if (bound > precision_target)
        throw precision_error("landau_beta: achieved bound " + std::to_string(bound) + " exceeds target", bound);
    return {beta, bound, truncation};
}

inline BetaEstimate landau_beta(form_id d, std::uint64_t truncation, double precision_target) {
    if (truncation < 100'000) throw invalid_argument("landau_beta: truncation bound must be >= 1e5");
    return landau_beta(d, PrimeTable(truncation), truncation, precision_target);
}

/// Everything attached to one form.
struct FormDescriptor {
    form_id d;
    unsigned modulus_N;
    std::vector<unsigned> residue_classes; ///< p = x^2 + d y^2 iff p mod N is one of these (p outside R_d)
    std::vector<std::uint64_t> special_primes;
    std::map<std::uint64_t, RationalDensity> special_density; ///< w_d(p) for p in R_d
    Rational delta;
    double gamma_corr;
    double lambda_corr;
    Rational s_corr;
    Rational cap_S_corr;
    double L1_closed_form;
    BetaEstimate landau_beta;
    double c_constant;

    [[nodiscard]] RationalDensity w(std::uint64_t p) const { return special_density.at(p); }
};

/// Truncation used for the stored beta_d.
inline constexpr std::uint64_t kDescriptorTruncation = 10'000'000;

inline const PrimeTable& descriptor_prime_table() {
    static const PrimeTable table(kDescriptorTruncation);
    return table;
}

/// c_d closed forms: 2, 2 sqrt 2, 2/sqrt 3, 2, 2 sqrt 7 / 3.
inline double c_constant_closed_form(form_id d) {
    switch (d) {
    case form_id::d1:
    case form_id::d4: return 2.0;
    case form_id::d2: return 2 * std::numbers::sqrt2;
    case form_id::d3: return 2 / std::numbers::sqrt3;
    case form_id::d7: return 2 * std::sqrt(7.0) / 3;
    }
    return 0;
}

namespace detail {

inline FormDescriptor make_descriptor(form_id d) {
    FormDescriptor f{};
    f.d = d;
    switch (d) {
    case form_id::d1: f.modulus_N = 4; f.residue_classes = {1}; break;
    case form_id::d2: f.modulus_N = 8; f.residue_classes = {1, 3}; break;
    case form_id::d3: f.modulus_N = 3; f.residue_classes = {1}; break;
    case form_id::d4: f.modulus_N = 4; f.residue_classes = {1}; break;
    case form_id::d7: f.modulus_N = 7; f.residue_classes = {1, 2, 4}; break;
    }
    const auto sp = quadcorr::special_primes(d);
    f.special_primes.assign(sp.begin(), sp.end());
    for (std::uint64_t p : f.special_primes) f.special_density.emplace(p, converged_residue_density(d, p).limit);

    const bool three = d == form_id::d3;
    f.delta = three ? Rational(2, 3) : (d == form_id::d4 || d == form_id::d7) ? Rational(3, 4) : Rational(1);
    f.gamma_corr = three ? std::numbers::sqrt3 / 2 : 1.0;
    f.lambda_corr = three ? std::sqrt(1.5) : 1.0;
    f.s_corr = three ? Rational(2, 3) : Rational(1);
    f.cap_S_corr = three ? Rational(3, 4) : Rational(1);
    f.L1_closed_form = l_function_at_one(d);
    f.landau_beta = landau_beta(d, descriptor_prime_table(), kDescriptorTruncation, 1e-6);
    f.c_constant = c_constant_closed_form(d);
    return f;
}

} // namespace detail

/// Shared immutable descriptor; built once on first use.
inline const FormDescriptor& descriptor(form_id d) {
    static const std::array<FormDescriptor, 5> table = [] {
        std::array<FormDescriptor, 5> t{};
        for (std::size_t i = 0; i < all_forms.size(); ++i) t[i] = detail::make_descriptor(all_forms[i]);
        return t;
    }();
    for (std::size_t i = 0; i < all_forms.size(); ++i)
        if (all_forms[i] == d) return table[i];
    throw unsupported_form(value(d));
}

/// c_d rebuilt from its ingredients: delta^2 L_d(1) 2|d| / (pi phi(2|d|)) prod w_d(p)^-2 S_d.
inline double recompute_c_constant(const FormDescriptor& f) {
    double c = f.delta.to_double() * f.delta.to_double() * analytic_factor(f.d);
    for (const auto& [p, w] : f.special_density) c /= w.to_double() * w.to_double();
    return c * f.cap_S_corr.to_double();
}

} // namespace quadcorr
