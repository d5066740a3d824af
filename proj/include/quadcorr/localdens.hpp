#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "quadcorr/error.hpp"
#include "quadcorr/forms.hpp"
#include "quadcorr/primes.hpp"
#include "quadcorr/rational.hpp"

namespace quadcorr {

/// Limit density of representable elements of Z/p^kZ as k grows.
inline RationalDensity med_density(form_id d, std::uint64_t p) {
    switch (classify_prime(d, p)) {
    case PrimeClass::P: return {1};
    case PrimeClass::Q: return {static_cast<std::int64_t>(p), static_cast<std::int64_t>(p + 1)};
    case PrimeClass::R: return descriptor(d).w(p);
    }
    return {0};
}

/// (1 - p^-(m+1)) / (1 + p^-1), the pair density at a Q-prime.
inline RationalDensity q_pair_density(std::uint64_t p, unsigned m) {
    const std::int64_t pm = ipow(static_cast<std::int64_t>(p), m);
    return Rational(pm * static_cast<std::int64_t>(p) - 1) / (Rational(pm) * Rational(static_cast<std::int64_t>(p) + 1));
}

/// (1 - p^-(m+1)) / (1 - p^-1), the Q-prime factor of the singular series.
inline Rational q_series_factor(std::uint64_t p, unsigned m) {
    const std::int64_t pm = ipow(static_cast<std::int64_t>(p), m);
    return Rational(pm * static_cast<std::int64_t>(p) - 1) / (Rational(pm) * Rational(static_cast<std::int64_t>(p) - 1));
}

/// W_{d,p}(h) for p in R_d, as a function of m = m_p(h).
inline RationalDensity special_pair_density(form_id d, std::uint64_t p, unsigned m) {
    switch (d) {
    case form_id::d1:
        if (m == 0) return {1, 4};
        return {ipow(2, m + 1) - 3, ipow(2, m + 2)};
    case form_id::d2:
        if (m <= 1) return {1, 4};
        return {ipow(2, m) - 3, ipow(2, m + 1)};
    case form_id::d3:
        return {ipow(3, m + 1) - 2, 2 * ipow(3, m + 1)};
    case form_id::d4:
        switch (m) {
        case 0: return {1, 8};
        case 1: return {0};
        case 2: return {5, 16};
        default: return {3 * ipow(2, m - 1) - 3, ipow(2, m + 2)};
        }
    case form_id::d7:
        if (p == 2) return m <= 1 ? Rational(1, 2) : Rational(3, 4);
        return {ipow(7, m + 1) - 4, 2 * ipow(7, m + 1)};
    }
    throw unsupported_form(value(d));
}

/// Limit density of pairs (a, a + h) both representable in Z/p^kZ.
inline RationalDensity pair_density_local(form_id d, std::uint64_t p, std::uint64_t h) {
    if (h == 0) throw invalid_argument("pair_density_local: h must be positive");
    const unsigned m = multiplicity(p, h);
    switch (classify_prime(d, p)) {
    case PrimeClass::P: return {1};
    case PrimeClass::Q: return q_pair_density(p, m);
    case PrimeClass::R: return special_pair_density(d, p, m);
    }
    return {0};
}

/// T_{d,h} with the exact local factors it was assembled from.
struct SingularSeriesValue {
    form_id d;
    std::uint64_t h;
    double value;
    std::vector<std::pair<std::uint64_t, Rational>> local_factors; ///< R_d tables, then Q_d primes dividing h
};

inline constexpr std::uint64_t kMaxSingularSeriesH = 1'000'000'000'000;

/// T_{d,h} = c_d prod_{p in R_d} W_{d,p}(h) prod_{p in Q_d, p | h} (1 - p^-(m+1)) / (1 - p^-1).
inline SingularSeriesValue singular_series(form_id d, std::uint64_t h) {
    if (h == 0) throw invalid_argument("singular_series: h must be positive");
    if (h > kMaxSingularSeriesH) throw range_error("singular_series: h capped at 1e12");
    SingularSeriesValue out{d, h, 0.0, {}};
    double v = descriptor(d).c_constant;
    for (std::uint64_t p : special_primes(d)) {
        const Rational w = special_pair_density(d, p, multiplicity(p, h));
        out.local_factors.emplace_back(p, w);
        v *= w.to_double();
    }
    for (auto [p, m] : factorize(h)) {
        if (is_special_prime(d, p) || !in_q_by_congruence(d, p)) continue;
        const Rational f = q_series_factor(p, m);
        out.local_factors.emplace_back(p, f);
        v *= f.to_double();
    }
    out.value = v;
    return out;
}

/// a_d(h) = T_{d,h} / T_{d,1} as an exact rational.
inline Rational normalized_coefficient_exact(form_id d, std::uint64_t h) {
    if (h == 0) throw invalid_argument("normalized_coefficient: h must be positive");
    Rational a{1};
    for (std::uint64_t p : special_primes(d))
        a *= special_pair_density(d, p, multiplicity(p, h)) / special_pair_density(d, p, 0);
    for (auto [p, m] : factorize(h))
        if (!is_special_prime(d, p) && in_q_by_congruence(d, p)) a *= q_series_factor(p, m);
    return a;
}

/// a_d(h) = T_{d,h} / T_{d,1}; multiplicative in h.
inline double normalized_coefficient(form_id d, std::uint64_t h) {
    if (h == 0) throw invalid_argument("normalized_coefficient: h must be positive");
    double a = 1;
    for (std::uint64_t p : special_primes(d))
        a *= special_pair_density(d, p, multiplicity(p, h)).to_double() / special_pair_density(d, p, 0).to_double();
    for (auto [p, m] : factorize(h))
        if (!is_special_prime(d, p) && in_q_by_congruence(d, p))
            a *= (1 - std::pow(static_cast<double>(p), -static_cast<double>(m + 1))) / (1 - 1 / static_cast<double>(p));
    return a;
}

/// T_{d,h} for h = 1..H via a smallest-factor table.
class SingularSeriesTable {
public:
    SingularSeriesTable(form_id d, std::uint32_t H) : d_(d), values_(static_cast<std::size_t>(H) + 1, 0.0) {
        if (H == 0) throw invalid_argument("SingularSeriesTable: H must be positive");
        const SmallestFactorTable spf(H);
        const double c = descriptor(d).c_constant;
        const auto special = special_primes(d);
        for (std::uint32_t h = 1; h <= H; ++h) {
            double v = c;
            unsigned m_special[2] = {0, 0};
            for (auto [p, m] : spf.factorize(h)) {
                if (is_special_prime(d, p)) {
                    m_special[p == special[0] ? 0 : 1] = m;
                } else if (in_q_by_congruence(d, p)) {
                    v *= (1 - std::pow(static_cast<double>(p), -static_cast<double>(m + 1))) /
                         (1 - 1 / static_cast<double>(p));
                }
            }
            for (std::size_t i = 0; i < special.size(); ++i)
                v *= special_pair_density(d, special[i], m_special[i]).to_double();
            values_[h] = v;
        }
    }

    [[nodiscard]] form_id form() const { return d_; }
    [[nodiscard]] std::uint32_t size() const { return static_cast<std::uint32_t>(values_.size() - 1); }
    [[nodiscard]] double operator[](std::uint32_t h) const { return values_.at(h); }

private:
    form_id d_;
    std::vector<double> values_;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0;
    double comp_ = 0;
};

/// 2 sum_{h=1}^{H-1} (H - h) T_{d,h}, from a precomputed table.
inline double weighted_partial_sum(const SingularSeriesTable& table, std::uint32_t H) {
    if (H < 2) throw invalid_argument("weighted_partial_sum: H must be >= 2");
    if (H - 1 > table.size()) throw range_error("weighted_partial_sum: table too short");
    CompensatedSum s;
    for (std::uint32_t h = 1; h < H; ++h) s.add(2.0 * static_cast<double>(H - h) * table[h]);
    return s.value();
}

inline double weighted_partial_sum(form_id d, std::uint32_t H) {
    if (H < 2) throw invalid_argument("weighted_partial_sum: H must be >= 2");
    return weighted_partial_sum(SingularSeriesTable(d, H - 1), H);
}

/// Largest multiplicity at which the special tables still fit in 64 bits;
/// past it the table value is constant to double precision.
inline unsigned special_table_cap(std::uint64_t p) { return p == 2 ? 60 : p == 3 ? 37 : 20; }

/// 1 + sum_k a_d(p^k) p^-ks for a special prime.
inline double special_euler_factor(form_id d, std::uint64_t p, double s) {
    const double base = special_pair_density(d, p, 0).to_double();
    const double ps = std::pow(static_cast<double>(p), -s);
    double acc = 1, power = 1;
    for (unsigned k = 1; k < 400; ++k) {
        power *= ps;
        const double term = special_pair_density(d, p, std::min(k, special_table_cap(p))).to_double() / base * power;
        acc += term;
        if (power < 1e-20) break;
    }
    return acc;
}

/// Local factor of D_d(s) = sum a_d(h) h^-s at the prime p.
inline double local_euler_factor(form_id d, std::uint64_t p, double s) {
    const auto pd = static_cast<double>(p);
    switch (detail::classify_unchecked(d, p)) {
    case PrimeClass::P: return 1 / (1 - std::pow(pd, -s));
    case PrimeClass::Q: {
        const double x = std::pow(pd, -s), y = std::pow(pd, -(s + 1));
        return 1 + x / ((1 - 1 / pd) * (1 - x)) - (1 / pd) / (1 - 1 / pd) * y / (1 - y);
    }
    case PrimeClass::R: return special_euler_factor(d, p, s);
    }
    return 1;
}

struct DirichletEvaluation {
    double direct;      ///< sum_{h <= cutoff} a_d(h) h^-s
    double euler;       ///< prod_{p <= cutoff} of the local factors
    double direct_tail; ///< estimate of the omitted sum_{h > cutoff}
    double euler_tail;  ///< bound on the omitted prime factors
};

/// Truncated direct sum and Euler product of D_d(s), for real s >= 1.5.
inline DirichletEvaluation dirichlet_series_eval(form_id d, double s, std::uint32_t cutoff) {
    if (s < 1.5) throw invalid_argument("dirichlet_series_eval: s must be >= 1.5");
    if (cutoff < 10'000) throw invalid_argument("dirichlet_series_eval: cutoff must be >= 1e4");
    const SingularSeriesTable table(d, cutoff);
    const double t1 = table[1];
    CompensatedSum direct;
    for (std::uint32_t h = 1; h <= cutoff; ++h) direct.add(table[h] / t1 * std::pow(static_cast<double>(h), -s));

    double log_euler = 0;
    for (std::uint64_t p : primes_up_to(cutoff)) log_euler += std::log(local_euler_factor(d, p, s));
    const double euler = std::exp(log_euler);

    // a_d(h) <= C tau(h) with C the largest special-prime ratio; tau averages log x + 2 gamma.
    double c_special = 1;
    for (std::uint64_t p : special_primes(d)) {
        double best = 0;
        for (unsigned m = 0; m <= special_table_cap(p); ++m)
            best = std::max(best, special_pair_density(d, p, m).to_double() / special_pair_density(d, p, 0).to_double());
        c_special *= best;
    }
    const double N = cutoff, sm1 = s - 1;
    const double direct_tail =
        2 * c_special * std::pow(N, -sm1) * (std::log(N) / sm1 + 1 / (sm1 * sm1) + 2 * std::numbers::egamma / sm1);
    const double prime_tail = 1.25506 * s * std::pow(N, -sm1) / (sm1 * std::log(N));
    const double euler_tail = euler * std::expm1(1.05 * prime_tail);
    return {direct.value(), euler, direct_tail, euler_tail};
}

/// A numerically evaluated constant with a certified bound.
struct ConstantEstimate {
    double value = 0;
    double error_bound = 0;
    std::uint64_t truncation = 0;
};

/// A_d(1) = prod_{R_d} (1 - p^-1)(1 + sum_k a_d(p^k) p^-k) prod_{Q_d} (1 - p^-2)^-1.
inline ConstantEstimate residue_at_one(form_id d, const PrimeTable& table, std::uint64_t truncation) {
    if (truncation < 100'000) throw invalid_argument("residue_at_one: truncation must be >= 1e5");
    double special = 1;
    for (std::uint64_t p : special_primes(d)) special *= (1 - 1 / static_cast<double>(p)) * special_euler_factor(d, p, 1.0);
    double log_q = 0;
    for (std::uint64_t p : table.up_to(truncation)) {
        if (is_special_prime(d, p) || !in_q_by_congruence(d, p)) continue;
        const double x = 1 / static_cast<double>(p);
        log_q -= std::log1p(-x * x);
    }
    const double v = special * std::exp(log_q);
    const double P = static_cast<double>(truncation);
    return {v, v * std::expm1(prime_square_tail(truncation) / (1 - 1 / (P * P))) + 64 * v * 1e-16, truncation};
}

inline ConstantEstimate residue_at_one(form_id d, std::uint64_t truncation) {
    if (truncation < 100'000) throw invalid_argument("residue_at_one: truncation must be >= 1e5");
    return residue_at_one(d, PrimeTable(truncation), truncation);
}

/// (1 / (8 beta)) prod_{p = 3 mod 4} (1 - 2/p) / (1 - 1/p)^2, the consecutive-triplet constant.
inline ConstantEstimate triplet_density_constant(const PrimeTable& table, std::uint64_t truncation) {
    if (truncation < 1'000'000) throw invalid_argument("triplet_density_constant: truncation must be >= 1e6");
    const BetaEstimate beta = landau_beta(form_id::d1, table, truncation, 1.0);
    double log_prod = 0;
    for (std::uint64_t p : table.up_to(truncation)) {
        if (p % 4 != 3) continue;
        const double x = 1 / static_cast<double>(p);
        log_prod += std::log1p(-2 * x) - 2 * std::log1p(-x);
    }
    const double v = std::exp(log_prod) / (8 * beta.value);
    // |log local factor| <= (1 + 3/p) p^-2 for p > 7
    const double tail = (1 + 3 / static_cast<double>(truncation)) * prime_square_tail(truncation);
    return {v, v * (std::expm1(tail) + beta.error_bound / beta.value) + 64 * v * 1e-16, truncation};
}

inline ConstantEstimate triplet_density_constant(std::uint64_t truncation) {
    if (truncation < 1'000'000) throw invalid_argument("triplet_density_constant: truncation must be >= 1e6");
    return triplet_density_constant(PrimeTable(truncation), truncation);
}

} // namespace quadcorr
