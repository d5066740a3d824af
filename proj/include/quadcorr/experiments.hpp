#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/forms.hpp"
#include "quadcorr/localdens.hpp"
#include "quadcorr/primes.hpp"
#include "quadcorr/sieve.hpp"

namespace quadcorr {

namespace detail {

inline bool in_q(form_id d, std::uint64_t p) { return !is_special_prime(d, p) && in_q_by_congruence(d, p); }

inline std::span<const std::uint64_t> primes_through(std::span<const std::uint64_t> primes, std::uint64_t n) {
    const auto end = std::upper_bound(primes.begin(), primes.end(), n);
    return primes.subspan(0, static_cast<std::size_t>(end - primes.begin()));
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

} // namespace detail

/// M_d(n) = prod_{R_d} w_d(p) prod_{p in Q_d, p <= n} (1 + 1/p)^-1, over the given primes.
/// `primes` must contain every prime up to n.
inline double mertens_product(form_id d, std::uint64_t n, std::span<const std::uint64_t> primes) {
    if (n < 2) throw invalid_argument("mertens_product: n must be >= 2");
    CompensatedSum log_sum;
    for (std::uint64_t p : detail::primes_through(primes, n))
        if (detail::in_q(d, p)) log_sum.add(-std::log1p(1 / static_cast<double>(p)));
    double special = 1;
    for (std::uint64_t p : special_primes(d)) special *= descriptor(d).w(p).to_double();
    return special * std::exp(log_sum.value());
}

inline double mertens_product(form_id d, std::uint64_t n) {
    if (n < 2) throw invalid_argument("mertens_product: n must be >= 2");
    return mertens_product(d, n, primes_up_to(n));
}

/// beta_d with the Euler product cut at the primes up to n:
/// beta_d(n)^2 = c_d prod_{R_d} w_d(p)^2 prod_{p in Q_d, p <= n} (1 - p^-2)^-1.
inline double truncated_landau_beta(form_id d, std::uint64_t n, std::span<const std::uint64_t> primes) {
    if (n < 2) throw invalid_argument("truncated_landau_beta: n must be >= 2");
    const FormDescriptor& f = descriptor(d);
    CompensatedSum log_sum;
    for (std::uint64_t p : detail::primes_through(primes, n)) {
        if (!detail::in_q(d, p)) continue;
        const double x = 1 / static_cast<double>(p);
        log_sum.add(-std::log1p(-x * x));
    }
    double sq = f.c_constant * std::exp(log_sum.value());
    for (const auto& [p, w] : f.special_density) sq *= w.to_double() * w.to_double();
    return std::sqrt(sq);
}

struct RatioReport {
    form_id d;
    std::uint64_t n;
    double mertens_product;
    double landau_density; ///< beta_d / sqrt(log n)
    double ratio_y;        ///< mertens_product / landau_density
    std::uint64_t beta_truncation;
};

inline RatioReport density_ratio(form_id d, std::uint64_t n, std::span<const std::uint64_t> primes) {
    if (n < 1000) throw invalid_argument("density_ratio: n must be >= 1000");
    const FormDescriptor& f = descriptor(d);
    const double m = mertens_product(d, n, primes);
    const double l = f.landau_beta.value / std::sqrt(std::log(static_cast<double>(n)));
    return {d, n, m, l, m / l, f.landau_beta.truncation};
}

inline RatioReport density_ratio(form_id d, std::uint64_t n) {
    if (n < 1000) throw invalid_argument("density_ratio: n must be >= 1000");
    return density_ratio(d, n, primes_up_to(n));
}

/// Cached log of prod_{p in Q_d, p <= n} (1 - 1/p) / (1 + 1/p), the h-independent part of M2(n, h).
class MertensPairBase {
public:
    MertensPairBase(form_id d, std::uint64_t n, std::span<const std::uint64_t> primes) : d_(d), n_(n) {
        if (n < 2) throw invalid_argument("mertens_pair_product: n must be >= 2");
        CompensatedSum s;
        for (std::uint64_t p : detail::primes_through(primes, n)) {
            if (!detail::in_q(d, p)) continue;
            const double x = 1 / static_cast<double>(p);
            s.add(std::log1p(-x) - std::log1p(x));
        }
        log_base_ = s.value();
    }

    /// M2(n, h) = prod_{R_d} W_{d,p}(h) prod_{p in Q_d, p <= n} (1 - p^-(m_p(h)+1)) / (1 + 1/p).
    [[nodiscard]] double operator()(std::uint64_t h) const {
        if (h == 0) throw invalid_argument("mertens_pair_product: h must be positive");
        double special = 1;
        for (std::uint64_t p : special_primes(d_)) special *= special_pair_density(d_, p, multiplicity(p, h)).to_double();
        if (special == 0) return 0;
        double log_adjust = 0;
        for (auto [p, m] : factorize(h)) {
            if (p > n_ || !detail::in_q(d_, p)) continue;
            const double x = 1 / static_cast<double>(p);
            log_adjust += std::log1p(-std::pow(x, static_cast<double>(m + 1))) - std::log1p(-x);
        }
        return special * std::exp(log_base_ + log_adjust);
    }

    [[nodiscard]] form_id form() const { return d_; }
    [[nodiscard]] std::uint64_t n() const { return n_; }

private:
    form_id d_;
    std::uint64_t n_;
    double log_base_ = 0;
};

inline double mertens_pair_product(form_id d, std::uint64_t n, std::uint64_t h, std::span<const std::uint64_t> primes) {
    return MertensPairBase(d, n, primes)(h);
}

inline double mertens_pair_product(form_id d, std::uint64_t n, std::uint64_t h) {
    if (n < 2) throw invalid_argument("mertens_pair_product: n must be >= 2");
    return mertens_pair_product(d, n, h, primes_up_to(n));
}

struct PairCorrelationRecord {
    form_id d;
    std::uint64_t h;
    std::uint64_t n;
    std::uint64_t pair_count;    ///< B_h(d, n)
    double singular_series;      ///< T_{d,h}
    double mertens_pair_product; ///< M2(n, h)
    double ratio_Y;              ///< M2(n, h) / (B_h / n); NaN when B_h = 0
    double normalized_ratio;     ///< log n (B_h / n) / T_{d,h}; NaN when T_{d,h} = 0
    double normalized_ratio_limit_y; ///< y^2 / ratio_Y with the limiting y
};

/// Rows h = 1..h_max of the pair-correlation statistic at n. The bitmap must cover [1, n + h_max].
inline std::vector<PairCorrelationRecord> pair_ratio_table(const SieveBitmap& bitmap, std::uint64_t n, std::uint64_t h_max,
                                                           std::span<const std::uint64_t> primes) {
    if (h_max == 0) throw invalid_argument("pair_ratio_table: h_max must be positive");
    if (n < 3) throw invalid_argument("pair_ratio_table: n must be >= 3");
    if (bitmap.start() != 1 || bitmap.last() < n + h_max)
        throw range_error("pair_ratio_table: no bitmap for [1, " + std::to_string(n + h_max) + "]");
    const form_id d = bitmap.form();
    const MertensPairBase m2(d, n, primes);
    const double log_n = std::log(static_cast<double>(n));
    const double y = universal_ratio_y();
    std::vector<PairCorrelationRecord> rows;
    rows.reserve(h_max);
    for (std::uint64_t h = 1; h <= h_max; ++h) {
        PairCorrelationRecord r{d, h, n, pair_count(bitmap, h, n), singular_series(d, h).value, m2(h), 0, 0, 0};
        const double freq = static_cast<double>(r.pair_count) / static_cast<double>(n);
        r.ratio_Y = r.pair_count > 0 ? r.mertens_pair_product / freq : detail::nan();
        r.normalized_ratio = r.singular_series > 0 ? log_n * freq / r.singular_series : detail::nan();
        r.normalized_ratio_limit_y = r.pair_count > 0 ? y * y / r.ratio_Y : detail::nan();
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<PairCorrelationRecord> pair_ratio_table(const SieveBitmap& bitmap, std::uint64_t n, std::uint64_t h_max) {
    return pair_ratio_table(bitmap, n, h_max, primes_up_to(n));
}

struct LandauPoint {
    std::uint64_t n;
    std::uint64_t count;       ///< B(d, n)
    double beta_n_squared;     ///< (B(d, n) / (beta_d n / sqrt(log n)))^2
};

inline std::vector<LandauPoint> landau_convergence(const SieveBitmap& bitmap, std::span<const std::uint64_t> n_grid) {
    const double beta = descriptor(bitmap.form()).landau_beta.value;
    std::vector<LandauPoint> out;
    for (std::uint64_t n : n_grid) {
        if (n < 2) throw invalid_argument("landau_convergence: grid points must be >= 2");
        const std::uint64_t b = count_representable(bitmap, n);
        const double nd = static_cast<double>(n);
        const double r = static_cast<double>(b) / (beta * nd / std::sqrt(std::log(nd)));
        out.push_back({n, b, r * r});
    }
    return out;
}

struct TheoremOneReport {
    form_id d;
    std::vector<std::uint64_t> H_grid;
    std::vector<double> partial_sums;    ///< 2 sum_{h<H} (H - h) T_{d,h}
    std::vector<double> targets;         ///< beta_d^2 H^2
    std::vector<double> relative_errors; ///< |S(H) / H^2 - beta_d^2| / beta_d^2
    double fitted_slope;                 ///< least-squares slope of log|S(H) - beta_d^2 H^2| against log H
};

inline TheoremOneReport verify_theorem_one(form_id d, std::span<const std::uint64_t> H_grid) {
    if (H_grid.empty()) throw invalid_argument("verify_theorem_one: empty H grid");
    for (std::size_t i = 0; i < H_grid.size(); ++i) {
        if (H_grid[i] < 100 || H_grid[i] > 1'000'000) throw invalid_argument("verify_theorem_one: H must lie in [1e2, 1e6]");
        if (i > 0 && H_grid[i] <= H_grid[i - 1]) throw invalid_argument("verify_theorem_one: H grid must be strictly increasing");
    }
    const SingularSeriesTable table(d, static_cast<std::uint32_t>(H_grid.back() - 1));
    const double beta2 = descriptor(d).landau_beta.value * descriptor(d).landau_beta.value;

    TheoremOneReport r{d, {H_grid.begin(), H_grid.end()}, {}, {}, {}, detail::nan()};
    std::vector<double> xs, ys;
    for (std::uint64_t H : H_grid) {
        const double s = weighted_partial_sum(table, static_cast<std::uint32_t>(H));
        const double H2 = static_cast<double>(H) * static_cast<double>(H);
        r.partial_sums.push_back(s);
        r.targets.push_back(beta2 * H2);
        r.relative_errors.push_back(std::abs(s / H2 - beta2) / beta2);
        const double gap = std::abs(s - beta2 * H2);
        if (gap > 0) {
            xs.push_back(std::log(static_cast<double>(H)));
            ys.push_back(std::log(gap));
        }
    }
    if (xs.size() >= 2) {
        const double n = static_cast<double>(xs.size());
        double sx = 0, sy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sx += xs[i], sy += ys[i];
        const double mx = sx / n, my = sy / n;
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        r.fitted_slope = sxy / sxx;
    }
    return r;
}

struct PoissonMomentReport {
    IntervalHistogram histogram;
    double first_moment;
    double second_moment;
    double poisson_first;  ///< lambda
    double poisson_second; ///< lambda + lambda^2
    double gap_first;      ///< |first - lambda| / lambda
    double gap_second;     ///< |second - (lambda + lambda^2)| / (lambda + lambda^2)
    double predicted_first;  ///< alpha beta_d / sqrt(log n)
    double predicted_second; ///< 2 sum_{h<alpha} (alpha - h) T_{d,h} / log n + predicted_first
    double gap_predicted_first;
    double gap_predicted_second;
    WindowMomentExpansion expansion; ///< the same sums rebuilt from pair counts
};

/// Needs the bitmap over [1, n + alpha - 1].
inline PoissonMomentReport poisson_moment_check(const SieveBitmap& bitmap, std::uint64_t n, double lambda) {
    const form_id d = bitmap.form();
    IntervalHistogram hist = interval_histogram(bitmap, n, lambda, 2);
    const std::uint64_t alpha = hist.alpha;
    const double log_n = std::log(static_cast<double>(n));
    const double first = hist.moments[0], second = hist.moments[1];
    const double pf = lambda, ps = lambda + lambda * lambda;

    const double pred_first = static_cast<double>(alpha) * descriptor(d).landau_beta.value / std::sqrt(log_n);
    CompensatedSum pairs;
    for (std::uint64_t h = 1; h < alpha; ++h) pairs.add(2.0 * static_cast<double>(alpha - h) * singular_series(d, h).value);
    const double pred_second = pairs.value() / log_n + pred_first;

    return {std::move(hist),
            first,
            second,
            pf,
            ps,
            std::abs(first - pf) / pf,
            std::abs(second - ps) / ps,
            pred_first,
            pred_second,
            std::abs(first - pred_first) / pred_first,
            std::abs(second - pred_second) / pred_second,
            window_moment_expansion(bitmap, n, alpha)};
}

/// triplet_count(n) / (n / log^{3/2} n).
inline double triplet_ratio(const SieveBitmap& bitmap, std::uint64_t n) {
    if (n < 3) throw invalid_argument("triplet_ratio: n must be >= 3");
    const double nd = static_cast<double>(n);
    return static_cast<double>(triplet_count(bitmap, n)) / (nd / std::pow(std::log(nd), 1.5));
}

} // namespace quadcorr
