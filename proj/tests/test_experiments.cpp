#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "quadcorr/experiments.hpp"

using namespace quadcorr;

namespace {

const std::vector<std::uint64_t>& small_primes() {
    static const std::vector<std::uint64_t> p = oracle::primes(1'100'000);
    return p;
}

} // namespace

TEST(Mertens, Examples) {
    EXPECT_DOUBLE_EQ(mertens_product(form_id::d1, 2), 0.5);
    EXPECT_NEAR(mertens_product(form_id::d1, 3), 3.0 / 8, 1e-16);
    EXPECT_THROW(mertens_product(form_id::d1, 1), invalid_argument);
}

TEST(Mertens, MatchesDirectProduct) {
    for (auto d : all_forms) {
        long double prod = 1;
        for (std::uint64_t p : descriptor(d).special_primes) prod *= descriptor(d).w(p).to_double();
        for (std::uint64_t p : small_primes())
            if (p <= 1'000'000 && classify_prime(d, p) == PrimeClass::Q) prod /= 1 + 1.0L / p;
        EXPECT_NEAR(mertens_product(d, 1'000'000, small_primes()), static_cast<double>(prod), 1e-13) << value(d);
    }
}

TEST(DensityRatio, WithinTenPercentAtOneMillion) {
    const double y = universal_ratio_y();
    for (auto d : all_forms) {
        const RatioReport r = density_ratio(d, 1'000'000, small_primes());
        EXPECT_NEAR(r.ratio_y, y, 0.1 * y) << value(d);
        EXPECT_DOUBLE_EQ(r.ratio_y, r.mertens_product / r.landau_density);
        EXPECT_GT(r.mertens_product, 0);
        EXPECT_GT(r.landau_density, 0);
    }
    EXPECT_THROW(density_ratio(form_id::d1, 999), invalid_argument);
}

TEST(TruncatedBeta, ApproachesTheStoredConstant) {
    for (auto d : all_forms) {
        const double b = truncated_landau_beta(d, 10'000'000, descriptor_prime_table().primes());
        EXPECT_NEAR(b, descriptor(d).landau_beta.value, 1e-9) << value(d);
    }
}

TEST(MertensPair, Examples) {
    EXPECT_DOUBLE_EQ(mertens_pair_product(form_id::d1, 2, 1), 0.25);
    EXPECT_NEAR(mertens_pair_product(form_id::d1, 3, 3), 0.25 * 2.0 / 3, 1e-16);
    for (std::uint64_t n : {3ULL, 100ULL, 100'000ULL})
        for (std::uint64_t h : {2ULL, 6ULL, 10ULL, 30ULL}) EXPECT_EQ(mertens_pair_product(form_id::d4, n, h), 0.0);
}

TEST(MertensPair, MatchesProductOfLocalDensities) {
    for (auto d : all_forms)
        for (std::uint64_t h : {1ULL, 2ULL, 9ULL, 12ULL, 49ULL, 343ULL, 1000ULL}) {
            long double prod = 1;
            for (std::uint64_t p : small_primes()) {
                if (p > 20'000) break;
                prod *= pair_density_local(d, p, h).to_double();
            }
            EXPECT_NEAR(mertens_pair_product(d, 20'000, h, small_primes()), static_cast<double>(prod), 1e-13) << value(d) << ' ' << h;
        }
}

TEST(PairRatioTable, PlumbingAndDisplayIdentities) {
    const std::uint64_t n = 100'000;
    for (auto d : all_forms) {
        const SieveBitmap b = build_sieve(d, n + 30, 2);
        const auto rows = pair_ratio_table(b, n, 30, small_primes());
        ASSERT_EQ(rows.size(), 30U);
        const double log_n = std::log(static_cast<double>(n));
        const double y_n = mertens_product(d, n, small_primes()) * std::sqrt(log_n) / truncated_landau_beta(d, n, small_primes());
        for (const auto& r : rows) {
            EXPECT_EQ(r.pair_count, pair_count(b, r.h, n));
            if (r.pair_count == 0) {
                EXPECT_EQ(r.singular_series, 0.0);
                EXPECT_TRUE(std::isnan(r.ratio_Y));
                EXPECT_TRUE(std::isnan(r.normalized_ratio));
                continue;
            }
            EXPECT_GT(r.ratio_Y, 0);
            EXPECT_NEAR(r.ratio_Y * static_cast<double>(r.pair_count) / n, r.mertens_pair_product, 1e-13 * r.mertens_pair_product);
            EXPECT_NEAR(y_n * y_n / r.ratio_Y, r.normalized_ratio, 1e-9 * r.normalized_ratio);
            const double y = universal_ratio_y();
            EXPECT_NEAR(r.normalized_ratio_limit_y, y * y / r.ratio_Y, 1e-15);
        }
    }
}

TEST(PairRatioTable, D4ZeroRowsMatchTheSieve) {
    const SieveBitmap b = build_sieve(form_id::d4, 100'050, 1);
    for (const auto& r : pair_ratio_table(b, 100'000, 50, small_primes()))
        EXPECT_EQ(r.pair_count == 0, r.h % 4 == 2) << r.h;
}

TEST(PairRatioTable, MissingBitmapIsAnError) {
    const SieveBitmap b = build_sieve(form_id::d1, 1000, 1);
    EXPECT_THROW(pair_ratio_table(b, 1000, 5, small_primes()), range_error);
}

TEST(LandauConvergence, TinyAndModestRanges) {
    const SieveBitmap b = build_sieve(form_id::d1, 1'000'000);
    const std::vector<std::uint64_t> grid{100, 10'000, 1'000'000};
    const auto pts = landau_convergence(b, grid);
    ASSERT_EQ(pts.size(), 3U);
    EXPECT_GT(pts[0].beta_n_squared, 0);
    EXPECT_TRUE(std::isfinite(pts[0].beta_n_squared));
    EXPECT_EQ(pts[2].count, 216'341U);
    EXPECT_LT(std::abs(pts[2].beta_n_squared - 1), std::abs(pts[1].beta_n_squared - 1));
}

TEST(TheoremOne, ErrorsShrinkAndSlopeIsBounded) {
    const std::vector<std::uint64_t> grid{1'000, 10'000, 100'000};
    for (auto d : all_forms) {
        const TheoremOneReport r = verify_theorem_one(d, grid);
        ASSERT_EQ(r.relative_errors.size(), 3U);
        EXPECT_GT(r.relative_errors[0], r.relative_errors[1]);
        EXPECT_GT(r.relative_errors[1], r.relative_errors[2]);
        EXPECT_LT(r.relative_errors[2], 1e-2);
        EXPECT_LE(r.fitted_slope, 1.2);
        // the partial sums agree with a naive long double accumulation
        long double naive = 0;
        for (std::uint64_t h = 1; h < 1000; ++h) naive += 2.0L * (1000 - h) * singular_series(d, h).value;
        EXPECT_NEAR(r.partial_sums[0], static_cast<double>(naive), 1e-10 * static_cast<double>(naive));
    }
}

TEST(TheoremOne, GridValidation) {
    const std::vector<std::uint64_t> low{50, 1000}, unsorted{1000, 1000}, high{2'000'000};
    EXPECT_THROW(verify_theorem_one(form_id::d1, low), invalid_argument);
    EXPECT_THROW(verify_theorem_one(form_id::d1, unsorted), invalid_argument);
    EXPECT_THROW(verify_theorem_one(form_id::d1, high), invalid_argument);
}

TEST(PoissonMoments, FirstMomentWindowIdentity) {
    const std::uint64_t n = 100'000;
    const SieveBitmap b = build_sieve(form_id::d1, n + 10, 1);
    const PoissonMomentReport r = poisson_moment_check(b, n, 1.0);
    const std::uint64_t alpha = r.histogram.alpha;
    // interior integers are each seen by alpha windows; the edges lose at most alpha(alpha - 1) counts in total
    const double interior = static_cast<double>(alpha) * static_cast<double>(count_representable(b, n)) / n;
    EXPECT_LE(std::abs(r.first_moment - interior), static_cast<double>(alpha * alpha) / n);
    EXPECT_EQ(r.expansion.sum_counts, r.histogram.sum_counts);
    EXPECT_EQ(r.expansion.sum_squares, r.histogram.sum_squares);
    EXPECT_DOUBLE_EQ(r.poisson_second, 2.0);
    EXPECT_GT(r.predicted_second, r.predicted_first);
}
