#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <thread>
#include <vector>

#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/forms.hpp"
#include "quadcorr/primes.hpp"

namespace quadcorr {

inline constexpr std::uint64_t kDefaultSegmentSize = std::uint64_t{1} << 22;
inline constexpr std::uint64_t kMaxSieveRange = std::uint64_t{1} << 40;

/// One bit per integer: bit i is set iff start + i is representable by the form.
/// Bits past length are always zero.
class SieveBitmap {
public:
    SieveBitmap(form_id d, std::uint64_t start, std::uint64_t length, std::vector<std::uint64_t> words,
                std::uint64_t segment_size = kDefaultSegmentSize)
        : d_(d), start_(start), length_(length), segment_size_(segment_size), words_(std::move(words)) {
        if (start_ == 0) throw invalid_argument("SieveBitmap: start must be positive");
        if (words_.size() != (length_ + 63) / 64) throw invalid_argument("SieveBitmap: word count does not match length");
        if (length_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (length_ % 64)) - 1;
        build_prefix();
    }

    [[nodiscard]] form_id form() const { return d_; }
    [[nodiscard]] std::uint64_t start() const { return start_; }
    [[nodiscard]] std::uint64_t length() const { return length_; }
    [[nodiscard]] std::uint64_t segment_size() const { return segment_size_; }
    /// Last integer covered.
    [[nodiscard]] std::uint64_t last() const { return start_ + length_ - 1; }
    [[nodiscard]] std::span<const std::uint64_t> words() const { return words_; }

    [[nodiscard]] bool test(std::uint64_t n) const {
        if (n < start_ || n > last()) throw range_error("SieveBitmap: integer outside covered range");
        const std::uint64_t i = n - start_;
        return (words_[i / 64] >> (i % 64)) & 1U;
    }

    /// 64 bits beginning at bit offset i (zeros past the end).
    [[nodiscard]] std::uint64_t bits_at(std::uint64_t i) const {
        const std::uint64_t w = i / 64, s = i % 64;
        const std::uint64_t lo = w < words_.size() ? words_[w] : 0;
        if (s == 0) return lo;
        const std::uint64_t hi = w + 1 < words_.size() ? words_[w + 1] : 0;
        return (lo >> s) | (hi << (64 - s));
    }

    /// Set bits among the first `count` bit positions.
    [[nodiscard]] std::uint64_t popcount_prefix(std::uint64_t count) const {
        if (count > length_) throw range_error("SieveBitmap: prefix beyond length");
        const std::uint64_t w = count / 64;
        const std::uint64_t block = w / kBlockWords;
        std::uint64_t total = prefix_[block];
        for (std::uint64_t i = block * kBlockWords; i < w; ++i) total += static_cast<std::uint64_t>(std::popcount(words_[i]));
        if (count % 64 != 0) total += static_cast<std::uint64_t>(std::popcount(words_[w] & ((std::uint64_t{1} << (count % 64)) - 1)));
        return total;
    }

    friend bool operator==(const SieveBitmap& a, const SieveBitmap& b) {
        return a.d_ == b.d_ && a.start_ == b.start_ && a.length_ == b.length_ && a.words_ == b.words_;
    }

private:
    static constexpr std::uint64_t kBlockWords = 64;

    void build_prefix() {
        prefix_.assign(words_.size() / kBlockWords + 1, 0);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            if (i % kBlockWords == 0) prefix_[i / kBlockWords] = acc;
            acc += static_cast<std::uint64_t>(std::popcount(words_[i]));
        }
        if (words_.size() % kBlockWords == 0) prefix_.back() = acc;
    }

    form_id d_;
    std::uint64_t start_;
    std::uint64_t length_;
    std::uint64_t segment_size_;
    std::vector<std::uint64_t> words_;
    std::vector<std::uint64_t> prefix_;
};

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Bitmap of representable integers in [1, n].
///
/// Starts from all ones and, for each p in Q_d and each odd j with p^j <= n,
/// clears the integers with m_p exactly j (multiples k p^j with p not dividing k);
/// the m_2 != 1 rule of d = 4, 7 is applied per segment. Segments are independent
/// and word aligned, so the result does not depend on the worker count.
inline SieveBitmap build_sieve(form_id d, std::uint64_t n, unsigned workers = default_workers(),
                               std::uint64_t segment_size = kDefaultSegmentSize) {
    if (n == 0) throw invalid_argument("build_sieve: n must be positive");
    if (n > kMaxSieveRange) throw budget_exceeded("build_sieve: n exceeds the 2^40 budget");
    if (segment_size == 0 || segment_size % 64 != 0) throw invalid_argument("build_sieve: segment size must be a positive multiple of 64");
    workers = std::max(1U, workers);

    std::vector<std::uint64_t> q_primes;
    for (std::uint64_t p : primes_up_to(n))
        if (!is_special_prime(d, p) && in_q_by_congruence(d, p)) q_primes.push_back(p);

    std::vector<std::uint64_t> words((n + 63) / 64, 0);
    const std::uint64_t segments = (n + segment_size - 1) / segment_size;
    const bool forbid_m2_one = !special_rule_admits(d, 2, 1);

    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        std::vector<std::uint64_t> scratch(segment_size / 64);
        for (std::uint64_t s = next++; s < segments; s = next++) {
            const std::uint64_t lo = 1 + s * segment_size;
            const std::uint64_t hi = std::min(n, lo + segment_size - 1);
            const std::uint64_t bits = hi - lo + 1;
            std::fill(scratch.begin(), scratch.end(), ~std::uint64_t{0});
            auto clear = [&](std::uint64_t m) {
                const std::uint64_t i = m - lo;
                scratch[i / 64] &= ~(std::uint64_t{1} << (i % 64));
            };
            for (std::uint64_t p : q_primes) {
                if (p > hi) break;
                for (std::uint64_t pj = p;; ) {
                    std::uint64_t k = (lo + pj - 1) / pj;
                    std::uint64_t r = k % p;
                    for (std::uint64_t m = k * pj; m <= hi; m += pj) {
                        if (r != 0) clear(m);
                        if (++r == p) r = 0;
                    }
                    if (pj > hi / p / p) break;
                    pj *= p * p;
                }
            }
            if (forbid_m2_one) {
                std::uint64_t m = lo + ((2 + 4 - lo % 4) % 4);
                for (; m <= hi; m += 4) clear(m);
            }
            if (bits % 64 != 0) scratch[bits / 64] &= (std::uint64_t{1} << (bits % 64)) - 1;
            std::copy_n(scratch.begin(), (bits + 63) / 64, words.begin() + static_cast<std::ptrdiff_t>((lo - 1) / 64));
        }
    };

    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, segments));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    return SieveBitmap(d, 1, n, std::move(words), segment_size);
}

namespace detail {

inline void require_prefix_cover(const SieveBitmap& bitmap, std::uint64_t last_needed, const char* who) {
    if (bitmap.start() != 1) throw range_error(std::string(who) + ": bitmap must start at 1");
    if (last_needed > bitmap.last())
        throw range_error(std::string(who) + ": bitmap covers [1, " + std::to_string(bitmap.last()) + "] but [1, " +
                          std::to_string(last_needed) + "] is required");
}

} // namespace detail

/// B(d, n): representable integers in [1, n].
inline std::uint64_t count_representable(const SieveBitmap& bitmap, std::uint64_t n) {
    detail::require_prefix_cover(bitmap, n, "count_representable");
    return bitmap.popcount_prefix(n);
}

/// B_h(d, n) = #{m <= n : m and m + h representable}; needs [1, n + h].
inline std::uint64_t pair_count(const SieveBitmap& bitmap, std::uint64_t h, std::uint64_t n) {
    if (h == 0) throw invalid_argument("pair_count: h must be positive");
    detail::require_prefix_cover(bitmap, n + h, "pair_count");
    const auto words = bitmap.words();
    std::uint64_t total = 0;
    const std::uint64_t full = n / 64;
    for (std::uint64_t w = 0; w < full; ++w)
        total += static_cast<std::uint64_t>(std::popcount(words[w] & bitmap.bits_at(w * 64 + h)));
    if (n % 64 != 0) {
        const std::uint64_t mask = (std::uint64_t{1} << (n % 64)) - 1;
        total += static_cast<std::uint64_t>(std::popcount(words[full] & bitmap.bits_at(full * 64 + h) & mask));
    }
    return total;
}

/// #{m <= n : m, m + 1, m + 2 all representable}; needs [1, n + 2].
inline std::uint64_t triplet_count(const SieveBitmap& bitmap, std::uint64_t n) {
    detail::require_prefix_cover(bitmap, n + 2, "triplet_count");
    const auto words = bitmap.words();
    std::uint64_t total = 0;
    const std::uint64_t full = n / 64;
    for (std::uint64_t w = 0; w < full; ++w)
        total += static_cast<std::uint64_t>(std::popcount(words[w] & bitmap.bits_at(w * 64 + 1) & bitmap.bits_at(w * 64 + 2)));
    if (n % 64 != 0) {
        const std::uint64_t mask = (std::uint64_t{1} << (n % 64)) - 1;
        total += static_cast<std::uint64_t>(
            std::popcount(words[full] & bitmap.bits_at(full * 64 + 1) & bitmap.bits_at(full * 64 + 2) & mask));
    }
    return total;
}

/// alpha = round(lambda sqrt(log n) / beta_d), at least 1.
inline std::uint64_t window_alpha(form_id d, std::uint64_t n, double lambda) {
    if (n < 100) throw invalid_argument("window_alpha: n must be >= 100");
    if (!(lambda > 0)) throw invalid_argument("window_alpha: lambda must be positive");
    const double a = std::round(lambda * std::sqrt(std::log(static_cast<double>(n))) / descriptor(d).landau_beta.value);
    return a < 1 ? 1 : static_cast<std::uint64_t>(a);
}

/// Frequencies of N_m = B(d, m + alpha) - B(d, m) over the windows m = 0..n-1.
struct IntervalHistogram {
    form_id d;
    std::uint64_t n;
    double lambda;
    std::uint64_t alpha;
    std::map<std::uint64_t, std::uint64_t> counts;
    std::vector<double> moments; ///< moments[r - 1] = mean of N_m^r
    std::uint64_t windows = 0;
    std::uint64_t sum_counts = 0;  ///< sum_m N_m
    std::uint64_t sum_squares = 0; ///< sum_m N_m^2
};

/// Sliding-window histogram with an explicit window length; needs [1, n + alpha - 1].
inline IntervalHistogram interval_histogram_with_alpha(const SieveBitmap& bitmap, std::uint64_t n, std::uint64_t alpha,
                                                       unsigned max_moment, double lambda = 0) {
    if (n == 0) throw invalid_argument("interval_histogram: n must be positive");
    if (alpha == 0) throw invalid_argument("interval_histogram: alpha must be positive");
    detail::require_prefix_cover(bitmap, n + alpha - 1, "interval_histogram");

    IntervalHistogram out{bitmap.form(), n, lambda, alpha, {}, {}, n, 0, 0};
    std::vector<std::uint64_t> freq(alpha + 1, 0);
    std::uint64_t current = bitmap.popcount_prefix(alpha); // window (0, alpha]
    for (std::uint64_t m = 0; m < n; ++m) {
        ++freq[current];
        out.sum_counts += current;
        out.sum_squares += current * current;
        if (m + 1 < n) current = current - bitmap.test(m + 1) + bitmap.test(m + 1 + alpha);
    }
    for (std::uint64_t v = 0; v <= alpha; ++v)
        if (freq[v] != 0) out.counts.emplace(v, freq[v]);
    for (unsigned r = 1; r <= max_moment; ++r) {
        long double acc = 0;
        for (auto [v, f] : out.counts) acc += std::pow(static_cast<long double>(v), static_cast<long double>(r)) * f;
        out.moments.push_back(static_cast<double>(acc / static_cast<long double>(n)));
    }
    return out;
}

/// Histogram for the window alpha = window_alpha(d, n, lambda).
inline IntervalHistogram interval_histogram(const SieveBitmap& bitmap, std::uint64_t n, double lambda, unsigned max_moment) {
    const std::uint64_t alpha = window_alpha(bitmap.form(), n, lambda);
    return interval_histogram_with_alpha(bitmap, n, alpha, max_moment, lambda);
}

/// sum_m N_m and sum_m N_m^2 rebuilt from single and pair counts.
///
/// An integer a lies in the windows m in [max(0, a - alpha), min(a - 1, n - 1)], and
/// a pair (a, a + h) in [max(0, a + h - alpha), min(a - 1, n - 1)]: alpha - h windows
/// in the interior, fewer near either end. The interior is taken from pair_count and
/// the two edges are summed explicitly.
struct WindowMomentExpansion {
    std::uint64_t sum_counts;
    std::uint64_t sum_squares;
};

inline WindowMomentExpansion window_moment_expansion(const SieveBitmap& bitmap, std::uint64_t n, std::uint64_t alpha) {
    if (n == 0 || alpha == 0) throw invalid_argument("window_moment_expansion: n and alpha must be positive");
    detail::require_prefix_cover(bitmap, n + alpha - 1, "window_moment_expansion");
    auto rep = [&](std::uint64_t a) { return static_cast<std::uint64_t>(bitmap.test(a)); };
    // windows m in [0, n - 1] holding both a and a + h (h = 0 for singles)
    auto weight = [&](std::uint64_t a, std::uint64_t h) -> std::uint64_t {
        const std::uint64_t lo = a + h > alpha ? a + h - alpha : 0;
        const std::uint64_t hi = std::min(a - 1, n - 1);
        return hi >= lo ? hi - lo + 1 : 0;
    };
    auto pairs_upto = [&](std::uint64_t h, std::uint64_t x) -> std::uint64_t {
        if (x == 0) return 0;
        return h == 0 ? count_representable(bitmap, x) : pair_count(bitmap, h, x);
    };

    std::uint64_t sums[2] = {0, 0}; // [0]: singles, [1]: ordered pairs with h >= 1
    for (std::uint64_t h = 0; h < alpha; ++h) {
        const std::uint64_t span = alpha - h;
        const std::uint64_t top = n + alpha - 1 - h;
        std::uint64_t acc = 0;
        if (span <= n) acc += span * (pairs_upto(h, n) - pairs_upto(h, span - 1));
        const std::uint64_t left_end = std::min(span - 1, top);
        for (std::uint64_t a = 1; a <= left_end; ++a) acc += weight(a, h) * rep(a) * rep(a + h);
        for (std::uint64_t a = std::max(n + 1, span); a <= top; ++a) acc += weight(a, h) * rep(a) * rep(a + h);
        sums[h == 0 ? 0 : 1] += acc;
    }
    return {sums[0], sums[0] + 2 * sums[1]};
}

} // namespace quadcorr
