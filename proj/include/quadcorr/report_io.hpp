#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "quadcorr/error.hpp"
#include "quadcorr/experiments.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/sieve.hpp"

namespace quadcorr {

inline constexpr const char* kPairCsvHeader = "d,h,n,pair_count,singular_series,mertens_pair_product,ratio_Y,normalized_ratio";
inline constexpr const char* kRatioCsvHeader = "d,n,mertens_product,landau_density,ratio_y";
inline constexpr const char* kTheoremOneCsvHeader = "d,H,partial_sum,target,relative_error";
inline constexpr const char* kHistogramCsvHeader = "value,frequency";

/// 12 significant digits; NaN prints as "nan".
inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw format_error("not a real number: '" + s + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw format_error("not an unsigned integer: '" + s + "'");
    return std::stoull(s);
}

inline form_id parse_form_cell(const std::string& s) {
    try {
        return parse_form(static_cast<long long>(parse_uint(s)));
    } catch (const unsupported_form& e) {
        throw format_error(e.what());
    }
}

/// Reads rows after checking the header; each row must have `columns` cells.
inline std::vector<std::vector<std::string>> read_csv(std::istream& is, const char* header, std::size_t columns) {
    std::string line;
    if (!std::getline(is, line) || line != header) throw format_error(std::string("expected CSV header '") + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != columns) throw format_error("CSV row has " + std::to_string(cells.size()) + " cells, expected " + std::to_string(columns));
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline nlohmann::json real_json(double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); }

} // namespace detail

// --- pair-ratio table -------------------------------------------------------

inline void write_pair_csv(std::ostream& os, const std::vector<PairCorrelationRecord>& rows) {
    os << kPairCsvHeader << '\n';
    for (const auto& r : rows)
        os << value(r.d) << ',' << r.h << ',' << r.n << ',' << r.pair_count << ',' << format_real(r.singular_series) << ','
           << format_real(r.mertens_pair_product) << ',' << format_real(r.ratio_Y) << ',' << format_real(r.normalized_ratio) << '\n';
}

/// Fields not carried by the CSV (the limit-y variant) are recomputed from ratio_Y.
inline std::vector<PairCorrelationRecord> read_pair_csv(std::istream& is) {
    std::vector<PairCorrelationRecord> out;
    const double y = universal_ratio_y();
    for (const auto& c : detail::read_csv(is, kPairCsvHeader, 8)) {
        PairCorrelationRecord r{detail::parse_form_cell(c[0]), detail::parse_uint(c[1]), detail::parse_uint(c[2]),
                                detail::parse_uint(c[3]), detail::parse_real(c[4]), detail::parse_real(c[5]),
                                detail::parse_real(c[6]), detail::parse_real(c[7]), 0};
        r.normalized_ratio_limit_y = y * y / r.ratio_Y;
        out.push_back(r);
    }
    return out;
}

inline nlohmann::json to_json(const PairCorrelationRecord& r) {
    return {{"d", value(r.d)},
            {"h", r.h},
            {"n", r.n},
            {"pair_count", r.pair_count},
            {"singular_series", detail::real_json(r.singular_series)},
            {"mertens_pair_product", detail::real_json(r.mertens_pair_product)},
            {"ratio_Y", detail::real_json(r.ratio_Y)},
            {"normalized_ratio", detail::real_json(r.normalized_ratio)}};
}

// --- ratio report -----------------------------------------------------------

inline void write_ratio_csv(std::ostream& os, const std::vector<RatioReport>& rows) {
    os << kRatioCsvHeader << '\n';
    for (const auto& r : rows)
        os << value(r.d) << ',' << r.n << ',' << format_real(r.mertens_product) << ',' << format_real(r.landau_density) << ','
           << format_real(r.ratio_y) << '\n';
}

inline std::vector<RatioReport> read_ratio_csv(std::istream& is) {
    std::vector<RatioReport> out;
    for (const auto& c : detail::read_csv(is, kRatioCsvHeader, 5))
        out.push_back({detail::parse_form_cell(c[0]), detail::parse_uint(c[1]), detail::parse_real(c[2]), detail::parse_real(c[3]),
                       detail::parse_real(c[4]), kDescriptorTruncation});
    return out;
}

inline nlohmann::json to_json(const RatioReport& r) {
    return {{"d", value(r.d)},
            {"n", r.n},
            {"mertens_product", r.mertens_product},
            {"landau_density", r.landau_density},
            {"ratio_y", r.ratio_y},
            {"beta_truncation", r.beta_truncation}};
}

// --- theorem one ------------------------------------------------------------

inline void write_theorem_one_csv(std::ostream& os, const std::vector<TheoremOneReport>& reports) {
    os << kTheoremOneCsvHeader << '\n';
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.H_grid.size(); ++i)
            os << value(r.d) << ',' << r.H_grid[i] << ',' << format_real(r.partial_sums[i]) << ',' << format_real(r.targets[i]) << ','
               << format_real(r.relative_errors[i]) << '\n';
}

/// Groups consecutive rows of the same d; the slope is not part of the CSV and comes back NaN.
inline std::vector<TheoremOneReport> read_theorem_one_csv(std::istream& is) {
    std::vector<TheoremOneReport> out;
    for (const auto& c : detail::read_csv(is, kTheoremOneCsvHeader, 5)) {
        const form_id d = detail::parse_form_cell(c[0]);
        if (out.empty() || out.back().d != d) out.push_back({d, {}, {}, {}, {}, std::numeric_limits<double>::quiet_NaN()});
        auto& r = out.back();
        r.H_grid.push_back(detail::parse_uint(c[1]));
        r.partial_sums.push_back(detail::parse_real(c[2]));
        r.targets.push_back(detail::parse_real(c[3]));
        r.relative_errors.push_back(detail::parse_real(c[4]));
    }
    return out;
}

inline nlohmann::json to_json(const TheoremOneReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.H_grid.size(); ++i)
        rows.push_back({{"H", r.H_grid[i]},
                        {"partial_sum", r.partial_sums[i]},
                        {"target", r.targets[i]},
                        {"relative_error", r.relative_errors[i]}});
    return {{"d", value(r.d)}, {"rows", rows}, {"fitted_slope", detail::real_json(r.fitted_slope)}};
}

// --- interval histogram -----------------------------------------------------

inline void write_histogram_csv(std::ostream& os, const IntervalHistogram& h) {
    os << kHistogramCsvHeader << '\n';
    for (auto [v, f] : h.counts) os << v << ',' << f << '\n';
}

inline std::map<std::uint64_t, std::uint64_t> read_histogram_csv(std::istream& is) {
    std::map<std::uint64_t, std::uint64_t> out;
    for (const auto& c : detail::read_csv(is, kHistogramCsvHeader, 2))
        if (!out.emplace(detail::parse_uint(c[0]), detail::parse_uint(c[1])).second) throw format_error("duplicate histogram value");
    return out;
}

/// Parameters and moments that accompany the histogram CSV.
inline nlohmann::json histogram_sidecar(const IntervalHistogram& h) {
    nlohmann::json moments = nlohmann::json::array();
    for (double m : h.moments) moments.push_back(m);
    return {{"d", value(h.d)},
            {"n", h.n},
            {"lambda", h.lambda},
            {"alpha", h.alpha},
            {"windows", h.windows},
            {"window_convention", "N_m = #{representable a : m < a <= m + alpha}, m = 0..n-1"},
            {"sum_counts", h.sum_counts},
            {"sum_squares", h.sum_squares},
            {"moments", moments}};
}

inline IntervalHistogram histogram_from_json(const nlohmann::json& sidecar, std::map<std::uint64_t, std::uint64_t> counts) {
    try {
        IntervalHistogram h{parse_form(sidecar.at("d").get<long long>()),
                            sidecar.at("n").get<std::uint64_t>(),
                            sidecar.at("lambda").get<double>(),
                            sidecar.at("alpha").get<std::uint64_t>(),
                            std::move(counts),
                            sidecar.at("moments").get<std::vector<double>>(),
                            sidecar.at("windows").get<std::uint64_t>(),
                            sidecar.at("sum_counts").get<std::uint64_t>(),
                            sidecar.at("sum_squares").get<std::uint64_t>()};
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("histogram sidecar: ") + e.what());
    } catch (const unsupported_form& e) {
        throw format_error(e.what());
    }
}

inline nlohmann::json to_json(const PoissonMomentReport& r) {
    return {{"histogram", histogram_sidecar(r.histogram)},
            {"first_moment", r.first_moment},
            {"second_moment", r.second_moment},
            {"poisson_first", r.poisson_first},
            {"poisson_second", r.poisson_second},
            {"gap_first", r.gap_first},
            {"gap_second", r.gap_second},
            {"predicted_first", r.predicted_first},
            {"predicted_second", r.predicted_second},
            {"gap_predicted_first", r.gap_predicted_first},
            {"gap_predicted_second", r.gap_predicted_second},
            {"expansion_sum_counts", r.expansion.sum_counts},
            {"expansion_sum_squares", r.expansion.sum_squares}};
}

} // namespace quadcorr
