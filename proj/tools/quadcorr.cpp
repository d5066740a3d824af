#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quadcorr/quadcorr.hpp"

namespace qc = quadcorr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum exit_code : int { ok = 0, usage = 1, assertion = 2, io = 3 };

struct RunConfig {
    std::string form = "1";
    std::uint64_t n = 1'000'000;
    std::uint64_t h_max = 25;
    double lambda = 1.0;
    std::vector<std::uint64_t> H_grid{1'000, 10'000, 100'000};
    std::string output_path;
    std::string cache_dir = qc::default_cache_dir().string();
    unsigned workers = qc::default_workers();
    std::string format = "csv";
    bool build_missing = false;
    bool force = false;
    bool all = false;
    std::string suite = "all";
};

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<qc::form_id> selected_forms(const RunConfig& cfg) {
    if (cfg.all || cfg.form == "all") return {qc::all_forms.begin(), qc::all_forms.end()};
    long long d = 0;
    try {
        std::size_t used = 0;
        d = std::stoll(cfg.form, &used);
        if (used != cfg.form.size()) throw std::invalid_argument(cfg.form);
    } catch (const std::logic_error&) {
        throw usage_error("--form expects 1, 2, 3, 4, 7 or all, got '" + cfg.form + "'");
    }
    try {
        return {qc::parse_form(d)};
    } catch (const qc::unsupported_form& e) {
        throw usage_error(e.what());
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.n < 10) throw usage_error("--n must be >= 10");
    if (cfg.h_max < 1) throw usage_error("--h-max must be >= 1");
    if (cfg.workers < 1) throw usage_error("--workers must be >= 1");
    if (!(cfg.lambda > 0)) throw usage_error("--lambda must be positive");
}

/// Writes to --out when given, else stdout.
void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(cfg.output_path, std::ios::trunc);
    if (!os) throw qc::error("cannot open " + cfg.output_path + " for writing");
    os << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

qc::SieveBitmap bitmap_for(const RunConfig& cfg, qc::form_id d, std::uint64_t last) {
    return qc::load_bitmap(cfg.cache_dir, d, last, cfg.build_missing, cfg.workers);
}

// --- constants --------------------------------------------------------------

int cmd_constants(const RunConfig& cfg) {
    const auto forms = selected_forms(cfg);
    const qc::PrimeTable& table = qc::descriptor_prime_table();
    const double y = qc::universal_ratio_y();
    const qc::ConstantEstimate triplet = qc::triplet_density_constant(table, qc::kDescriptorTruncation);

    json doc = json::array();
    std::ostringstream csv;
    csv << "d,quantity,value,error_bound\n";
    for (qc::form_id d : forms) {
        const qc::FormDescriptor& f = qc::descriptor(d);
        const qc::ConstantEstimate residue = qc::residue_at_one(d, table, qc::kDescriptorTruncation);
        json w = json::object();
        for (const auto& [p, density] : f.special_density) w[std::to_string(p)] = density.str();
        doc.push_back({{"d", qc::value(d)},
                       {"beta", f.landau_beta.value},
                       {"beta_error_bound", f.landau_beta.error_bound},
                       {"beta_truncation", f.landau_beta.truncation},
                       {"L1", f.L1_closed_form},
                       {"delta", f.delta.str()},
                       {"c", f.c_constant},
                       {"c_recomputed", qc::recompute_c_constant(f)},
                       {"w", w},
                       {"y", y},
                       {"y_squared", y * y},
                       {"A1", residue.value},
                       {"A1_error_bound", residue.error_bound},
                       {"triplet_constant", triplet.value},
                       {"triplet_error_bound", triplet.error_bound}});
        auto row = [&](const char* name, double v, double err) {
            csv << qc::value(d) << ',' << name << ',' << qc::format_real(v) << ',' << qc::format_real(err) << '\n';
        };
        row("beta", f.landau_beta.value, f.landau_beta.error_bound);
        row("L1", f.L1_closed_form, 0);
        row("delta", f.delta.to_double(), 0);
        row("c", f.c_constant, 0);
        for (const auto& [p, density] : f.special_density)
            row(("w_" + std::to_string(p)).c_str(), density.to_double(), 0);
        row("y", y, 0);
        row("y_squared", y * y, 0);
        row("A1", residue.value, residue.error_bound);
        row("triplet_constant", triplet.value, triplet.error_bound);
    }
    emit(cfg, cfg.format == "json" ? dump(doc) : csv.str());
    return ok;
}

// --- sieve ------------------------------------------------------------------

int cmd_sieve(const RunConfig& cfg) {
    validate(cfg);
    fs::create_directories(cfg.cache_dir);
    json doc = json::array();
    for (qc::form_id d : selected_forms(cfg)) {
        const fs::path path = qc::cache_file(cfg.cache_dir, d, cfg.n);
        if (fs::exists(path)) {
            try {
                const qc::SieveBitmap cached = qc::read_bitmap(path);
                if (cached.form() == d && cached.start() == 1 && cached.length() == cfg.n && !cfg.force) {
                    std::cerr << "cache hit: " << path.string() << '\n';
                    doc.push_back({{"d", qc::value(d)}, {"path", path.string()}, {"bytes", fs::file_size(path)}, {"rebuilt", false}});
                    continue;
                }
            } catch (const qc::format_error& e) {
                if (!cfg.force) throw;
                std::cerr << "warning: rebuilding corrupted cache " << path.string() << ": " << e.what() << '\n';
            }
        }
        const qc::SieveBitmap bitmap = qc::build_sieve(d, cfg.n, cfg.workers);
        qc::write_bitmap(bitmap, path);
        doc.push_back({{"d", qc::value(d)}, {"path", path.string()}, {"bytes", fs::file_size(path)}, {"rebuilt", true}});
    }
    if (cfg.format == "json") emit(cfg, dump(doc));
    return ok;
}

// --- pairs / ratio / density / intervals -------------------------------------

int cmd_pairs(const RunConfig& cfg) {
    validate(cfg);
    const auto primes = qc::primes_up_to(cfg.n);
    json doc = json::array();
    std::ostringstream csv;
    csv << "d,h,n,pair_count,singular_series,predicted_count\n";
    const double log_n = std::log(static_cast<double>(cfg.n));
    for (qc::form_id d : selected_forms(cfg)) {
        const qc::SieveBitmap bitmap = bitmap_for(cfg, d, cfg.n + cfg.h_max);
        for (const auto& r : qc::pair_ratio_table(bitmap, cfg.n, cfg.h_max, primes)) {
            const double predicted = static_cast<double>(cfg.n) * r.singular_series / log_n;
            csv << qc::value(d) << ',' << r.h << ',' << r.n << ',' << r.pair_count << ',' << qc::format_real(r.singular_series) << ','
                << qc::format_real(predicted) << '\n';
            doc.push_back({{"d", qc::value(d)}, {"h", r.h}, {"n", r.n}, {"pair_count", r.pair_count},
                           {"singular_series", r.singular_series}, {"predicted_count", predicted}});
        }
    }
    emit(cfg, cfg.format == "json" ? dump(doc) : csv.str());
    return ok;
}

int cmd_ratio(const RunConfig& cfg) {
    validate(cfg);
    const auto primes = qc::primes_up_to(cfg.n);
    std::vector<qc::PairCorrelationRecord> rows;
    for (qc::form_id d : selected_forms(cfg)) {
        const qc::SieveBitmap bitmap = bitmap_for(cfg, d, cfg.n + cfg.h_max);
        auto part = qc::pair_ratio_table(bitmap, cfg.n, cfg.h_max, primes);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (cfg.format == "json") {
        json doc = json::array();
        for (const auto& r : rows) doc.push_back(qc::to_json(r));
        emit(cfg, dump(doc));
    } else {
        std::ostringstream os;
        qc::write_pair_csv(os, rows);
        emit(cfg, os.str());
    }
    return ok;
}

int cmd_density(const RunConfig& cfg) {
    validate(cfg);
    if (cfg.n < 1000) throw usage_error("density: --n must be >= 1000");
    const auto primes = qc::primes_up_to(cfg.n);
    std::vector<qc::RatioReport> rows;
    for (qc::form_id d : selected_forms(cfg)) rows.push_back(qc::density_ratio(d, cfg.n, primes));
    if (cfg.format == "json") {
        json doc = json::array();
        for (const auto& r : rows) doc.push_back(qc::to_json(r));
        emit(cfg, dump(doc));
    } else {
        std::ostringstream os;
        qc::write_ratio_csv(os, rows);
        emit(cfg, os.str());
    }
    return ok;
}

int cmd_intervals(const RunConfig& cfg) {
    validate(cfg);
    if (cfg.n < 100) throw usage_error("intervals: --n must be >= 100");
    const auto forms = selected_forms(cfg);
    if (forms.size() != 1) throw usage_error("intervals takes a single --form");
    const qc::form_id d = forms.front();
    const std::uint64_t alpha = qc::window_alpha(d, cfg.n, cfg.lambda);
    const qc::SieveBitmap bitmap = bitmap_for(cfg, d, cfg.n + alpha);
    const qc::PoissonMomentReport report = qc::poisson_moment_check(bitmap, cfg.n, cfg.lambda);

    if (cfg.format == "json") {
        json counts = json::array();
        for (auto [v, f] : report.histogram.counts) counts.push_back({{"value", v}, {"frequency", f}});
        json doc = qc::to_json(report);
        doc["counts"] = counts;
        emit(cfg, dump(doc));
        return ok;
    }
    std::ostringstream os;
    qc::write_histogram_csv(os, report.histogram);
    emit(cfg, os.str());
    if (!cfg.output_path.empty()) {
        std::ofstream side(cfg.output_path + ".json", std::ios::trunc);
        if (!side) throw qc::error("cannot open " + cfg.output_path + ".json for writing");
        side << dump(qc::to_json(report));
    } else {
        std::cerr << "note: the moments sidecar is written next to --out, or use --format json\n";
    }
    return ok;
}

// --- verify -----------------------------------------------------------------

class Checker {
public:
    void check(const std::string& suite, qc::form_id d, const std::string& name, bool passed, const std::string& detail) {
        std::cout << (passed ? "PASS " : "FAIL ") << suite << " d=" << qc::value(d) << ' ' << name << ": " << detail << '\n';
        if (!passed) {
            std::cerr << "assertion failed: " << suite << " d=" << qc::value(d) << ' ' << name << ": " << detail << '\n';
            ++failures_;
        }
    }
    [[nodiscard]] int failures() const { return failures_; }

private:
    int failures_ = 0;
};

std::string fmt(double x) { return qc::format_real(x); }

void suite_theorem1(const RunConfig& cfg, qc::form_id d, Checker& c) {
    const qc::TheoremOneReport r = qc::verify_theorem_one(d, cfg.H_grid);
    bool decreasing = true;
    std::string errs;
    for (std::size_t i = 0; i < r.relative_errors.size(); ++i) {
        if (i > 0 && !(r.relative_errors[i] < r.relative_errors[i - 1])) decreasing = false;
        errs += (i ? "," : "") + fmt(r.relative_errors[i]);
    }
    c.check("theorem1", d, "relative errors strictly decreasing", decreasing, errs);
    if (r.H_grid.back() >= 100'000)
        c.check("theorem1", d, "relative error below 1e-2 at the largest H", r.relative_errors.back() < 1e-2, fmt(r.relative_errors.back()));
    if (r.H_grid.size() >= 2)
        c.check("theorem1", d, "fitted slope <= 1.2", r.fitted_slope <= 1.2, fmt(r.fitted_slope));
}

void suite_landau(const RunConfig& cfg, qc::form_id d, Checker& c) {
    const qc::SieveBitmap bitmap = bitmap_for(cfg, d, cfg.n);
    std::vector<std::uint64_t> grid;
    if (cfg.n > 10'000) grid.push_back(10'000);
    grid.push_back(cfg.n);
    const auto points = qc::landau_convergence(bitmap, grid);
    const double last = points.back().beta_n_squared;
    c.check("landau", d, "beta(n)^2 within 12% of 1 at n=" + std::to_string(cfg.n), std::abs(last - 1) < 0.12, fmt(last));
    if (points.size() == 2)
        c.check("landau", d, "closer to 1 than at n=1e4", std::abs(last - 1) < std::abs(points.front().beta_n_squared - 1),
                fmt(points.front().beta_n_squared) + " -> " + fmt(last));
    const qc::FormDescriptor& f = qc::descriptor(d);
    c.check("landau", d, "beta error bound below 1e-6", f.landau_beta.error_bound < 1e-6, fmt(f.landau_beta.error_bound));
}

void suite_mertens(const RunConfig& cfg, qc::form_id d, Checker& c, const std::vector<std::uint64_t>& primes) {
    const double y = qc::universal_ratio_y();
    c.check("mertens", d, "y = 0.664056 +- 1e-5", std::abs(y - 0.664056) < 1e-5, fmt(y));
    const std::uint64_t n = std::max<std::uint64_t>(cfg.n, 1000);
    const qc::RatioReport r = qc::density_ratio(d, n, primes);
    c.check("mertens", d, "y_d(n) within 10% of y at n=" + std::to_string(n), std::abs(r.ratio_y - y) < 0.1 * y, fmt(r.ratio_y));
    if (d == qc::form_id::d1) {
        c.check("mertens", d, "M(2) = 1/2", qc::mertens_product(d, 2, primes) == 0.5, fmt(qc::mertens_product(d, 2, primes)));
        c.check("mertens", d, "M(3) = 3/8", std::abs(qc::mertens_product(d, 3, primes) - 0.375) < 1e-15,
                fmt(qc::mertens_product(d, 3, primes)));
        c.check("mertens", d, "M2(3, 3) = 1/6", std::abs(qc::mertens_pair_product(d, 3, 3, primes) - 1.0 / 6) < 1e-15,
                fmt(qc::mertens_pair_product(d, 3, 3, primes)));
    }
    if (d == qc::form_id::d4)
        c.check("mertens", d, "M2(n, 2) = 0", qc::mertens_pair_product(d, n, 2, primes) == 0, fmt(qc::mertens_pair_product(d, n, 2, primes)));
}

void suite_identities(const RunConfig& cfg, qc::form_id d, Checker& c, const std::vector<std::uint64_t>& primes) {
    const qc::FormDescriptor& f = qc::descriptor(d);
    const double c_re = qc::recompute_c_constant(f);
    c.check("identities", d, "c_d recomputed to 1e-10", std::abs(c_re - f.c_constant) <= 1e-10 * f.c_constant, fmt(c_re));

    const std::uint64_t n = cfg.n;
    const std::uint64_t alpha = n >= 100 ? qc::window_alpha(d, n, cfg.lambda) : 1;
    const qc::SieveBitmap bitmap = bitmap_for(cfg, d, n + std::max(cfg.h_max, alpha));
    const auto rows = qc::pair_ratio_table(bitmap, n, cfg.h_max, primes);
    const double log_n = std::log(static_cast<double>(n));
    const double y_n = qc::mertens_product(d, n, primes) * std::sqrt(log_n) / qc::truncated_landau_beta(d, n, primes);
    double worst_plumbing = 0, worst_display = 0;
    bool zero_rule = true;
    for (const auto& r : rows) {
        if (r.pair_count == 0) {
            if (r.singular_series != 0) zero_rule = false;
            continue;
        }
        if (r.singular_series == 0) zero_rule = false;
        const double plumbing = r.ratio_Y * static_cast<double>(r.pair_count) / static_cast<double>(n);
        worst_plumbing = std::max(worst_plumbing, std::abs(plumbing - r.mertens_pair_product) / r.mertens_pair_product);
        worst_display = std::max(worst_display, std::abs(y_n * y_n / r.ratio_Y - r.normalized_ratio) / r.normalized_ratio);
    }
    c.check("identities", d, "ratio_Y * B_h/n = M2(n,h)", worst_plumbing < 1e-12, fmt(worst_plumbing));
    c.check("identities", d, "display ratio = y_d(n)^2 / ratio_Y", worst_display < 1e-9, fmt(worst_display));
    c.check("identities", d, "B_h = 0 exactly when T_{d,h} = 0", zero_rule, zero_rule ? "consistent" : "mismatch");

    const qc::IntervalHistogram hist = qc::interval_histogram_with_alpha(bitmap, n, alpha, 2, cfg.lambda);
    const qc::WindowMomentExpansion e = qc::window_moment_expansion(bitmap, n, alpha);
    c.check("identities", d, "window first moment = single-count expansion", e.sum_counts == hist.sum_counts,
            std::to_string(hist.sum_counts) + " vs " + std::to_string(e.sum_counts));
    c.check("identities", d, "window second moment = pair expansion", e.sum_squares == hist.sum_squares,
            std::to_string(hist.sum_squares) + " vs " + std::to_string(e.sum_squares));
}

int cmd_verify(const RunConfig& cfg) {
    validate(cfg);
    static const std::vector<std::string> suites{"theorem1", "landau", "mertens", "identities"};
    if (cfg.suite != "all" && std::find(suites.begin(), suites.end(), cfg.suite) == suites.end())
        throw usage_error("--suite expects theorem1, landau, mertens, identities or all");
    auto wants = [&](const std::string& s) { return cfg.suite == "all" || cfg.suite == s; };
    std::vector<std::uint64_t> primes;
    if (wants("mertens") || wants("identities")) primes = qc::primes_up_to(std::max<std::uint64_t>(cfg.n, 1000));

    Checker c;
    for (qc::form_id d : selected_forms(cfg)) {
        if (wants("theorem1")) suite_theorem1(cfg, d, c);
        if (wants("landau")) suite_landau(cfg, d, c);
        if (wants("mertens")) suite_mertens(cfg, d, c, primes);
        if (wants("identities")) suite_identities(cfg, d, c, primes);
    }
    return c.failures() == 0 ? ok : assertion;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pair correlation of integers represented by x^2 + d y^2"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "quadcorr.toml", "key=value configuration file (flags take precedence)");

    RunConfig cfg;
    app.add_option("--form", cfg.form, "form index 1, 2, 3, 4, 7 or all")->capture_default_str();
    app.add_option("--n", cfg.n, "range bound n")->capture_default_str();
    app.add_option("--h-max,--h_max", cfg.h_max, "largest shift h")->capture_default_str();
    app.add_option("--lambda", cfg.lambda, "window scale lambda")->capture_default_str();
    app.add_option("--H-grid,--H_grid", cfg.H_grid, "comma separated H values")->delimiter(',')->capture_default_str();
    app.add_option("--out", cfg.output_path, "output file (default stdout)");
    app.add_option("--cache-dir,--cache_dir", cfg.cache_dir, "bitmap cache directory (default $QUADCORR_CACHE_DIR or ./.quadcorr-cache)");
    app.add_option("--workers", cfg.workers, "sieve worker threads")->capture_default_str();
    app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_flag("--build-missing,--build_missing", cfg.build_missing, "build absent bitmaps instead of failing");
    app.add_flag("--force", cfg.force, "rebuild bitmaps even when a valid cache exists");

    std::function<int()> run;
    auto* constants = app.add_subcommand("constants", "beta_d, L_d(1), delta_d, c_d, y, A_d(1) and the triplet constant");
    constants->add_flag("--all", cfg.all, "all five forms");
    constants->callback([&] { run = [&] { return cmd_constants(cfg); }; });
    app.add_subcommand("sieve", "build and cache the representability bitmap of [1, n]")->callback([&] { run = [&] { return cmd_sieve(cfg); }; });
    app.add_subcommand("pairs", "pair counts B_h(d, n) against n T_{d,h} / log n")->callback([&] { run = [&] { return cmd_pairs(cfg); }; });
    app.add_subcommand("ratio", "pair-ratio table for h = 1..h-max")->callback([&] { run = [&] { return cmd_ratio(cfg); }; });
    app.add_subcommand("density", "Mertens product, Landau density and their ratio y_d(n)")->callback([&] { run = [&] { return cmd_density(cfg); }; });
    app.add_subcommand("intervals", "histogram of representable counts in windows of length alpha")
        ->callback([&] { run = [&] { return cmd_intervals(cfg); }; });
    auto* verify = app.add_subcommand("verify", "run a verification suite; exit 2 on any failed assertion");
    verify->add_option("--suite", cfg.suite, "theorem1, landau, mertens, identities or all")->capture_default_str();
    verify->callback([&] { run = [&] { return cmd_verify(cfg); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        return run();
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const qc::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const qc::unsupported_form& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const qc::cache_miss& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return io;
    } catch (const qc::format_error& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return io;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    }
}
