#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>

#include "quadcorr/bitmap_io.hpp"
#include "quadcorr/error.hpp"
#include "quadcorr/form_id.hpp"
#include "quadcorr/sieve.hpp"

namespace quadcorr {

/// A required bitmap is absent from the cache directory.
class cache_miss : public error {
public:
    using error::error;
};

/// QUADCORR_CACHE_DIR when set, else ./.quadcorr-cache.
inline std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("QUADCORR_CACHE_DIR"); env != nullptr && *env != '\0') return env;
    return ".quadcorr-cache";
}

inline std::filesystem::path cache_file(const std::filesystem::path& dir, form_id d, std::uint64_t length) {
    return dir / ("sieve_d" + to_string(d) + "_len" + std::to_string(length) + ".qcsv");
}

/// Smallest cached bitmap for d covering [1, last], if any.
inline std::optional<std::filesystem::path> find_cache(const std::filesystem::path& dir, form_id d, std::uint64_t last) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) return std::nullopt;
    const std::regex pattern("sieve_d" + to_string(d) + "_len([0-9]+)\\.qcsv");
    std::optional<fs::path> best;
    std::uint64_t best_len = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) continue;
        const std::uint64_t len = std::stoull(m[1].str());
        if (len >= last && (!best || len < best_len)) {
            best = entry.path();
            best_len = len;
        }
    }
    return best;
}

/// Bitmap covering [1, last]: a cached one when present, else built and stored when `build_missing`.
/// Corrupted caches raise format_error.
inline SieveBitmap load_bitmap(const std::filesystem::path& dir, form_id d, std::uint64_t last, bool build_missing, unsigned workers) {
    if (auto path = find_cache(dir, d, last)) return read_bitmap(*path);
    if (!build_missing)
        throw cache_miss("no cached bitmap for d=" + to_string(d) + " covering [1, " + std::to_string(last) + "] in " + dir.string() +
                         "; run `quadcorr sieve --form " + to_string(d) + " --n " + std::to_string(last) + "` or pass --build-missing");
    SieveBitmap bitmap = build_sieve(d, last, workers);
    std::filesystem::create_directories(dir);
    write_bitmap(bitmap, cache_file(dir, d, last));
    return bitmap;
}

} // namespace quadcorr
