#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "quadcorr/bitmap_cache.hpp"
#include "quadcorr/bitmap_io.hpp"

using namespace quadcorr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("quadcorr_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST(BitmapIo, SizeArithmetic) {
    EXPECT_EQ(bitmap_file_size(1'000'000), 22U + 125'000U + 4U);
    EXPECT_EQ(bitmap_file_size(1), 22U + 1U + 4U);
}

TEST(BitmapIo, HeaderLayout) {
    const SieveBitmap b = build_sieve(form_id::d7, 70, 1);
    const auto bytes = encode_bitmap(b);
    ASSERT_EQ(bytes.size(), bitmap_file_size(70));
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QCSV");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 7);
    EXPECT_EQ(bytes[6], 1); // start, little endian
    EXPECT_EQ(bytes[14], 70);
    // first data byte: integers 1..8, LSB first; for x^2 + 7 y^2 those are 1, 4, 7, 8
    EXPECT_EQ(bytes[22], 0b1100'1001);
}

TEST(BitmapIo, RoundTripsForEveryForm) {
    const fs::path dir = scratch_dir("roundtrip");
    for (auto d : all_forms)
        for (std::uint64_t n : {1ULL, 63ULL, 64ULL, 65ULL, 100'003ULL}) {
            const SieveBitmap b = build_sieve(d, n, 2);
            const fs::path p = dir / "b.qcsv";
            write_bitmap(b, p);
            EXPECT_EQ(fs::file_size(p), bitmap_file_size(n));
            EXPECT_EQ(read_bitmap(p), b);
            EXPECT_FALSE(fs::exists(dir / "b.qcsv.tmp"));
        }
    fs::remove_all(dir);
}

TEST(BitmapIo, CorruptionDetected) {
    const fs::path dir = scratch_dir("corrupt");
    const fs::path p = dir / "b.qcsv";
    write_bitmap(build_sieve(form_id::d1, 10'000, 1), p);
    const auto good = slurp(p);

    auto flipped = good;
    flipped[500] ^= 0x10;
    spit(p, flipped);
    EXPECT_THROW(read_bitmap(p), format_error);

    auto magic = good;
    magic[0] = 'X';
    spit(p, magic);
    EXPECT_THROW(read_bitmap(p), format_error);

    auto version = good;
    version[4] = 2;
    spit(p, version);
    EXPECT_THROW(read_bitmap(p), format_error);

    auto truncated = good;
    truncated.resize(truncated.size() - 10);
    spit(p, truncated);
    EXPECT_THROW(read_bitmap(p), format_error);

    spit(p, {});
    EXPECT_THROW(read_bitmap(p), format_error);
    fs::remove_all(dir);
}

TEST(BitmapCache, FindsSmallestCoveringFile) {
    const fs::path dir = scratch_dir("cache");
    write_bitmap(build_sieve(form_id::d1, 500, 1), cache_file(dir, form_id::d1, 500));
    write_bitmap(build_sieve(form_id::d1, 2000, 1), cache_file(dir, form_id::d1, 2000));
    EXPECT_EQ(find_cache(dir, form_id::d1, 400), cache_file(dir, form_id::d1, 500));
    EXPECT_EQ(find_cache(dir, form_id::d1, 501), cache_file(dir, form_id::d1, 2000));
    EXPECT_FALSE(find_cache(dir, form_id::d1, 2001).has_value());
    EXPECT_FALSE(find_cache(dir, form_id::d2, 10).has_value());
    EXPECT_THROW(load_bitmap(dir, form_id::d2, 100, false, 1), cache_miss);
    const SieveBitmap built = load_bitmap(dir, form_id::d2, 100, true, 1);
    EXPECT_EQ(built.length(), 100U);
    EXPECT_TRUE(fs::exists(cache_file(dir, form_id::d2, 100)));
    fs::remove_all(dir);
}
