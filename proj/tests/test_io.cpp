#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "gsu/gsu1.hpp"
#include "gsu/png_io.hpp"
#include "gsu/pointseq.hpp"

using namespace gsu;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const char* name) {
    auto dir = fs::temp_directory_path() / "gsu_io_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("GSU1 write -> read -> write produces identical bytes") {
    io::Container c;
    std::vector<float> f = {1.5f, -2.25f, 0.0f, 3.0f, 4.0f, 5.0f};
    c.add(io::Entry::f32("depth", {2, 1, 1, 3}, f.data()));
    double d = 0.25;
    c.add(io::Entry::f64("meta/z_min", {1}, &d));
    std::vector<uint8_t> m = {0, 1, 1, 0};
    c.add(io::Entry::u8("mask", {4}, m.data()));
    c.add(io::Entry::text("recipe", "V1/2 P1/6"));

    auto bytes1 = c.to_bytes();
    auto c2 = io::Container::from_bytes(bytes1);
    auto bytes2 = c2.to_bytes();
    CHECK(bytes1 == bytes2);

    CHECK(c2.at("depth").as_f32() == f);
    CHECK(c2.at("meta/z_min").as_f64()[0] == 0.25);
    CHECK(c2.at("mask").as_u8() == m);
    CHECK(c2.at("recipe").as_text() == "V1/2 P1/6");
}

TEST_CASE("GSU1 header layout is bit-exact") {
    io::Container c;
    std::vector<uint8_t> payload = {7};
    c.add(io::Entry::u8("a", {1}, payload.data()));
    auto b = c.to_bytes();
    // magic, version u16=1, count u32=1, name len u16=1, 'a',
    // dtype u8=2, rank u8=1, dim u64=1, payload
    std::vector<uint8_t> expect = {'G', 'S', 'U', '1', 1, 0, 1, 0, 0, 0, 1, 0,
                                   'a', 2,   1,   1,  0, 0, 0, 0, 0, 0, 0, 7};
    CHECK(b == expect);
}

TEST_CASE("GSU1 rejects duplicates, bad magic and truncation") {
    io::Container c;
    std::vector<uint8_t> one = {1};
    c.add(io::Entry::u8("x", {1}, one.data()));
    CHECK_THROWS_AS(c.add(io::Entry::u8("x", {1}, one.data())), Error);

    std::vector<uint8_t> junk = {'N', 'O', 'P', 'E'};
    CHECK_THROWS_AS(io::Container::from_bytes(junk), Error);

    auto good = c.to_bytes();
    good.pop_back();
    CHECK_THROWS_AS(io::Container::from_bytes(good), Error);
}

TEST_CASE("point sequence round-trips through GSUP") {
    geom::GaitPointSequence seq;
    seq.frames = {{{1.0f, 2.0f, 3.0f}, {-1.0f, 0.5f, 0.25f}}, {{4.0f, 5.0f, 6.0f}}};
    auto path = tmp_path("seq.gsup");
    io::write_pointseq(path, seq);
    auto back = io::read_pointseq(path);
    REQUIRE(back.frames.size() == 2);
    CHECK(back.frames[0].size() == 2);
    CHECK(back.frames[1].size() == 1);
    CHECK(back.frames[0][1][2] == 0.25f);

    // second write is byte-identical
    auto path2 = tmp_path("seq2.gsup");
    io::write_pointseq(path2, back);
    CHECK(io::read_file_bytes(path) == io::read_file_bytes(path2));
}

TEST_CASE("GSUP rejects non-finite coordinates") {
    auto path = tmp_path("bad.gsup");
    geom::GaitPointSequence seq;
    seq.frames = {{{1.0f, 2.0f, 3.0f}}};
    io::write_pointseq(path, seq);
    auto bytes = io::read_file_bytes(path);
    // poison the z coordinate with a NaN pattern
    for (int i = 1; i <= 4; ++i) bytes[bytes.size() - i] = 0xFF;
    io::write_file_bytes(path, bytes);
    CHECK_THROWS_AS(io::read_pointseq(path), Error);
}

TEST_CASE("grayscale png has a valid signature and header") {
    auto path = tmp_path("img.png");
    std::vector<uint8_t> px(16 * 8);
    for (size_t i = 0; i < px.size(); ++i) px[i] = static_cast<uint8_t>(i);
    io::write_gray_png(path, 16, 8, px);
    auto bytes = io::read_file_bytes(path);
    REQUIRE(bytes.size() > 33);
    const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    CHECK(std::equal(sig, sig + 8, bytes.begin()));
    // IHDR width/height are big-endian at offsets 16 and 20
    CHECK(bytes[19] == 16);
    CHECK(bytes[23] == 8);
    CHECK(bytes[24] == 8);  // bit depth
    CHECK(bytes[25] == 0);  // grayscale
}
