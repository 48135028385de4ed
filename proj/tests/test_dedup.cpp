#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcn/dedup.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

using namespace bcn;

namespace {

Frame constant_frame(std::size_t h, std::size_t w, std::uint8_t v)
{
    Frame f;
    f.height = h;
    f.width = w;
    f.pixels.assign(h * w, v);
    return f;
}

Frame random_frame(std::mt19937_64& rng, std::size_t h, std::size_t w)
{
    std::uniform_int_distribution<int> dist(0, 255);
    Frame f;
    f.height = h;
    f.width = w;
    f.pixels.resize(h * w);
    for (std::uint8_t& p : f.pixels) {
        p = static_cast<std::uint8_t>(dist(rng));
    }
    return f;
}

// independent per-pixel double-loop oracle, neighbor offsets written out
std::vector<std::uint8_t> census_oracle(const Frame& f)
{
    std::vector<std::uint8_t> out;
    const int order[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                             {1, 1},   {1, 0},  {1, -1}, {0, -1}};
    for (std::size_t r = 1; r + 1 < f.height; ++r) {
        for (std::size_t c = 1; c + 1 < f.width; ++c) {
            std::uint8_t mask = 0;
            for (int b = 0; b < 8; ++b) {
                const std::size_t rr = r + static_cast<std::size_t>(order[b][0]);
                const std::size_t cc = c + static_cast<std::size_t>(order[b][1]);
                if (f.pixels[rr * f.width + cc] < f.pixels[r * f.width + c]) {
                    mask = static_cast<std::uint8_t>(mask | (1u << (7 - b)));
                }
            }
            out.push_back(mask);
        }
    }
    return out;
}

} // namespace

TEST_CASE("census_transform: constant frame -> all zero")
{
    const auto d = census_transform(constant_frame(5, 6, 100));
    CHECK(d.size() == 3 * 4);
    CHECK(std::all_of(d.begin(), d.end(), [](std::uint8_t m) { return m == 0; }));
}

TEST_CASE("census_transform: bright center in dark 3x3 -> 0xFF")
{
    Frame f = constant_frame(3, 3, 10);
    f.pixels[4] = 200;
    const auto d = census_transform(f);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 0xFF);
}

TEST_CASE("census_transform: 4x4 image matches the hand oracle")
{
    Frame f;
    f.height = 4;
    f.width = 4;
    f.pixels = {10, 50, 20, 90, 40, 30, 60, 15, 70, 25, 35, 80, 5, 45, 55, 65};
    CHECK(census_transform(f) == census_oracle(f));

    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const Frame rf = random_frame(rng, 6, 5);
        CHECK(census_transform(rf) == census_oracle(rf));
    }
}

TEST_CASE("census_transform: too-small frames rejected")
{
    CHECK_THROWS_AS(census_transform(constant_frame(2, 5, 0)), Error);
    CHECK_THROWS_AS(census_transform(constant_frame(3, 2, 0)), Error);
}

TEST_CASE("lsh_hash: identical descriptors give identical codes")
{
    std::mt19937_64 rng(11);
    const Frame f = random_frame(rng, 8, 8);
    const auto d = census_transform(f);
    LshPlaneSet planes(5);
    const auto& p = planes.for_dim(d.size() * 8);
    CHECK(lsh_hash(d, p).code == lsh_hash(d, p).code);
}

TEST_CASE("lsh_hash: negated descriptor gives the complementary code")
{
    std::mt19937_64 rng(13);
    const Frame f = random_frame(rng, 8, 8);
    auto d = census_transform(f);
    std::vector<std::uint8_t> neg(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        neg[i] = static_cast<std::uint8_t>(~d[i]);
    }
    LshPlaneSet planes(5);
    const auto& p = planes.for_dim(d.size() * 8);
    // Gaussian planes: zero dot products have probability zero, so the
    // sign flips on every plane
    CHECK((lsh_hash(d, p).code ^ lsh_hash(neg, p).code) == ~0ULL);
}

TEST_CASE("lsh_hash: near-identical descriptors stay close in hamming")
{
    std::mt19937_64 rng(17);
    const Frame base = random_frame(rng, 12, 12);
    int worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Frame tweaked = base;
        // flip ~1% of pixels by a small amount
        std::uniform_int_distribution<std::size_t> pix(0, tweaked.pixels.size() - 1);
        for (int i = 0; i < 2; ++i) {
            const std::size_t at = pix(rng);
            tweaked.pixels[at] = static_cast<std::uint8_t>(tweaked.pixels[at] ^ 0x04);
        }
        LshPlaneSet planes(seed);
        const auto da = census_transform(base);
        const auto db = census_transform(tweaked);
        const auto& p = planes.for_dim(da.size() * 8);
        worst = std::max(worst, hamming_distance(lsh_hash(da, p), lsh_hash(db, p)));
    }
    CHECK(worst <= 8);
}

TEST_CASE("clip_distance: identical clips -> 0; complement -> 64")
{
    std::mt19937_64 rng(19);
    const Frame only = random_frame(rng, 8, 8);
    Clip a;
    a.id = "a";
    // the distance is a mean over all frame pairs, so clips must share every
    // frame to reach zero
    a.frames = {only, only};
    LshPlaneSet planes(3);
    CHECK(clip_distance(a, a, planes) == 0.0);

    // invert pixels frame-by-frame: census comparisons flip except on
    // exact ties, so build the complement clip from descriptors instead
    const auto d0 = census_transform(a.frames[0]);
    std::vector<std::uint8_t> neg(d0.size());
    for (std::size_t i = 0; i < d0.size(); ++i) {
        neg[i] = static_cast<std::uint8_t>(~d0[i]);
    }
    const auto& p = planes.for_dim(d0.size() * 8);
    CHECK(hamming_distance(lsh_hash(d0, p), lsh_hash(neg, p)) == 64);
}

TEST_CASE("clip_distance: mean over all frame pairs, hand-enumerated")
{
    std::mt19937_64 rng(23);
    Clip a, b;
    a.id = "a";
    b.id = "b";
    for (int i = 0; i < 2; ++i) {
        a.frames.push_back(random_frame(rng, 7, 7));
        b.frames.push_back(random_frame(rng, 7, 7));
    }
    LshPlaneSet planes(9);
    double expect = 0.0;
    std::vector<FrameHash> ca, cb;
    for (const Frame& f : a.frames) {
        const auto d = census_transform(f);
        ca.push_back(lsh_hash(d, planes.for_dim(d.size() * 8)));
    }
    for (const Frame& f : b.frames) {
        const auto d = census_transform(f);
        cb.push_back(lsh_hash(d, planes.for_dim(d.size() * 8)));
    }
    for (FrameHash ha : ca) {
        for (FrameHash hb : cb) {
            expect += hamming_distance(ha, hb);
        }
    }
    expect /= 4.0;
    CHECK(clip_distance(a, b, planes) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(clip_distance(b, a, planes) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dedup_filter: empty downstream retains everything")
{
    std::mt19937_64 rng(29);
    std::vector<Clip> corpus;
    for (int i = 0; i < 3; ++i) {
        corpus.push_back({"c" + std::to_string(i), {random_frame(rng, 8, 8)}});
    }
    LshPlaneSet planes(1);
    const DedupReport r = dedup_filter(corpus, {}, 2.0, planes);
    CHECK(r.retained_ids.size() == 3);
    CHECK(r.dropped.empty());
}

// structured frame with well-separated distinct intensities, so sigma=2
// noise rarely flips a census comparison
static Frame structured_frame(std::mt19937_64& rng)
{
    Frame f;
    f.height = 6;
    f.width = 5;
    std::vector<std::uint8_t> values;
    for (int v = 0; v < 30; ++v) {
        values.push_back(static_cast<std::uint8_t>(v * 8));
    }
    std::shuffle(values.begin(), values.end(), rng);
    f.pixels = values;
    return f;
}

TEST_CASE("dedup_filter: exact and noised duplicates dropped, unrelated retained")
{
    std::mt19937_64 rng(31);
    const Frame shared = structured_frame(rng);
    Frame noised = shared;
    std::normal_distribution<double> noise(0.0, 2.0);
    for (std::uint8_t& p : noised.pixels) {
        const int v = static_cast<int>(p) + static_cast<int>(std::lround(noise(rng)));
        p = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    std::vector<Clip> corpus{{"dup", {shared}}, {"noisy", {noised}}, {"fresh", {structured_frame(rng)}}};
    std::vector<Clip> downstream{{"d0", {shared}}};
    LshPlaneSet planes(7);
    const DedupReport r = dedup_filter(corpus, downstream, 2.0, planes);
    REQUIRE(r.dropped.size() == 2);
    CHECK(r.dropped[0].first == "dup");
    CHECK(r.dropped[0].second == 0.0);
    CHECK(r.dropped[1].first == "noisy");
    CHECK(r.retained_ids == std::vector<std::string>{"fresh"});
}

TEST_CASE("dedup_filter: monotone in the threshold, deterministic across threads")
{
    std::mt19937_64 rng(37);
    std::vector<Clip> corpus, downstream;
    for (int i = 0; i < 20; ++i) {
        corpus.push_back({"c" + std::to_string(i), {random_frame(rng, 8, 8)}});
    }
    for (int i = 0; i < 5; ++i) {
        downstream.push_back({"d" + std::to_string(i), {random_frame(rng, 8, 8)}});
    }
    // some corpus clips duplicate downstream ones
    corpus[3].frames = downstream[0].frames;
    corpus[11].frames = downstream[4].frames;

    LshPlaneSet planes(13);
    std::vector<std::size_t> retained_counts;
    for (double t : {0.5, 2.0, 8.0, 20.0, 40.0}) {
        const DedupReport r = dedup_filter(corpus, downstream, t, planes);
        retained_counts.push_back(r.retained_ids.size());
    }
    CHECK(std::is_sorted(retained_counts.rbegin(), retained_counts.rend()));

    const DedupReport seq = dedup_filter(corpus, downstream, 2.0, planes);
    const DedupReport par = dedup_filter(corpus, downstream, 2.0, planes, 4);
    CHECK(seq.retained_ids == par.retained_ids);
    CHECK(seq.dropped == par.dropped);
}

TEST_CASE("pgm round trip")
{
    std::mt19937_64 rng(41);
    const Frame f = random_frame(rng, 9, 7);
    write_pgm(f, "frame_test.pgm");
    const Frame g = read_pgm("frame_test.pgm");
    CHECK(g.height == f.height);
    CHECK(g.width == f.width);
    CHECK(g.pixels == f.pixels);
    std::remove("frame_test.pgm");

    std::ofstream bad("frame_bad.pgm");
    bad << "P2\n2 2\n255\n0 0 0 0\n";
    bad.close();
    CHECK_THROWS_AS(read_pgm("frame_bad.pgm"), Error);
    std::remove("frame_bad.pgm");
}
