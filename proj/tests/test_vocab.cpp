#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcn/rng.hpp"
#include "bcn/synth.hpp"
#include "bcn/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

using namespace bcn;

namespace {

std::vector<Vec> blob(std::mt19937_64& rng, const Vec& center, std::size_t n, double sigma)
{
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Vec p = center;
        for (double& x : p) {
            x += noise(rng);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

double partition_sse(const std::vector<Vec>& pts, const std::vector<int>& side)
{
    double sse = 0.0;
    for (int s = 0; s < 2; ++s) {
        Vec mean(pts.front().size(), 0.0);
        std::size_t n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (side[i] == s) {
                for (std::size_t d = 0; d < mean.size(); ++d) {
                    mean[d] += pts[i][d];
                }
                ++n;
            }
        }
        if (n == 0) {
            continue;
        }
        for (double& m : mean) {
            m /= static_cast<double>(n);
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (side[i] == s) {
                for (std::size_t d = 0; d < mean.size(); ++d) {
                    sse += (pts[i][d] - mean[d]) * (pts[i][d] - mean[d]);
                }
            }
        }
    }
    return sse;
}

} // namespace

TEST_CASE("kmeans: four far corners, k=4")
{
    const std::vector<Vec> pts{{0.0, 0.0}, {100.0, 0.0}, {0.0, 100.0}, {100.0, 100.0}};
    const ClusteringResult r = kmeans(pts, 4, 42);
    CHECK(r.sse == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<std::size_t> seen = r.assignments;
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("kmeans: two blobs match brute-force best 2-partition")
{
    std::mt19937_64 rng(5);
    std::vector<Vec> pts = blob(rng, {0.0, 0.0}, 3, 0.2);
    for (Vec& p : blob(rng, {10.0, 10.0}, 3, 0.2)) {
        pts.push_back(p);
    }
    // brute force over all 2^6 assignments
    double best = 1e300;
    for (int mask = 0; mask < 64; ++mask) {
        std::vector<int> side(6);
        for (int i = 0; i < 6; ++i) {
            side[i] = (mask >> i) & 1;
        }
        best = std::min(best, partition_sse(pts, side));
    }
    const ClusteringResult r = kmeans(pts, 2, 17);
    CHECK(r.sse == doctest::Approx(best).epsilon(1e-9));

    // centroids sit at the blob means
    for (const Vec& c : r.centroids) {
        const bool near_origin = std::abs(c[0]) < 1.0 && std::abs(c[1]) < 1.0;
        const bool near_far = std::abs(c[0] - 10.0) < 1.0 && std::abs(c[1] - 10.0) < 1.0;
        CHECK((near_origin || near_far));
    }
}

TEST_CASE("kmeans: k=1 centroid is the global mean")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<Vec> pts(10, Vec(4));
    Vec mean(4, 0.0);
    for (Vec& p : pts) {
        for (std::size_t d = 0; d < 4; ++d) {
            p[d] = dist(rng);
            mean[d] += p[d] / 10.0;
        }
    }
    const ClusteringResult r = kmeans(pts, 1, 0);
    for (std::size_t d = 0; d < 4; ++d) {
        CHECK(r.centroids[0][d] == doctest::Approx(mean[d]).epsilon(1e-12));
    }
}

TEST_CASE("kmeans: rejects k > n")
{
    CHECK_THROWS_AS(kmeans({{1.0, 2.0}}, 2, 0), Error);
    CHECK_THROWS_AS(kmeans({}, 1, 0), Error);
}

TEST_CASE("kmeans: centroids equal the mean of assigned points")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec> pts(30, Vec(3));
        for (Vec& p : pts) {
            for (double& x : p) {
                x = dist(rng);
            }
        }
        const ClusteringResult r = kmeans(pts, 4, static_cast<std::uint64_t>(rep));
        for (std::size_t c = 0; c < r.centroids.size(); ++c) {
            Vec mean(3, 0.0);
            std::size_t n = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (r.assignments[i] == c) {
                    for (std::size_t d = 0; d < 3; ++d) {
                        mean[d] += pts[i][d];
                    }
                    ++n;
                }
            }
            REQUIRE(n > 0);
            for (std::size_t d = 0; d < 3; ++d) {
                CHECK(r.centroids[c][d] ==
                      doctest::Approx(mean[d] / static_cast<double>(n)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("gap_statistic: single tight blob -> 1")
{
    std::mt19937_64 rng(31);
    const std::vector<Vec> pts = blob(rng, {1.0, -2.0, 0.5}, 60, 0.3);
    CHECK(gap_statistic(pts, 3, 10, 7) == 1);
}

TEST_CASE("gap_statistic: two well-separated blobs -> 2")
{
    std::mt19937_64 rng(37);
    std::vector<Vec> pts = blob(rng, {0.0, 0.0}, 40, 0.3);
    for (Vec& p : blob(rng, {12.0, 12.0}, 40, 0.3)) {
        pts.push_back(p);
    }
    CHECK(gap_statistic(pts, 4, 10, 7) == 2);
}

TEST_CASE("gap_statistic: degenerate inputs")
{
    CHECK(gap_statistic({{1.0, 1.0}}, 1, 5, 0) == 1);
    CHECK(gap_statistic({{1.0, 1.0}, {1.0, 1.0}}, 1, 5, 0) == 1);
}

TEST_CASE("build_query_vocabulary: dedupes and sorts")
{
    Corpus corpus;
    for (const char* q : {"zebra", "zebra", "b", "a"}) {
        CorpusSample s;
        s.query = q;
        s.title_feature = {1.0, 0.0};
        s.video_feature = {1.0, 0.0};
        corpus.push_back(s);
    }
    const QueryVocabulary v = build_query_vocabulary(corpus);
    CHECK(v.queries == std::vector<std::string>{"a", "b", "zebra"});
    CHECK(v.index_of.at("zebra") == 2);
}

TEST_CASE("build_text_vocabulary: identical titles collapse to one prototype")
{
    Corpus corpus;
    for (int i = 0; i < 5; ++i) {
        CorpusSample s;
        s.sample_id = "s" + std::to_string(i);
        s.query = "only";
        s.title_feature = {0.5, -1.5, 2.0};
        s.video_feature = {1.0, 0.0};
        corpus.push_back(s);
    }
    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 3, 5, 1);
    CHECK(tv.size() == 1);
    CHECK(tv.cluster_counts[0] == 1);
    CHECK(tv.prototypes[0] == Vec{0.5, -1.5, 2.0});
}

TEST_CASE("build_text_vocabulary: two queries, two blobs each")
{
    std::mt19937_64 rng(41);
    Corpus corpus;
    int id = 0;
    auto add = [&](const char* q, const Vec& center) {
        for (const Vec& t : blob(rng, center, 25, 0.2)) {
            CorpusSample s;
            s.sample_id = "s" + std::to_string(id++);
            s.query = q;
            s.title_feature = t;
            s.video_feature = {1.0, 1.0};
            corpus.push_back(s);
        }
    };
    add("qa", {0.0, 0.0});
    add("qa", {15.0, 15.0});
    add("qb", {-15.0, 5.0});
    add("qb", {5.0, -15.0});

    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 5, 10, 3);
    CHECK(tv.size() == 4);
    CHECK(tv.index_sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(tv.index_sets[1] == std::vector<std::size_t>{2, 3});
    CHECK(tv.cluster_counts == std::vector<std::size_t>{2, 2});
}

TEST_CASE("build_text_vocabulary: singleton queries give prototype = title")
{
    Corpus corpus;
    for (int k = 0; k < 4; ++k) {
        CorpusSample s;
        s.sample_id = "s" + std::to_string(k);
        s.query = "q" + std::to_string(k);
        s.title_feature = {static_cast<double>(k), 1.0};
        s.video_feature = {1.0, 0.0};
        corpus.push_back(s);
    }
    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 8, 5, 0);
    CHECK(tv.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(tv.prototypes[k] == Vec{static_cast<double>(k), 1.0});
    }
}

TEST_CASE("build_text_vocabulary: invariants on random corpora, thread independence")
{
    SynthConfig cfg;
    cfg.n_queries = 6;
    cfg.samples_per_mode = 20;
    cfg.seed = 99;
    const Corpus corpus = generate(cfg);
    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 6, 8, 5);

    // partition + count invariants
    std::size_t total = 0;
    std::vector<bool> covered(tv.size(), false);
    for (std::size_t k = 0; k < qv.size(); ++k) {
        CHECK(tv.cluster_counts[k] >= 1);
        CHECK(tv.index_sets[k].size() == tv.cluster_counts[k]);
        total += tv.cluster_counts[k];
        for (std::size_t i : tv.index_sets[k]) {
            CHECK(!covered[i]);
            covered[i] = true;
            CHECK(tv.query_of_prototype[i] == k);
        }
    }
    CHECK(total == tv.size());
    CHECK(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
    for (const Vec& p : tv.prototypes) {
        double norm = 0.0;
        for (double x : p) {
            CHECK(std::isfinite(x));
            norm += x * x;
        }
        CHECK(norm > 0.0);
    }

    // same seed, 4 threads -> identical result
    const TextVocabulary tv4 = build_text_vocabulary(corpus, qv, 6, 8, 5, 4);
    CHECK(tv == tv4);
}

TEST_CASE("build_text_vocabulary: missing query samples is an error")
{
    Corpus corpus;
    CorpusSample s;
    s.sample_id = "s0";
    s.query = "present";
    s.title_feature = {1.0, 2.0};
    s.video_feature = {1.0, 0.0};
    corpus.push_back(s);
    QueryVocabulary qv = build_query_vocabulary(corpus);
    qv.queries.push_back("absent");
    qv.index_of["absent"] = 1;
    CHECK_THROWS_AS(build_text_vocabulary(corpus, qv, 3, 5, 0), Error);
}

TEST_CASE("vocabulary serialization round-trips bit-exactly")
{
    SynthConfig cfg;
    cfg.n_queries = 4;
    cfg.samples_per_mode = 15;
    cfg.seed = 123;
    const Corpus corpus = generate(cfg);
    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 5, 6, 11);

    const std::string path = "vocab_roundtrip.bin";
    save_vocabulary(qv, tv, path);
    QueryVocabulary qv2;
    TextVocabulary tv2;
    load_vocabulary(path, qv2, tv2);
    CHECK(qv2.queries == qv.queries);
    CHECK(tv2 == tv);

    // write again from the loaded copy: identical bytes
    const std::string path2 = "vocab_roundtrip2.bin";
    save_vocabulary(qv2, tv2, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}
