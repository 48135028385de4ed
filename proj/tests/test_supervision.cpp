#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcn/supervision.hpp"
#include "bcn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

using namespace bcn;

namespace {

QueryVocabulary small_qvocab()
{
    QueryVocabulary v;
    v.queries = {"a", "b", "c"};
    for (std::size_t k = 0; k < 3; ++k) {
        v.index_of[v.queries[k]] = k;
    }
    return v;
}

TextVocabulary vocab_from(std::vector<Vec> prototypes, std::vector<std::size_t> counts)
{
    TextVocabulary tv;
    tv.prototypes = std::move(prototypes);
    tv.cluster_counts = std::move(counts);
    std::size_t next = 0;
    for (std::size_t k = 0; k < tv.cluster_counts.size(); ++k) {
        std::vector<std::size_t> set;
        for (std::size_t j = 0; j < tv.cluster_counts[k]; ++j) {
            set.push_back(next);
            tv.query_of_prototype.push_back(k);
            ++next;
        }
        tv.index_sets.push_back(std::move(set));
    }
    return tv;
}

} // namespace

TEST_CASE("primary_query_supervision: one-hot at the query index")
{
    const QueryVocabulary v = small_qvocab();
    CorpusSample s;
    s.query = "a";
    CHECK(primary_query_supervision(s, v).values() == Vec{1.0, 0.0, 0.0});
    s.query = "c";
    CHECK(primary_query_supervision(s, v).values() == Vec{0.0, 0.0, 1.0});
    s.query = "zzz";
    CHECK_THROWS_AS(primary_query_supervision(s, v), Error);
}

TEST_CASE("primary_text_supervision: exact cosine 1/0 case, M=2")
{
    const TextVocabulary tv = vocab_from({{1.0, 0.0}, {0.0, 1.0}}, {1, 1});
    const ProbVec y = primary_text_supervision({1.0, 0.0}, tv, true);
    const double m = 2.0;
    const double e_m = std::exp(m), e_0 = 1.0;
    CHECK(y[0] == doctest::Approx(e_m / (e_m + e_0)).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(e_0 / (e_m + e_0)).epsilon(1e-12));
}

TEST_CASE("primary_text_supervision: identical prototypes give uniform")
{
    const TextVocabulary tv = vocab_from({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}, {1, 1, 1});
    const ProbVec y = primary_text_supervision({0.3, 2.0}, tv, true);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(y[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("primary_text_supervision: matches softmax oracle on fixed cosines")
{
    // prototypes chosen so the cosines against (1,0) are 0.9, 0.1, -0.2
    auto dir = [](double c) {
        return Vec{c, std::sqrt(1.0 - c * c)};
    };
    const TextVocabulary tv = vocab_from({dir(0.9), dir(0.1), dir(-0.2)}, {1, 1, 1});
    const ProbVec y = primary_text_supervision({1.0, 0.0}, tv, true);
    // softmax of M * (0.9, 0.1, -0.2) = (2.7, 0.3, -0.6)
    long double sum = 0.0L;
    std::vector<long double> e{expl(2.7L), expl(0.3L), expl(-0.6L)};
    for (long double v : e) {
        sum += v;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(y[i] == doctest::Approx(static_cast<double>(e[i] / sum)).epsilon(1e-10));
    }
}

TEST_CASE("primary_text_supervision: scale invariance in the title feature")
{
    const TextVocabulary tv =
        vocab_from({{1.0, 0.5, 0.0}, {-0.5, 1.0, 0.2}, {0.1, -0.3, 1.0}}, {2, 1});
    const Vec title{0.4, -0.8, 0.3};
    const ProbVec a = primary_text_supervision(title, tv, true);
    for (double scale : {0.001, 3.0, 1e6}) {
        Vec scaled = title;
        for (double& x : scaled) {
            x *= scale;
        }
        const ProbVec b = primary_text_supervision(scaled, tv, true);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a[i] - b[i]) < 1e-12);
        }
    }
}

TEST_CASE("primary_text_supervision: concentrates on the owning query's index set")
{
    // query 0 owns prototypes 0,1; its title sits at prototype 0 and the
    // other prototypes point away
    const TextVocabulary tv = vocab_from(
        {{1.0, 0.0, 0.0}, {0.8, 0.6, 0.0}, {-1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}}, {2, 2});
    const ProbVec y = primary_text_supervision({1.0, 0.0, 0.0}, tv, true);
    const double own = y[0] + y[1];
    const double rest = y[2] + y[3];
    CHECK(own > rest);
}

TEST_CASE("primary_text_supervision: error paths")
{
    const TextVocabulary tv = vocab_from({{1.0, 0.0}}, {1});
    CHECK_THROWS_AS(primary_text_supervision({1.0, 0.0, 0.0}, tv, true), Error);
    CHECK_THROWS_AS(primary_text_supervision({0.0, 0.0}, tv, true), Error);
}

TEST_CASE("flattening temperature reading stays available")
{
    const TextVocabulary tv = vocab_from({{1.0, 0.0}, {0.0, 1.0}}, {1, 1});
    const ProbVec sharp = primary_text_supervision({1.0, 0.0}, tv, true);
    const ProbVec flat = primary_text_supervision({1.0, 0.0}, tv, false);
    CHECK(sharp[0] > flat[0]); // sharpening concentrates more mass
    CHECK(flat[0] > 0.5);      // but both prefer the matching prototype
}

TEST_CASE("supervision cache round-trips bit-exactly")
{
    SynthConfig cfg;
    cfg.n_queries = 3;
    cfg.samples_per_mode = 10;
    cfg.seed = 77;
    const Corpus corpus = generate(cfg);
    const QueryVocabulary qv = build_query_vocabulary(corpus);
    const TextVocabulary tv = build_text_vocabulary(corpus, qv, 4, 5, 2);
    const SupervisionCache cache = build_supervision_cache(corpus, qv, tv);

    CHECK(cache.sample_ids.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const ProbVec yt = cache.y_t_row(i);
        double sum = std::accumulate(yt.values().begin(), yt.values().end(), 0.0);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t j = 0; j < yt.size(); ++j) {
            CHECK(yt[j] > 0.0);
        }
    }

    const std::string path = "sup_cache.bin";
    save_supervision_cache(cache, path);
    const SupervisionCache loaded = load_supervision_cache(path);
    CHECK(loaded.sample_ids == cache.sample_ids);
    CHECK(loaded.query_index == cache.query_index);
    CHECK(loaded.y_t == cache.y_t);
    std::remove(path.c_str());
}
