#include "bcn/vocab.hpp"

#include "bcn/error.hpp"
#include "bcn/io.hpp"
#include "bcn/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <thread>

namespace bcn {

namespace {

using json = nlohmann::json;

double sq_distance(const Vec& a, const Vec& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// k-means++ seeding.
std::vector<Vec> seed_centroids(const std::vector<Vec>& points, std::size_t k,
                                std::mt19937_64& rng)
{
    std::vector<Vec> centroids;
    centroids.reserve(k);
    std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
    centroids.push_back(points[first(rng)]);

    std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], sq_distance(points[i], centroids.back()));
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            // all points coincide with an existing centroid
            std::uniform_int_distribution<std::size_t> any(0, points.size() - 1);
            chosen = any(rng);
        }
        centroids.push_back(points[chosen]);
    }
    return centroids;
}

double within_cluster_sse(const std::vector<Vec>& points, std::size_t k,
                          std::uint64_t seed)
{
    return kmeans(points, k, seed).sse;
}

} // namespace

ClusteringResult kmeans(const std::vector<Vec>& points, std::size_t k,
                        std::uint64_t seed, std::size_t max_iters)
{
    if (points.empty()) {
        throw Error(ErrorKind::InvalidInput, "kmeans: no points");
    }
    if (k < 1 || k > points.size()) {
        throw Error(ErrorKind::InvalidInput, "kmeans: k outside [1, n]");
    }
    const std::size_t dim = points.front().size();
    for (const Vec& p : points) {
        if (p.size() != dim) {
            throw Error(ErrorKind::InvalidInput, "kmeans: non-uniform dimension");
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<Vec> centroids = seed_centroids(points, k, rng);
    std::vector<std::size_t> assignments(points.size(), 0);
    double prev_sse = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = (iter == 0);
        double sse = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignments[i] != best) {
                assignments[i] = best;
                changed = true;
            }
            sse += best_d;
        }
        assert(sse <= prev_sse + 1e-9 * (1.0 + prev_sse));
        prev_sse = sse;
        if (!changed) {
            break;
        }

        std::vector<Vec> sums(k, Vec(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < dim; ++d) {
                sums[assignments[i]][d] += points[i][d];
            }
            ++counts[assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed empty cluster with the point farthest from its centroid
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double d = sq_distance(points[i], centroids[assignments[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids[c] = points[far];
                assignments[far] = c;
                prev_sse = std::numeric_limits<double>::infinity();
            } else {
                for (std::size_t d = 0; d < dim; ++d) {
                    centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                }
            }
        }
    }

    // final exact centroids + sse for the returned assignment
    std::vector<Vec> sums(k, Vec(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            sums[assignments[i]][d] += points[i][d];
        }
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sse += sq_distance(points[i], centroids[assignments[i]]);
    }
    return ClusteringResult{std::move(assignments), std::move(centroids), sse};
}

std::size_t gap_statistic(const std::vector<Vec>& points, std::size_t k_max,
                          std::size_t n_refs, std::uint64_t seed)
{
    if (points.size() < 2) {
        return 1;
    }
    if (k_max < 1 || k_max > points.size() || n_refs < 1) {
        throw Error(ErrorKind::InvalidInput, "gap_statistic: bad k_max or n_refs");
    }
    const std::size_t dim = points.front().size();

    Vec lo(dim, std::numeric_limits<double>::infinity());
    Vec hi(dim, -std::numeric_limits<double>::infinity());
    for (const Vec& p : points) {
        for (std::size_t d = 0; d < dim; ++d) {
            lo[d] = std::min(lo[d], p[d]);
            hi[d] = std::max(hi[d], p[d]);
        }
    }

    // reference sets shared across k
    std::vector<std::vector<Vec>> refs(n_refs);
    for (std::size_t b = 0; b < n_refs; ++b) {
        std::mt19937_64 rng(mix_seed(seed, 1000 + b));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        refs[b].resize(points.size(), Vec(dim));
        for (Vec& p : refs[b]) {
            for (std::size_t d = 0; d < dim; ++d) {
                p[d] = lo[d] + unit(rng) * (hi[d] - lo[d]);
            }
        }
    }

    auto safe_log = [](double w) { return std::log(std::max(w, 1e-300)); };

    std::vector<double> gap(k_max + 1, 0.0);
    std::vector<double> sk(k_max + 1, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double log_wk = safe_log(within_cluster_sse(points, k, mix_seed(seed, k)));
        std::vector<double> log_ref(n_refs);
        double mean = 0.0;
        for (std::size_t b = 0; b < n_refs; ++b) {
            log_ref[b] = safe_log(within_cluster_sse(refs[b], k, mix_seed(seed, 500 + k)));
            mean += log_ref[b];
        }
        mean /= static_cast<double>(n_refs);
        double var = 0.0;
        for (double l : log_ref) {
            var += (l - mean) * (l - mean);
        }
        const double sd = std::sqrt(var / static_cast<double>(n_refs));
        gap[k] = mean - log_wk;
        sk[k] = sd * std::sqrt(1.0 + 1.0 / static_cast<double>(n_refs));
    }

    for (std::size_t k = 1; k + 1 <= k_max; ++k) {
        if (gap[k] >= gap[k + 1] - sk[k + 1]) {
            return k;
        }
    }
    return k_max;
}

QueryVocabulary build_query_vocabulary(const Corpus& corpus)
{
    if (corpus.empty()) {
        throw Error(ErrorKind::InvalidInput, "build_query_vocabulary: empty corpus");
    }
    std::set<std::string> distinct;
    for (const CorpusSample& s : corpus) {
        distinct.insert(s.query);
    }
    QueryVocabulary v;
    v.queries.assign(distinct.begin(), distinct.end());
    for (std::size_t k = 0; k < v.queries.size(); ++k) {
        v.index_of[v.queries[k]] = k;
    }
    return v;
}

TextVocabulary build_text_vocabulary(const Corpus& corpus, const QueryVocabulary& qvocab,
                                     std::size_t k_max, std::size_t n_refs,
                                     std::uint64_t seed, std::size_t threads)
{
    const std::size_t K = qvocab.size();
    std::vector<std::vector<Vec>> titles_by_query(K);
    for (const CorpusSample& s : corpus) {
        auto it = qvocab.index_of.find(s.query);
        if (it == qvocab.index_of.end()) {
            throw Error(ErrorKind::UnknownQuery,
                        "build_text_vocabulary: query not in vocabulary: " + s.query);
        }
        titles_by_query[it->second].push_back(s.title_feature);
    }
    for (std::size_t k = 0; k < K; ++k) {
        if (titles_by_query[k].empty()) {
            throw Error(ErrorKind::MissingQuerySamples,
                        "no samples for query index " + std::to_string(k));
        }
    }

    // Per-query jobs are independent; each is seeded from (seed, k) so the
    // result does not depend on the thread count.
    std::vector<ClusteringResult> results(K);
    auto run_query = [&](std::size_t k) {
        const std::vector<Vec>& titles = titles_by_query[k];
        const std::uint64_t qseed = mix_seed(seed, k);
        const std::size_t cap = std::min(k_max, titles.size());
        const std::size_t m = std::min(gap_statistic(titles, cap, n_refs, qseed), titles.size());
        results[k] = kmeans(titles, m, mix_seed(qseed, 777));
    };
    if (threads <= 1) {
        for (std::size_t k = 0; k < K; ++k) {
            run_query(k);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t t = 0; t < std::min(threads, K); ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < K; k = next.fetch_add(1)) {
                    run_query(k);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    TextVocabulary tv;
    tv.index_sets.resize(K);
    tv.cluster_counts.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const ClusteringResult& r = results[k];
        tv.cluster_counts[k] = r.centroids.size();
        for (const Vec& c : r.centroids) {
            tv.index_sets[k].push_back(tv.prototypes.size());
            tv.query_of_prototype.push_back(k);
            tv.prototypes.push_back(c);
        }
    }
    return tv;
}

void save_vocabulary(const QueryVocabulary& qvocab, const TextVocabulary& tvocab,
                     const std::string& path)
{
    Container c;
    json header = {{"format", "bcn-vocab"},
                   {"version", 1},
                   {"K", qvocab.size()},
                   {"M", tvocab.size()},
                   {"dim", tvocab.dim()},
                   {"queries", qvocab.queries},
                   {"cluster_counts", tvocab.cluster_counts},
                   {"index_sets", tvocab.index_sets}};
    c.text = header.dump();
    for (const Vec& p : tvocab.prototypes) {
        append_doubles(c.blob, p);
    }
    write_container(path, c);
}

void load_vocabulary(const std::string& path, QueryVocabulary& qvocab, TextVocabulary& tvocab)
{
    const Container c = read_container(path);
    json header = json::parse(c.text, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "bcn-vocab") {
        throw Error(ErrorKind::ParseError, path + ": not a vocabulary file");
    }
    qvocab = QueryVocabulary{};
    tvocab = TextVocabulary{};
    header.at("queries").get_to(qvocab.queries);
    for (std::size_t k = 0; k < qvocab.queries.size(); ++k) {
        qvocab.index_of[qvocab.queries[k]] = k;
    }
    header.at("cluster_counts").get_to(tvocab.cluster_counts);
    header.at("index_sets").get_to(tvocab.index_sets);
    const std::size_t M = header.at("M").get<std::size_t>();
    const std::size_t dim = header.at("dim").get<std::size_t>();
    if (c.blob.size() != M * dim * sizeof(double)) {
        throw Error(ErrorKind::ParseError, path + ": prototype blob size mismatch");
    }
    tvocab.query_of_prototype.resize(M);
    for (std::size_t k = 0; k < tvocab.index_sets.size(); ++k) {
        for (std::size_t i : tvocab.index_sets[k]) {
            tvocab.query_of_prototype[i] = k;
        }
    }
    std::size_t offset = 0;
    tvocab.prototypes.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
        tvocab.prototypes.push_back(read_doubles(c.blob, offset, dim));
    }
}

} // namespace bcn
