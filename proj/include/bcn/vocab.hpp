#pragma once

#include "bcn/numerics.hpp"
#include "bcn/synth.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bcn {

struct QueryVocabulary {
    std::vector<std::string> queries; // sorted, index 0..K-1
    std::map<std::string, std::size_t> index_of;

    std::size_t size() const { return queries.size(); }
};

struct TextVocabulary {
    std::vector<Vec> prototypes;                 // M centroids, uniform dimension
    std::vector<std::size_t> query_of_prototype; // i -> k
    std::vector<std::vector<std::size_t>> index_sets; // k -> sorted I_k
    std::vector<std::size_t> cluster_counts;     // k -> m_k

    std::size_t size() const { return prototypes.size(); }
    std::size_t dim() const { return prototypes.empty() ? 0 : prototypes.front().size(); }

    bool operator==(const TextVocabulary&) const = default;
};

struct ClusteringResult {
    std::vector<std::size_t> assignments;
    std::vector<Vec> centroids;
    double sse = 0.0;
};

ClusteringResult kmeans(const std::vector<Vec>& points, std::size_t k,
                        std::uint64_t seed, std::size_t max_iters = 100);

std::size_t gap_statistic(const std::vector<Vec>& points, std::size_t k_max,
                          std::size_t n_refs, std::uint64_t seed);

QueryVocabulary build_query_vocabulary(const Corpus& corpus);

TextVocabulary build_text_vocabulary(const Corpus& corpus, const QueryVocabulary& qvocab,
                                     std::size_t k_max = 8, std::size_t n_refs = 10,
                                     std::uint64_t seed = 0, std::size_t threads = 1);

void save_vocabulary(const QueryVocabulary& qvocab, const TextVocabulary& tvocab,
                     const std::string& path);
void load_vocabulary(const std::string& path, QueryVocabulary& qvocab, TextVocabulary& tvocab);

} // namespace bcn
