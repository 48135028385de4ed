#pragma once

#include "bcn/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bcn {

struct CorpusSample {
    std::string sample_id;
    std::string query;
    Vec video_feature;
    Vec title_feature;
    int latent_class = -1; // ground truth (query, mode) id; -1 when unknown

    bool operator==(const CorpusSample&) const = default;
};

using Corpus = std::vector<CorpusSample>;

struct SynthConfig {
    std::size_t n_queries = 20;
    std::size_t modes_min = 1;
    std::size_t modes_max = 3;
    std::size_t samples_per_mode = 50;
    std::size_t feature_dim = 12;
    std::size_t title_dim = 12;
    double isomorphism_rate = 0.3; // title drawn from another query's mode template
    double polysemy_separation = 6.0; // expected distance between mode centers
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

Corpus generate(const SynthConfig& config);

void export_corpus(const Corpus& corpus, const std::string& path);
Corpus import_corpus(const std::string& path);

} // namespace bcn
