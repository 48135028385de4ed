#pragma once

#include "bcn/numerics.hpp"
#include "bcn/synth.hpp"
#include "bcn/vocab.hpp"

#include <string>
#include <vector>

namespace bcn {

struct SupervisionPair {
    std::string sample_id;
    ProbVec y_q; // one-hot over K
    ProbVec y_t; // soft over M
};

ProbVec primary_query_supervision(const CorpusSample& sample, const QueryVocabulary& qvocab);

// Tempered softmax over cosine similarities against every prototype.
// sharpen=true reads the 1/M temperature as dividing the logits by 1/M
// (scaling by M); sharpen=false applies the flattening reading.
ProbVec primary_text_supervision(const Vec& title_feature, const TextVocabulary& tvocab,
                                 bool sharpen = true);

// Per-sample supervision computed once after vocabulary construction,
// aligned with corpus order.
struct SupervisionCache {
    std::vector<std::string> sample_ids;
    std::vector<std::size_t> query_index; // aligned with sample_ids
    DenseMatrix y_t;                      // n x M

    ProbVec y_q(std::size_t row, std::size_t K) const;
    ProbVec y_t_row(std::size_t row) const;
};

SupervisionCache build_supervision_cache(const Corpus& corpus, const QueryVocabulary& qvocab,
                                         const TextVocabulary& tvocab, bool sharpen = true);

void save_supervision_cache(const SupervisionCache& cache, const std::string& path);
SupervisionCache load_supervision_cache(const std::string& path);

} // namespace bcn
