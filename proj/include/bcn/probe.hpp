#pragma once

#include "bcn/model.hpp"
#include "bcn/synth.hpp"

#include <cstdint>
#include <vector>

namespace bcn {

struct ProbeResult {
    double top1 = 0.0;
    double top5 = 0.0;
    std::size_t n_train = 0;
    std::size_t n_eval = 0;
    double reg = 0.0;
    std::uint64_t seed = 0;
};

// Frozen-encoder features, one row per sample.
DenseMatrix extract_features(const ModelParams& params, const Corpus& corpus);

struct LinearClassifier {
    DenseMatrix weight; // dim x classes
    Vec bias;           // classes
};

// Multinomial logistic regression, full-batch gradient descent with L2
// regularization; stops at gradient norm 1e-5 or the iteration cap.
LinearClassifier train_linear_probe(const DenseMatrix& features,
                                    const std::vector<int>& labels, double reg,
                                    std::uint64_t seed, std::size_t max_iters = 500);

ProbeResult evaluate(const LinearClassifier& clf, const DenseMatrix& features,
                     const std::vector<int>& labels);

} // namespace bcn
