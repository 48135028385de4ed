#include "bcn/probe.hpp"

#include "bcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bcn {

DenseMatrix extract_features(const ModelParams& params, const Corpus& corpus)
{
    DenseMatrix out = DenseMatrix::zeros(corpus.size(), params.feature_dim());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const ForwardRecord rec = forward(params, corpus[i].video_feature);
        std::copy(rec.f_v.begin(), rec.f_v.end(), out.row(i));
    }
    return out;
}

LinearClassifier train_linear_probe(const DenseMatrix& features,
                                    const std::vector<int>& labels, double reg,
                                    std::uint64_t seed, std::size_t max_iters)
{
    (void)seed; // zero-initialized convex problem; kept for interface stability
    if (features.rows != labels.size() || features.rows == 0) {
        throw Error(ErrorKind::InvalidInput, "train_linear_probe: shape mismatch");
    }
    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw Error(ErrorKind::DegenerateLabels, "train_linear_probe: fewer than 2 classes");
    }
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    const std::size_t classes = static_cast<std::size_t>(*distinct.rbegin()) + 1;

    LinearClassifier clf;
    clf.weight = DenseMatrix::zeros(d, classes);
    clf.bias.assign(classes, 0.0);

    // softmax CE is (1/2)-smooth in the logits; 1/L step size is safe
    double mean_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0; // bias column
        const double* x = features.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            s += x[j] * x[j];
        }
        mean_sq += s;
    }
    mean_sq /= static_cast<double>(n);
    const double lr = 1.0 / (0.5 * mean_sq + reg);
    const double beta = 0.9;

    DenseMatrix gw = DenseMatrix::zeros(d, classes);
    Vec gb(classes, 0.0);
    DenseMatrix mw = DenseMatrix::zeros(d, classes);
    Vec mb(classes, 0.0);
    Vec logits(classes);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        std::fill(gw.data.begin(), gw.data.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = features.row(i);
            std::fill(logits.begin(), logits.end(), 0.0);
            for (std::size_t j = 0; j < d; ++j) {
                const double* wr = clf.weight.row(j);
                for (std::size_t c = 0; c < classes; ++c) {
                    logits[c] += x[j] * wr[c];
                }
            }
            double hi = clf.bias[0] + logits[0];
            for (std::size_t c = 0; c < classes; ++c) {
                logits[c] += clf.bias[c];
                hi = std::max(hi, logits[c]);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                logits[c] = std::exp(logits[c] - hi);
                sum += logits[c];
            }
            for (std::size_t c = 0; c < classes; ++c) {
                double g = logits[c] / sum;
                if (static_cast<int>(c) == labels[i]) {
                    g -= 1.0;
                }
                g *= inv_n;
                gb[c] += g;
                for (std::size_t j = 0; j < d; ++j) {
                    gw.at(j, c) += x[j] * g;
                }
            }
        }
        double norm2 = 0.0;
        for (std::size_t j = 0; j < gw.data.size(); ++j) {
            gw.data[j] += reg * clf.weight.data[j];
            norm2 += gw.data[j] * gw.data[j];
        }
        for (double g : gb) {
            norm2 += g * g;
        }
        if (std::sqrt(norm2) < 1e-5) {
            break;
        }
        for (std::size_t j = 0; j < gw.data.size(); ++j) {
            mw.data[j] = beta * mw.data[j] + gw.data[j];
            clf.weight.data[j] -= lr * mw.data[j];
        }
        for (std::size_t c = 0; c < classes; ++c) {
            mb[c] = beta * mb[c] + gb[c];
            clf.bias[c] -= lr * mb[c];
        }
    }
    return clf;
}

ProbeResult evaluate(const LinearClassifier& clf, const DenseMatrix& features,
                     const std::vector<int>& labels)
{
    if (features.rows != labels.size() || features.cols != clf.weight.rows) {
        throw Error(ErrorKind::InvalidInput, "evaluate: shape mismatch");
    }
    const std::size_t classes = clf.bias.size();
    ProbeResult res;
    res.n_eval = labels.size();
    std::size_t hit1 = 0, hit5 = 0;
    Vec scores(classes);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* x = features.row(i);
        scores = clf.bias;
        for (std::size_t j = 0; j < features.cols; ++j) {
            const double* wr = clf.weight.row(j);
            for (std::size_t c = 0; c < classes; ++c) {
                scores[c] += x[j] * wr[c];
            }
        }
        const std::size_t label = static_cast<std::size_t>(labels[i]);
        // ties broken toward the lower class index
        std::size_t rank = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (c == label) {
                continue;
            }
            if (scores[c] > scores[label] || (scores[c] == scores[label] && c < label)) {
                ++rank;
            }
        }
        if (rank == 0) {
            ++hit1;
        }
        if (rank < 5) {
            ++hit5;
        }
    }
    res.top1 = static_cast<double>(hit1) / static_cast<double>(res.n_eval);
    res.top5 = static_cast<double>(hit5) / static_cast<double>(res.n_eval);
    return res;
}

} // namespace bcn
