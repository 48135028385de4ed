#include "bcn/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace bcn {

namespace {
std::atomic<std::uint64_t> g_floor_hits{0};
}

ProbVec::ProbVec(Vec values)
{
    if (values.empty()) {
        throw Error(ErrorKind::InvalidInput, "ProbVec: empty vector");
    }
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidInput, "ProbVec: non-finite entry");
        }
        if (v < 0.0) {
            throw Error(ErrorKind::InvalidInput, "ProbVec: negative entry");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw Error(ErrorKind::InvalidInput,
                    "ProbVec: entries sum to " + std::to_string(sum));
    }
    values_ = std::move(values);
}

ProbVec ProbVec::unchecked(Vec values)
{
    ProbVec p;
    p.values_ = std::move(values);
    return p;
}

DenseMatrix DenseMatrix::zeros(std::size_t r, std::size_t c)
{
    DenseMatrix m;
    m.rows = r;
    m.cols = c;
    m.data.assign(r * c, 0.0);
    return m;
}

ProbVec softmax_with_temperature(const Vec& logits, double temperature)
{
    if (logits.empty()) {
        throw Error(ErrorKind::InvalidInput, "softmax: empty logits");
    }
    if (!(temperature > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "softmax: temperature must be positive");
    }
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidInput, "softmax: non-finite logit");
        }
    }
    const double hi = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - hi) / temperature);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return ProbVec::unchecked(std::move(out));
}

double cosine_similarity(const Vec& a, const Vec& b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorKind::InvalidInput, "cosine: length mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorKind::DegenerateVector, "cosine: zero-norm input");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ProbVec l1_renormalize(const Vec& v)
{
    if (v.empty()) {
        throw Error(ErrorKind::InvalidInput, "l1_renormalize: empty vector");
    }
    double sum = 0.0;
    for (double x : v) {
        if (x < 0.0) {
            throw Error(ErrorKind::InvalidInput, "l1_renormalize: negative entry");
        }
        sum += x;
    }
    if (sum <= 0.0) {
        throw Error(ErrorKind::DegenerateVector, "l1_renormalize: all-zero vector");
    }
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] / sum;
    }
    return ProbVec::unchecked(std::move(out));
}

double l2_distance(const Vec& a, const Vec& b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorKind::InvalidInput, "l2_distance: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double floored_log(double x)
{
    constexpr double kFloor = 1e-12;
    if (x < kFloor) {
        g_floor_hits.fetch_add(1, std::memory_order_relaxed);
        x = kFloor;
    }
    return std::log(x);
}

std::uint64_t numerical_floor_hits()
{
    return g_floor_hits.load(std::memory_order_relaxed);
}

void reset_numerical_floor_hits()
{
    g_floor_hits.store(0, std::memory_order_relaxed);
}

} // namespace bcn
