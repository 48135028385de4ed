#pragma once

#include "bcn/error.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bcn {

using Vec = std::vector<double>;

// Probability vector: non-negative entries summing to 1 within 1e-6.
// The constructor validates; operations that provably preserve the
// simplex may use unchecked() to skip the sweep.
class ProbVec {
public:
    static constexpr double kSumTolerance = 1e-6;

    explicit ProbVec(Vec values);
    static ProbVec unchecked(Vec values);

    const Vec& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    bool operator==(const ProbVec& other) const { return values_ == other.values_; }

private:
    ProbVec() = default;
    Vec values_;
};

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major

    static DenseMatrix zeros(std::size_t r, std::size_t c);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    bool operator==(const DenseMatrix& o) const = default;
};

ProbVec softmax_with_temperature(const Vec& logits, double temperature);
double cosine_similarity(const Vec& a, const Vec& b);
ProbVec l1_renormalize(const Vec& v);
double l2_distance(const Vec& a, const Vec& b);

// log with a 1e-12 floor; bumps the NumericalFloor counter when it clamps.
double floored_log(double x);
std::uint64_t numerical_floor_hits();
void reset_numerical_floor_hits();

} // namespace bcn
