#pragma once

#include "bcn/numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bcn {

enum class Activation { Tanh, Identity };

struct EncoderLayer {
    DenseMatrix weight; // in x out
    Vec bias;           // out
    Activation activation = Activation::Tanh;

    bool operator==(const EncoderLayer&) const = default;
};

struct ModelParams {
    std::vector<EncoderLayer> encoder;
    DenseMatrix v2q; // D x K
    DenseMatrix v2t; // D x M

    // momentum buffers, same shapes
    std::vector<EncoderLayer> encoder_momentum;
    DenseMatrix v2q_momentum;
    DenseMatrix v2t_momentum;

    std::size_t input_dim() const { return encoder.front().weight.rows; }
    std::size_t feature_dim() const { return v2q.rows; }
    std::size_t num_queries() const { return v2q.cols; }
    std::size_t num_prototypes() const { return v2t.cols; }

    bool operator==(const ModelParams&) const = default;
};

ModelParams init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                       std::size_t num_queries, std::size_t num_prototypes,
                       std::uint64_t seed);

struct ForwardRecord {
    std::vector<Vec> layer_inputs; // input to each encoder layer
    Vec f_v;                       // encoder output
    Vec q_logits;
    Vec t_logits;
    ProbVec p_q;
    ProbVec p_t;

    ForwardRecord() : p_q(ProbVec::unchecked({1.0})), p_t(ProbVec::unchecked({1.0})) {}
};

ForwardRecord forward(const ModelParams& params, const Vec& input);

double loss_query(const ProbVec& p_q, const ProbVec& y_q);
double loss_text(const ProbVec& p_t, const ProbVec& target);

struct GradSpec {
    ProbVec query_target;
    ProbVec text_target;
    double w_q = 1.0;
    double w_t = 1.0;
};

struct ModelGrads {
    std::vector<EncoderLayer> encoder;
    DenseMatrix v2q;
    DenseMatrix v2t;
};

ModelGrads zero_grads(const ModelParams& params);
// Accumulates scaled gradients of w_q*CE(p_q, query_target) + w_t*CE(p_t, text_target)
// into `grads`. Targets are constants: no gradient flows into them.
void backward(const ModelParams& params, const Vec& input, const ForwardRecord& record,
              const GradSpec& spec, ModelGrads& grads, double scale = 1.0);

void sgd_momentum_step(ModelParams& params, const ModelGrads& grads, double lr,
                       double momentum, double weight_decay);

void save_checkpoint(const ModelParams& params, const std::string& path,
                     std::size_t step = 0, const std::string& extra_json = "",
                     const std::vector<std::pair<std::string, Vec>>* calib_table = nullptr);

struct Checkpoint {
    ModelParams params;
    std::size_t step = 0;
    std::string extra_json;
    std::vector<std::pair<std::string, Vec>> calib_table;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace bcn
