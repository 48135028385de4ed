#include "bcn/model.hpp"

#include "bcn/error.hpp"
#include "bcn/io.hpp"
#include "bcn/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <random>

namespace bcn {

namespace {

using json = nlohmann::json;

DenseMatrix xavier(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseMatrix m = DenseMatrix::zeros(rows, cols);
    for (double& v : m.data) {
        v = dist(rng);
    }
    return m;
}

// out += x^T W  (x: rows, W: rows x cols)
void matvec(const DenseMatrix& w, const Vec& x, Vec& out)
{
    out.assign(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double xr = x[r];
        const double* row = w.row(r);
        for (std::size_t c = 0; c < w.cols; ++c) {
            out[c] += xr * row[c];
        }
    }
}

const char* activation_name(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "identity";
}

Activation activation_from(const std::string& s)
{
    if (s == "tanh") {
        return Activation::Tanh;
    }
    if (s == "identity") {
        return Activation::Identity;
    }
    throw Error(ErrorKind::ParseError, "unknown activation: " + s);
}

} // namespace

ModelParams init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                       std::size_t num_queries, std::size_t num_prototypes,
                       std::uint64_t seed)
{
    if (input_dim == 0 || hidden_dims.empty() || num_queries == 0 || num_prototypes == 0) {
        throw Error(ErrorKind::InvalidInput, "init_model: zero dimension");
    }
    std::mt19937_64 rng(mix_seed(seed, 0xB0D));
    ModelParams p;
    std::size_t in = input_dim;
    for (std::size_t h : hidden_dims) {
        EncoderLayer layer;
        layer.weight = xavier(in, h, rng);
        layer.bias.assign(h, 0.0);
        layer.activation = Activation::Tanh;
        p.encoder.push_back(std::move(layer));
        in = h;
    }
    p.v2q = xavier(in, num_queries, rng);
    p.v2t = xavier(in, num_prototypes, rng);

    for (const EncoderLayer& l : p.encoder) {
        EncoderLayer z;
        z.weight = DenseMatrix::zeros(l.weight.rows, l.weight.cols);
        z.bias.assign(l.bias.size(), 0.0);
        z.activation = l.activation;
        p.encoder_momentum.push_back(std::move(z));
    }
    p.v2q_momentum = DenseMatrix::zeros(in, num_queries);
    p.v2t_momentum = DenseMatrix::zeros(in, num_prototypes);
    return p;
}

ForwardRecord forward(const ModelParams& params, const Vec& input)
{
    if (input.size() != params.input_dim()) {
        throw Error(ErrorKind::InvalidInput, "forward: input dimension mismatch");
    }
    ForwardRecord rec;
    Vec x = input;
    for (const EncoderLayer& layer : params.encoder) {
        rec.layer_inputs.push_back(x);
        Vec z;
        matvec(layer.weight, x, z);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += layer.bias[i];
            if (layer.activation == Activation::Tanh) {
                z[i] = std::tanh(z[i]);
            }
        }
        x = std::move(z);
    }
    rec.f_v = x;
    matvec(params.v2q, rec.f_v, rec.q_logits);
    matvec(params.v2t, rec.f_v, rec.t_logits);
    rec.p_q = softmax_with_temperature(rec.q_logits, 1.0);
    rec.p_t = softmax_with_temperature(rec.t_logits, 1.0);
    return rec;
}

double loss_query(const ProbVec& p_q, const ProbVec& y_q)
{
    if (p_q.size() != y_q.size()) {
        throw Error(ErrorKind::InvalidInput, "loss_query: length mismatch");
    }
    std::size_t hot = 0;
    for (std::size_t k = 0; k < y_q.size(); ++k) {
        if (y_q[k] == 1.0) {
            hot = k;
        }
    }
    return -floored_log(p_q[hot]);
}

double loss_text(const ProbVec& p_t, const ProbVec& target)
{
    if (p_t.size() != target.size()) {
        throw Error(ErrorKind::InvalidInput, "loss_text: length mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < p_t.size(); ++i) {
        if (target[i] != 0.0) {
            loss -= target[i] * floored_log(p_t[i]);
        }
    }
    return loss;
}

ModelGrads zero_grads(const ModelParams& params)
{
    ModelGrads g;
    for (const EncoderLayer& l : params.encoder) {
        EncoderLayer z;
        z.weight = DenseMatrix::zeros(l.weight.rows, l.weight.cols);
        z.bias.assign(l.bias.size(), 0.0);
        z.activation = l.activation;
        g.encoder.push_back(std::move(z));
    }
    g.v2q = DenseMatrix::zeros(params.v2q.rows, params.v2q.cols);
    g.v2t = DenseMatrix::zeros(params.v2t.rows, params.v2t.cols);
    return g;
}

void backward(const ModelParams& params, const Vec& input, const ForwardRecord& record,
              const GradSpec& spec, ModelGrads& grads, double scale)
{
    if (record.layer_inputs.size() != params.encoder.size() ||
        record.layer_inputs.front().size() != input.size()) {
        throw Error(ErrorKind::InvalidState, "backward: record does not match params/input");
    }
    if (spec.query_target.size() != params.num_queries() ||
        spec.text_target.size() != params.num_prototypes()) {
        throw Error(ErrorKind::InvalidInput, "backward: target length mismatch");
    }

    const std::size_t D = params.feature_dim();
    Vec dq(params.num_queries());
    for (std::size_t k = 0; k < dq.size(); ++k) {
        dq[k] = spec.w_q * (record.p_q[k] - spec.query_target[k]);
    }
    Vec dt(params.num_prototypes());
    for (std::size_t i = 0; i < dt.size(); ++i) {
        dt[i] = spec.w_t * (record.p_t[i] - spec.text_target[i]);
    }

    // head weights: grad W = f_v outer dlogits; dF = W dlogits
    Vec df(D, 0.0);
    for (std::size_t r = 0; r < D; ++r) {
        const double f = record.f_v[r];
        double* gq = grads.v2q.row(r);
        const double* wq = params.v2q.row(r);
        for (std::size_t k = 0; k < dq.size(); ++k) {
            gq[k] += scale * f * dq[k];
            df[r] += wq[k] * dq[k];
        }
        double* gt = grads.v2t.row(r);
        const double* wt = params.v2t.row(r);
        for (std::size_t i = 0; i < dt.size(); ++i) {
            gt[i] += scale * f * dt[i];
            df[r] += wt[i] * dt[i];
        }
    }

    // encoder chain rule, activations recomputed from layer inputs
    Vec dact = std::move(df);
    Vec act = record.f_v;
    for (std::size_t li = params.encoder.size(); li-- > 0;) {
        const EncoderLayer& layer = params.encoder[li];
        const Vec& x = record.layer_inputs[li];
        Vec dz(dact.size());
        for (std::size_t i = 0; i < dz.size(); ++i) {
            if (layer.activation == Activation::Tanh) {
                dz[i] = dact[i] * (1.0 - act[i] * act[i]);
            } else {
                dz[i] = dact[i];
            }
        }
        EncoderLayer& g = grads.encoder[li];
        Vec dx(x.size(), 0.0);
        for (std::size_t r = 0; r < x.size(); ++r) {
            double* grow = g.weight.row(r);
            const double* wrow = layer.weight.row(r);
            for (std::size_t cc = 0; cc < dz.size(); ++cc) {
                grow[cc] += scale * x[r] * dz[cc];
                dx[r] += wrow[cc] * dz[cc];
            }
        }
        for (std::size_t cc = 0; cc < dz.size(); ++cc) {
            g.bias[cc] += scale * dz[cc];
        }
        if (li > 0) {
            // activation of the previous layer is this layer's input
            act = record.layer_inputs[li];
        }
        dact = std::move(dx);
    }
}

namespace {

void step_tensor(std::vector<double>& param, std::vector<double>& buf,
                 const std::vector<double>& grad, double lr, double momentum,
                 double weight_decay)
{
    for (std::size_t i = 0; i < param.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            throw Error(ErrorKind::NonFiniteGradient, "non-finite gradient entry");
        }
        buf[i] = momentum * buf[i] + grad[i] + weight_decay * param[i];
        param[i] -= lr * buf[i];
    }
}

} // namespace

void sgd_momentum_step(ModelParams& params, const ModelGrads& grads, double lr,
                       double momentum, double weight_decay)
{
    // validate all gradients before mutating anything, so a bad step aborts cleanly
    auto check = [](const std::vector<double>& g) {
        for (double v : g) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::NonFiniteGradient, "non-finite gradient entry");
            }
        }
    };
    for (const EncoderLayer& g : grads.encoder) {
        check(g.weight.data);
        check(g.bias);
    }
    check(grads.v2q.data);
    check(grads.v2t.data);

    for (std::size_t li = 0; li < params.encoder.size(); ++li) {
        step_tensor(params.encoder[li].weight.data, params.encoder_momentum[li].weight.data,
                    grads.encoder[li].weight.data, lr, momentum, weight_decay);
        step_tensor(params.encoder[li].bias, params.encoder_momentum[li].bias,
                    grads.encoder[li].bias, lr, momentum, weight_decay);
    }
    step_tensor(params.v2q.data, params.v2q_momentum.data, grads.v2q.data, lr, momentum,
                weight_decay);
    step_tensor(params.v2t.data, params.v2t_momentum.data, grads.v2t.data, lr, momentum,
                weight_decay);
}

void save_checkpoint(const ModelParams& params, const std::string& path, std::size_t step,
                     const std::string& extra_json,
                     const std::vector<std::pair<std::string, Vec>>* calib_table)
{
    Container c;
    json layers = json::array();
    for (const EncoderLayer& l : params.encoder) {
        layers.push_back({{"in", l.weight.rows},
                          {"out", l.weight.cols},
                          {"activation", activation_name(l.activation)}});
    }
    json header = {{"format", "bcn-checkpoint"},
                   {"version", 1},
                   {"step", step},
                   {"layers", layers},
                   {"K", params.num_queries()},
                   {"M", params.num_prototypes()},
                   {"D", params.feature_dim()}};
    if (!extra_json.empty()) {
        header["extra"] = json::parse(extra_json);
    }
    json calib_ids = json::array();
    std::size_t calib_dim = 0;
    if (calib_table != nullptr) {
        for (const auto& [id, row] : *calib_table) {
            calib_ids.push_back(id);
            calib_dim = row.size();
        }
    }
    header["calib_ids"] = calib_ids;
    header["calib_dim"] = calib_dim;
    c.text = header.dump();

    for (const EncoderLayer& l : params.encoder) {
        append_doubles(c.blob, l.weight.data);
        append_doubles(c.blob, l.bias);
    }
    append_doubles(c.blob, params.v2q.data);
    append_doubles(c.blob, params.v2t.data);
    for (const EncoderLayer& l : params.encoder_momentum) {
        append_doubles(c.blob, l.weight.data);
        append_doubles(c.blob, l.bias);
    }
    append_doubles(c.blob, params.v2q_momentum.data);
    append_doubles(c.blob, params.v2t_momentum.data);
    if (calib_table != nullptr) {
        for (const auto& [id, row] : *calib_table) {
            append_doubles(c.blob, row);
        }
    }
    write_container(path, c);
}

Checkpoint load_checkpoint(const std::string& path)
{
    const Container c = read_container(path);
    json header = json::parse(c.text, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "bcn-checkpoint") {
        throw Error(ErrorKind::ParseError, path + ": not a checkpoint file");
    }
    Checkpoint ckpt;
    ckpt.step = header.at("step").get<std::size_t>();
    if (header.contains("extra")) {
        ckpt.extra_json = header["extra"].dump();
    }
    const std::size_t K = header.at("K").get<std::size_t>();
    const std::size_t M = header.at("M").get<std::size_t>();
    const std::size_t D = header.at("D").get<std::size_t>();

    std::size_t offset = 0;
    auto read_layer_set = [&](std::vector<EncoderLayer>& out) {
        for (const json& lj : header.at("layers")) {
            EncoderLayer l;
            const std::size_t in = lj.at("in").get<std::size_t>();
            const std::size_t outd = lj.at("out").get<std::size_t>();
            l.weight.rows = in;
            l.weight.cols = outd;
            l.weight.data = read_doubles(c.blob, offset, in * outd);
            l.bias = read_doubles(c.blob, offset, outd);
            l.activation = activation_from(lj.at("activation").get<std::string>());
            out.push_back(std::move(l));
        }
    };
    auto read_matrix = [&](std::size_t r, std::size_t cc) {
        DenseMatrix m;
        m.rows = r;
        m.cols = cc;
        m.data = read_doubles(c.blob, offset, r * cc);
        return m;
    };
    read_layer_set(ckpt.params.encoder);
    ckpt.params.v2q = read_matrix(D, K);
    ckpt.params.v2t = read_matrix(D, M);
    read_layer_set(ckpt.params.encoder_momentum);
    ckpt.params.v2q_momentum = read_matrix(D, K);
    ckpt.params.v2t_momentum = read_matrix(D, M);

    const std::size_t calib_dim = header.at("calib_dim").get<std::size_t>();
    for (const json& idj : header.at("calib_ids")) {
        ckpt.calib_table.emplace_back(idj.get<std::string>(),
                                      read_doubles(c.blob, offset, calib_dim));
    }
    if (offset != c.blob.size()) {
        throw Error(ErrorKind::ParseError, path + ": trailing bytes in blob");
    }
    return ckpt;
}

} // namespace bcn
