#include "bcn/trainer.hpp"

#include "bcn/error.hpp"
#include "bcn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace bcn {

double LrSchedule::at(std::size_t step) const
{
    const std::size_t decays = interval == 0 ? 0 : step / interval;
    return initial * std::pow(factor, static_cast<double>(decays));
}

double rss(const ProbVec& p, const ProbVec& p_hat)
{
    if (p.size() != p_hat.size()) {
        throw Error(ErrorKind::InvalidInput, "rss: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - p_hat[i];
        acc += d * d;
    }
    return acc;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

} // namespace

ModelParams train_stage1(const Corpus& corpus, const SupervisionCache& cache,
                         ModelParams params, const TrainConfig& config,
                         std::vector<TrainLogRow>* log)
{
    if (corpus.size() != cache.sample_ids.size()) {
        throw Error(ErrorKind::InvalidInput, "train_stage1: corpus/cache size mismatch");
    }
    const std::size_t K = params.num_queries();
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.stage1_epochs; ++epoch) {
        const auto idx = shuffled_indices(corpus.size(), mix_seed(config.seed, 0x5100 + epoch));
        for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, idx.size());
            const double inv_n = 1.0 / static_cast<double>(end - start);
            ModelGrads grads = zero_grads(params);
            TrainLogRow row;
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = idx[b];
                const ForwardRecord rec = forward(params, corpus[i].video_feature);
                GradSpec spec{cache.y_q(i, K), cache.y_t_row(i), config.w_q, config.w_t};
                row.mean_loss_q += inv_n * loss_query(rec.p_q, spec.query_target);
                row.mean_loss_t += inv_n * loss_text(rec.p_t, spec.text_target);
                backward(params, corpus[i].video_feature, rec, spec, grads, inv_n);
            }
            const double lr = config.stage1_lr.at(step);
            try {
                sgd_momentum_step(params, grads, lr, config.momentum, config.weight_decay);
            } catch (const Error& e) {
                throw Error(e.kind(), "stage 1 step " + std::to_string(step) + ": " + e.what());
            }
            if (log != nullptr) {
                row.step = step;
                row.stage = 1;
                row.count_plain = end - start;
                row.lr = lr;
                log->push_back(row);
            }
            ++step;
        }
    }
    return params;
}

Stage2Result train_stage2(ModelParams params, const Corpus& corpus,
                          const SupervisionCache& cache, const TextVocabulary& tvocab,
                          const TrainConfig& config, const CalibrationState* resume,
                          std::size_t start_epoch)
{
    if (corpus.size() != cache.sample_ids.size()) {
        throw Error(ErrorKind::InvalidInput, "train_stage2: corpus/cache size mismatch");
    }
    const std::size_t K = params.num_queries();

    Stage2Result result;
    if (resume != nullptr) {
        result.state = *resume;
    } else {
        result.state.alpha = config.alpha;
        result.state.eps_q = config.eps_q;
        result.state.eps_t = config.eps_t;
    }

    const std::size_t steps_per_epoch =
        (corpus.size() + config.batch_size - 1) / config.batch_size;
    std::size_t step = start_epoch * steps_per_epoch;

    for (std::size_t epoch = start_epoch; epoch < config.stage2_epochs; ++epoch) {
        const auto idx = shuffled_indices(corpus.size(), mix_seed(config.seed, 0x5200 + epoch));
        for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, idx.size());
            const double inv_n = 1.0 / static_cast<double>(end - start);
            ModelGrads grads = zero_grads(params);
            TrainLogRow row;
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = idx[b];
                const ForwardRecord rec = forward(params, corpus[i].video_feature);
                const ProbVec y_q = cache.y_q(i, K);
                const ProbVec y_t = cache.y_t_row(i);

                const ProbVec p_hat_q = t2q_correction(rec.p_t, tvocab);
                const ProbVec p_hat_t = q2t_correction(rec.p_q, tvocab);
                const Vec yq_conf = confidence(y_q, rec.p_q);
                const Vec yt_conf = confidence(y_t, rec.p_t);
                const ProbVec r_q = refine_query_supervision(yq_conf, p_hat_q);
                const ProbVec r_t = refine_text_supervision(yt_conf, p_hat_t);
                // the running table updates on every visit; the branch only
                // decides which loss consumes it
                const ProbVec r_t_tilde =
                    result.state.momentum_update(cache.sample_ids[i], r_t, y_t);

                BranchDecision dec = select_branch(yq_conf, p_hat_q, yt_conf, p_hat_t,
                                                   result.state.eps_q, result.state.eps_t);
                if (dec.tag == Branch::T2Q && !config.allow_t2q) {
                    dec.tag = Branch::Plain;
                }
                if (dec.tag == Branch::Q2T && !config.allow_q2t) {
                    dec.tag = Branch::Plain;
                }

                GradSpec spec{y_q, y_t, config.w_q, config.w_t};
                switch (dec.tag) {
                case Branch::T2Q:
                    spec.query_target = r_q;
                    ++row.count_t2q;
                    break;
                case Branch::Q2T:
                    spec.text_target = r_t_tilde;
                    ++row.count_q2t;
                    break;
                case Branch::Plain:
                    ++row.count_plain;
                    break;
                }
                row.mean_loss_q += inv_n * loss_query(rec.p_q, y_q);
                row.mean_loss_t += inv_n * loss_text(rec.p_t, spec.text_target);
                row.mean_rss_q += inv_n * rss(rec.p_q, p_hat_q);
                row.mean_rss_t += inv_n * rss(rec.p_t, p_hat_t);
                backward(params, corpus[i].video_feature, rec, spec, grads, inv_n);
            }
            const double lr = config.stage2_lr.at(step);
            try {
                sgd_momentum_step(params, grads, lr, config.momentum, config.weight_decay);
            } catch (const Error& e) {
                throw Error(e.kind(), "stage 2 step " + std::to_string(step) + ": " + e.what());
            }
            row.step = step;
            row.stage = 2;
            row.lr = lr;
            result.log.push_back(row);
            ++step;
        }
    }
    result.params = std::move(params);
    return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& rows, const std::string& path)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::InvalidInput, "cannot open for writing: " + path);
    }
    os << "step,stage,loss_q,loss_t,rss_q,rss_t,t2q,q2t,plain,lr\n";
    os.precision(17);
    for (const TrainLogRow& r : rows) {
        os << r.step << ',' << r.stage << ',' << r.mean_loss_q << ',' << r.mean_loss_t << ','
           << r.mean_rss_q << ',' << r.mean_rss_t << ',' << r.count_t2q << ',' << r.count_q2t
           << ',' << r.count_plain << ',' << r.lr << '\n';
    }
}

} // namespace bcn
