#pragma once

#include "bcn/calibration.hpp"
#include "bcn/model.hpp"
#include "bcn/supervision.hpp"
#include "bcn/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bcn {

struct LrSchedule {
    double initial = 0.05;
    double factor = 0.9; // applied every `interval` steps
    std::size_t interval = 2000;

    double at(std::size_t step) const;
};

struct TrainConfig {
    std::size_t stage1_epochs = 6;
    std::size_t stage2_epochs = 6;
    std::size_t batch_size = 64;
    LrSchedule stage1_lr{0.05, 0.9, 2000};
    LrSchedule stage2_lr{0.005, 0.9, 2000}; // stage-1 lr / 10
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double eps_q = 0.5;
    double eps_t = 0.7;
    double alpha = 0.9;
    double w_q = 1.0;
    double w_t = 1.0;
    std::uint64_t seed = 0;
    bool allow_t2q = true; // mask for the single-calibration ablations
    bool allow_q2t = true;
};

struct TrainLogRow {
    std::size_t step = 0;
    int stage = 1;
    double mean_loss_q = 0.0;
    double mean_loss_t = 0.0;
    double mean_rss_q = 0.0; // RSS(p_q, p_hat_q), stage 2 only
    double mean_rss_t = 0.0;
    std::size_t count_t2q = 0;
    std::size_t count_q2t = 0;
    std::size_t count_plain = 0;
    double lr = 0.0;
};

double rss(const ProbVec& p, const ProbVec& p_hat);

ModelParams train_stage1(const Corpus& corpus, const SupervisionCache& cache,
                         ModelParams params, const TrainConfig& config,
                         std::vector<TrainLogRow>* log = nullptr);

struct Stage2Result {
    ModelParams params;
    CalibrationState state;
    std::vector<TrainLogRow> log;
};

Stage2Result train_stage2(ModelParams params, const Corpus& corpus,
                          const SupervisionCache& cache, const TextVocabulary& tvocab,
                          const TrainConfig& config,
                          const CalibrationState* resume = nullptr,
                          std::size_t start_epoch = 0);

void write_train_log_csv(const std::vector<TrainLogRow>& rows, const std::string& path);

} // namespace bcn
