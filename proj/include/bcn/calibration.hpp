#pragma once

#include "bcn/numerics.hpp"
#include "bcn/vocab.hpp"

#include <map>
#include <string>

namespace bcn {

enum class Branch { T2Q, Q2T, Plain };

struct BranchDecision {
    Branch tag = Branch::Plain;
    double dist_q = 0.0; // ||y_q_conf - p_hat_q||_2
    double dist_t = 0.0; // ||y_t_conf - p_hat_t||_2
};

// p_hat_q: per-query mass aggregated over each query's prototype set.
ProbVec t2q_correction(const ProbVec& p_t, const TextVocabulary& tvocab);
// p_hat_t: each query's mass split evenly over its prototypes.
ProbVec q2t_correction(const ProbVec& p_q, const TextVocabulary& tvocab);

// Elementwise product of supervision and model distribution; not renormalized.
Vec confidence(const ProbVec& y, const ProbVec& p);

ProbVec refine_query_supervision(const Vec& y_q_conf, const ProbVec& p_hat_q);
ProbVec refine_text_supervision(const Vec& y_t_conf, const ProbVec& p_hat_t);

BranchDecision select_branch(const Vec& y_q_conf, const ProbVec& p_hat_q,
                             const Vec& y_t_conf, const ProbVec& p_hat_t,
                             double eps_q, double eps_t);

// Running refined text supervision, one row per sample id.
struct CalibrationState {
    double alpha = 0.9;
    double eps_q = 0.5;
    double eps_t = 0.7;
    std::map<std::string, Vec> running_r_t;

    // alpha*old + (1-alpha)*new; unseen samples start from init (the
    // sample's primary y_t).
    ProbVec momentum_update(const std::string& sample_id, const ProbVec& r_t_new,
                            const ProbVec& init);
};

} // namespace bcn
