#include "bcn/calibration.hpp"

#include "bcn/error.hpp"

namespace bcn {

ProbVec t2q_correction(const ProbVec& p_t, const TextVocabulary& tvocab)
{
    if (p_t.size() != tvocab.size()) {
        throw Error(ErrorKind::InvalidInput, "t2q_correction: length mismatch");
    }
    Vec out(tvocab.index_sets.size(), 0.0);
    for (std::size_t k = 0; k < tvocab.index_sets.size(); ++k) {
        for (std::size_t i : tvocab.index_sets[k]) {
            out[k] += p_t[i];
        }
    }
    return ProbVec::unchecked(std::move(out));
}

ProbVec q2t_correction(const ProbVec& p_q, const TextVocabulary& tvocab)
{
    if (p_q.size() != tvocab.index_sets.size()) {
        throw Error(ErrorKind::InvalidInput, "q2t_correction: length mismatch");
    }
    Vec out(tvocab.size(), 0.0);
    for (std::size_t k = 0; k < tvocab.index_sets.size(); ++k) {
        const double share = p_q[k] / static_cast<double>(tvocab.cluster_counts[k]);
        for (std::size_t i : tvocab.index_sets[k]) {
            out[i] = share;
        }
    }
    return ProbVec::unchecked(std::move(out));
}

Vec confidence(const ProbVec& y, const ProbVec& p)
{
    if (y.size() != p.size()) {
        throw Error(ErrorKind::InvalidInput, "confidence: length mismatch");
    }
    Vec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = y[i] * p[i];
    }
    return out;
}

ProbVec refine_query_supervision(const Vec& y_q_conf, const ProbVec& p_hat_q)
{
    if (y_q_conf.size() != p_hat_q.size()) {
        throw Error(ErrorKind::InvalidInput, "refine_query_supervision: length mismatch");
    }
    Vec sum(y_q_conf.size());
    for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i] = y_q_conf[i] + p_hat_q[i];
    }
    return l1_renormalize(sum);
}

ProbVec refine_text_supervision(const Vec& y_t_conf, const ProbVec& p_hat_t)
{
    if (y_t_conf.size() != p_hat_t.size()) {
        throw Error(ErrorKind::InvalidInput, "refine_text_supervision: length mismatch");
    }
    Vec sum(y_t_conf.size());
    for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i] = y_t_conf[i] + p_hat_t[i];
    }
    return l1_renormalize(sum);
}

BranchDecision select_branch(const Vec& y_q_conf, const ProbVec& p_hat_q,
                             const Vec& y_t_conf, const ProbVec& p_hat_t,
                             double eps_q, double eps_t)
{
    BranchDecision d;
    d.dist_q = l2_distance(y_q_conf, p_hat_q.values());
    d.dist_t = l2_distance(y_t_conf, p_hat_t.values());
    if (d.dist_q > eps_q && d.dist_t < eps_t) {
        d.tag = Branch::T2Q;
    } else if (d.dist_t > eps_t && d.dist_q < eps_q) {
        d.tag = Branch::Q2T;
    } else {
        d.tag = Branch::Plain;
    }
    return d;
}

ProbVec CalibrationState::momentum_update(const std::string& sample_id,
                                          const ProbVec& r_t_new, const ProbVec& init)
{
    auto it = running_r_t.find(sample_id);
    if (it == running_r_t.end()) {
        it = running_r_t.emplace(sample_id, init.values()).first;
    }
    Vec& old = it->second;
    if (old.size() != r_t_new.size()) {
        throw Error(ErrorKind::InvalidInput, "momentum_update: length mismatch");
    }
    for (std::size_t i = 0; i < old.size(); ++i) {
        old[i] = alpha * old[i] + (1.0 - alpha) * r_t_new[i];
    }
    return ProbVec::unchecked(Vec(old));
}

} // namespace bcn
