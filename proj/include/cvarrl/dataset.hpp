#pragma once

#include <iosfwd>
#include <vector>

#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"

namespace cvarrl {

struct TransitionTuple {
    int s = 0;
    int a = 0;
    int s_next = 0;
};

/**
 * Exploration data, one main bag D[h] and one lookahead bag Dtilde[h] per
 * step h = 1..H-1 (index h-1). After k collection rounds every bag that the
 * horizon allows to fill holds exactly k tuples.
 */
struct TransitionDataset {
    int H = 0;
    std::vector<std::vector<TransitionTuple>> D;
    std::vector<std::vector<TransitionTuple>> Dtilde;

    explicit TransitionDataset(int H_ = 0)
        : H(H_), D(H_ > 0 ? H_ - 1 : 0), Dtilde(H_ > 0 ? H_ - 1 : 0) {}
};

/** Finite model class searched by maximum likelihood. */
struct ModelClass {
    std::vector<LowRankModel> candidates;
    bool includes_truth = false;
    int truth_index = -1;
};

/**
 * One collection round: a fresh episode per step. The first episode takes a
 * uniform action at step 1 and stores (s_1, a_1, s_2) in the lookahead bag
 * for step 1. For each h = 1..H-1, an episode rolls in with the wrapped
 * roll-in policy to s_h, takes a uniform action into D[h], and if another
 * step remains takes a second uniform action into Dtilde[h+1]. Costs exactly
 * H episodes; returns that count.
 */
int collect_iteration_data(const LowRankModel& env,
                           const RewardModel& rewards,
                           const AugmentedPolicy& rollin_policy,
                           int c_prev_index,
                           TransitionDataset& data,
                           Rng& rng);

/**
 * Index of the candidate maximizing the step-h log-likelihood over
 * D[h] + Dtilde[h], probabilities floored at 1e-12. Ties break toward the
 * smaller index. Throws EmptyDataset if both bags are empty.
 */
int mle_fit(const TransitionDataset& data, const ModelClass& models, int h);

/** Step-h log-likelihood of one candidate on D[h] + Dtilde[h]. */
double log_likelihood(const TransitionDataset& data, const LowRankModel& model, int h);

/** Total variation distance ||p - q||_1 between probability vectors. */
double model_tv_error(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/**
 * Model class for experiments: the truth plus size-1 tabular candidates with
 * transition rows resampled from Dirichlet(perturb_alpha).
 */
ModelClass make_perturbed_class(const LowRankModel& truth, int size,
                                double perturb_alpha, Rng& rng);

/** Stitches per-step MLE winners into one model (factors copied per step). */
LowRankModel assemble_model(const ModelClass& models, const std::vector<int>& pick);

/** One JSON object per line: {"h":..,"s":..,"a":..,"s_next":..,"bag":"D"|"Dtilde"}. */
void dump_dataset_jsonl(const TransitionDataset& data, std::ostream& out);

} // namespace cvarrl
