#include "cvarrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "cvarrl/errors.hpp"

namespace cvarrl {

namespace {

// walks the wrapped roll-in policy from (state 0, grid budget) up to but not
// including step h; returns the step-h state
int roll_in(const LowRankModel& env, const RewardModel& rewards,
            WrappedPolicy policy, int h, Rng& rng) {
    policy.reset();
    int s = 0;
    for (int t = 1; t < h; ++t) {
        const int a = sample_discrete(policy.action_dist(t, s), rng);
        const double r = sample_reward(rewards, t, s, a, env.A, rng);
        s = sample_discrete(transition_dist(env, t, s, a), rng);
        policy.observe_reward(r);
    }
    return s;
}

} // namespace

int collect_iteration_data(const LowRankModel& env,
                           const RewardModel& rewards,
                           const AugmentedPolicy& rollin_policy,
                           int c_prev_index,
                           TransitionDataset& data,
                           Rng& rng) {
    if (data.H != env.H)
        throw DimensionMismatch("collect_iteration_data: dataset horizon mismatch");
    if (env.H < 2)
        return 0;
    const WrappedPolicy wrapped(rollin_policy, c_prev_index);
    int episodes = 0;

    // lookahead tuple for step 1: uniform action straight from the start state
    {
        const int a = sample_uniform(env.A, rng);
        const int s_next = sample_discrete(transition_dist(env, 1, 0, a), rng);
        data.Dtilde[0].push_back({0, a, s_next});
        ++episodes;
    }

    for (int h = 1; h <= env.H - 1; ++h) {
        const int s_h = roll_in(env, rewards, wrapped, h, rng);
        const int a_h = sample_uniform(env.A, rng);
        const int s_next = sample_discrete(transition_dist(env, h, s_h, a_h), rng);
        data.D[h - 1].push_back({s_h, a_h, s_next});
        if (h <= env.H - 2) {
            const int a_tilde = sample_uniform(env.A, rng);
            const int s_far = sample_discrete(transition_dist(env, h + 1, s_next, a_tilde), rng);
            data.Dtilde[h].push_back({s_next, a_tilde, s_far});
        }
        ++episodes;
    }
    return episodes;
}

double log_likelihood(const TransitionDataset& data, const LowRankModel& model, int h) {
    if (h < 1 || h > data.H - 1)
        throw ConfigInvalid("log_likelihood: step out of range");
    double total = 0.0;
    for (const auto* bag : {&data.D[h - 1], &data.Dtilde[h - 1]}) {
        for (const TransitionTuple& t : *bag) {
            const Eigen::VectorXd p = transition_dist(model, h, t.s, t.a);
            total += std::log(std::max(p[t.s_next], 1e-12));
        }
    }
    return total;
}

int mle_fit(const TransitionDataset& data, const ModelClass& models, int h) {
    if (models.candidates.empty())
        throw ConfigInvalid("mle_fit: empty model class");
    if (h < 1 || h > data.H - 1)
        throw ConfigInvalid("mle_fit: step out of range");
    if (data.D[h - 1].empty() && data.Dtilde[h - 1].empty())
        throw EmptyDataset("mle_fit: no data for step " + std::to_string(h));
    int best = 0;
    double best_ll = log_likelihood(data, models.candidates[0], h);
    for (size_t c = 1; c < models.candidates.size(); ++c) {
        const double ll = log_likelihood(data, models.candidates[c], h);
        if (ll > best_ll) {
            best_ll = ll;
            best = static_cast<int>(c);
        }
    }
    return best;
}

double model_tv_error(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size())
        throw DimensionMismatch("model_tv_error: length mismatch");
    return (p - q).cwiseAbs().sum();
}

ModelClass make_perturbed_class(const LowRankModel& truth, int size,
                                double perturb_alpha, Rng& rng) {
    if (size < 1)
        throw ConfigInvalid("make_perturbed_class: size must be at least 1");
    if (truth.d != truth.num_states * truth.A)
        throw ConfigInvalid("make_perturbed_class: needs a tabular-layout truth");
    ModelClass models;
    models.candidates.push_back(truth);
    models.includes_truth = true;
    models.truth_index = 0;
    for (int c = 1; c < size; ++c) {
        LowRankModel m = truth;
        for (int h = 1; h <= truth.H - 1; ++h)
            for (int col = 0; col < truth.d; ++col)
                m.psi[h - 1].col(col) =
                    sample_dirichlet(truth.num_states, perturb_alpha, rng);
        models.candidates.push_back(std::move(m));
    }
    return models;
}

LowRankModel assemble_model(const ModelClass& models, const std::vector<int>& pick) {
    if (models.candidates.empty())
        throw ConfigInvalid("assemble_model: empty model class");
    LowRankModel out = models.candidates[0];
    if (pick.size() != out.phi.size())
        throw DimensionMismatch("assemble_model: one pick per step required");
    for (size_t i = 0; i < pick.size(); ++i) {
        const LowRankModel& src = models.candidates.at(pick[i]);
        out.phi[i] = src.phi[i];
        out.psi[i] = src.psi[i];
    }
    return out;
}

void dump_dataset_jsonl(const TransitionDataset& data, std::ostream& out) {
    for (int h = 1; h <= data.H - 1; ++h) {
        for (const TransitionTuple& t : data.D[h - 1]) {
            nlohmann::json line{{"h", h}, {"s", t.s}, {"a", t.a},
                                {"s_next", t.s_next}, {"bag", "D"}};
            out << line.dump() << "\n";
        }
        for (const TransitionTuple& t : data.Dtilde[h - 1]) {
            nlohmann::json line{{"h", h}, {"s", t.s}, {"a", t.a},
                                {"s_next", t.s_next}, {"bag", "Dtilde"}};
            out << line.dump() << "\n";
        }
    }
}

} // namespace cvarrl
