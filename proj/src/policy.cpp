#include "cvarrl/policy.hpp"

#include <cmath>

#include "cvarrl/errors.hpp"

namespace cvarrl {

void AugmentedPolicy::validate() const {
    for (const Eigen::MatrixXd& table : pi) {
        if (table.rows() != static_cast<long>(num_states) * grid.size() ||
            table.cols() != A)
            throw DimensionMismatch("AugmentedPolicy: table shape mismatch");
        for (int row = 0; row < table.rows(); ++row) {
            double total = 0.0;
            for (int a = 0; a < A; ++a) {
                if (table(row, a) < 0.0)
                    throw NumericError("AugmentedPolicy: negative action probability");
                total += table(row, a);
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw NumericError("AugmentedPolicy: action row does not sum to 1");
        }
    }
}

AugmentedPolicy AugmentedPolicy::uniform(int H, int num_states, int A,
                                         const BudgetGrid& grid) {
    AugmentedPolicy p;
    p.grid = grid;
    p.num_states = num_states;
    p.A = A;
    p.pi.assign(H, Eigen::MatrixXd::Constant(static_cast<long>(num_states) * grid.size(),
                                             A, 1.0 / A));
    return p;
}

AugmentedPolicy AugmentedPolicy::zeros(int H, int num_states, int A,
                                       const BudgetGrid& grid) {
    AugmentedPolicy p;
    p.grid = grid;
    p.num_states = num_states;
    p.A = A;
    p.pi.assign(H, Eigen::MatrixXd::Zero(static_cast<long>(num_states) * grid.size(), A));
    return p;
}

double Trajectory::total_reward() const {
    double total = 0.0;
    for (const TrajStep& step : steps)
        total += step.r;
    return total;
}

double sample_reward(const RewardModel& rewards, int h, int s, int a, int A, Rng& rng) {
    const int idx = sample_discrete(rewards.pmf[h - 1].row(s * A + a).transpose(), rng);
    return rewards.value(idx);
}

Trajectory rollout_augmented(const LowRankModel& model,
                             const RewardModel& rewards,
                             const AugmentedPolicy& policy,
                             double c1,
                             Rng& rng) {
    Trajectory traj;
    traj.c1 = c1;
    int s = 0;
    double c = c1;
    for (int h = 1; h <= model.H; ++h) {
        TrajStep step;
        step.s = s;
        step.budget = c;
        const int i = policy.grid.index_of(c);
        step.a = sample_discrete(policy.action_dist(h, s, i), rng);
        step.r = sample_reward(rewards, h, s, step.a, model.A, rng);
        if (h < model.H) {
            step.s_next = sample_discrete(transition_dist(model, h, s, step.a), rng);
            s = step.s_next;
        }
        c -= step.r;
        traj.steps.push_back(step);
    }
    return traj;
}

Trajectory rollout_wrapped(const LowRankModel& model,
                           const RewardModel& rewards,
                           WrappedPolicy policy,
                           Rng& rng) {
    Trajectory traj;
    policy.reset();
    traj.c1 = policy.query_budget();
    int s = 0;
    double c = traj.c1;
    for (int h = 1; h <= model.H; ++h) {
        TrajStep step;
        step.s = s;
        step.budget = c;
        step.a = sample_discrete(policy.action_dist(h, s), rng);
        step.r = sample_reward(rewards, h, s, step.a, model.A, rng);
        if (h < model.H) {
            step.s_next = sample_discrete(transition_dist(model, h, s, step.a), rng);
            s = step.s_next;
        }
        policy.observe_reward(step.r);
        c -= step.r;
        traj.steps.push_back(step);
    }
    return traj;
}

} // namespace cvarrl
