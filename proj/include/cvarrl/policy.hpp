#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvarrl/budget_grid.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/rng.hpp"

namespace cvarrl {

struct AugmentedState {
    int state = 0;
    double budget = 0.0;
};

/**
 * Budget-augmented policy: pi[h-1] maps (state, budget index) to an action
 * distribution, stored as a (S * grid.size()) x A matrix with rows indexed
 * s * grid.size() + i. Budget indices cover the full grid 0..ceil(H/upsilon).
 */
struct AugmentedPolicy {
    BudgetGrid grid;
    int num_states = 0;
    int A = 0;
    std::vector<Eigen::MatrixXd> pi; // H matrices

    int H() const { return static_cast<int>(pi.size()); }
    int row(int s, int i) const { return s * grid.size() + i; }

    Eigen::VectorXd action_dist(int h, int s, int i) const {
        return pi[h - 1].row(row(s, i)).transpose();
    }
    void set_action(int h, int s, int i, int a) {
        pi[h - 1].row(row(s, i)).setZero();
        pi[h - 1](row(s, i), a) = 1.0;
    }

    /** Throws unless every row is a distribution within 1e-9. */
    void validate() const;

    static AugmentedPolicy uniform(int H, int num_states, int A, const BudgetGrid& grid);
    static AugmentedPolicy zeros(int H, int num_states, int A, const BudgetGrid& grid);
};

struct TrajStep {
    int s = 0;
    double budget = 0.0; // budget on entry: c_h = c_1 - sum of earlier rewards
    int a = 0;
    double r = 0.0;
    int s_next = -1; // -1 on the final step
};

struct Trajectory {
    double c1 = 0.0;
    std::vector<TrajStep> steps;

    double total_reward() const;
};

/**
 * Rolls out one episode from (state 0, budget c1), sampling actions from the
 * policy at the grid index nearest the current raw budget. Budgets evolve as
 * c_{h+1} = c_h - r_h exactly.
 */
Trajectory rollout_augmented(const LowRankModel& model,
                             const RewardModel& rewards,
                             const AugmentedPolicy& policy,
                             double c1,
                             Rng& rng);

/**
 * View of a grid policy driven by discretized cumulative rewards: after
 * observing rewards r_1..r_{h-1}, step h queries the base policy at budget
 * index max(i1 - sum_t ceil(r_t / upsilon), 0). This is the policy the
 * discretized planner's argmin induces on the real environment.
 */
class WrappedPolicy {
public:
    WrappedPolicy(const AugmentedPolicy& base, int c1_index)
        : base_(&base), i1_(c1_index), spent_steps_(0) {}

    void reset() { spent_steps_ = 0; }
    void observe_reward(double r) {
        spent_steps_ += discretize_reward_steps(r, base_->grid.upsilon);
    }

    int query_index() const {
        const int i = i1_ - spent_steps_;
        return i < 0 ? 0 : i;
    }
    double query_budget() const { return base_->grid.value(query_index()); }

    Eigen::VectorXd action_dist(int h, int s) const {
        return base_->action_dist(h, s, query_index());
    }
    const AugmentedPolicy& base() const { return *base_; }
    int initial_index() const { return i1_; }

private:
    const AugmentedPolicy* base_;
    int i1_;
    int spent_steps_;
};

inline WrappedPolicy wrap_discretized_policy(const AugmentedPolicy& base, int c1_index) {
    return WrappedPolicy(base, c1_index);
}

/** Rolls out one episode from (state 0, grid budget i1) under the wrapped view. */
Trajectory rollout_wrapped(const LowRankModel& model,
                           const RewardModel& rewards,
                           WrappedPolicy policy,
                           Rng& rng);

/** Samples one reward from the step-h reward pmf at (s, a). */
double sample_reward(const RewardModel& rewards, int h, int s, int a, int A, Rng& rng);

} // namespace cvarrl
