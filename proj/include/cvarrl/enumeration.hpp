#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvarrl/budget_grid.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"
#include "cvarrl/risk.hpp"

namespace cvarrl {

struct OracleResult {
    double cvar_star = 0.0;
    int c_star_index = 0;
    AugmentedPolicy policy;
};

/**
 * Brute-force CVaR optimum by enumerating suffix return distributions: a
 * backward recursion over (step, state, residual budget) picks the action
 * whose full return distribution minimizes the expected shortfall, then the
 * budget maximizing c - E[(c - R)^+] / tau over the grid. No clamping and no
 * Bellman backup on scalar values anywhere, so it cross-checks augmented_vi
 * through an unrelated code path. Requires the grid to match the reward
 * precision (it recurses in integer budget units) and a state/step/budget
 * table of at most 1e7 cells.
 */
OracleResult enumerate_cvar_oracle(const LowRankModel& model,
                                   const RewardModel& rewards, double tau,
                                   const BudgetGrid& grid);

/**
 * Exact return distribution of a grid policy queried at the index nearest
 * the raw budget c1 - sum r (the rollout_augmented semantics).
 */
ReturnDistribution raw_policy_return_dist(const LowRankModel& model,
                                          const RewardModel& rewards,
                                          const AugmentedPolicy& policy,
                                          double c1, const BudgetGrid& grid);

/**
 * Exact distribution of the raw return sum r under the wrapped view: the
 * policy is queried at index max(i1 - sum ceil(r_t / upsilon), 0).
 */
ReturnDistribution wrapped_policy_return_dist(const LowRankModel& model,
                                              const RewardModel& rewards,
                                              const AugmentedPolicy& policy,
                                              int i1, const BudgetGrid& grid);

/**
 * Exact distribution of the rounded-up return sum ceil(r_t / upsilon) upsilon
 * when the policy runs on those rounded rewards (the discretized MDP).
 */
ReturnDistribution discretized_return_dist(const LowRankModel& model,
                                           const RewardModel& rewards,
                                           const AugmentedPolicy& policy,
                                           int i1, const BudgetGrid& grid);

/**
 * State-action occupancy per step under raw-budget query semantics, as H
 * matrices of S x A probabilities.
 */
std::vector<Eigen::MatrixXd> occupancy_measures(const LowRankModel& model,
                                                const RewardModel& rewards,
                                                const AugmentedPolicy& policy,
                                                double c1, const BudgetGrid& grid);

} // namespace cvarrl
