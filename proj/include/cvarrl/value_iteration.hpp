#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvarrl/bonus.hpp"
#include "cvarrl/budget_grid.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"
#include "cvarrl/risk.hpp"

namespace cvarrl {

/**
 * Augmented value tables V[h-1](s, i) for h = 1..H+1 over the budget grid,
 * with terminal V[H](s, i) = i upsilon, and the greedy action tables that
 * produced them. Values lie in [0, H] without bonuses and in [-2H, H] with.
 */
struct ValueTable {
    int H = 0;
    int num_states = 0;
    int A = 0;
    BudgetGrid grid;
    std::vector<Eigen::MatrixXd> V;      // H+1 matrices, S x grid.size()
    std::vector<Eigen::MatrixXi> greedy; // H matrices, S x grid.size()
};

/**
 * Backward induction on the budget-augmented MDP. The agent minimizes
 * E[(c - sum r)^+ - sum b]; budgets move down the grid by the reward's grid
 * steps and clamp at zero (an absorbing "nothing left to miss" regime, exact
 * for nonnegative rewards). Every reward support point carrying mass must
 * sit on the planning grid, else GridMismatch.
 */
ValueTable augmented_vi(const LowRankModel& model, const RewardModel& rewards,
                        const BonusTable& bonus, const BudgetGrid& grid);

struct PlanResult {
    int c_index = 0;
    double cvar = 0.0;
    AugmentedPolicy policy;
};

/**
 * Maximizes i upsilon - V[1](s1, i) / tau over the grid and extracts the
 * greedy deterministic policy from the tables.
 */
PlanResult plan_cvar(const ValueTable& table, double tau, int s1 = 0);

/**
 * Exact fixed-policy evaluation of E[(c1 - sum r)^+ - sum b] by backward
 * induction, same grid semantics as augmented_vi.
 */
double evaluate_policy_exact(const LowRankModel& model, const RewardModel& rewards,
                             const AugmentedPolicy& policy, int c1_index,
                             const BonusTable& bonus);

/**
 * Maps every mass-bearing reward support point to planning-grid steps;
 * throws GridMismatch if any falls off the grid by more than 1e-9.
 */
std::vector<int> reward_grid_steps(const RewardModel& rewards, const BudgetGrid& grid);

} // namespace cvarrl
