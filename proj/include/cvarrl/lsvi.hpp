#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvarrl/bonus.hpp"
#include "cvarrl/budget_grid.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"

namespace cvarrl {

struct LsviConfig {
    double lambda = 1.0;
    double beta = 0.0;
    int T1 = 1;
    int T2 = 1;
    BudgetGrid grid;

    void validate() const; // throws ConfigInvalid
};

/** One simulated step; rewards in planning-grid units. */
struct SimStep {
    int s = 0;
    int a = 0;
    int r_steps = 0;
    int s_next = -1;
};

using SimTrajectory = std::vector<SimStep>;

/** Final regression state: Gram matrices, weights, and the replay buffer. */
struct LsviWeights {
    std::vector<Eigen::MatrixXd> Lambda;         // per step 1..H-1
    std::vector<std::vector<Eigen::VectorXd>> w; // [h-1][budget index]
    std::vector<SimTrajectory> buffer;
};

struct LsviResult {
    double value = 0.0;
    int best_t = 0; // zero-based index into the candidate policies
    AugmentedPolicy policy;
    std::vector<double> mc_values;    // per-candidate Monte Carlo estimates
    std::vector<double> v1_estimates; // per-round V_1(s1, i1 upsilon)
    LsviWeights weights;
    double max_scaled_weight_norm = 0.0; // max over rounds of ||w|| / sqrt(max(n,1))
};

/** iota = log^2(H d T1 / (upsilon delta)). */
double lsvi_iota(int H, int d, double upsilon, double delta, int T1);

/** beta = c_beta * H^{3/2} d iota^{1/4} / upsilon. */
double lsvi_beta(int H, int d, double upsilon, double delta, int T1, double c_beta);

/**
 * Tensor feature phi_hat (x) reward_pmf laid out with the reward index
 * fastest: entry j * len(reward_pmf) + i equals phi_hat[j] * reward_pmf[i].
 */
Eigen::VectorXd tensor_feature(const Eigen::VectorXd& phi_hat,
                               const Eigen::VectorXd& reward_pmf);

/**
 * Reference ridge solve for step h and budget index i: regresses the
 * next-step values v_next (an S x grid table, budget clamped at zero after
 * the reward) onto the step-h tensor features of the buffer samples.
 */
Eigen::VectorXd ridge_weights(const std::vector<SimTrajectory>& buffer, int h,
                              const Eigen::MatrixXd& phi_bar_h,
                              const Eigen::MatrixXd& v_next, int i,
                              double lambda, const BudgetGrid& grid);

/**
 * Clip_{[-H, H]}(-bonus_val + phi_bar . w - beta ||phi_bar||_{gram^-1}).
 * Throws SingularMatrix if the Gram matrix is not positive definite.
 */
double q_estimate(const Eigen::VectorXd& phi_bar, const Eigen::VectorXd& w,
                  double bonus_val, double beta, const Eigen::MatrixXd& gram,
                  int H);

/**
 * Least-squares value iteration on the learned model: T1 rounds of backward
 * ridge regression over the replay buffer, each followed by one simulated
 * greedy episode in (model, rewards); then T2 Monte Carlo evaluation episodes
 * per candidate policy. Returns the minimizing candidate. The final step
 * backs up exactly (rewards are known and no step-H transition features
 * exist). Consumes no environment samples: every episode runs in the model.
 */
LsviResult cvar_lsvi(const LowRankModel& model, const RewardModel& rewards,
                     const BonusTable& bonus, int i1, const LsviConfig& config,
                     Rng& rng);

/**
 * Monte Carlo estimate of E[(i1 upsilon - sum r)^+ - sum b] over T2 episodes
 * simulated in the model.
 */
double policy_eval_mc(const LowRankModel& model, const RewardModel& rewards,
                      const BonusTable& bonus, const AugmentedPolicy& policy,
                      int i1, int T2, Rng& rng);

} // namespace cvarrl
