#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvarrl/rng.hpp"

namespace cvarrl {

/**
 * Low-rank episodic MDP over states {0, ..., num_states - 1} and actions
 * {0, ..., A - 1}. Transitions factor as P_h(s' | s, a) = <psi_h(s'), phi_h(s, a)>
 * for steps h = 1..H-1 (the episode ends after the H-th reward, so no step-H
 * kernel exists). phi[h-1] stacks feature rows by s * A + a; psi[h-1] stacks
 * next-state factors by row.
 */
struct LowRankModel {
    int H = 0;
    int A = 0;
    int d = 0;
    int num_states = 0;
    std::vector<Eigen::MatrixXd> phi; // H-1 matrices, (S*A) x d
    std::vector<Eigen::MatrixXd> psi; // H-1 matrices, S x d

    int feature_row(int s, int a) const { return s * A + a; }
};

/**
 * Known reward distributions on the grid {0, upsilon, ..., 1}: pmf[h-1] has a
 * row per (s, a) giving probabilities over grid_size() reward values.
 */
struct RewardModel {
    double upsilon = 0.0;
    std::vector<Eigen::MatrixXd> pmf; // H matrices, (S*A) x grid_size

    int grid_size() const { return pmf.empty() ? 0 : static_cast<int>(pmf[0].cols()); }
    double value(int i) const { return i * upsilon; }
};

/**
 * Transition distribution P_h(. | s, a) for 1 <= h <= H - 1. Entries in
 * [-1e-12, 0) clamp to zero; the row then renormalizes if its sum deviates
 * from 1 by less than 1e-9, and anything worse throws InvalidModel.
 */
Eigen::VectorXd transition_dist(const LowRankModel& model, int h, int s, int a);

/**
 * Checks the structural invariants: every transition row is a distribution,
 * feature rows satisfy ||phi|| <= 1, and ||sum_s psi_h(s) g(s)|| <= sqrt(d)
 * for sampled test functions g with values in [0, 1]. Throws InvalidModel.
 */
void validate_low_rank(const LowRankModel& model, Rng& rng, int num_test_functions = 16);

/** Checks reward rows: nonnegative, sum to 1 within 1e-9. Throws InvalidModel. */
void validate_rewards(const RewardModel& rewards, int num_states, int A, int H);

/**
 * Tabular instance in low-rank form: d = S * A with one-hot features, psi
 * rows drawn per (s, a) from Dirichlet(dirichlet_alpha), and reward pmfs
 * drawn from a Dirichlet over the reward grid. State 0 is the initial state
 * by convention.
 */
std::pair<LowRankModel, RewardModel> make_tabular_lowrank(int num_states,
                                                          int num_actions,
                                                          int H,
                                                          Rng& rng,
                                                          double dirichlet_alpha = 1.0,
                                                          double reward_upsilon = 0.1);

} // namespace cvarrl
