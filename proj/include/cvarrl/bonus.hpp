#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cvarrl/dataset.hpp"
#include "cvarrl/model.hpp"

namespace cvarrl {

struct Schedule {
    double alpha_k = 0.0;
    double lambda_k = 0.0;
};

/**
 * Iteration-k bonus scale and ridge weight:
 *
 *   alpha_k  = c_alpha * sqrt(H^2 (A + d^2) * log(|F| H k / delta))
 *   lambda_k = c_lambda * d * log(|F| H k / delta)
 */
Schedule schedule_params(int k, int H, int A, int d, int class_size, double delta,
                         double c_alpha = 1.0, double c_lambda = 1.0);

/**
 * Regularized empirical covariance lambda_k I + sum_{(s,a) in data} phi phi^T,
 * features taken from the (S*A) x d row matrix phi_h. Rebuilt from scratch;
 * only the main bag D[h] feeds it.
 */
Eigen::MatrixXd update_covariance(const std::vector<TransitionTuple>& data,
                                  const Eigen::MatrixXd& phi_h, int A,
                                  double lambda_k);

/**
 * Exploration bonus min(alpha_k * sqrt(phi^T Sigma^-1 phi), 2) for steps
 * h <= H - 2 and zero for the last two steps, where no lookahead data informs
 * the model. Solves through an SPD factorization; throws SingularMatrix if
 * the covariance is not positive definite.
 */
double bonus(const Eigen::VectorXd& phi, const Eigen::MatrixXd& sigma_hat,
             double alpha_k, int h, int H);

/** Per-iteration covariance state, one matrix per step 1..H-1. */
struct BonusState {
    std::vector<Eigen::MatrixXd> sigma_hat;
    double alpha_k = 0.0;
    double lambda_k = 0.0;
    int k = 0;
};

/** Bonus values precomputed per (h, s, a) for the planners; zero rows for h > H-2. */
struct BonusTable {
    int H = 0;
    int num_states = 0;
    int A = 0;
    std::vector<Eigen::VectorXd> b; // H vectors of length S*A

    double at(int h, int s, int a) const { return b[h - 1][s * A + a]; }
    bool is_zero = false;
};

BonusTable make_bonus_table(const BonusState& state, const LowRankModel& learned);
BonusTable zero_bonus(int H, int num_states, int A);

} // namespace cvarrl
