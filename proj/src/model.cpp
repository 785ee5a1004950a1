#include "cvarrl/model.hpp"

#include <cmath>
#include <string>

#include "cvarrl/budget_grid.hpp"
#include "cvarrl/errors.hpp"

namespace cvarrl {

Eigen::VectorXd transition_dist(const LowRankModel& model, int h, int s, int a) {
    if (h < 1 || h > model.H - 1)
        throw ConfigInvalid("transition_dist: step " + std::to_string(h) +
                            " outside 1..H-1");
    if (s < 0 || s >= model.num_states || a < 0 || a >= model.A)
        throw ConfigInvalid("transition_dist: state or action out of range");
    Eigen::VectorXd p = model.psi[h - 1] * model.phi[h - 1].row(model.feature_row(s, a)).transpose();
    double total = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) {
            if (p[i] < -1e-12)
                throw InvalidModel("transition_dist: negative probability " +
                                   std::to_string(p[i]));
            p[i] = 0.0;
        }
        total += p[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InvalidModel("transition_dist: row sums to " + std::to_string(total));
    if (total != 1.0)
        p /= total;
    return p;
}

void validate_low_rank(const LowRankModel& model, Rng& rng, int num_test_functions) {
    if (model.H < 1 || model.A < 1 || model.d < 1 || model.num_states < 1)
        throw InvalidModel("validate_low_rank: empty dimensions");
    const size_t steps = static_cast<size_t>(model.H - 1);
    if (model.phi.size() != steps || model.psi.size() != steps)
        throw InvalidModel("validate_low_rank: factor count does not match horizon");
    const double sqrt_d = std::sqrt(static_cast<double>(model.d));
    for (int h = 1; h <= model.H - 1; ++h) {
        const Eigen::MatrixXd& phi = model.phi[h - 1];
        const Eigen::MatrixXd& psi = model.psi[h - 1];
        if (phi.rows() != model.num_states * model.A || phi.cols() != model.d ||
            psi.rows() != model.num_states || psi.cols() != model.d)
            throw InvalidModel("validate_low_rank: factor shape mismatch");
        for (int row = 0; row < phi.rows(); ++row) {
            if (phi.row(row).norm() > 1.0 + 1e-9)
                throw InvalidModel("validate_low_rank: feature norm exceeds 1");
        }
        for (int s = 0; s < model.num_states; ++s)
            for (int a = 0; a < model.A; ++a)
                transition_dist(model, h, s, a);
        for (int t = 0; t < num_test_functions; ++t) {
            Eigen::VectorXd g(model.num_states);
            for (int s = 0; s < model.num_states; ++s)
                g[s] = uniform01(rng);
            if ((psi.transpose() * g).norm() > sqrt_d + 1e-9)
                throw InvalidModel("validate_low_rank: psi norm bound violated");
        }
    }
}

void validate_rewards(const RewardModel& rewards, int num_states, int A, int H) {
    if (!(rewards.upsilon > 0.0))
        throw InvalidModel("validate_rewards: nonpositive grid precision");
    if (rewards.pmf.size() != static_cast<size_t>(H))
        throw InvalidModel("validate_rewards: pmf count does not match horizon");
    const int grid = ceil_steps(1.0, rewards.upsilon) + 1;
    for (int h = 1; h <= H; ++h) {
        const Eigen::MatrixXd& pmf = rewards.pmf[h - 1];
        if (pmf.rows() != num_states * A || pmf.cols() != grid)
            throw InvalidModel("validate_rewards: pmf shape mismatch");
        for (int row = 0; row < pmf.rows(); ++row) {
            double total = 0.0;
            for (int i = 0; i < pmf.cols(); ++i) {
                if (pmf(row, i) < 0.0)
                    throw InvalidModel("validate_rewards: negative reward probability");
                total += pmf(row, i);
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw InvalidModel("validate_rewards: reward row sums to " +
                                   std::to_string(total));
        }
    }
}

std::pair<LowRankModel, RewardModel> make_tabular_lowrank(int num_states,
                                                          int num_actions,
                                                          int H,
                                                          Rng& rng,
                                                          double dirichlet_alpha,
                                                          double reward_upsilon) {
    if (num_states < 1 || num_actions < 1 || H < 1)
        throw ConfigInvalid("make_tabular_lowrank: empty dimensions");
    if (!(dirichlet_alpha > 0.0))
        throw ConfigInvalid("make_tabular_lowrank: dirichlet_alpha must be positive");
    LowRankModel model;
    model.H = H;
    model.A = num_actions;
    model.num_states = num_states;
    model.d = num_states * num_actions;
    for (int h = 1; h <= H - 1; ++h) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(model.d, model.d);
        Eigen::MatrixXd psi(num_states, model.d);
        for (int col = 0; col < model.d; ++col)
            psi.col(col) = sample_dirichlet(num_states, dirichlet_alpha, rng);
        model.phi.push_back(std::move(phi));
        model.psi.push_back(std::move(psi));
    }
    RewardModel rewards;
    rewards.upsilon = reward_upsilon;
    const int grid = ceil_steps(1.0, reward_upsilon) + 1;
    for (int h = 1; h <= H; ++h) {
        Eigen::MatrixXd pmf(model.d, grid);
        for (int row = 0; row < model.d; ++row)
            pmf.row(row) = sample_dirichlet(grid, 1.0, rng).transpose();
        rewards.pmf.push_back(std::move(pmf));
    }
    return {std::move(model), std::move(rewards)};
}

} // namespace cvarrl
