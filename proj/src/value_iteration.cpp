#include "cvarrl/value_iteration.hpp"

#include <cmath>
#include <string>

#include "cvarrl/errors.hpp"

namespace cvarrl {

std::vector<int> reward_grid_steps(const RewardModel& rewards, const BudgetGrid& grid) {
    std::vector<int> steps(rewards.grid_size(), -1);
    for (int rho = 0; rho < rewards.grid_size(); ++rho) {
        const double r = rewards.value(rho);
        const int n = round_steps(r, grid.upsilon);
        if (std::abs(r - n * grid.upsilon) <= 1e-9) {
            steps[rho] = n;
            continue;
        }
        for (const Eigen::MatrixXd& pmf : rewards.pmf)
            for (int row = 0; row < pmf.rows(); ++row)
                if (pmf(row, rho) > 0.0)
                    throw GridMismatch("reward support point " + std::to_string(r) +
                                       " is off the planning grid");
    }
    return steps;
}

ValueTable augmented_vi(const LowRankModel& model, const RewardModel& rewards,
                        const BonusTable& bonus, const BudgetGrid& grid) {
    const int S = model.num_states;
    const int A = model.A;
    const int H = model.H;
    const int G = grid.size();
    const std::vector<int> steps = reward_grid_steps(rewards, grid);

    ValueTable table;
    table.H = H;
    table.num_states = S;
    table.A = A;
    table.grid = grid;
    table.V.assign(H + 1, Eigen::MatrixXd::Zero(S, G));
    table.greedy.assign(H, Eigen::MatrixXi::Zero(S, G));
    for (int i = 0; i < G; ++i)
        table.V[H].col(i).setConstant(grid.value(i));

    for (int h = H; h >= 1; --h) {
        // transition rows for this step, empty at the final step
        std::vector<Eigen::VectorXd> trans;
        if (h < H) {
            trans.reserve(S * A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    trans.push_back(transition_dist(model, h, s, a));
        }
        const Eigen::MatrixXd& next = table.V[h];
        for (int s = 0; s < S; ++s) {
            for (int i = 0; i < G; ++i) {
                double best = 0.0;
                int best_a = 0;
                for (int a = 0; a < A; ++a) {
                    const int row = s * A + a;
                    double q = -bonus.at(h, s, a);
                    for (int rho = 0; rho < rewards.grid_size(); ++rho) {
                        const double p = rewards.pmf[h - 1](row, rho);
                        if (p <= 0.0)
                            continue;
                        const int j = grid.clamp_index(i - steps[rho]);
                        if (h < H)
                            q += p * trans[row].dot(next.col(j));
                        else
                            q += p * grid.value(j);
                    }
                    if (a == 0 || q < best) {
                        best = q;
                        best_a = a;
                    }
                }
                table.V[h - 1](s, i) = best;
                table.greedy[h - 1](s, i) = best_a;
            }
        }
    }
    return table;
}

PlanResult plan_cvar(const ValueTable& table, double tau, int s1) {
    std::vector<double> v1(table.grid.size());
    for (int i = 0; i < table.grid.size(); ++i)
        v1[i] = table.V[0](s1, i);
    const auto [c_index, value] = cvar_objective_from_values(v1, tau, table.grid);

    PlanResult out;
    out.c_index = c_index;
    out.cvar = value;
    out.policy = AugmentedPolicy::zeros(table.H, table.num_states, table.A, table.grid);
    for (int h = 1; h <= table.H; ++h)
        for (int s = 0; s < table.num_states; ++s)
            for (int i = 0; i < table.grid.size(); ++i)
                out.policy.set_action(h, s, i, table.greedy[h - 1](s, i));
    return out;
}

double evaluate_policy_exact(const LowRankModel& model, const RewardModel& rewards,
                             const AugmentedPolicy& policy, int c1_index,
                             const BonusTable& bonus) {
    const int S = model.num_states;
    const int A = model.A;
    const int H = model.H;
    const BudgetGrid& grid = policy.grid;
    const int G = grid.size();
    if (policy.num_states != S || policy.A != A || policy.H() != H)
        throw DimensionMismatch("evaluate_policy_exact: policy/model shape mismatch");
    if (c1_index < 0 || c1_index >= G)
        throw ConfigInvalid("evaluate_policy_exact: initial budget off the grid");
    const std::vector<int> steps = reward_grid_steps(rewards, grid);

    Eigen::MatrixXd next(S, G);
    for (int i = 0; i < G; ++i)
        next.col(i).setConstant(grid.value(i));
    Eigen::MatrixXd cur(S, G);
    for (int h = H; h >= 1; --h) {
        std::vector<Eigen::VectorXd> trans;
        if (h < H) {
            trans.reserve(S * A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    trans.push_back(transition_dist(model, h, s, a));
        }
        for (int s = 0; s < S; ++s) {
            for (int i = 0; i < G; ++i) {
                const Eigen::VectorXd act = policy.action_dist(h, s, i);
                double v = 0.0;
                for (int a = 0; a < A; ++a) {
                    const double pa = act[a];
                    if (pa <= 0.0)
                        continue;
                    const int row = s * A + a;
                    double q = -bonus.at(h, s, a);
                    for (int rho = 0; rho < rewards.grid_size(); ++rho) {
                        const double p = rewards.pmf[h - 1](row, rho);
                        if (p <= 0.0)
                            continue;
                        const int j = grid.clamp_index(i - steps[rho]);
                        if (h < H)
                            q += p * trans[row].dot(next.col(j));
                        else
                            q += p * grid.value(j);
                    }
                    v += pa * q;
                }
                cur(s, i) = v;
            }
        }
        next = cur;
    }
    return next(0, c1_index);
}

} // namespace cvarrl
