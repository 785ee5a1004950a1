#include "cvarrl/enumeration.hpp"

#include <algorithm>
#include <cmath>

#include "cvarrl/errors.hpp"

namespace cvarrl {

namespace {

void check_policy_grid(const AugmentedPolicy& policy, const BudgetGrid& grid) {
    if (std::abs(policy.grid.upsilon - grid.upsilon) > 1e-9 ||
        policy.grid.max_index != grid.max_index)
        throw GridMismatch("policy grid does not match the requested grid");
}

} // namespace

OracleResult enumerate_cvar_oracle(const LowRankModel& model,
                                   const RewardModel& rewards, double tau,
                                   const BudgetGrid& grid) {
    if (std::abs(grid.upsilon - rewards.upsilon) > 1e-9)
        throw GridMismatch("enumerate_cvar_oracle: grid must match the reward precision");
    const int S = model.num_states;
    const int A = model.A;
    const int H = model.H;
    const int R = rewards.grid_size();
    // residual budgets in grid units: from max_index at step 1 down to
    // -(H-1)(R-1) after worst-case spending
    const int z_span = (H - 1) * (R - 1);
    const int z_count = grid.max_index + z_span + 1;
    const auto zoff = [&](int z) { return z + z_span; };
    if (static_cast<long long>(H) * S * z_count > 10'000'000LL)
        throw InstanceTooLarge("enumerate_cvar_oracle: residual budget table too large");

    // pmf[s][zoff] at the current step; suffix returns in grid units
    std::vector<std::vector<std::vector<double>>> next(
        S, std::vector<std::vector<double>>(z_count));
    std::vector<std::vector<std::vector<double>>> cur(
        S, std::vector<std::vector<double>>(z_count));
    std::vector<Eigen::MatrixXi> actions(H, Eigen::MatrixXi::Zero(S, z_count));

    for (int h = H; h >= 1; --h) {
        const int suffix_len = (H - h + 1) * (R - 1) + 1;
        const int z_lo = -(h - 1) * (R - 1);
        std::vector<Eigen::VectorXd> trans;
        if (h < H) {
            trans.reserve(S * A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    trans.push_back(transition_dist(model, h, s, a));
        }
        std::vector<double> candidate(suffix_len);
        for (int s = 0; s < S; ++s) {
            for (int z = z_lo; z <= grid.max_index; ++z) {
                double best_value = 0.0;
                int best_a = 0;
                std::vector<double>& best_pmf = cur[s][zoff(z)];
                for (int a = 0; a < A; ++a) {
                    std::fill(candidate.begin(), candidate.end(), 0.0);
                    const int row = s * A + a;
                    for (int rho = 0; rho < R; ++rho) {
                        const double p = rewards.pmf[h - 1](row, rho);
                        if (p <= 0.0)
                            continue;
                        if (h == H) {
                            candidate[rho] += p;
                            continue;
                        }
                        const Eigen::VectorXd& pn = trans[row];
                        for (int sn = 0; sn < S; ++sn) {
                            const double ps = p * pn[sn];
                            if (ps <= 0.0)
                                continue;
                            const std::vector<double>& child = next[sn][zoff(z - rho)];
                            for (size_t x = 0; x < child.size(); ++x)
                                candidate[rho + x] += ps * child[x];
                        }
                    }
                    double value = 0.0;
                    for (int x = 0; x < suffix_len && x < z; ++x)
                        value += candidate[x] * (z - x);
                    if (a == 0 || value < best_value) {
                        best_value = value;
                        best_a = a;
                        best_pmf = candidate;
                    }
                }
                actions[h - 1](s, zoff(z)) = best_a;
            }
        }
        std::swap(cur, next);
    }

    // budget sweep at the start state; expected shortfall back in real units
    std::vector<double> v1(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        const std::vector<double>& pmf = next[0][zoff(i)];
        double shortfall = 0.0;
        for (int x = 0; x < static_cast<int>(pmf.size()) && x < i; ++x)
            shortfall += pmf[x] * (i - x);
        v1[i] = shortfall * grid.upsilon;
    }
    const auto [c_index, value] = cvar_objective_from_values(v1, tau, grid);

    OracleResult out;
    out.cvar_star = value;
    out.c_star_index = c_index;
    out.policy = AugmentedPolicy::zeros(H, S, A, grid);
    for (int h = 1; h <= H; ++h)
        for (int s = 0; s < S; ++s)
            for (int i = 0; i <= grid.max_index; ++i)
                out.policy.set_action(h, s, i, actions[h - 1](s, zoff(i)));
    return out;
}

namespace {

// Forward measure over (state, fine return units, coarse rounded units).
// One routine serves all three query/return semantics.
struct ForwardResult {
    std::vector<double> ret_fine;   // pmf over j * ups_r
    std::vector<double> ret_coarse; // pmf over m * ups
    std::vector<Eigen::MatrixXd> occupancy;
};

ForwardResult forward_walk(const LowRankModel& model, const RewardModel& rewards,
                           const AugmentedPolicy& policy, bool wrapped_query,
                           double c1_raw, int i1, const BudgetGrid& grid) {
    const int S = model.num_states;
    const int A = model.A;
    const int H = model.H;
    const int R = rewards.grid_size();
    const double ups_r = rewards.upsilon;

    std::vector<int> usteps(R, 0);
    int u_max = 0;
    for (int rho = 0; rho < R; ++rho) {
        usteps[rho] = discretize_reward_steps(rewards.value(rho), grid.upsilon);
        u_max = std::max(u_max, usteps[rho]);
    }
    const int J = H * (R - 1) + 1;
    const int M = H * u_max + 1;
    if (static_cast<long long>(S) * J * M > 10'000'000LL)
        throw InstanceTooLarge("forward_walk: return measure too large");
    const auto at = [&](int s, int j, int m) { return (s * J + j) * M + m; };

    std::vector<double> w(static_cast<size_t>(S) * J * M, 0.0);
    std::vector<double> w_next(w.size());
    w[at(0, 0, 0)] = 1.0;

    ForwardResult out;
    out.ret_fine.assign(J, 0.0);
    out.ret_coarse.assign(M, 0.0);
    out.occupancy.assign(H, Eigen::MatrixXd::Zero(S, A));

    for (int h = 1; h <= H; ++h) {
        std::fill(w_next.begin(), w_next.end(), 0.0);
        const int j_hi = (h - 1) * (R - 1);
        const int m_hi = (h - 1) * u_max;
        std::vector<Eigen::VectorXd> trans;
        if (h < H) {
            trans.reserve(S * A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    trans.push_back(transition_dist(model, h, s, a));
        }
        for (int s = 0; s < S; ++s) {
            for (int j = 0; j <= j_hi; ++j) {
                for (int m = 0; m <= m_hi; ++m) {
                    const double mass = w[at(s, j, m)];
                    if (mass <= 0.0)
                        continue;
                    const int q = wrapped_query ? std::max(i1 - m, 0)
                                                : grid.index_of(c1_raw - j * ups_r);
                    const Eigen::VectorXd act = policy.action_dist(h, s, q);
                    for (int a = 0; a < A; ++a) {
                        const double pa = mass * act[a];
                        if (pa <= 0.0)
                            continue;
                        out.occupancy[h - 1](s, a) += pa;
                        const int row = s * A + a;
                        for (int rho = 0; rho < R; ++rho) {
                            const double pr = pa * rewards.pmf[h - 1](row, rho);
                            if (pr <= 0.0)
                                continue;
                            const int jn = j + rho;
                            const int mn = m + usteps[rho];
                            if (h == H) {
                                out.ret_fine[jn] += pr;
                                out.ret_coarse[mn] += pr;
                                continue;
                            }
                            const Eigen::VectorXd& pn = trans[row];
                            for (int sn = 0; sn < S; ++sn)
                                if (pn[sn] > 0.0)
                                    w_next[at(sn, jn, mn)] += pr * pn[sn];
                        }
                    }
                }
            }
        }
        std::swap(w, w_next);
    }
    return out;
}

ReturnDistribution collapse(const std::vector<double>& pmf, double step) {
    ReturnDistribution dist;
    for (size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] > 0.0) {
            dist.support.push_back(i * step);
            dist.probs.push_back(pmf[i]);
        }
    }
    dist.validate();
    return dist;
}

} // namespace

ReturnDistribution raw_policy_return_dist(const LowRankModel& model,
                                          const RewardModel& rewards,
                                          const AugmentedPolicy& policy,
                                          double c1, const BudgetGrid& grid) {
    check_policy_grid(policy, grid);
    const ForwardResult r =
        forward_walk(model, rewards, policy, false, c1, 0, grid);
    return collapse(r.ret_fine, rewards.upsilon);
}

ReturnDistribution wrapped_policy_return_dist(const LowRankModel& model,
                                              const RewardModel& rewards,
                                              const AugmentedPolicy& policy,
                                              int i1, const BudgetGrid& grid) {
    check_policy_grid(policy, grid);
    const ForwardResult r =
        forward_walk(model, rewards, policy, true, 0.0, i1, grid);
    return collapse(r.ret_fine, rewards.upsilon);
}

ReturnDistribution discretized_return_dist(const LowRankModel& model,
                                           const RewardModel& rewards,
                                           const AugmentedPolicy& policy,
                                           int i1, const BudgetGrid& grid) {
    check_policy_grid(policy, grid);
    const ForwardResult r =
        forward_walk(model, rewards, policy, true, 0.0, i1, grid);
    return collapse(r.ret_coarse, grid.upsilon);
}

std::vector<Eigen::MatrixXd> occupancy_measures(const LowRankModel& model,
                                                const RewardModel& rewards,
                                                const AugmentedPolicy& policy,
                                                double c1, const BudgetGrid& grid) {
    check_policy_grid(policy, grid);
    return forward_walk(model, rewards, policy, false, c1, 0, grid).occupancy;
}

} // namespace cvarrl
