#include "cvarrl/lsvi.hpp"

#include <algorithm>
#include <cmath>

#include "cvarrl/errors.hpp"

namespace cvarrl {

void LsviConfig::validate() const {
    if (!(lambda > 0.0))
        throw ConfigInvalid("LsviConfig: lambda must be positive");
    if (beta < 0.0)
        throw ConfigInvalid("LsviConfig: beta must be nonnegative");
    if (T1 < 1 || T2 < 1)
        throw ConfigInvalid("LsviConfig: T1 and T2 must be at least 1");
    if (!(grid.upsilon > 0.0) || grid.max_index < 1)
        throw ConfigInvalid("LsviConfig: budget grid is empty");
}

double lsvi_iota(int H, int d, double upsilon, double delta, int T1) {
    if (H < 1 || d < 1 || T1 < 1 || !(upsilon > 0.0) || !(delta > 0.0) || delta >= 1.0)
        throw ConfigInvalid("lsvi_iota: bad arguments");
    const double l = std::log(static_cast<double>(H) * d * T1 / (upsilon * delta));
    return l * l;
}

double lsvi_beta(int H, int d, double upsilon, double delta, int T1, double c_beta) {
    const double iota = lsvi_iota(H, d, upsilon, delta, T1);
    return c_beta * std::pow(static_cast<double>(H), 1.5) * d *
           std::pow(iota, 0.25) / upsilon;
}

Eigen::VectorXd tensor_feature(const Eigen::VectorXd& phi_hat,
                               const Eigen::VectorXd& reward_pmf) {
    const int d = static_cast<int>(phi_hat.size());
    const int r = static_cast<int>(reward_pmf.size());
    Eigen::VectorXd out(static_cast<long>(d) * r);
    for (int j = 0; j < d; ++j)
        out.segment(static_cast<long>(j) * r, r) = phi_hat[j] * reward_pmf;
    return out;
}

Eigen::VectorXd ridge_weights(const std::vector<SimTrajectory>& buffer, int h,
                              const Eigen::MatrixXd& phi_bar_h,
                              const Eigen::MatrixXd& v_next, int i,
                              double lambda, const BudgetGrid& grid) {
    if (!(lambda > 0.0))
        throw ConfigInvalid("ridge_weights: lambda must be positive");
    if (i < 0 || i > grid.max_index)
        throw ConfigInvalid("ridge_weights: budget index off the grid");
    if (v_next.rows() < 1 || phi_bar_h.rows() % v_next.rows() != 0)
        throw DimensionMismatch("ridge_weights: feature rows are not S*A");
    const int dbar = static_cast<int>(phi_bar_h.cols());
    Eigen::MatrixXd Lambda = lambda * Eigen::MatrixXd::Identity(dbar, dbar);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dbar);
    const int A = static_cast<int>(phi_bar_h.rows() / v_next.rows());
    for (const SimTrajectory& traj : buffer) {
        if (static_cast<size_t>(h) > traj.size())
            throw DimensionMismatch("ridge_weights: trajectory shorter than step");
        const SimStep& step = traj[h - 1];
        if (step.s_next < 0)
            throw ConfigInvalid("ridge_weights: step has no successor state");
        const Eigen::VectorXd phi = phi_bar_h.row(step.s * A + step.a).transpose();
        Lambda.noalias() += phi * phi.transpose();
        const int j = grid.clamp_index(i - step.r_steps);
        rhs.noalias() += phi * v_next(step.s_next, j);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Lambda);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("ridge_weights: Gram matrix is not positive definite");
    return llt.solve(rhs);
}

double q_estimate(const Eigen::VectorXd& phi_bar, const Eigen::VectorXd& w,
                  double bonus_val, double beta, const Eigen::MatrixXd& gram,
                  int H) {
    if (phi_bar.size() != w.size() || gram.rows() != phi_bar.size() ||
        gram.cols() != phi_bar.size())
        throw DimensionMismatch("q_estimate: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("q_estimate: Gram matrix is not positive definite");
    const double quad = phi_bar.dot(llt.solve(phi_bar));
    const double value =
        -bonus_val + phi_bar.dot(w) - beta * std::sqrt(std::max(quad, 0.0));
    return std::clamp(value, -static_cast<double>(H), static_cast<double>(H));
}

namespace {

struct GreedyTables {
    std::vector<Eigen::MatrixXi> greedy; // H matrices, S x G
};

// simulates one episode under greedy tables in (model, rewards); returns the
// trajectory plus the unclamped reward total and the bonus total
struct SimOutcome {
    SimTrajectory traj;
    int reward_steps = 0;
    double bonus_total = 0.0;
};

SimOutcome simulate_greedy(const LowRankModel& model, const RewardModel& rewards,
                           const BonusTable& bonus,
                           const std::vector<std::vector<Eigen::VectorXd>>& trans,
                           const GreedyTables& tables, int i1, Rng& rng) {
    SimOutcome out;
    int s = 0;
    int i = i1;
    for (int h = 1; h <= model.H; ++h) {
        SimStep step;
        step.s = s;
        step.a = tables.greedy[h - 1](s, i);
        out.bonus_total += bonus.at(h, s, step.a);
        const int row = s * model.A + step.a;
        step.r_steps = sample_discrete(rewards.pmf[h - 1].row(row).transpose(), rng);
        out.reward_steps += step.r_steps;
        if (h < model.H) {
            step.s_next = sample_discrete(trans[h - 1][row], rng);
            s = step.s_next;
        }
        i = std::max(i - step.r_steps, 0);
        out.traj.push_back(step);
    }
    return out;
}

} // namespace

LsviResult cvar_lsvi(const LowRankModel& model, const RewardModel& rewards,
                     const BonusTable& bonus, int i1, const LsviConfig& config,
                     Rng& rng) {
    config.validate();
    const int S = model.num_states;
    const int A = model.A;
    const int H = model.H;
    const int G = config.grid.size();
    const int R = rewards.grid_size();
    const double ups = config.grid.upsilon;
    if (std::abs(rewards.upsilon - ups) > 1e-9)
        throw GridMismatch("cvar_lsvi: rewards must live on the planning grid");
    if (i1 < 0 || i1 > config.grid.max_index)
        throw ConfigInvalid("cvar_lsvi: initial budget index off the grid");
    if (bonus.H != H || bonus.num_states != S || bonus.A != A)
        throw DimensionMismatch("cvar_lsvi: bonus table shape mismatch");
    const double Hd = static_cast<double>(H);

    std::vector<std::vector<Eigen::VectorXd>> trans(H - 1);
    for (int h = 1; h <= H - 1; ++h) {
        trans[h - 1].reserve(S * A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                trans[h - 1].push_back(transition_dist(model, h, s, a));
    }

    // tensor features per regression step
    const int dbar = model.d * R;
    std::vector<Eigen::MatrixXd> phi_bar(H - 1);
    for (int h = 1; h <= H - 1; ++h) {
        phi_bar[h - 1].resize(S * A, dbar);
        for (int row = 0; row < S * A; ++row)
            phi_bar[h - 1].row(row) =
                tensor_feature(model.phi[h - 1].row(row).transpose(),
                               rewards.pmf[h - 1].row(row).transpose())
                    .transpose();
    }

    // the last step backs up exactly: rewards are known and V_{H+1} is the
    // identity on the budget grid
    Eigen::MatrixXd v_last(S, G);
    Eigen::MatrixXi greedy_last(S, G);
    for (int s = 0; s < S; ++s) {
        for (int i = 0; i < G; ++i) {
            double best = 0.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const int row = s * A + a;
                double q = -bonus.at(H, s, a);
                for (int rho = 0; rho < R; ++rho) {
                    const double p = rewards.pmf[H - 1](row, rho);
                    if (p > 0.0)
                        q += p * config.grid.value(std::max(i - rho, 0));
                }
                q = std::clamp(q, -Hd, Hd);
                if (a == 0 || q < best) {
                    best = q;
                    best_a = a;
                }
            }
            v_last(s, i) = best;
            greedy_last(s, i) = best_a;
        }
    }

    // per-step regression state
    std::vector<Eigen::MatrixXd> Lambda(H - 1);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llt(H - 1);
    std::vector<int> since_refactor(H - 1, 0);
    std::vector<Eigen::MatrixXd> counts(H - 1); // (S*A) x (R*S) sample tallies
    for (int h = 1; h <= H - 1; ++h) {
        Lambda[h - 1] = config.lambda * Eigen::MatrixXd::Identity(dbar, dbar);
        llt[h - 1].compute(Lambda[h - 1]);
        counts[h - 1] = Eigen::MatrixXd::Zero(S * A, R * S);
    }

    LsviResult result;
    result.weights.Lambda.assign(H - 1, Eigen::MatrixXd());
    result.weights.w.assign(H - 1, {});
    std::vector<SimTrajectory> buffer;
    std::vector<GreedyTables> candidates;
    candidates.reserve(config.T1);

    for (int t = 1; t <= config.T1; ++t) {
        if (t >= 2) {
            const SimTrajectory& traj = buffer.back();
            for (int h = 1; h <= H - 1; ++h) {
                const SimStep& step = traj[h - 1];
                const int row = step.s * A + step.a;
                const Eigen::VectorXd phi = phi_bar[h - 1].row(row).transpose();
                Lambda[h - 1].noalias() += phi * phi.transpose();
                llt[h - 1].rankUpdate(phi);
                if (++since_refactor[h - 1] >= 64) {
                    llt[h - 1].compute(Lambda[h - 1]);
                    since_refactor[h - 1] = 0;
                }
                counts[h - 1](row, step.r_steps * S + step.s_next) += 1.0;
            }
        }
        const double n_samples = std::max<double>(t - 1, 1.0);

        GreedyTables tables;
        tables.greedy.assign(H, Eigen::MatrixXi());
        tables.greedy[H - 1] = greedy_last;
        Eigen::MatrixXd v_next = v_last;
        for (int h = H - 1; h >= 1; --h) {
            if (llt[h - 1].info() != Eigen::Success)
                throw SingularMatrix("cvar_lsvi: Gram factorization failed");
            // solve once against the feature rows; everything else is small
            const Eigen::MatrixXd B = llt[h - 1].solve(phi_bar[h - 1].transpose());
            const Eigen::MatrixXd phiB = phi_bar[h - 1] * B;
            Eigen::VectorXd eta(S * A);
            for (int row = 0; row < S * A; ++row)
                eta[row] = std::sqrt(std::max(phiB(row, row), 0.0));

            Eigen::MatrixXd v_cur(S, G);
            Eigen::MatrixXi greedy_cur(S, G);
            const bool keep_weights = (t == config.T1);
            if (keep_weights)
                result.weights.w[h - 1].assign(G, Eigen::VectorXd());
            Eigen::VectorXd coef(S * A);
            for (int i = 0; i < G; ++i) {
                for (int row = 0; row < S * A; ++row) {
                    double acc = 0.0;
                    for (int rho = 0; rho < R; ++rho) {
                        const int j = std::max(i - rho, 0);
                        for (int sn = 0; sn < S; ++sn) {
                            const double c = counts[h - 1](row, rho * S + sn);
                            if (c > 0.0)
                                acc += c * v_next(sn, j);
                        }
                    }
                    coef[row] = acc;
                }
                const Eigen::VectorXd w = B * coef;
                result.max_scaled_weight_norm = std::max(
                    result.max_scaled_weight_norm, w.norm() / std::sqrt(n_samples));
                if (keep_weights)
                    result.weights.w[h - 1][i] = w;
                const Eigen::VectorXd qlin = phiB * coef;
                for (int s = 0; s < S; ++s) {
                    double best = 0.0;
                    int best_a = 0;
                    for (int a = 0; a < A; ++a) {
                        const int row = s * A + a;
                        const double q =
                            std::clamp(-bonus.at(h, s, a) + qlin[row] -
                                           config.beta * eta[row],
                                       -Hd, Hd);
                        if (a == 0 || q < best) {
                            best = q;
                            best_a = a;
                        }
                    }
                    v_cur(s, i) = best;
                    greedy_cur(s, i) = best_a;
                }
            }
            tables.greedy[h - 1] = greedy_cur;
            v_next = v_cur;
        }

        result.v1_estimates.push_back(v_next(0, i1));
        buffer.push_back(
            simulate_greedy(model, rewards, bonus, trans, tables, i1, rng).traj);
        candidates.push_back(std::move(tables));
    }

    // Monte Carlo evaluation of every candidate, seeded per candidate
    const uint64_t eval_base = rng();
    result.mc_values.assign(config.T1, 0.0);
    for (int t = 0; t < config.T1; ++t) {
        Rng eval_rng = make_rng(mix_seed(eval_base, t));
        double total = 0.0;
        for (int ep = 0; ep < config.T2; ++ep) {
            const SimOutcome o = simulate_greedy(model, rewards, bonus, trans,
                                                 candidates[t], i1, eval_rng);
            total += config.grid.value(std::max(i1 - o.reward_steps, 0)) -
                     o.bonus_total;
        }
        result.mc_values[t] = total / config.T2;
    }

    int best_t = 0;
    for (int t = 1; t < config.T1; ++t)
        if (result.mc_values[t] < result.mc_values[best_t])
            best_t = t;
    result.best_t = best_t;
    result.value = result.mc_values[best_t];

    result.policy = AugmentedPolicy::zeros(H, S, A, config.grid);
    for (int h = 1; h <= H; ++h)
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < G; ++i)
                result.policy.set_action(h, s, i, candidates[best_t].greedy[h - 1](s, i));

    result.weights.Lambda = Lambda;
    result.weights.buffer = std::move(buffer);
    return result;
}

double policy_eval_mc(const LowRankModel& model, const RewardModel& rewards,
                      const BonusTable& bonus, const AugmentedPolicy& policy,
                      int i1, int T2, Rng& rng) {
    if (T2 < 1)
        throw ConfigInvalid("policy_eval_mc: T2 must be at least 1");
    if (std::abs(rewards.upsilon - policy.grid.upsilon) > 1e-9)
        throw GridMismatch("policy_eval_mc: rewards must live on the policy grid");
    if (i1 < 0 || i1 > policy.grid.max_index)
        throw ConfigInvalid("policy_eval_mc: initial budget index off the grid");
    std::vector<std::vector<Eigen::VectorXd>> trans(model.H - 1);
    for (int h = 1; h <= model.H - 1; ++h) {
        trans[h - 1].reserve(model.num_states * model.A);
        for (int s = 0; s < model.num_states; ++s)
            for (int a = 0; a < model.A; ++a)
                trans[h - 1].push_back(transition_dist(model, h, s, a));
    }
    double total = 0.0;
    for (int ep = 0; ep < T2; ++ep) {
        int s = 0;
        int i = i1;
        int spent = 0;
        double bonus_total = 0.0;
        for (int h = 1; h <= model.H; ++h) {
            const int a = sample_discrete(policy.action_dist(h, s, i), rng);
            bonus_total += bonus.at(h, s, a);
            const int row = s * model.A + a;
            const int rho =
                sample_discrete(rewards.pmf[h - 1].row(row).transpose(), rng);
            spent += rho;
            if (h < model.H)
                s = sample_discrete(trans[h - 1][row], rng);
            i = std::max(i - rho, 0);
        }
        total += policy.grid.value(std::max(i1 - spent, 0)) - bonus_total;
    }
    return total / T2;
}

} // namespace cvarrl
