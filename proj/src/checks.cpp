#include "cvarrl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cvarrl/bonus.hpp"
#include "cvarrl/budget_grid.hpp"
#include "cvarrl/dataset.hpp"
#include "cvarrl/driver.hpp"
#include "cvarrl/enumeration.hpp"
#include "cvarrl/errors.hpp"
#include "cvarrl/lsvi.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"
#include "cvarrl/risk.hpp"
#include "cvarrl/rng.hpp"
#include "cvarrl/serialize.hpp"
#include "cvarrl/threads.hpp"
#include "cvarrl/value_iteration.hpp"

namespace cvarrl {

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(4) << x;
    return out.str();
}

/** Per-trial verdicts filled under parallel_for; aggregation stays ordered. */
struct Trials {
    std::vector<uint8_t> pass;
    std::vector<double> stat;
    std::vector<std::string> error;

    explicit Trials(int n) : pass(n, 0), stat(n, 0.0), error(n) {}

    int passes() const {
        int n = 0;
        for (uint8_t p : pass)
            n += p;
        return n;
    }
    double max_stat() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double s : stat)
            m = std::max(m, s);
        return m;
    }
    std::string first_error() const {
        for (const auto& e : error)
            if (!e.empty())
                return e;
        return {};
    }
};

void run_trials(Trials& trials, const std::function<void(int)>& body) {
    parallel_for(static_cast<int>(trials.pass.size()), [&](int t) {
        try {
            body(t);
        } catch (const std::exception& ex) {
            trials.pass[t] = 0;
            trials.error[t] = ex.what();
        }
    });
}

CheckResult finish(const std::string& name, const Trials& trials, int min_pass,
                   const std::string& extra = {}) {
    const int n = static_cast<int>(trials.pass.size());
    const int ok = trials.passes();
    CheckResult result;
    result.name = name;
    result.pass = ok >= min_pass;
    std::ostringstream detail;
    detail << ok << "/" << n << " trials ok (need " << min_pass << ")";
    if (!extra.empty())
        detail << ", " << extra;
    const std::string err = trials.first_error();
    if (!err.empty())
        detail << ", first error: " << err;
    result.detail = detail.str();
    return result;
}

AugmentedPolicy random_policy(int H, int S, int A, const BudgetGrid& grid, Rng& rng) {
    AugmentedPolicy policy = AugmentedPolicy::zeros(H, S, A, grid);
    for (auto& mat : policy.pi)
        for (int row = 0; row < mat.rows(); ++row)
            mat.row(row) = sample_dirichlet(A, 1.0, rng).transpose();
    return policy;
}

ReturnDistribution random_three_point(double span, Rng& rng) {
    ReturnDistribution dist;
    std::vector<double> pts = {uniform01(rng) * span, uniform01(rng) * span,
                               uniform01(rng) * span};
    std::sort(pts.begin(), pts.end());
    // keep support points distinct
    pts[1] = std::max(pts[1], pts[0] + 1e-3);
    pts[2] = std::max(pts[2], pts[1] + 1e-3);
    dist.support = pts;
    const Eigen::VectorXd probs = sample_dirichlet(3, 1.0, rng);
    dist.probs = {probs[0], probs[1], probs[2]};
    return dist;
}

} // namespace

CheckResult check_instance_invariants(int instances, uint64_t seed) {
    Trials trials(instances);
    run_trials(trials, [&](int t) {
        const int S = 2 + t % 4;
        const int A = 1 + t % 3;
        const int H = 1 + t % 4;
        const double upsilon_r = std::vector<double>{0.1, 0.2, 0.25, 0.5, 1.0}[t % 5];

        Rng rng = make_rng(mix_seed(seed, t));
        auto [model, rewards] = make_tabular_lowrank(S, A, H, rng, 1.0, upsilon_r);
        validate_low_rank(model, rng);
        validate_rewards(rewards, S, A, H);

        // same seed must rebuild the same instance bit for bit
        Rng again = make_rng(mix_seed(seed, t));
        auto [model2, rewards2] = make_tabular_lowrank(S, A, H, again, 1.0, upsilon_r);
        if (instance_to_json(model, rewards).dump() !=
            instance_to_json(model2, rewards2).dump())
            return;

        const BudgetGrid grid(0.25, H);
        const AugmentedPolicy uniform = AugmentedPolicy::uniform(H, S, A, grid);
        for (int episode = 0; episode < 3; ++episode) {
            const double c1 = 0.7 * H;
            const Trajectory traj = rollout_augmented(model, rewards, uniform, c1, rng);
            if (static_cast<int>(traj.steps.size()) != H)
                return;
            double budget = c1;
            for (int h = 0; h < H; ++h) {
                const TrajStep& step = traj.steps[h];
                if (step.s < 0 || step.s >= S || step.a < 0 || step.a >= A)
                    return;
                if (std::abs(step.budget - budget) > 1e-12)
                    return;
                const int ri = round_steps(step.r, rewards.upsilon);
                if (std::abs(step.r - ri * rewards.upsilon) > 1e-12 ||
                    rewards.pmf[h](step.s * A + step.a, ri) <= 0.0)
                    return;
                if (h + 1 < H) {
                    if (step.s_next < 0 || step.s_next >= S)
                        return;
                    if (transition_dist(model, h + 1, step.s, step.a)[step.s_next] <= 0.0)
                        return;
                } else if (step.s_next != -1) {
                    return;
                }
                budget -= step.r;
            }
        }
        trials.pass[t] = 1;
    });
    return finish("instance invariants", trials, instances);
}

CheckResult check_cvar_functional(int dists, int samples, double mc_tol, uint64_t seed) {
    Trials trials(dists);
    run_trials(trials, [&](int t) {
        Rng rng = make_rng(mix_seed(seed, t));
        const ReturnDistribution dist = random_three_point(3.0, rng);
        dist.validate();

        if (std::abs(cvar_of_distribution(dist, 1.0) - dist.mean()) > 1e-12)
            return;

        double prev = -std::numeric_limits<double>::infinity();
        for (int j = 1; j <= 20; ++j) {
            const double value = cvar_of_distribution(dist, j / 20.0);
            if (value < prev - 1e-12 || value > dist.mean() + 1e-12)
                return;
            prev = value;
        }

        ReturnDistribution shifted = dist;
        for (double& x : shifted.support)
            x += 0.37;
        if (std::abs(cvar_of_distribution(shifted, 0.3) -
                     (cvar_of_distribution(dist, 0.3) + 0.37)) > 1e-12)
            return;

        Eigen::VectorXd probs(3);
        probs << dist.probs[0], dist.probs[1], dist.probs[2];
        std::vector<double> draws(samples);
        for (int i = 0; i < samples; ++i)
            draws[i] = dist.support[sample_discrete(probs, rng)];
        const double gap =
            std::abs(empirical_cvar(std::move(draws), 0.4) - cvar_of_distribution(dist, 0.4));
        trials.stat[t] = gap;
        trials.pass[t] = gap <= mc_tol;
    });
    return finish("cvar functional", trials, dists,
                  "worst mc gap " + fmt(trials.max_stat()));
}

CheckResult check_discretization_sandwich(int triples, uint64_t seed) {
    Trials trials(triples);
    run_trials(trials, [&](int t) {
        const double upsilon = std::vector<double>{0.05, 0.1, 0.25}[t % 3];
        const double tau = (t / 3) % 2 == 0 ? 0.2 : 0.5;
        const int S = 2 + t % 2;
        const int A = 1 + (t / 2) % 2;
        const int H = 2 + (t / 6) % 2;

        Rng rng = make_rng(mix_seed(seed, t));
        auto [model, rewards] = make_tabular_lowrank(S, A, H, rng, 1.0, 0.01);
        const BudgetGrid grid(upsilon, H);
        const AugmentedPolicy policy = random_policy(H, S, A, grid, rng);
        const int i1 = sample_uniform(grid.size(), rng);

        const double coarse = cvar_of_distribution(
            discretized_return_dist(model, rewards, policy, i1, grid), tau);
        const double wrapped = cvar_of_distribution(
            wrapped_policy_return_dist(model, rewards, policy, i1, grid), tau);
        const double diff = coarse - wrapped;
        trials.stat[t] = diff - H * upsilon / tau;
        trials.pass[t] = diff >= -1e-9 && diff <= H * upsilon / tau + 1e-9;
    });
    return finish("discretization sandwich", trials, triples,
                  "worst slack " + fmt(trials.max_stat()));
}

CheckResult check_simulation_lemmas(int tuples, uint64_t seed) {
    Trials trials(tuples);
    run_trials(trials, [&](int t) {
        const int S = 2 + t % 2;
        const int A = 2;
        const int H = 2 + (t / 2) % 2;
        const double upsilon_r = t % 2 == 0 ? 0.1 : 0.2;

        Rng rng = make_rng(mix_seed(seed, t));
        auto [model, rewards] = make_tabular_lowrank(S, A, H, rng, 1.0, upsilon_r);
        const LowRankModel approx = make_perturbed_class(model, 2, 1.0, rng).candidates[1];
        const BudgetGrid grid(upsilon_r, H);
        const AugmentedPolicy policy = random_policy(H, S, A, grid, rng);
        const int i1 = sample_uniform(grid.size(), rng);
        const BonusTable none = zero_bonus(H, S, A);

        // value gap against the occupancy-weighted one-step model error
        const double v_true = evaluate_policy_exact(model, rewards, policy, i1, none);
        const double v_approx = evaluate_policy_exact(approx, rewards, policy, i1, none);
        const auto occ = occupancy_measures(model, rewards, policy, grid.value(i1), grid);
        double weighted_tv = 0.0;
        for (int h = 1; h <= H - 1; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    weighted_tv += occ[h - 1](s, a) *
                                   model_tv_error(transition_dist(model, h, s, a),
                                                  transition_dist(approx, h, s, a));
        if (std::abs(v_true - v_approx) > H * weighted_tv + 1e-9)
            return;

        // risk-neutral telescoping identity with a state-only policy
        std::vector<Eigen::MatrixXd> r(H), r_hat(H), mu(H);
        for (int h = 0; h < H; ++h) {
            r[h].resize(S, A);
            r_hat[h].resize(S, A);
            mu[h].resize(S, A);
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) {
                    r[h](s, a) = uniform01(rng);
                    r_hat[h](s, a) = uniform01(rng);
                }
                mu[h].row(s) = sample_dirichlet(A, 1.0, rng).transpose();
            }
        }
        const auto values = [&](const LowRankModel& m,
                                const std::vector<Eigen::MatrixXd>& rew) {
            std::vector<Eigen::VectorXd> v(H + 1, Eigen::VectorXd::Zero(S));
            for (int h = H; h >= 1; --h)
                for (int s = 0; s < S; ++s) {
                    double total = 0.0;
                    for (int a = 0; a < A; ++a) {
                        double q = rew[h - 1](s, a);
                        if (h < H)
                            q += transition_dist(m, h, s, a).dot(v[h]);
                        total += mu[h - 1](s, a) * q;
                    }
                    v[h - 1][s] = total;
                }
            return v;
        };
        const auto v = values(model, r);
        const auto v_hat = values(approx, r_hat);

        Eigen::VectorXd d_hat = Eigen::VectorXd::Zero(S);
        d_hat[0] = 1.0;
        double decomposition = 0.0;
        for (int h = 1; h <= H; ++h) {
            Eigen::VectorXd d_next = Eigen::VectorXd::Zero(S);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double mass = d_hat[s] * mu[h - 1](s, a);
                    double term = r_hat[h - 1](s, a) - r[h - 1](s, a);
                    if (h < H) {
                        const Eigen::VectorXd p = transition_dist(model, h, s, a);
                        const Eigen::VectorXd p_hat = transition_dist(approx, h, s, a);
                        term += (p_hat - p).dot(v[h]);
                        d_next += mass * p_hat;
                    }
                    decomposition += mass * term;
                }
            d_hat = d_next;
        }
        trials.stat[t] = std::abs(v_hat[0][0] - v[0][0] - decomposition);
        trials.pass[t] = trials.stat[t] <= 1e-9;
    });
    return finish("simulation lemmas", trials, tuples,
                  "worst identity gap " + fmt(trials.max_stat()));
}

CheckResult check_potential_bounds(int streams, int length, uint64_t seed) {
    Trials trials(streams);
    run_trials(trials, [&](int t) {
        const int d = t % 2 == 0 ? 2 : 8;
        const double lambda = std::vector<double>{0.01, 1.0, 10.0}[t % 3];
        Rng rng = make_rng(mix_seed(seed, t));
        std::normal_distribution<double> normal(0.0, 1.0);

        std::vector<Eigen::VectorXd> phis;
        phis.reserve(length);
        for (int j = 0; j < length; ++j) {
            Eigen::VectorXd g(d);
            for (int i = 0; i < d; ++i)
                g[i] = normal(rng);
            const double norm = g.norm();
            phis.push_back(norm > 0 ? Eigen::VectorXd(g / norm * uniform01(rng)) : g);
        }

        Eigen::MatrixXd gram = lambda * Eigen::MatrixXd::Identity(d, d);
        for (const auto& phi : phis)
            gram += phi * phi.transpose();
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        double trace_sum = 0.0;
        for (const auto& phi : phis)
            trace_sum += phi.dot(llt.solve(phi));
        if (trace_sum > d + 1e-9)
            return;

        Eigen::MatrixXd running = Eigen::MatrixXd::Identity(d, d);
        double potential = 0.0;
        for (const auto& phi : phis) {
            potential += phi.dot(Eigen::LLT<Eigen::MatrixXd>(running).solve(phi));
            running += phi * phi.transpose();
        }
        double log_det = 0.0;
        const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(running).matrixL();
        for (int i = 0; i < d; ++i)
            log_det += 2.0 * std::log(L(i, i));
        trials.stat[t] = potential - 2.0 * log_det;
        trials.pass[t] = potential <= 2.0 * log_det + 1e-6;
    });
    return finish("potential bounds", trials, streams,
                  "worst slack " + fmt(trials.max_stat()));
}

CheckResult check_planner_matches_oracle(int instances, uint64_t seed) {
    Trials trials(instances);
    run_trials(trials, [&](int t) {
        const int S = 2 + t % 2;
        const int A = 1 + (t / 2) % 2;
        const int H = 1 + t % 3;
        const double upsilon_r = std::vector<double>{0.2, 0.25, 0.5}[t % 3];
        const double tau = std::vector<double>{0.3, 0.6, 1.0}[(t / 3) % 3];

        Rng rng = make_rng(mix_seed(seed, t));
        auto [model, rewards] = make_tabular_lowrank(S, A, H, rng, 1.0, upsilon_r);
        const BudgetGrid grid(upsilon_r, H);

        const ValueTable table = augmented_vi(model, rewards, zero_bonus(H, S, A), grid);
        const PlanResult plan = plan_cvar(table, tau);
        const OracleResult oracle = enumerate_cvar_oracle(model, rewards, tau, grid);
        trials.stat[t] = std::abs(plan.cvar - oracle.cvar_star);
        if (trials.stat[t] > 1e-9)
            return;

        const double attained = cvar_of_distribution(
            wrapped_policy_return_dist(model, rewards, plan.policy, plan.c_index, grid), tau);
        trials.pass[t] = attained >= plan.cvar - 1e-9;
    });
    return finish("planner vs oracle", trials, instances,
                  "worst value gap " + fmt(trials.max_stat()));
}

CheckResult check_mle_error(int trials_n, int rounds, int class_size, double bound,
                            int min_pass, uint64_t seed) {
    Trials trials(trials_n);
    run_trials(trials, [&](int t) {
        Rng rng = make_rng(mix_seed(seed, t));
        auto [model, rewards] = make_tabular_lowrank(3, 2, 3, rng, 1.0, 0.1);
        const ModelClass models = make_perturbed_class(model, class_size, 0.5, rng);
        const BudgetGrid grid(0.1, model.H);
        const AugmentedPolicy uniform =
            AugmentedPolicy::uniform(model.H, model.num_states, model.A, grid);

        TransitionDataset data(model.H);
        for (int round = 0; round < rounds; ++round)
            collect_iteration_data(model, rewards, uniform, grid.max_index, data, rng);

        // exact state occupancy of the uniform policy
        Eigen::VectorXd occ = Eigen::VectorXd::Zero(model.num_states);
        occ[0] = 1.0;
        double total = 0.0;
        for (int h = 1; h <= model.H - 1; ++h) {
            const int pick = mle_fit(data, models, h);
            const LowRankModel& winner = models.candidates[pick];
            Eigen::VectorXd next = Eigen::VectorXd::Zero(model.num_states);
            double err_h = 0.0;
            for (int s = 0; s < model.num_states; ++s)
                for (int a = 0; a < model.A; ++a) {
                    const Eigen::VectorXd p = transition_dist(model, h, s, a);
                    const double tv = model_tv_error(p, transition_dist(winner, h, s, a));
                    const double weight = occ[s] / model.A;
                    err_h += weight * tv * tv;
                    next += weight * p;
                }
            total += err_h;
            occ = next;
        }
        trials.stat[t] = total / (model.H - 1);
        trials.pass[t] = trials.stat[t] <= bound;
    });
    return finish("mle error", trials, min_pass,
                  "worst avg squared tv " + fmt(trials.max_stat()) + " vs bound " + fmt(bound));
}

namespace {

struct PairedRun {
    LsviResult lsvi;
    double exact_value = 0.0;
};

/** One LSVI run and the exact optimum of the same learned model and bonuses. */
PairedRun run_lsvi_pair(uint64_t run_seed, const LsviCheckParams& params) {
    Rng rng = make_rng(run_seed);
    auto [env, rewards] = make_tabular_lowrank(3, 2, 3, rng, 1.0, 0.1);
    const BudgetGrid grid(0.1, env.H);
    const ModelClass models = make_perturbed_class(env, 8, 1.0, rng);
    const AugmentedPolicy uniform =
        AugmentedPolicy::uniform(env.H, env.num_states, env.A, grid);

    TransitionDataset data(env.H);
    for (int round = 0; round < params.collect_rounds; ++round)
        collect_iteration_data(env, rewards, uniform, grid.max_index, data, rng);

    std::vector<int> picks;
    for (int h = 1; h <= env.H - 1; ++h)
        picks.push_back(mle_fit(data, models, h));
    const LowRankModel learned = assemble_model(models, picks);

    const Schedule sched =
        schedule_params(params.collect_rounds, env.H, env.A, env.d,
                        static_cast<int>(models.candidates.size()), 0.1,
                        params.c_alpha, 1.0);
    BonusState state;
    state.alpha_k = sched.alpha_k;
    state.lambda_k = sched.lambda_k;
    state.k = params.collect_rounds;
    for (int h = 1; h <= env.H - 1; ++h)
        state.sigma_hat.push_back(
            update_covariance(data.D[h - 1], learned.phi[h - 1], env.A, sched.lambda_k));
    const BonusTable bonus = make_bonus_table(state, learned);

    const int i1 = sample_uniform(grid.size(), rng);
    LsviConfig config;
    config.lambda = 1.0;
    config.T1 = params.T1;
    config.T2 = params.T2;
    config.grid = grid;
    config.beta = lsvi_beta(env.H, env.d, grid.upsilon, 0.1, params.T1, params.c_beta);

    PairedRun out{cvar_lsvi(learned, rewards, bonus, i1, config, rng), 0.0};
    out.exact_value = augmented_vi(learned, rewards, bonus, grid).V[0](0, i1);
    return out;
}

} // namespace

CheckResult check_lsvi_accuracy(const LsviCheckParams& params, double value_tol,
                                int min_pass, uint64_t seed) {
    Trials trials(params.runs);
    run_trials(trials, [&](int t) {
        const PairedRun run = run_lsvi_pair(mix_seed(seed, t), params);
        trials.stat[t] = std::abs(run.lsvi.value - run.exact_value);
        trials.pass[t] = trials.stat[t] <= value_tol;
    });
    return finish("lsvi value accuracy", trials, min_pass,
                  "worst gap " + fmt(trials.max_stat()) + " vs tol " + fmt(value_tol));
}

CheckResult check_lsvi_optimism(const LsviCheckParams& params, double slack,
                                int min_pass, uint64_t seed) {
    Trials trials(params.runs);
    run_trials(trials, [&](int t) {
        const PairedRun run = run_lsvi_pair(mix_seed(seed, t), params);
        double worst = -std::numeric_limits<double>::infinity();
        for (double v : run.lsvi.v1_estimates)
            worst = std::max(worst, v - run.exact_value);
        trials.stat[t] = worst;
        trials.pass[t] = worst <= slack;
    });
    return finish("lsvi optimism", trials, min_pass,
                  "worst overshoot " + fmt(trials.max_stat()) + " vs slack " + fmt(slack));
}

CheckResult check_learning_signal(int seeds, int iterations, int min_pass, uint64_t seed) {
    Trials trials(seeds);
    run_trials(trials, [&](int t) {
        Rng rng = make_rng(mix_seed(seed, t));
        auto [env, rewards] = make_tabular_lowrank(3, 2, 3, rng, 1.0, 0.1);
        const ModelClass models = make_perturbed_class(env, 8, 1.0, rng);

        RunConfig config;
        config.tau = 0.4;
        config.K = iterations;
        config.upsilon = 0.1;
        config.delta = 0.1;
        config.constants.c_alpha = bench::c_alpha;
        config.seed = mix_seed(seed, 1000 + t);
        config.algo = Algo::ela;
        config.planner = Planner::exact;

        const RunResult result = run_ela(env, rewards, models, config);
        const int quarter = std::max(1, iterations / 4);
        double first = 0.0, last = 0.0;
        for (int k = 0; k < quarter; ++k) {
            first += result.records[k].regret_k;
            last += result.records[iterations - 1 - k].regret_k;
        }
        first /= quarter;
        last /= quarter;
        trials.stat[t] = last - first;
        trials.pass[t] = last < first || (first <= 0.01 && last <= 0.01);
    });
    return finish("learning signal", trials, min_pass,
                  "worst last-minus-first regret " + fmt(trials.max_stat()));
}

} // namespace cvarrl
