#include "cvarrl/driver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cvarrl/bonus.hpp"
#include "cvarrl/enumeration.hpp"
#include "cvarrl/errors.hpp"
#include "cvarrl/lsvi.hpp"
#include "cvarrl/serialize.hpp"
#include "cvarrl/threads.hpp"
#include "cvarrl/value_iteration.hpp"

namespace cvarrl {

using nlohmann::json;

void RunConfig::validate() const {
    if (!(tau > 0.0) || tau > 1.0)
        throw ConfigInvalid("RunConfig: tau must lie in (0, 1]");
    if (K < 1)
        throw ConfigInvalid("RunConfig: K must be at least 1");
    if (!(upsilon > 0.0) || upsilon > 1.0)
        throw ConfigInvalid("RunConfig: upsilon must lie in (0, 1]");
    if (!(delta > 0.0) || delta >= 1.0)
        throw ConfigInvalid("RunConfig: delta must lie in (0, 1)");
    if (constants.c_T1 < 1.0 || constants.c_T2 < 1.0)
        throw ConfigInvalid("RunConfig: c_T1 and c_T2 are counts and must be >= 1");
    if (algo == Algo::ela && planner != Planner::exact)
        throw ConfigInvalid("RunConfig: the exploration loop pairs with the exact planner");
    if (algo == Algo::ella && planner != Planner::lsvi)
        throw ConfigInvalid("RunConfig: the combined loop pairs with the LSVI planner");
}

RewardModel discretize_rewards(const RewardModel& rewards, const BudgetGrid& grid) {
    RewardModel out;
    out.upsilon = grid.upsilon;
    const int coarse = ceil_steps(1.0, grid.upsilon) + 1;
    for (const Eigen::MatrixXd& pmf : rewards.pmf) {
        Eigen::MatrixXd merged = Eigen::MatrixXd::Zero(pmf.rows(), coarse);
        for (int rho = 0; rho < pmf.cols(); ++rho) {
            const int u = discretize_reward_steps(rho * rewards.upsilon, grid.upsilon);
            if (u >= coarse)
                throw GridMismatch("discretize_rewards: rounded reward exceeds the grid");
            merged.col(u) += pmf.col(rho);
        }
        out.pmf.push_back(std::move(merged));
    }
    return out;
}

namespace {

struct Iterate {
    AugmentedPolicy policy;
    int c_index = 0;
};

// shared per-iteration bookkeeping: true CVaR of the wrapped iterate, regret
// against the cached optimum, timing, callback
void finish_iteration(const LowRankModel& env, const RewardModel& rewards,
                      const BudgetGrid& grid, double tau, double cvar_star,
                      const Iterate& iterate, double cvar_planned, int k,
                      std::chrono::steady_clock::time_point started,
                      RunResult& result, const IterationCallback& on_iteration) {
    const ReturnDistribution dist = wrapped_policy_return_dist(
        env, rewards, iterate.policy, iterate.c_index, grid);
    const double cvar_true = cvar_of_distribution(dist, tau);
    const double regret = cvar_star - cvar_true;
    if (regret < -1e-9)
        throw NumericError("iterate outperformed the exact optimum: regret " +
                           std::to_string(regret));
    IterationRecord rec;
    rec.k = k;
    rec.c_k_index = iterate.c_index;
    rec.cvar_planned = cvar_planned;
    rec.cvar_true_of_iterate = cvar_true;
    rec.regret_k = regret;
    rec.cumulative_regret =
        (result.records.empty() ? 0.0 : result.records.back().cumulative_regret) +
        regret;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    result.records.push_back(rec);
    if (on_iteration)
        on_iteration(rec);
}

void select_outputs(const std::vector<Iterate>& iterates, Rng& rng, RunResult& result) {
    const int K = static_cast<int>(iterates.size());
    result.sampled_k = sample_uniform(K, rng) + 1;
    result.sampled_policy = iterates[result.sampled_k - 1].policy;
    result.sampled_c_index = iterates[result.sampled_k - 1].c_index;
    result.best_k = 1;
    result.best_cvar = result.records[0].cvar_true_of_iterate;
    for (int k = 2; k <= K; ++k) {
        const double v = result.records[k - 1].cvar_true_of_iterate;
        if (v > result.best_cvar) {
            result.best_cvar = v;
            result.best_k = k;
        }
    }
    result.best_policy = iterates[result.best_k - 1].policy;
    result.best_c_index = iterates[result.best_k - 1].c_index;
}

// model refit + covariance/bonus rebuild shared by both loops
BonusTable refit_and_bonus(const TransitionDataset& data, const ModelClass& models,
                           const RunConfig& config, const LowRankModel& env,
                           int k, LowRankModel& learned) {
    std::vector<int> pick(env.H - 1, 0);
    for (int h = 1; h <= env.H - 1; ++h)
        pick[h - 1] = mle_fit(data, models, h);
    learned = assemble_model(models, pick);

    const int class_size = static_cast<int>(models.candidates.size());
    const Schedule sched =
        schedule_params(k, env.H, env.A, env.d, class_size, config.delta,
                        config.constants.c_alpha, config.constants.c_lambda);
    BonusState state;
    state.alpha_k = sched.alpha_k;
    state.lambda_k = sched.lambda_k;
    state.k = k;
    for (int h = 1; h <= env.H - 1; ++h)
        state.sigma_hat.push_back(update_covariance(data.D[h - 1],
                                                    learned.phi[h - 1], env.A,
                                                    sched.lambda_k));
    return make_bonus_table(state, learned);
}

} // namespace

RunResult run_ela(const LowRankModel& env, const RewardModel& rewards,
                  const ModelClass& models, const RunConfig& config,
                  const IterationCallback& on_iteration, TransitionDataset* final_data) {
    config.validate();
    if (config.algo != Algo::ela)
        throw ConfigInvalid("run_ela: config names a different algorithm");
    const BudgetGrid grid(config.upsilon, env.H);
    const BudgetGrid reward_grid(rewards.upsilon, env.H);

    RunResult result;
    result.seed = config.seed;
    const OracleResult oracle = enumerate_cvar_oracle(env, rewards, config.tau, reward_grid);
    result.cvar_star = oracle.cvar_star;
    result.c_star_index = oracle.c_star_index;

    Rng data_rng = make_rng(mix_seed(config.seed, 1));
    Rng select_rng = make_rng(mix_seed(config.seed, 2));

    TransitionDataset data(env.H);
    AugmentedPolicy prev_policy = AugmentedPolicy::uniform(env.H, env.num_states, env.A, grid);
    int prev_c = grid.index_of(1.0);
    std::vector<Iterate> iterates;
    iterates.reserve(config.K);

    for (int k = 1; k <= config.K; ++k) {
        const auto started = std::chrono::steady_clock::now();
        result.env_episodes +=
            collect_iteration_data(env, rewards, prev_policy, prev_c, data, data_rng);

        LowRankModel learned;
        const BonusTable bonus = refit_and_bonus(data, models, config, env, k, learned);
        const ValueTable table = augmented_vi(learned, rewards, bonus, grid);
        PlanResult plan = plan_cvar(table, config.tau);

        Iterate iterate{std::move(plan.policy), plan.c_index};
        finish_iteration(env, rewards, grid, config.tau, result.cvar_star, iterate,
                         plan.cvar, k, started, result, on_iteration);
        prev_policy = iterate.policy;
        prev_c = iterate.c_index;
        iterates.push_back(std::move(iterate));
    }
    select_outputs(iterates, select_rng, result);
    if (final_data != nullptr)
        *final_data = data;
    return result;
}

RunResult run_ella(const LowRankModel& env, const RewardModel& rewards,
                   const ModelClass& models, const RunConfig& config,
                   const IterationCallback& on_iteration, TransitionDataset* final_data) {
    config.validate();
    if (config.algo != Algo::ella)
        throw ConfigInvalid("run_ella: config names a different algorithm");
    const BudgetGrid grid(config.upsilon, env.H);
    const BudgetGrid reward_grid(rewards.upsilon, env.H);
    const RewardModel rounded = discretize_rewards(rewards, grid);

    RunResult result;
    result.seed = config.seed;
    const OracleResult oracle = enumerate_cvar_oracle(env, rewards, config.tau, reward_grid);
    result.cvar_star = oracle.cvar_star;
    result.c_star_index = oracle.c_star_index;

    Rng data_rng = make_rng(mix_seed(config.seed, 1));
    Rng select_rng = make_rng(mix_seed(config.seed, 2));
    const uint64_t plan_base = mix_seed(config.seed, 3);

    LsviConfig lsvi_config;
    lsvi_config.lambda = 1.0;
    lsvi_config.T1 = static_cast<int>(std::lround(config.constants.c_T1));
    lsvi_config.T2 = static_cast<int>(std::lround(config.constants.c_T2));
    lsvi_config.beta = lsvi_beta(env.H, env.d, config.upsilon, config.delta,
                                 lsvi_config.T1, config.constants.c_beta);
    lsvi_config.grid = grid;
    lsvi_config.validate();

    TransitionDataset data(env.H);
    AugmentedPolicy prev_policy = AugmentedPolicy::uniform(env.H, env.num_states, env.A, grid);
    int prev_c = grid.max_index;
    std::vector<Iterate> iterates;
    iterates.reserve(config.K);

    for (int k = 1; k <= config.K; ++k) {
        const auto started = std::chrono::steady_clock::now();
        result.env_episodes +=
            collect_iteration_data(env, rewards, prev_policy, prev_c, data, data_rng);

        LowRankModel learned;
        const BonusTable bonus = refit_and_bonus(data, models, config, env, k, learned);

        // one LSVI per grid budget, all inside the learned model
        std::vector<double> values(grid.size(), 0.0);
        std::vector<AugmentedPolicy> policies(grid.size());
        parallel_for(grid.size(), [&](int i) {
            Rng plan_rng = make_rng(mix_seed(
                plan_base, static_cast<uint64_t>(k) * (grid.size() + 1) + i));
            LsviResult r = cvar_lsvi(learned, rounded, bonus, i, lsvi_config, plan_rng);
            values[i] = r.value;
            policies[i] = std::move(r.policy);
        });
        const auto [c_index, objective] =
            cvar_objective_from_values(values, config.tau, grid);

        Iterate iterate{std::move(policies[c_index]), c_index};
        finish_iteration(env, rewards, grid, config.tau, result.cvar_star, iterate,
                         objective, k, started, result, on_iteration);
        prev_policy = iterate.policy;
        prev_c = iterate.c_index;
        iterates.push_back(std::move(iterate));
    }
    select_outputs(iterates, select_rng, result);
    if (final_data != nullptr)
        *final_data = data;
    return result;
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig config;
    try {
        config.tau = doc.at("tau").get<double>();
        config.K = doc.at("K").get<int>();
        config.upsilon = doc.at("upsilon").get<double>();
        config.delta = doc.at("delta").get<double>();
        config.seed = doc.at("seed").get<uint64_t>();
        const std::string algo = doc.at("algo").get<std::string>();
        if (algo == "ela")
            config.algo = Algo::ela;
        else if (algo == "ella")
            config.algo = Algo::ella;
        else
            throw ConfigInvalid("run config: unknown algo " + algo);
        if (doc.contains("planner")) {
            const std::string planner = doc.at("planner").get<std::string>();
            if (planner == "exact")
                config.planner = Planner::exact;
            else if (planner == "lsvi")
                config.planner = Planner::lsvi;
            else
                throw ConfigInvalid("run config: unknown planner " + planner);
        } else {
            config.planner = config.algo == Algo::ela ? Planner::exact : Planner::lsvi;
        }
        if (doc.contains("constants")) {
            const json& c = doc.at("constants");
            if (c.contains("c_alpha"))
                config.constants.c_alpha = c.at("c_alpha").get<double>();
            if (c.contains("c_lambda"))
                config.constants.c_lambda = c.at("c_lambda").get<double>();
            if (c.contains("c_beta"))
                config.constants.c_beta = c.at("c_beta").get<double>();
            if (c.contains("c_T1"))
                config.constants.c_T1 = c.at("c_T1").get<double>();
            if (c.contains("c_T2"))
                config.constants.c_T2 = c.at("c_T2").get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("run config: ") + e.what());
    }
    config.validate();
    return config;
}

json run_result_to_json(const RunResult& result, const RunConfig& config) {
    json doc;
    doc["seed"] = result.seed;
    doc["algo"] = config.algo == Algo::ela ? "ela" : "ella";
    doc["planner"] = config.planner == Planner::exact ? "exact" : "lsvi";
    doc["tau"] = config.tau;
    doc["K"] = config.K;
    doc["upsilon"] = config.upsilon;
    doc["delta"] = config.delta;
    doc["constants"] = {{"c_alpha", config.constants.c_alpha},
                        {"c_lambda", config.constants.c_lambda},
                        {"c_beta", config.constants.c_beta},
                        {"c_T1", config.constants.c_T1},
                        {"c_T2", config.constants.c_T2}};
    doc["cvar_star"] = result.cvar_star;
    doc["c_star_index"] = result.c_star_index;
    doc["env_episodes"] = result.env_episodes;
    json records = json::array();
    for (const IterationRecord& r : result.records) {
        records.push_back({{"k", r.k},
                           {"c_k_index", r.c_k_index},
                           {"cvar_planned", r.cvar_planned},
                           {"cvar_true_of_iterate", r.cvar_true_of_iterate},
                           {"regret_k", r.regret_k},
                           {"cumulative_regret", r.cumulative_regret},
                           {"wall_ms", r.wall_ms}});
    }
    doc["records"] = std::move(records);
    doc["sampled"] = {{"k", result.sampled_k},
                      {"c_index", result.sampled_c_index},
                      {"policy", policy_to_json(result.sampled_policy)}};
    doc["best"] = {{"k", result.best_k},
                   {"c_index", result.best_c_index},
                   {"cvar_true", result.best_cvar},
                   {"policy", policy_to_json(result.best_policy)}};
    return doc;
}

const char* const kMetricsHeader =
    "k,c_k_index,cvar_planned,cvar_true_of_iterate,regret_k,cumulative_regret,wall_ms";

std::string metrics_csv_line(const IterationRecord& rec) {
    std::ostringstream line;
    line.precision(17);
    line << rec.k << ',' << rec.c_k_index << ',' << rec.cvar_planned << ','
         << rec.cvar_true_of_iterate << ',' << rec.regret_k << ','
         << rec.cumulative_regret << ',' << rec.wall_ms;
    return line.str();
}

void write_metrics_csv(const std::string& path, const RunResult& result) {
    std::ofstream out(path);
    if (!out)
        throw ConfigInvalid("write_metrics_csv: cannot open " + path);
    out << kMetricsHeader << "\n";
    for (const IterationRecord& rec : result.records)
        out << metrics_csv_line(rec) << "\n";
}

} // namespace cvarrl
