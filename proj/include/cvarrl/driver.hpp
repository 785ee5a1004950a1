#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvarrl/dataset.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"

namespace cvarrl {

enum class Algo { ela, ella };
enum class Planner { exact, lsvi };

struct Constants {
    double c_alpha = 1.0;
    double c_lambda = 1.0;
    double c_beta = 1.0;
    double c_T1 = 1.0; // LSVI round count, taken directly
    double c_T2 = 1.0; // LSVI evaluation episodes per candidate, taken directly
};

struct RunConfig {
    double tau = 0.5;
    int K = 1;
    double upsilon = 0.1;
    double delta = 0.1;
    Constants constants;
    uint64_t seed = 0;
    Algo algo = Algo::ela;
    Planner planner = Planner::exact;

    void validate() const; // throws ConfigInvalid, including on bad pairing
};

struct IterationRecord {
    int k = 0;
    int c_k_index = 0;
    double cvar_planned = 0.0;
    double cvar_true_of_iterate = 0.0;
    double regret_k = 0.0;
    double cumulative_regret = 0.0;
    double wall_ms = 0.0;
};

struct RunResult {
    std::vector<IterationRecord> records;
    uint64_t seed = 0;
    double cvar_star = 0.0;
    int c_star_index = 0; // on the environment's reward grid
    int sampled_k = 0;    // 1-based, drawn uniformly over iterations
    AugmentedPolicy sampled_policy;
    int sampled_c_index = 0;
    int best_k = 0; // iterate with the highest true CVaR
    AugmentedPolicy best_policy;
    int best_c_index = 0;
    double best_cvar = 0.0;
    long env_episodes = 0;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/**
 * Exploration loop with the exact planner: per iteration, collect one round
 * of data under the wrapped previous iterate, refit the model by maximum
 * likelihood, rebuild covariances and bonuses on the schedule, and replan by
 * augmented value iteration plus a budget sweep. True-environment CVaR of
 * every iterate is computed exactly; regret is measured against the
 * brute-force optimum. Requires the environment rewards to sit on the
 * planning grid.
 */
RunResult run_ela(const LowRankModel& env, const RewardModel& rewards,
                  const ModelClass& models, const RunConfig& config,
                  const IterationCallback& on_iteration = {},
                  TransitionDataset* final_data = nullptr);

/**
 * Same loop with the sample-based planner: rewards are rounded up to the
 * planning grid once, and each iteration runs one LSVI per grid budget (in
 * the learned model only; no environment samples) before picking the budget
 * maximizing the CVaR objective. Environment use is exactly H episodes per
 * iteration.
 */
RunResult run_ella(const LowRankModel& env, const RewardModel& rewards,
                   const ModelClass& models, const RunConfig& config,
                   const IterationCallback& on_iteration = {},
                   TransitionDataset* final_data = nullptr);

/** Rounds every reward up to the planning grid, merging pmf mass. */
RewardModel discretize_rewards(const RewardModel& rewards, const BudgetGrid& grid);

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_result_to_json(const RunResult& result, const RunConfig& config);
void write_metrics_csv(const std::string& path, const RunResult& result);

/** Fixed metrics.csv header, shared by the writer and the streaming CLI. */
extern const char* const kMetricsHeader;
std::string metrics_csv_line(const IterationRecord& rec);

} // namespace cvarrl
