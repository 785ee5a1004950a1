#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvarrl/bonus.hpp"
#include "cvarrl/budget_grid.hpp"
#include "cvarrl/checks.hpp"
#include "cvarrl/enumeration.hpp"
#include "cvarrl/errors.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/policy.hpp"
#include "cvarrl/risk.hpp"
#include "cvarrl/rng.hpp"
#include "cvarrl/value_iteration.hpp"

using namespace cvarrl;

namespace {

// one state, two actions, one step; rewards 0.5 and 0.8 deterministic
std::pair<LowRankModel, RewardModel> bandit_pair() {
    LowRankModel model;
    model.H = 1;
    model.A = 2;
    model.d = 1;
    model.num_states = 1;
    RewardModel rewards;
    rewards.upsilon = 0.1;
    Eigen::MatrixXd pmf = Eigen::MatrixXd::Zero(2, 11);
    pmf(0, 5) = 1.0;
    pmf(1, 8) = 1.0;
    rewards.pmf = {pmf};
    return {model, rewards};
}

// fair coin into branch states, then 0.2 on one branch and 0.8 on the other
std::pair<LowRankModel, RewardModel> coin_pair() {
    LowRankModel model;
    model.H = 2;
    model.A = 1;
    model.d = 2;
    model.num_states = 3;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 2);
    phi.col(0).setOnes();
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(3, 2);
    psi(1, 0) = 0.5;
    psi(2, 0) = 0.5;
    psi(0, 1) = 1.0;
    model.phi = {phi};
    model.psi = {psi};

    RewardModel rewards;
    rewards.upsilon = 0.1;
    Eigen::MatrixXd first = Eigen::MatrixXd::Zero(3, 11);
    first.col(0).setOnes();
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(3, 11);
    second(0, 0) = 1.0;
    second(1, 2) = 1.0;
    second(2, 8) = 1.0;
    rewards.pmf = {first, second};
    return {model, rewards};
}

RewardModel zero_rewards_like(const RewardModel& rewards) {
    RewardModel zeros = rewards;
    for (Eigen::MatrixXd& step : zeros.pmf) {
        step.setZero();
        step.col(0).setOnes();
    }
    return zeros;
}

// risk-neutral optimal expected return by plain scalar backward induction
double best_mean_return(const LowRankModel& model, const RewardModel& rewards) {
    const int S = model.num_states;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    for (int h = model.H; h >= 1; --h) {
        Eigen::VectorXd next(S);
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            for (int a = 0; a < model.A; ++a) {
                double mean_r = 0.0;
                for (int i = 0; i < rewards.grid_size(); ++i)
                    mean_r += rewards.pmf[h - 1](s * model.A + a, i) * rewards.value(i);
                double q = mean_r;
                if (h < model.H)
                    q += transition_dist(model, h, s, a).dot(v);
                if (a == 0 || q > best)
                    best = q;
            }
            next[s] = best;
        }
        v = next;
    }
    return v[0];
}

} // namespace

// ********************************************************************************
// ***** Backward induction *******************************************************
// ********************************************************************************

TEST_CASE("one-step bandit tables match hand shortfalls") {
    auto [model, rewards] = bandit_pair();
    const BudgetGrid grid(0.1, 1);
    const ValueTable table = augmented_vi(model, rewards, zero_bonus(1, 1, 2), grid);

    REQUIRE(table.V.size() == 2);
    for (int i = 0; i <= grid.max_index; ++i)
        CHECK(table.V[1](0, i) == doctest::Approx(0.1 * i).epsilon(1e-15));

    // budget 0.6: action 1 lands past the reward, shortfall 0
    CHECK(table.V[0](0, 6) == doctest::Approx(0.0));
    CHECK(table.greedy[0](0, 6) == 1);
    // budget 1.0: min((1.0-0.5), (1.0-0.8)) = 0.2
    CHECK(table.V[0](0, 10) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(table.greedy[0](0, 10) == 1);
    // budget 0.3: both shortfalls vanish, ties pick the smaller action
    CHECK(table.V[0](0, 3) == doctest::Approx(0.0));
    CHECK(table.greedy[0](0, 3) == 0);
}

TEST_CASE("deterministic bandit attains its top reward as the CVaR") {
    auto [model, rewards] = bandit_pair();
    const BudgetGrid grid(0.1, 1);
    const ValueTable table = augmented_vi(model, rewards, zero_bonus(1, 1, 2), grid);
    const PlanResult plan = plan_cvar(table, 0.5);
    CHECK(plan.cvar == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(plan.c_index == 8);
    CHECK(plan.policy.action_dist(1, 0, 8)[1] == doctest::Approx(1.0));
}

TEST_CASE("zero rewards leave every budget level untouched") {
    Rng rng = make_rng(70);
    auto [model, rewards] = make_tabular_lowrank(3, 2, 3, rng);
    const RewardModel zeros = zero_rewards_like(rewards);
    const BudgetGrid grid(0.1, 3);
    const ValueTable table = augmented_vi(model, zeros, zero_bonus(3, 3, 2), grid);
    for (int h = 0; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int i = 0; i <= grid.max_index; ++i)
                CHECK(table.V[h](s, i) == doctest::Approx(0.1 * i).epsilon(1e-12));
    const PlanResult plan = plan_cvar(table, 0.5);
    CHECK(plan.c_index == 0);
    CHECK(plan.cvar == doctest::Approx(0.0));
}

// ********************************************************************************
// ***** Against the enumeration oracle *******************************************
// ********************************************************************************

TEST_CASE("coin-flip returns reproduce the known CVaR") {
    auto [model, rewards] = coin_pair();
    Rng rng = make_rng(71);
    validate_low_rank(model, rng);
    validate_rewards(rewards, 3, 1, 2);

    const BudgetGrid grid(0.1, 2);
    const ValueTable table = augmented_vi(model, rewards, zero_bonus(2, 3, 1), grid);
    const PlanResult plan = plan_cvar(table, 0.5);
    // returns {0.2, 0.8} with equal mass: CVaR at tau 0.5 is 0.2, and every
    // budget between the support points attains it up to rounding noise
    CHECK(plan.cvar == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(grid.value(plan.c_index) >= 0.2 - 1e-9);
    CHECK(grid.value(plan.c_index) <= 0.8 + 1e-9);

    const OracleResult oracle = enumerate_cvar_oracle(model, rewards, 0.5, grid);
    CHECK(oracle.cvar_star == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(oracle.c_star_index == plan.c_index);

    ReturnDistribution dist;
    dist.support = {0.2, 0.8};
    dist.probs = {0.5, 0.5};
    CHECK(plan.cvar == doctest::Approx(cvar_of_distribution(dist, 0.5)).epsilon(1e-12));
    CHECK(cvar_of_distribution(dist, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("planner agrees with the oracle across random instances") {
    const CheckResult result = check_planner_matches_oracle(100, 72);
    INFO(result.detail);
    CHECK(result.pass);
}

TEST_CASE("full budget at tau one recovers the risk-neutral optimum") {
    for (uint64_t seed : {73ULL, 74ULL, 75ULL}) {
        Rng rng = make_rng(seed);
        auto [model, rewards] = make_tabular_lowrank(3, 2, 3, rng, 1.0, 0.2);
        const BudgetGrid grid(0.2, 3);
        const ValueTable table = augmented_vi(model, rewards, zero_bonus(3, 3, 2), grid);
        const PlanResult plan = plan_cvar(table, 1.0);
        CHECK(plan.cvar == doctest::Approx(best_mean_return(model, rewards)).epsilon(1e-9));
    }
}

// ********************************************************************************
// ***** Policy evaluation ********************************************************
// ********************************************************************************

TEST_CASE("greedy policies evaluate back to the planned tables") {
    Rng rng = make_rng(76);
    auto [model, rewards] = make_tabular_lowrank(4, 2, 3, rng);
    const BudgetGrid grid(0.1, 3);
    const BonusTable none = zero_bonus(3, 4, 2);
    const ValueTable table = augmented_vi(model, rewards, none, grid);
    const PlanResult plan = plan_cvar(table, 0.4);
    for (int i = 0; i <= grid.max_index; i += 5) {
        const double direct = evaluate_policy_exact(model, rewards, plan.policy, i, none);
        CHECK(direct >= table.V[0](0, i) - 1e-9);
    }
    const double at_plan = evaluate_policy_exact(model, rewards, plan.policy, plan.c_index, none);
    CHECK(at_plan == doctest::Approx(table.V[0](0, plan.c_index)).epsilon(1e-9));
}

TEST_CASE("zero rewards make evaluation return the starting budget") {
    Rng rng = make_rng(77);
    auto [model, rewards] = make_tabular_lowrank(3, 2, 2, rng);
    const RewardModel zeros = zero_rewards_like(rewards);
    const BudgetGrid grid(0.1, 2);
    const AugmentedPolicy uniform = AugmentedPolicy::uniform(2, 3, 2, grid);
    for (int i : {0, 7, 20})
        CHECK(evaluate_policy_exact(model, zeros, uniform, i, zero_bonus(2, 3, 2)) ==
              doctest::Approx(0.1 * i).epsilon(1e-12));
}

TEST_CASE("shortfall values are monotone and 1-Lipschitz in the budget") {
    Rng rng = make_rng(78);
    auto [model, rewards] = make_tabular_lowrank(4, 3, 3, rng);
    const BudgetGrid grid(0.1, 3);
    const ValueTable table = augmented_vi(model, rewards, zero_bonus(3, 4, 3), grid);
    for (int h = 0; h <= 3; ++h)
        for (int s = 0; s < 4; ++s)
            for (int i = 0; i < grid.max_index; ++i) {
                const double step = table.V[h](s, i + 1) - table.V[h](s, i);
                CHECK(step >= -1e-12);
                CHECK(step <= grid.upsilon + 1e-12);
            }
}

TEST_CASE("exploration bonuses only lower the planned objective") {
    Rng rng = make_rng(79);
    auto [model, rewards] = make_tabular_lowrank(3, 2, 3, rng);
    const BudgetGrid grid(0.1, 3);

    BonusState state;
    const Schedule sched = schedule_params(1, 3, 2, model.d, 8, 0.1, 0.05, 1.0);
    state.alpha_k = sched.alpha_k;
    state.lambda_k = sched.lambda_k;
    state.k = 1;
    for (int h = 0; h < 2; ++h)
        state.sigma_hat.push_back(sched.lambda_k * Eigen::MatrixXd::Identity(model.d, model.d));
    const BonusTable bonuses = make_bonus_table(state, model);

    const ValueTable plain = augmented_vi(model, rewards, zero_bonus(3, 3, 2), grid);
    const ValueTable optimistic = augmented_vi(model, rewards, bonuses, grid);
    for (int h = 0; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int i = 0; i <= grid.max_index; ++i)
                CHECK(optimistic.V[h](s, i) <= plain.V[h](s, i) + 1e-12);
}

// ********************************************************************************
// ***** Return distributions *****************************************************
// ********************************************************************************

TEST_CASE("off-grid rewards separate the wrapped and discretized returns") {
    // deterministic rewards 0.25, 0.15, 0.05 on a 0.1 planning grid
    LowRankModel model;
    model.H = 3;
    model.A = 1;
    model.d = 1;
    model.num_states = 1;
    model.phi = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    model.psi = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
    RewardModel rewards;
    rewards.upsilon = 0.05;
    Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(1, 21), r2 = r1, r3 = r1;
    r1(0, 5) = 1.0;
    r2(0, 3) = 1.0;
    r3(0, 1) = 1.0;
    rewards.pmf = {r1, r2, r3};

    const BudgetGrid grid(0.1, 3);
    const AugmentedPolicy policy = AugmentedPolicy::uniform(3, 1, 1, grid);

    const ReturnDistribution wrapped = wrapped_policy_return_dist(model, rewards, policy, 10, grid);
    REQUIRE(wrapped.support.size() == 1);
    CHECK(wrapped.support[0] == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(wrapped.probs[0] == doctest::Approx(1.0));

    const ReturnDistribution rounded = discretized_return_dist(model, rewards, policy, 10, grid);
    REQUIRE(rounded.support.size() == 1);
    CHECK(rounded.support[0] == doctest::Approx(0.6).epsilon(1e-12));

    const double tau = 0.5;
    const double diff = cvar_of_distribution(rounded, tau) - cvar_of_distribution(wrapped, tau);
    CHECK(diff == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(diff <= 3 * grid.upsilon / tau + 1e-9);

    const ReturnDistribution raw = raw_policy_return_dist(model, rewards, policy, 1.0, grid);
    REQUIRE(raw.support.size() == 1);
    CHECK(raw.support[0] == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("discretization error obeys the sandwich bound") {
    const CheckResult result = check_discretization_sandwich(20, 80);
    INFO(result.detail);
    CHECK(result.pass);
}

TEST_CASE("model error bounds policy evaluation differences") {
    const CheckResult result = check_simulation_lemmas(30, 81);
    INFO(result.detail);
    CHECK(result.pass);
}

TEST_CASE("occupancies form per-step distributions") {
    Rng rng = make_rng(82);
    auto [model, rewards] = make_tabular_lowrank(3, 2, 3, rng);
    const BudgetGrid grid(0.1, 3);
    const AugmentedPolicy uniform = AugmentedPolicy::uniform(3, 3, 2, grid);
    const auto occ = occupancy_measures(model, rewards, uniform, 1.0, grid);
    REQUIRE(occ.size() == 3);
    for (const Eigen::MatrixXd& step : occ) {
        CHECK(step.minCoeff() >= -1e-15);
        CHECK(step.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // step 1 mass sits entirely on the start state, split evenly by action
    CHECK(occ[0](0, 0) == doctest::Approx(0.5));
    CHECK(occ[0](0, 1) == doctest::Approx(0.5));
    CHECK(occ[0].row(1).sum() == doctest::Approx(0.0));
}

// ********************************************************************************
// ***** Guards *******************************************************************
// ********************************************************************************

TEST_CASE("rewards off the planning grid are rejected") {
    auto [model, rewards] = bandit_pair();
    RewardModel off = rewards;
    off.upsilon = 0.25;
    const BudgetGrid grid(0.1, 1);
    CHECK_THROWS_AS(augmented_vi(model, off, zero_bonus(1, 1, 2), grid), GridMismatch);
    CHECK_THROWS_AS(enumerate_cvar_oracle(model, off, 0.5, grid), GridMismatch);
    CHECK_THROWS_AS(reward_grid_steps(off, grid), GridMismatch);

    // coarser rewards on a finer matching grid pass through augmented_vi
    RewardModel coarse = rewards;
    coarse.upsilon = 0.2;
    const std::vector<int> steps = reward_grid_steps(coarse, grid);
    CHECK(steps[5] == 10);
    CHECK(steps[8] == 16);
    CHECK_NOTHROW(augmented_vi(model, coarse, zero_bonus(1, 1, 2), grid));
}

TEST_CASE("the oracle refuses unreasonably fine grids") {
    LowRankModel model;
    model.H = 4;
    model.A = 1;
    model.d = 1;
    model.num_states = 1;
    for (int h = 0; h < 3; ++h) {
        model.phi.push_back(Eigen::MatrixXd::Ones(1, 1));
        model.psi.push_back(Eigen::MatrixXd::Ones(1, 1));
    }
    RewardModel rewards;
    rewards.upsilon = 1e-6;
    Eigen::MatrixXd pmf = Eigen::MatrixXd::Zero(1, 2);
    pmf(0, 0) = 1.0;
    rewards.pmf = {pmf, pmf, pmf, pmf};
    const BudgetGrid grid(1e-6, 4);
    CHECK_THROWS_AS(enumerate_cvar_oracle(model, rewards, 0.5, grid), InstanceTooLarge);
}
