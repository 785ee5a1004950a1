#pragma once

#include <cstdint>
#include <string>

namespace cvarrl {

/** Outcome of one statistical or exact property check. */
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/**
 * Constants that make the 3-state / 2-action / H=3 / upsilon=0.1 benchmark
 * family meet its end-to-end targets. Found by sweeping on held-out seeds.
 */
namespace bench {
inline constexpr double c_alpha = 0.05;          // exploration-loop bonus scale
inline constexpr double c_beta_accuracy = 5e-4;  // LSVI width when chasing value accuracy
inline constexpr double c_beta_optimism = 3e-3;  // LSVI width when chasing one-sided estimates
inline constexpr double c_beta_driver = 1e-3;    // LSVI width inside the full loop
}

/**
 * Random tabular instances: structural invariants hold, generation is
 * seed-deterministic, and rollouts conserve budget and stay in-support.
 */
CheckResult check_instance_invariants(int instances, uint64_t seed);

/**
 * Random 3-point distributions: CVaR at tau=1 equals the mean, CVaR is
 * monotone over a 20-point tau grid and never exceeds the mean, translation
 * shifts CVaR exactly, and the empirical estimator lands within mc_tol of the
 * exact value at the given sample count.
 */
CheckResult check_cvar_functional(int dists, int samples, double mc_tol, uint64_t seed);

/**
 * Random (instance, policy, budget) triples on a 0.01 reward grid with
 * planning steps from {0.05, 0.1, 0.25} and tau from {0.2, 0.5}:
 * 0 <= CVaR(discretized return) - CVaR(wrapped raw return) <= H upsilon / tau,
 * both sides by exact enumeration.
 */
CheckResult check_discretization_sandwich(int triples, uint64_t seed);

/**
 * Random (P, P_hat, policy, budget) tuples: the risk-sensitive value gap is
 * bounded by H times the occupancy-weighted total-variation error (exact
 * occupancies), and the risk-neutral telescoping identity holds within 1e-9.
 */
CheckResult check_simulation_lemmas(int tuples, uint64_t seed);

/**
 * Random feature streams with ||phi|| <= 1, d in {2, 8}: the trace bound
 * sum_j phi_j^T Lambda_t^-1 phi_j <= d and the elliptical potential bound
 * sum_j phi_j^T Lambda_{j-1}^-1 phi_j <= 2 log det(Lambda_t) at lambda = 1.
 */
CheckResult check_potential_bounds(int streams, int length, uint64_t seed);

/**
 * Tiny random instances: exact value iteration plus the budget sweep matches
 * the enumeration oracle within 1e-9, and the planned CVaR is attained by the
 * extracted policy.
 */
CheckResult check_planner_matches_oracle(int instances, uint64_t seed);

/**
 * Benchmark-family trials: fit by maximum likelihood after the given number
 * of uniform-policy collection rounds against a perturbed candidate class;
 * the squared TV error under exact occupancy weights, averaged over steps,
 * stays below the bound in at least min_pass trials.
 */
CheckResult check_mle_error(int trials, int rounds, int class_size, double bound,
                            int min_pass, uint64_t seed);

/** Settings for the paired LSVI-versus-exact-planner experiment. */
struct LsviCheckParams {
    int runs = 100;
    int collect_rounds = 25; // uniform-policy data rounds before fitting
    double c_alpha = bench::c_alpha;
    double c_beta = bench::c_beta_accuracy;
    int T1 = 200;
    int T2 = 400;
};

/**
 * Per run: learn a model and bonuses from uniform exploration data, then run
 * CVaR-LSVI and exact value iteration on the same inputs at a random budget.
 * Passes when |LSVI value - exact value| <= value_tol in >= min_pass runs.
 */
CheckResult check_lsvi_accuracy(const LsviCheckParams& params, double value_tol,
                                int min_pass, uint64_t seed);

/**
 * Same experiment, one-sidedness: every round's V^t(s_1, i_1) stays below the
 * exact optimum plus slack in >= min_pass runs.
 */
CheckResult check_lsvi_optimism(const LsviCheckParams& params, double slack,
                                int min_pass, uint64_t seed);

/**
 * Full exploration-loop sanity on the benchmark family: mean regret over the
 * last quarter of iterations beats the first quarter in >= min_pass seeds.
 */
CheckResult check_learning_signal(int seeds, int iterations, int min_pass, uint64_t seed);

} // namespace cvarrl
