#pragma once

#include <utility>
#include <vector>

#include "cvarrl/budget_grid.hpp"

namespace cvarrl {

/** Finitely supported return distribution; support points are distinct. */
struct ReturnDistribution {
    std::vector<double> support;
    std::vector<double> probs;

    /** Throws unless probs are nonnegative and sum to 1 within 1e-9. */
    void validate() const;
    double mean() const;
};

/**
 * CVaR at level tau of a finitely supported distribution, in the
 * "higher is better" convention:
 *
 *     CVaR_tau(X) = max_c { c - E[(c - X)^+] / tau },
 *
 * where the max runs over the support points (the optimum sits at a
 * tau-quantile, which is always a support point). tau = 1 gives the mean.
 */
double cvar_of_distribution(const ReturnDistribution& dist, double tau);

/**
 * Empirical CVaR from samples: c_hat is the ceil(tau n)-th order statistic
 * and the estimate is c_hat - sum_i (c_hat - x_i)^+ / (n tau).
 */
double empirical_cvar(std::vector<double> samples, double tau);

/**
 * Maximizes i upsilon - v1[i] / tau over grid indices, where v1[i] is the
 * planned augmented value at initial budget i upsilon. Ties break toward the
 * smaller index. Returns (best index, objective value).
 */
std::pair<int, double> cvar_objective_from_values(const std::vector<double>& v1,
                                                  double tau,
                                                  const BudgetGrid& grid);

} // namespace cvarrl
