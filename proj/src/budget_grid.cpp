#include "cvarrl/budget_grid.hpp"

#include <cmath>

#include "cvarrl/errors.hpp"

namespace cvarrl {

int ceil_steps(double x, double step) {
    if (step <= 0.0)
        throw ConfigInvalid("ceil_steps: step must be positive");
    // the snap keeps values that are exact multiples up to representation
    // error (e.g. 3 / 0.1 = 29.999...) from spilling into the next cell
    return static_cast<int>(std::ceil(x / step - 1e-9));
}

int round_steps(double x, double step) {
    if (step <= 0.0)
        throw ConfigInvalid("round_steps: step must be positive");
    return static_cast<int>(std::floor(x / step + 0.5));
}

BudgetGrid::BudgetGrid(double upsilon_, double horizon) : upsilon(upsilon_) {
    if (!(upsilon > 0.0))
        throw ConfigInvalid("BudgetGrid: upsilon must be positive");
    if (!(horizon > 0.0))
        throw ConfigInvalid("BudgetGrid: horizon must be positive");
    max_index = ceil_steps(horizon, upsilon);
    if (value(max_index) < horizon - 1e-9)
        throw NumericError("BudgetGrid: top grid value fell below the horizon");
}

int BudgetGrid::index_of(double budget) const {
    return clamp_index(round_steps(budget, upsilon));
}

double discretize_reward(double r, const BudgetGrid& grid) {
    return discretize_reward_steps(r, grid.upsilon) * grid.upsilon;
}

int discretize_reward_steps(double r, double upsilon) {
    if (r < 0.0)
        throw ConfigInvalid("discretize_reward: negative reward");
    const int steps = ceil_steps(r, upsilon);
    return steps < 0 ? 0 : steps;
}

} // namespace cvarrl
