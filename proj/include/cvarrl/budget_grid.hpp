#pragma once

namespace cvarrl {

/** ceil(x / step) with a 1e-9 relative snap so exact multiples stay put. */
int ceil_steps(double x, double step);

/** round(x / step) to the nearest integer, halves up. */
int round_steps(double x, double step);

/**
 * Uniform budget grid {0, upsilon, 2 upsilon, ..., max_index upsilon} with
 * max_index = ceil(horizon / upsilon), so the top value covers the largest
 * attainable return.
 */
struct BudgetGrid {
    double upsilon = 0.0;
    int max_index = 0;

    BudgetGrid() = default;
    BudgetGrid(double upsilon, double horizon);

    int size() const { return max_index + 1; }
    double value(int i) const { return i * upsilon; }

    int clamp_index(int i) const {
        if (i < 0)
            return 0;
        return i > max_index ? max_index : i;
    }

    /** Nearest grid index for a raw budget, clamped to [0, max_index]. */
    int index_of(double budget) const;
};

/** Rounds a reward up to the grid: U(r) = ceil(r / upsilon) * upsilon. */
double discretize_reward(double r, const BudgetGrid& grid);

/** Same in integer steps of the grid. */
int discretize_reward_steps(double r, double upsilon);

} // namespace cvarrl
