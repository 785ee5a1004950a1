#include "cvarrl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvarrl/errors.hpp"

namespace cvarrl {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0) || tau > 1.0)
        throw InvalidTau("tau must lie in (0, 1]");
}

} // namespace

void ReturnDistribution::validate() const {
    if (support.size() != probs.size())
        throw DimensionMismatch("ReturnDistribution: support/probs size mismatch");
    if (support.empty())
        throw EmptySamples("ReturnDistribution: empty support");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0)
            throw NumericError("ReturnDistribution: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw NumericError("ReturnDistribution: probabilities do not sum to 1");
}

double ReturnDistribution::mean() const {
    double m = 0.0;
    for (size_t i = 0; i < support.size(); ++i)
        m += support[i] * probs[i];
    return m;
}

double cvar_of_distribution(const ReturnDistribution& dist, double tau) {
    check_tau(tau);
    dist.validate();
    // the objective is concave piecewise-linear in c with kinks at support
    // points, so scanning the support finds the exact maximum
    double best = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < dist.support.size(); ++j) {
        const double c = dist.support[j];
        double shortfall = 0.0;
        for (size_t i = 0; i < dist.support.size(); ++i)
            shortfall += dist.probs[i] * std::max(c - dist.support[i], 0.0);
        best = std::max(best, c - shortfall / tau);
    }
    return best;
}

double empirical_cvar(std::vector<double> samples, double tau) {
    check_tau(tau);
    if (samples.empty())
        throw EmptySamples("empirical_cvar: no samples");
    std::stable_sort(samples.begin(), samples.end());
    const size_t n = samples.size();
    size_t rank = static_cast<size_t>(std::ceil(tau * static_cast<double>(n) - 1e-12));
    if (rank < 1)
        rank = 1;
    if (rank > n)
        rank = n;
    const double c_hat = samples[rank - 1];
    double shortfall = 0.0;
    for (double x : samples)
        shortfall += std::max(c_hat - x, 0.0);
    return c_hat - shortfall / (static_cast<double>(n) * tau);
}

std::pair<int, double> cvar_objective_from_values(const std::vector<double>& v1,
                                                  double tau,
                                                  const BudgetGrid& grid) {
    check_tau(tau);
    if (static_cast<int>(v1.size()) != grid.size())
        throw DimensionMismatch("cvar_objective_from_values: value table does not match grid");
    int best_i = 0;
    double best = grid.value(0) - v1[0] / tau;
    for (int i = 1; i < grid.size(); ++i) {
        const double value = grid.value(i) - v1[i] / tau;
        if (value > best) {
            best = value;
            best_i = i;
        }
    }
    return {best_i, best};
}

} // namespace cvarrl
