#include "cvarrl/bonus.hpp"

#include <cmath>

#include "cvarrl/errors.hpp"

namespace cvarrl {

Schedule schedule_params(int k, int H, int A, int d, int class_size, double delta,
                         double c_alpha, double c_lambda) {
    if (k < 1 || H < 1 || A < 1 || d < 1 || class_size < 1)
        throw ConfigInvalid("schedule_params: counts must be positive");
    if (!(delta > 0.0) || delta >= 1.0)
        throw ConfigInvalid("schedule_params: delta must lie in (0, 1)");
    const double log_term =
        std::log(static_cast<double>(class_size) * H * k / delta);
    Schedule s;
    s.alpha_k = c_alpha * std::sqrt(static_cast<double>(H) * H *
                                    (A + static_cast<double>(d) * d) * log_term);
    s.lambda_k = c_lambda * d * log_term;
    return s;
}

Eigen::MatrixXd update_covariance(const std::vector<TransitionTuple>& data,
                                  const Eigen::MatrixXd& phi_h, int A,
                                  double lambda_k) {
    if (!(lambda_k > 0.0))
        throw ConfigInvalid("update_covariance: lambda must be positive");
    const int d = static_cast<int>(phi_h.cols());
    Eigen::MatrixXd sigma = lambda_k * Eigen::MatrixXd::Identity(d, d);
    for (const TransitionTuple& t : data) {
        const Eigen::VectorXd phi = phi_h.row(t.s * A + t.a).transpose();
        sigma.noalias() += phi * phi.transpose();
    }
    return sigma;
}

double bonus(const Eigen::VectorXd& phi, const Eigen::MatrixXd& sigma_hat,
             double alpha_k, int h, int H) {
    if (h < 1 || h > H)
        throw ConfigInvalid("bonus: step out of range");
    if (h >= H - 1)
        return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_hat);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("bonus: covariance is not positive definite");
    const double quad = phi.dot(llt.solve(phi));
    const double width = alpha_k * std::sqrt(std::max(quad, 0.0));
    return width < 2.0 ? width : 2.0;
}

BonusTable make_bonus_table(const BonusState& state, const LowRankModel& learned) {
    if (state.sigma_hat.size() != static_cast<size_t>(learned.H - 1))
        throw DimensionMismatch("make_bonus_table: one covariance per step 1..H-1");
    BonusTable table;
    table.H = learned.H;
    table.num_states = learned.num_states;
    table.A = learned.A;
    table.b.assign(learned.H, Eigen::VectorXd::Zero(learned.num_states * learned.A));
    for (int h = 1; h <= learned.H - 2; ++h) {
        Eigen::LLT<Eigen::MatrixXd> llt(state.sigma_hat[h - 1]);
        if (llt.info() != Eigen::Success)
            throw SingularMatrix("make_bonus_table: covariance is not positive definite");
        for (int row = 0; row < learned.num_states * learned.A; ++row) {
            const Eigen::VectorXd phi = learned.phi[h - 1].row(row).transpose();
            const double quad = phi.dot(llt.solve(phi));
            const double width = state.alpha_k * std::sqrt(std::max(quad, 0.0));
            table.b[h - 1][row] = width < 2.0 ? width : 2.0;
        }
    }
    return table;
}

BonusTable zero_bonus(int H, int num_states, int A) {
    BonusTable table;
    table.H = H;
    table.num_states = num_states;
    table.A = A;
    table.b.assign(H, Eigen::VectorXd::Zero(num_states * A));
    table.is_zero = true;
    return table;
}

} // namespace cvarrl
