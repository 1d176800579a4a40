#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "msl/rbpf.hpp"

namespace msl {

// One-step-ahead predictive moments. The mean is constant in time (B lambda);
// the covariance mixes the per-particle conditional covariances with the
// particle weights.
struct ForecastMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Predictive covariance of y_{t+1} given the filter state at time t:
//   sum_i w_i [ sum_j e^{mu_j + phi_j (x2_ij - mu_j) + q_j/2} b_j b_j^T
//             + sum_j e^{...panic block...} E_D[D b_j b_j^T D | belief_i]
//             + diag(R) ],
// with the regime expectation taken under each particle's one-step regime
// predictive Pi^T belief_i.
Eigen::MatrixXd forecast_cov(const ParticleCloud& cloud, const MslParams& theta,
                             const SelectorSpace& space, const RegimeTransition& trans);

ForecastMoments forecast_moments(const ParticleCloud& cloud, const MslParams& theta,
                                 const SelectorSpace& space, const RegimeTransition& trans);

// Minimum-variance fully-invested portfolio: w = cov^{-1} 1 / (1^T cov^{-1} 1).
// Weights may be negative (shorting is allowed).
Eigen::VectorXd min_variance_weights(const Eigen::MatrixXd& cov);

// Gaussian lower-alpha quantile of the portfolio return:
//   w^T mean - z_alpha sqrt(w^T cov w).
double var_quantile(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                    const Eigen::VectorXd& weights, double alpha);

// Kupiec unconditional and Christoffersen conditional coverage tests.
struct CoverageTestResult {
    double lr_uc = 0.0;
    double p_uc = 1.0;
    double lr_cc = 0.0;
    double p_cc = 1.0;
    int n_exceedances = 0;
    int n_obs = 0;
    bool degenerate = false;  // all-zero or all-one flag sequence
};

CoverageTestResult coverage_tests(const std::vector<int>& flags, double alpha);

struct BacktestWeek {
    std::string date;
    Eigen::VectorXd weights;
    double var = 0.0;
    double portfolio_return = 0.0;
    int exceedance = 0;
    double panic_prob = 0.0;
    double loglik_increment = 0.0;
    double strategy_wealth = 1.0;
    double equal_weight_wealth = 1.0;
};

struct BacktestReport {
    bool warm_start = false;
    double alpha = 0.05;
    double return_scale = 0.01;  // multiplies raw returns into decimals
    std::vector<BacktestWeek> weeks;
    CoverageTestResult coverage;
    double terminal_strategy_wealth = 1.0;
    double terminal_equal_weight_wealth = 1.0;
};

struct BacktestConfig {
    int n_particles = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    double return_scale = 0.01;          // 0.01 for percent returns, 1 for decimal
    Eigen::MatrixXd warm_start_returns;  // optional training segment filtered first
};

// Single-filter out-of-sample run: each week emits the forecast moments
// before assimilating that week's return, then the minimum-variance weights,
// the VaR and the exceedance flag; wealth curves compound weekly for the
// strategy and the equal-weight benchmark. Trading costs are ignored.
BacktestReport run_backtest(const MslParams& theta, const SelectorSpace& space,
                            const Eigen::MatrixXd& oos_returns,
                            const std::vector<std::string>& dates,
                            const BacktestConfig& config);

std::string backtest_summary_text(const BacktestReport& report);

}  // namespace msl
