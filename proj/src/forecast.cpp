#include "msl/forecast.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "msl/errors.hpp"
#include "msl/stats.hpp"

namespace msl {

Eigen::MatrixXd forecast_cov(const ParticleCloud& cloud, const MslParams& theta,
                             const SelectorSpace& space, const RegimeTransition& trans) {
    const int d_y = theta.d_y;
    const int d_f = theta.d_f;
    const int S_K = space.size();

    std::vector<Eigen::MatrixXd> outer;
    outer.reserve(static_cast<std::size_t>(d_f));
    for (int j = 0; j < d_f; ++j) {
        outer.push_back(theta.B.col(j) * theta.B.col(j).transpose());
    }

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d_y, d_y);
    Eigen::MatrixXd mask_moment(d_y, d_y);
    for (int i = 0; i < cloud.n_particles(); ++i) {
        // E[d_a d_b] under the particle's one-step regime predictive.
        const Eigen::VectorXd pred =
            trans.apply_transpose(cloud.beliefs.row(i).transpose());
        mask_moment.setZero();
        for (int s = 0; s < S_K; ++s) {
            if (pred[s] == 0.0) continue;
            for (int a = 0; a < d_y; ++a) {
                if (!space.asset_selected(s, a)) continue;
                for (int b = 0; b < d_y; ++b) {
                    if (space.asset_selected(s, b)) mask_moment(a, b) += pred[s];
                }
            }
        }
        Eigen::MatrixXd vi = theta.R.asDiagonal();
        for (int j = 0; j < d_f; ++j) {
            const double market =
                std::exp(theta.mu[j] + theta.phi[j] * (cloud.logvols(i, j) - theta.mu[j]) +
                         0.5 * theta.q[j]);
            const int k = d_f + j;
            const double panic =
                std::exp(theta.mu[k] + theta.phi[k] * (cloud.logvols(i, k) - theta.mu[k]) +
                         0.5 * theta.q[k]);
            vi += market * outer[static_cast<std::size_t>(j)];
            vi += panic * outer[static_cast<std::size_t>(j)].cwiseProduct(mask_moment);
        }
        cov += cloud.weights[i] * vi;
    }
    return 0.5 * (cov + cov.transpose());
}

ForecastMoments forecast_moments(const ParticleCloud& cloud, const MslParams& theta,
                                 const SelectorSpace& space, const RegimeTransition& trans) {
    ForecastMoments m;
    m.mean = theta.B * theta.lambda;
    m.cov = forecast_cov(cloud, theta, space, trans);
    return m;
}

Eigen::VectorXd min_variance_weights(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError("min_variance_weights: covariance is singular or indefinite");
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(cov.rows());
    const Eigen::VectorXd solved = llt.solve(ones);
    const double denom = ones.dot(solved);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw NumericError("min_variance_weights: degenerate normalization");
    }
    return solved / denom;
}

double var_quantile(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                    const Eigen::VectorXd& weights, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw ConfigError("var_quantile: alpha must lie in (0, 0.5)");
    }
    const double z = normal_quantile(1.0 - alpha);
    const double variance = weights.dot(cov * weights);
    return weights.dot(mean) - z * std::sqrt(std::max(variance, 0.0));
}

namespace {

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

}  // namespace

CoverageTestResult coverage_tests(const std::vector<int>& flags, double alpha) {
    const int T = static_cast<int>(flags.size());
    if (T < 2) {
        throw ConfigError("coverage_tests: need at least two observations");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("coverage_tests: alpha must lie in (0,1)");
    }
    CoverageTestResult res;
    res.n_obs = T;
    int x = 0;
    for (int f : flags) x += (f != 0);
    res.n_exceedances = x;
    res.degenerate = (x == 0 || x == T);

    // Kupiec unconditional coverage: exceedance rate alpha vs x/T.
    const double pihat = double(x) / T;
    const double l0 = xlogy(T - x, 1.0 - alpha) + xlogy(x, alpha);
    const double l1 = xlogy(T - x, 1.0 - pihat) + xlogy(x, pihat);
    res.lr_uc = std::max(0.0, -2.0 * (l0 - l1));
    res.p_uc = chi_squared_sf(res.lr_uc, 1);

    // Christoffersen independence component from first-order transition
    // counts, then conditional coverage = uc + ind against chi^2_2.
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (int t = 1; t < T; ++t) {
        const bool prev = flags[static_cast<std::size_t>(t - 1)] != 0;
        const bool cur = flags[static_cast<std::size_t>(t)] != 0;
        if (!prev && !cur) ++n00;
        if (!prev && cur) ++n01;
        if (prev && !cur) ++n10;
        if (prev && cur) ++n11;
    }
    const double pi01 = (n00 + n01) > 0 ? n01 / (n00 + n01) : 0.0;
    const double pi11 = (n10 + n11) > 0 ? n11 / (n10 + n11) : 0.0;
    const double pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double li0 = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    const double li1 = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) +
                       xlogy(n11, pi11);
    const double lr_ind = std::max(0.0, -2.0 * (li0 - li1));
    res.lr_cc = res.lr_uc + lr_ind;
    res.p_cc = chi_squared_sf(res.lr_cc, 2);
    return res;
}

BacktestReport run_backtest(const MslParams& theta, const SelectorSpace& space,
                            const Eigen::MatrixXd& oos_returns,
                            const std::vector<std::string>& dates,
                            const BacktestConfig& config) {
    theta.validate();
    const int T = static_cast<int>(oos_returns.rows());
    if (!dates.empty() && static_cast<int>(dates.size()) != T) {
        throw ConfigError("run_backtest: dates and returns length differ");
    }
    BacktestReport report;
    report.alpha = config.alpha;
    report.return_scale = config.return_scale;
    report.warm_start = config.warm_start_returns.rows() > 0;
    if (T == 0) {
        return report;
    }

    RbpfFilter filter(theta, space, config.n_particles, config.seed);
    if (report.warm_start) {
        for (int t = 0; t < config.warm_start_returns.rows(); ++t) {
            filter.assimilate(config.warm_start_returns.row(t).transpose());
        }
    }

    const int d_y = theta.d_y;
    const Eigen::VectorXd equal = Eigen::VectorXd::Constant(d_y, 1.0 / d_y);
    double wealth = 1.0;
    double ew_wealth = 1.0;
    report.weeks.reserve(static_cast<std::size_t>(T));
    std::vector<int> flags(static_cast<std::size_t>(T), 0);
    for (int t = 0; t < T; ++t) {
        BacktestWeek week;
        week.date = dates.empty() ? std::to_string(t + 1) : dates[static_cast<std::size_t>(t)];
        // Forecast from the filter state before this week's return arrives.
        const ForecastMoments fm =
            forecast_moments(filter.cloud(), theta, space, filter.transition());
        week.weights = min_variance_weights(fm.cov);
        week.var = var_quantile(fm.mean, fm.cov, week.weights, config.alpha);

        const Eigen::VectorXd y = oos_returns.row(t).transpose();
        week.portfolio_return = week.weights.dot(y);
        week.exceedance = week.portfolio_return < week.var ? 1 : 0;
        flags[static_cast<std::size_t>(t)] = week.exceedance;

        try {
            week.loglik_increment = filter.assimilate(y);
        } catch (const FilterDegeneracyError&) {
            throw FilterDegeneracyError(
                "backtest filter degenerated at week " + week.date, t + 1);
        }
        week.panic_prob = filter.panic_probability();

        wealth *= 1.0 + config.return_scale * week.portfolio_return;
        ew_wealth *= 1.0 + config.return_scale * equal.dot(y);
        week.strategy_wealth = wealth;
        week.equal_weight_wealth = ew_wealth;
        report.weeks.push_back(std::move(week));
    }
    report.terminal_strategy_wealth = wealth;
    report.terminal_equal_weight_wealth = ew_wealth;
    if (T >= 2) {
        report.coverage = coverage_tests(flags, config.alpha);
    }
    return report;
}

std::string backtest_summary_text(const BacktestReport& report) {
    std::ostringstream os;
    os << "weeks: " << report.weeks.size() << '\n';
    os << "alpha: " << report.alpha << '\n';
    os << "filter_start: " << (report.warm_start ? "warm" : "fresh") << '\n';
    os << "exceedances: " << report.coverage.n_exceedances << '\n';
    os << "lr_unconditional: " << report.coverage.lr_uc << " (p=" << report.coverage.p_uc
       << ")\n";
    os << "lr_conditional: " << report.coverage.lr_cc << " (p=" << report.coverage.p_cc
       << ")\n";
    os << "terminal_wealth_strategy: " << report.terminal_strategy_wealth << '\n';
    os << "terminal_wealth_equal_weight: " << report.terminal_equal_weight_wealth << '\n';
    return os.str();
}

}  // namespace msl
