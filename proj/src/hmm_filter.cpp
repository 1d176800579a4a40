#include "msl/hmm_filter.hpp"

#include <cmath>

#include "msl/errors.hpp"
#include "msl/stats.hpp"

namespace msl {

namespace {

// Turn log(prior_j) + log g(y | j) into a normalized belief and the log
// normalizer. Returns -inf and a uniform belief if everything underflowed.
double normalize_posterior(Eigen::VectorXd& log_post, RegimeBelief& belief) {
    const int S_K = static_cast<int>(log_post.size());
    const double norm = log_sum_exp(log_post);
    if (!std::isfinite(norm)) {
        belief.probs = Eigen::VectorXd::Constant(S_K, 1.0 / S_K);
        return kNegInf;
    }
    belief.probs = (log_post.array() - norm).exp();
    belief.probs /= belief.probs.sum();
    return norm;
}

}  // namespace

double hmm_init(const ObsDensityEvaluator& obs, const Eigen::VectorXd& logvol,
                const Eigen::VectorXd& y, RegimeBelief& belief) {
    const int S_K = obs.n_regimes();
    Eigen::VectorXd log_post(S_K);
    obs.log_density_all(logvol, y, log_post);
    log_post.array() += -std::log(static_cast<double>(S_K));
    return normalize_posterior(log_post, belief);
}

double hmm_step(const ObsDensityEvaluator& obs, const RegimeTransition& trans,
                const Eigen::VectorXd& logvol, const Eigen::VectorXd& y,
                RegimeBelief& belief) {
    const Eigen::VectorXd predictive = trans.apply_transpose(belief.probs);
    Eigen::VectorXd log_post(obs.n_regimes());
    obs.log_density_all(logvol, y, log_post);
    log_post.array() += predictive.array().max(0.0).log();
    return normalize_posterior(log_post, belief);
}

Eigen::VectorXd regime_predictive(const RegimeBelief& belief, const RegimeTransition& trans) {
    return trans.apply_transpose(belief.probs);
}

double hmm_full_pass(const MslParams& theta, const SelectorSpace& space,
                     const Eigen::MatrixXd& logvol_path, const Eigen::MatrixXd& returns) {
    const int T = static_cast<int>(returns.rows());
    if (logvol_path.rows() != T) {
        throw ConfigError("hmm_full_pass: logvol path and returns length differ");
    }
    const ObsDensityEvaluator obs(theta, space);
    const RegimeTransition trans(theta.p, space.size());
    RegimeBelief belief;
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd logvol = logvol_path.row(t).transpose();
        const Eigen::VectorXd y = returns.row(t).transpose();
        const double inc = (t == 0) ? hmm_init(obs, logvol, y, belief)
                                    : hmm_step(obs, trans, logvol, y, belief);
        if (!std::isfinite(inc)) {
            throw NumericError("hmm_full_pass: filter diverged at step " + std::to_string(t + 1));
        }
        total += inc;
    }
    return total;
}

}  // namespace msl
