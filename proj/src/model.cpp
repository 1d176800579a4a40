#include "msl/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "msl/errors.hpp"
#include "msl/rng.hpp"
#include "msl/stats.hpp"

namespace msl {

double log_prior(const MslParams& theta, const PriorSpec& prior) {
    double lp = 0.0;
    for (int j = 0; j < theta.d_f; ++j) {
        for (int i = j + 1; i < theta.d_y; ++i) {
            lp += normal_logpdf(theta.B(i, j), prior.loadings_mean, prior.loadings_var);
        }
    }
    for (int i = 0; i < 2 * theta.d_f; ++i) {
        lp += uniform_logpdf(theta.phi[i], prior.phi_lo, prior.phi_hi);
        lp += normal_logpdf(theta.mu[i], prior.mu_mean, prior.mu_var);
        lp += inverse_gamma_logpdf(theta.q[i], prior.q_shape, prior.q_scale);
    }
    for (int i = 0; i < theta.d_y; ++i) {
        lp += inverse_gamma_logpdf(theta.R[i], prior.r_shape, prior.r_scale);
    }
    for (int j = 0; j < theta.d_f; ++j) {
        lp += uniform_logpdf(theta.lambda[j], prior.lambda_lo, prior.lambda_hi);
    }
    lp += uniform_logpdf(theta.p, prior.p_lo, prior.p_hi);
    return std::isnan(lp) ? kNegInf : lp;
}

MslParams prior_draw(int d_y, int d_f, const PriorSpec& prior, std::uint64_t seed) {
    prior.validate();
    auto rng = stream_rng(seed, 0x9d10);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto inv_gamma = [&](double shape, double scale) {
        std::gamma_distribution<double> g(shape, 1.0);
        return scale / g(rng);
    };

    MslParams theta;
    theta.d_y = d_y;
    theta.d_f = d_f;
    theta.B = Eigen::MatrixXd::Zero(d_y, d_f);
    for (int j = 0; j < d_f; ++j) {
        theta.B(j, j) = 1.0;
        for (int i = j + 1; i < d_y; ++i) {
            theta.B(i, j) = prior.loadings_mean + std::sqrt(prior.loadings_var) * stdnorm(rng);
        }
    }
    theta.R.resize(d_y);
    for (int i = 0; i < d_y; ++i) theta.R[i] = inv_gamma(prior.r_shape, prior.r_scale);
    theta.mu.resize(2 * d_f);
    theta.phi.resize(2 * d_f);
    theta.q.resize(2 * d_f);
    for (int i = 0; i < 2 * d_f; ++i) {
        theta.mu[i] = prior.mu_mean + std::sqrt(prior.mu_var) * stdnorm(rng);
        theta.phi[i] = prior.phi_lo + (prior.phi_hi - prior.phi_lo) * unif(rng);
        theta.q[i] = inv_gamma(prior.q_shape, prior.q_scale);
    }
    theta.lambda.resize(d_f);
    for (int j = 0; j < d_f; ++j) {
        theta.lambda[j] = prior.lambda_lo + (prior.lambda_hi - prior.lambda_lo) * unif(rng);
    }
    theta.p = prior.p_lo + (prior.p_hi - prior.p_lo) * unif(rng);
    return theta;
}

SimulationResult simulate(const MslParams& theta, const SelectorSpace& space, int T,
                          std::uint64_t seed) {
    theta.validate();
    if (T < 1) {
        throw ConfigError("simulate: T must be >= 1");
    }
    const int d_y = theta.d_y;
    const int d_f = theta.d_f;
    const int S_K = space.size();
    const RegimeTransition trans(theta.p, S_K);

    SimulationResult out;
    out.returns.resize(T, d_y);
    out.truth.regimes.resize(T);
    out.truth.logvol.resize(T, 2 * d_f);
    out.truth.factors.resize(T, 2 * d_f);

    auto regime_rng = stream_rng(seed, 0x5e11);
    auto state_rng = stream_rng(seed, 0x10b0);
    auto obs_rng = stream_rng(seed, 0x0b5e);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> stdnorm(0.0, 1.0);

    for (int t = 0; t < T; ++t) {
        // Regime chain: uniform start, then stay with probability p or jump
        // to one of the S_K - 1 other states uniformly.
        if (t == 0) {
            out.truth.regimes[0] =
                1 + static_cast<int>(std::min<double>(S_K - 1, std::floor(unif(regime_rng) * S_K)));
        } else if (S_K == 1) {
            out.truth.regimes[t] = 1;
        } else {
            const int prev = out.truth.regimes[t - 1];
            if (unif(regime_rng) < theta.p) {
                out.truth.regimes[t] = prev;
            } else {
                int k = 1 + static_cast<int>(
                            std::min<double>(S_K - 2, std::floor(unif(regime_rng) * (S_K - 1))));
                out.truth.regimes[t] = (k < prev) ? k : k + 1;
            }
        }
        for (int i = 0; i < 2 * d_f; ++i) {
            if (t == 0) {
                const double sd0 = std::sqrt(theta.q[i] / (1.0 - theta.phi[i] * theta.phi[i]));
                out.truth.logvol(0, i) = theta.mu[i] + sd0 * stdnorm(state_rng);
            } else {
                out.truth.logvol(t, i) = theta.mu[i] +
                                         theta.phi[i] * (out.truth.logvol(t - 1, i) - theta.mu[i]) +
                                         std::sqrt(theta.q[i]) * stdnorm(state_rng);
            }
        }
        for (int j = 0; j < d_f; ++j) {
            out.truth.factors(t, j) =
                theta.lambda[j] + std::exp(0.5 * out.truth.logvol(t, j)) * stdnorm(obs_rng);
            out.truth.factors(t, d_f + j) =
                std::exp(0.5 * out.truth.logvol(t, d_f + j)) * stdnorm(obs_rng);
        }
        Eigen::VectorXd y = Eigen::VectorXd::Zero(d_y);
        const int regime0 = out.truth.regimes[t] - 1;
        for (int j = 0; j < d_f; ++j) {
            y += theta.B.col(j) * out.truth.factors(t, j);
            for (int a = 0; a < d_y; ++a) {
                if (space.asset_selected(regime0, a)) {
                    y[a] += theta.B(a, j) * out.truth.factors(t, d_f + j);
                }
            }
        }
        for (int a = 0; a < d_y; ++a) {
            y[a] += std::sqrt(theta.R[a]) * stdnorm(obs_rng);
        }
        out.returns.row(t) = y.transpose();
    }
    return out;
}

ObsDensityEvaluator::ObsDensityEvaluator(const MslParams& theta, const SelectorSpace& space)
    : d_y_(theta.d_y), d_f_(theta.d_f) {
    theta.validate(/*strict_loadings=*/false);
    if (space.d_y != theta.d_y) {
        throw ConfigError("ObsDensityEvaluator: selector space and theta disagree on d_y");
    }
    mean_ = theta.B * theta.lambda;
    r_diag_ = theta.R;
    outer_.reserve(d_f_);
    for (int j = 0; j < d_f_; ++j) {
        outer_.push_back(theta.B.col(j) * theta.B.col(j).transpose());
    }
    masked_outer_.resize(space.size());
    for (int r = 0; r < space.size(); ++r) {
        masked_outer_[r].reserve(d_f_);
        for (int j = 0; j < d_f_; ++j) {
            Eigen::VectorXd masked = theta.B.col(j);
            for (int a = 0; a < d_y_; ++a) {
                if (!space.asset_selected(r, a)) masked[a] = 0.0;
            }
            masked_outer_[r].push_back(masked * masked.transpose());
        }
    }
}

double ObsDensityEvaluator::gaussian_logpdf(const Eigen::MatrixXd& cov,
                                            const Eigen::VectorXd& y) const {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericError("conditional observation covariance is not positive definite");
    }
    const Eigen::VectorXd centered = y - mean_;
    const Eigen::VectorXd z = llt.matrixL().solve(centered);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (d_y_ * kLogTwoPi + log_det + z.squaredNorm());
}

Eigen::MatrixXd ObsDensityEvaluator::covariance(int regime,
                                                const Eigen::VectorXd& logvol) const {
    if (regime < 1 || regime > n_regimes()) {
        throw std::out_of_range("ObsDensityEvaluator: regime out of range");
    }
    Eigen::MatrixXd cov = r_diag_.asDiagonal();
    for (int j = 0; j < d_f_; ++j) {
        cov += std::exp(logvol[j]) * outer_[j];
        cov += std::exp(logvol[d_f_ + j]) * masked_outer_[regime - 1][j];
    }
    return cov;
}

double ObsDensityEvaluator::log_density(int regime, const Eigen::VectorXd& logvol,
                                        const Eigen::VectorXd& y) const {
    return gaussian_logpdf(covariance(regime, logvol), y);
}

void ObsDensityEvaluator::log_density_all(const Eigen::VectorXd& logvol,
                                          const Eigen::VectorXd& y,
                                          Eigen::VectorXd& out) const {
    const int S_K = n_regimes();
    out.resize(S_K);
    Eigen::MatrixXd base = r_diag_.asDiagonal();
    for (int j = 0; j < d_f_; ++j) {
        base += std::exp(logvol[j]) * outer_[j];
    }
    Eigen::MatrixXd cov(d_y_, d_y_);
    for (int r = 0; r < S_K; ++r) {
        cov = base;
        for (int j = 0; j < d_f_; ++j) {
            cov += std::exp(logvol[d_f_ + j]) * masked_outer_[r][j];
        }
        out[r] = gaussian_logpdf(cov, y);
    }
}

double conditional_obs_logdensity(const MslParams& theta, const SelectorSpace& space,
                                  int regime, const Eigen::VectorXd& logvol,
                                  const Eigen::VectorXd& y) {
    return ObsDensityEvaluator(theta, space).log_density(regime, logvol, y);
}

MslParams rescale_loadings(const MslParams& theta, const Eigen::VectorXd& scales) {
    if (scales.size() != theta.d_f) {
        throw std::domain_error("rescale_loadings: need one scale per factor");
    }
    if (!(scales.array() > 0.0).all()) {
        throw std::domain_error("rescale_loadings: scales must be positive");
    }
    MslParams out = theta;
    for (int j = 0; j < theta.d_f; ++j) {
        out.B.col(j) *= scales[j];
        out.lambda[j] /= scales[j];
        const double shift = 2.0 * std::log(1.0 / scales[j]);
        out.mu[j] += shift;
        out.mu[theta.d_f + j] += shift;
    }
    return out;
}

MslParams permute_factors(const MslParams& theta, const std::vector<int>& perm) {
    const int d_f = theta.d_f;
    if (static_cast<int>(perm.size()) != d_f) {
        throw std::domain_error("permute_factors: permutation length must equal d_f");
    }
    std::vector<bool> seen(d_f, false);
    for (int v : perm) {
        if (v < 0 || v >= d_f || seen[v]) {
            throw std::domain_error("permute_factors: not a permutation");
        }
        seen[v] = true;
    }
    MslParams out = theta;
    for (int j = 0; j < d_f; ++j) {
        const int dst = perm[j];
        out.B.col(dst) = theta.B.col(j);
        out.lambda[dst] = theta.lambda[j];
        out.mu[dst] = theta.mu[j];
        out.mu[d_f + dst] = theta.mu[d_f + j];
        out.phi[dst] = theta.phi[j];
        out.phi[d_f + dst] = theta.phi[d_f + j];
        out.q[dst] = theta.q[j];
        out.q[d_f + dst] = theta.q[d_f + j];
    }
    return out;
}

MslParams flip_factor_signs(const MslParams& theta, const std::vector<int>& signs) {
    if (static_cast<int>(signs.size()) != theta.d_f) {
        throw std::domain_error("flip_factor_signs: need one sign per factor");
    }
    MslParams out = theta;
    for (int j = 0; j < theta.d_f; ++j) {
        if (signs[j] != 1 && signs[j] != -1) {
            throw std::domain_error("flip_factor_signs: signs must be +1 or -1");
        }
        out.B.col(j) *= signs[j];
        out.lambda[j] *= signs[j];
    }
    return out;
}

}  // namespace msl
