#include "msl/rbpf.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "msl/errors.hpp"
#include "msl/hmm_filter.hpp"
#include "msl/rng.hpp"
#include "msl/stats.hpp"

namespace msl {

namespace {

constexpr std::uint64_t kTagInit = 0xA1;
constexpr std::uint64_t kTagPropagate = 0xA2;
constexpr std::uint64_t kTagResample = 0xA3;
constexpr std::uint64_t kTagRegime = 0xA4;

double ess_of(const Eigen::VectorXd& weights) {
    return 1.0 / weights.squaredNorm();
}

// Normalize log weights in place; returns false if all collapsed to -inf.
bool normalize_weights(ParticleCloud& cloud) {
    const double m = cloud.log_weights.maxCoeff();
    if (!std::isfinite(m)) return false;
    cloud.weights = (cloud.log_weights.array() - m).exp();
    cloud.weights /= cloud.weights.sum();
    return true;
}

}  // namespace

std::vector<int> multinomial_resample(const Eigen::VectorXd& weights, int n,
                                      std::uint64_t seed) {
    std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
    double acc = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    cdf.back() = 1.0;
    SplitMix64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> ancestors(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = unif(rng);
        ancestors[static_cast<std::size_t>(k)] = static_cast<int>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }
    return ancestors;
}

RbpfFilter::RbpfFilter(const MslParams& theta, const SelectorSpace& space, int n_particles,
                       std::uint64_t seed, ResamplePolicy policy, double ess_threshold)
    : theta_(theta),
      obs_(theta, space),
      trans_(theta.p, space.size()),
      seed_(seed),
      policy_(policy),
      ess_threshold_(ess_threshold) {
    if (n_particles < 1) {
        throw ConfigError("RbpfFilter: need at least one particle");
    }
    const int d2 = 2 * theta_.d_f;
    const int S_K = space.size();
    cloud_.logvols.resize(n_particles, d2);
    cloud_.beliefs = Eigen::MatrixXd::Constant(n_particles, S_K, 1.0 / S_K);
    cloud_.log_weights = Eigen::VectorXd::Constant(n_particles, -std::log(double(n_particles)));
    cloud_.weights = Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles);
    for (int i = 0; i < n_particles; ++i) {
        auto rng = stream_rng(seed_, kTagInit, 1, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        for (int k = 0; k < d2; ++k) {
            const double sd0 = std::sqrt(theta_.q[k] / (1.0 - theta_.phi[k] * theta_.phi[k]));
            cloud_.logvols(i, k) = theta_.mu[k] + sd0 * stdnorm(rng);
        }
    }
}

void RbpfFilter::resample_if_needed() {
    const int n = cloud_.n_particles();
    if (policy_ == ResamplePolicy::EssThreshold && ess_of(cloud_.weights) >= ess_threshold_ * n) {
        return;
    }
    const auto ancestors = multinomial_resample(
        cloud_.weights, n,
        mix_seed(mix_seed(seed_, kTagResample), static_cast<std::uint64_t>(t_)));
    Eigen::MatrixXd logvols(n, cloud_.logvols.cols());
    Eigen::MatrixXd beliefs(n, cloud_.beliefs.cols());
    for (int k = 0; k < n; ++k) {
        logvols.row(k) = cloud_.logvols.row(ancestors[static_cast<std::size_t>(k)]);
        beliefs.row(k) = cloud_.beliefs.row(ancestors[static_cast<std::size_t>(k)]);
    }
    cloud_.logvols = std::move(logvols);
    cloud_.beliefs = std::move(beliefs);
    cloud_.log_weights.setConstant(-std::log(double(n)));
    cloud_.weights.setConstant(1.0 / n);
}

void RbpfFilter::propagate() {
    const int n = cloud_.n_particles();
    const int d2 = 2 * theta_.d_f;
    for (int i = 0; i < n; ++i) {
        auto rng = stream_rng(seed_, kTagPropagate, static_cast<std::uint64_t>(t_),
                              static_cast<std::uint64_t>(i));
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        for (int k = 0; k < d2; ++k) {
            cloud_.logvols(i, k) = theta_.mu[k] +
                                   theta_.phi[k] * (cloud_.logvols(i, k) - theta_.mu[k]) +
                                   std::sqrt(theta_.q[k]) * stdnorm(rng);
        }
    }
}

double RbpfFilter::assimilate(const Eigen::VectorXd& y) {
    const int n = cloud_.n_particles();
    ++t_;
    if (t_ > 1) {
        resample_if_needed();
        propagate();
    }
    // Bootstrap proposal: transition and proposal densities cancel, the
    // incremental weight is the exact HMM conditional likelihood.
    Eigen::VectorXd increments(n);
    RegimeBelief belief;
    for (int i = 0; i < n; ++i) {
        belief.probs = cloud_.beliefs.row(i).transpose();
        const Eigen::VectorXd logvol = cloud_.logvols.row(i).transpose();
        increments[i] = (t_ == 1) ? hmm_init(obs_, logvol, y, belief)
                                  : hmm_step(obs_, trans_, logvol, y, belief);
        cloud_.beliefs.row(i) = belief.probs.transpose();
    }
    // log p~(y_t | y_{1:t-1}) = log sum_i w~_{t-1}^i exp(increment_i), with
    // the previous normalized weights (uniform right after a resample).
    const Eigen::VectorXd combined = cloud_.log_weights + increments;
    const double loglik_increment = log_sum_exp(combined);
    cloud_.log_weights = combined;
    if (!normalize_weights(cloud_)) {
        throw FilterDegeneracyError(
            "particle filter degenerate: all weights vanished at step " + std::to_string(t_),
            t_);
    }
    return loglik_increment;
}

double RbpfFilter::panic_probability() const { return msl::panic_probability(cloud_); }

double RbpfFilter::ess() const { return ess_of(cloud_.weights); }

FilterOutput rbpf_run(const MslParams& theta, const SelectorSpace& space,
                      const Eigen::MatrixXd& returns, int n_particles, std::uint64_t seed,
                      ResamplePolicy policy, const PostUpdateHook& hook) {
    const int T = static_cast<int>(returns.rows());
    if (T < 1) {
        throw ConfigError("rbpf_run: need at least one observation");
    }
    RbpfFilter filter(theta, space, n_particles, seed, policy);
    FilterOutput out;
    out.loglik_increments.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double inc = filter.assimilate(returns.row(t).transpose());
        out.loglik_increments.push_back(inc);
        out.panic_probs.push_back(filter.panic_probability());
        out.ess.push_back(filter.ess());
        out.total_loglik += inc;
        if (hook) hook(t + 1, filter);
    }
    return out;
}

double filtered_expectation(const ParticleCloud& cloud,
                            const std::function<double(int, const Eigen::VectorXd&)>& h) {
    double acc = 0.0;
    for (int i = 0; i < cloud.n_particles(); ++i) {
        const Eigen::VectorXd logvol = cloud.logvols.row(i).transpose();
        double inner = 0.0;
        for (int j = 0; j < cloud.beliefs.cols(); ++j) {
            inner += cloud.beliefs(i, j) * h(j + 1, logvol);
        }
        acc += cloud.weights[i] * inner;
    }
    return acc;
}

double panic_probability(const ParticleCloud& cloud) {
    double acc = 0.0;
    for (int i = 0; i < cloud.n_particles(); ++i) {
        acc += cloud.weights[i] * (1.0 - cloud.beliefs(i, 0));
    }
    return std::clamp(acc, 0.0, 1.0);
}

FilterOutput sisr_run(const MslParams& theta, const SelectorSpace& space,
                      const Eigen::MatrixXd& returns, int n_particles, std::uint64_t seed) {
    const int T = static_cast<int>(returns.rows());
    if (T < 1 || n_particles < 1) {
        throw ConfigError("sisr_run: need T >= 1 and n >= 1");
    }
    theta.validate(/*strict_loadings=*/false);
    const int d2 = 2 * theta.d_f;
    const int S_K = space.size();
    const ObsDensityEvaluator obs(theta, space);

    Eigen::MatrixXd logvols(n_particles, d2);
    std::vector<int> regimes(static_cast<std::size_t>(n_particles));  // 1-based
    Eigen::VectorXd log_weights =
        Eigen::VectorXd::Constant(n_particles, -std::log(double(n_particles)));
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(n_particles, 1.0 / n_particles);

    FilterOutput out;
    for (int t = 1; t <= T; ++t) {
        if (t > 1) {
            // Multinomial resampling at every time point.
            const auto ancestors = multinomial_resample(
                weights, n_particles,
                mix_seed(mix_seed(seed, kTagResample), static_cast<std::uint64_t>(t - 1)));
            Eigen::MatrixXd lv(n_particles, d2);
            std::vector<int> rg(static_cast<std::size_t>(n_particles));
            for (int k = 0; k < n_particles; ++k) {
                lv.row(k) = logvols.row(ancestors[static_cast<std::size_t>(k)]);
                rg[static_cast<std::size_t>(k)] = regimes[static_cast<std::size_t>(ancestors[static_cast<std::size_t>(k)])];
            }
            logvols = std::move(lv);
            regimes = std::move(rg);
            log_weights.setConstant(-std::log(double(n_particles)));
            weights.setConstant(1.0 / n_particles);
        }
        Eigen::VectorXd increments(n_particles);
        const Eigen::VectorXd y = returns.row(t - 1).transpose();
        for (int i = 0; i < n_particles; ++i) {
            auto rng = stream_rng(seed, kTagRegime, static_cast<std::uint64_t>(t),
                                  static_cast<std::uint64_t>(i));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::normal_distribution<double> stdnorm(0.0, 1.0);
            if (t == 1) {
                regimes[static_cast<std::size_t>(i)] =
                    1 + static_cast<int>(std::min<double>(S_K - 1, std::floor(unif(rng) * S_K)));
                for (int k = 0; k < d2; ++k) {
                    const double sd0 = std::sqrt(theta.q[k] / (1.0 - theta.phi[k] * theta.phi[k]));
                    logvols(i, k) = theta.mu[k] + sd0 * stdnorm(rng);
                }
            } else {
                // Regime proposal = its transition kernel, so it cancels in
                // the weight just like the log-vol bootstrap proposal.
                if (S_K > 1) {
                    const int prev = regimes[static_cast<std::size_t>(i)];
                    if (unif(rng) >= theta.p) {
                        int k = 1 + static_cast<int>(std::min<double>(
                                    S_K - 2, std::floor(unif(rng) * (S_K - 1))));
                        regimes[static_cast<std::size_t>(i)] = (k < prev) ? k : k + 1;
                    }
                }
                for (int k = 0; k < d2; ++k) {
                    logvols(i, k) = theta.mu[k] + theta.phi[k] * (logvols(i, k) - theta.mu[k]) +
                                    std::sqrt(theta.q[k]) * stdnorm(rng);
                }
            }
            increments[i] = obs.log_density(regimes[static_cast<std::size_t>(i)],
                                            logvols.row(i).transpose(), y);
        }
        const Eigen::VectorXd combined = log_weights + increments;
        const double inc = log_sum_exp(combined);
        log_weights = combined;
        const double m = log_weights.maxCoeff();
        if (!std::isfinite(m)) {
            throw FilterDegeneracyError(
                "SISR filter degenerate: all weights vanished at step " + std::to_string(t), t);
        }
        weights = (log_weights.array() - m).exp();
        weights /= weights.sum();

        double panic = 0.0;
        for (int i = 0; i < n_particles; ++i) {
            if (regimes[static_cast<std::size_t>(i)] != 1) panic += weights[i];
        }
        out.loglik_increments.push_back(inc);
        out.panic_probs.push_back(std::clamp(panic, 0.0, 1.0));
        out.ess.push_back(ess_of(weights));
        out.total_loglik += inc;
    }
    return out;
}

}  // namespace msl
