#include "msl/pmmh.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "msl/errors.hpp"
#include "msl/model.hpp"
#include "msl/rbpf.hpp"
#include "msl/rng.hpp"
#include "msl/stats.hpp"

namespace msl {

namespace {

constexpr std::uint64_t kTagChain = 0xC0;
constexpr std::uint64_t kTagEval = 0xC1;
constexpr std::uint64_t kTagReplica = 0xC2;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double u) { return std::log(u) - std::log1p(-u); }

}  // namespace

ParamTransform::ParamTransform(int d_y, int d_f, const PriorSpec& prior)
    : d_y_(d_y), d_f_(d_f) {
    prior.validate();
    names_ = MslParams::field_names(d_y, d_f);
    dim_ = static_cast<int>(names_.size());
    blocks_.reserve(static_cast<std::size_t>(dim_));
    const int n_load = d_f * d_y - d_f * (d_f + 1) / 2;
    for (int k = 0; k < n_load; ++k) blocks_.push_back({Kind::Identity});
    for (int k = 0; k < 2 * d_f; ++k) blocks_.push_back({Kind::Logit, prior.phi_lo, prior.phi_hi});
    for (int k = 0; k < 2 * d_f; ++k) blocks_.push_back({Kind::Identity});
    for (int k = 0; k < 2 * d_f; ++k) blocks_.push_back({Kind::Log});
    for (int k = 0; k < d_y; ++k) blocks_.push_back({Kind::Log});
    for (int k = 0; k < d_f; ++k) {
        blocks_.push_back({Kind::Logit, prior.lambda_lo, prior.lambda_hi});
    }
    blocks_.push_back({Kind::Logit, prior.p_lo, prior.p_hi});
}

Eigen::VectorXd ParamTransform::to_unconstrained(const MslParams& theta) const {
    const auto named = theta.to_named();
    if (static_cast<int>(named.size()) != dim_) {
        throw ConfigError("ParamTransform: theta dimension mismatch");
    }
    Eigen::VectorXd z(dim_);
    for (int k = 0; k < dim_; ++k) {
        const double x = named[static_cast<std::size_t>(k)].second;
        const Block& b = blocks_[static_cast<std::size_t>(k)];
        switch (b.kind) {
            case Kind::Identity:
                z[k] = x;
                break;
            case Kind::Log:
                if (x <= 0.0) throw ConfigError("ParamTransform: log block needs positive value");
                z[k] = std::log(x);
                break;
            case Kind::Logit: {
                if (x <= b.lo || x >= b.hi) {
                    throw ConfigError("ParamTransform: value " + std::to_string(x) +
                                      " outside open interval for '" +
                                      names_[static_cast<std::size_t>(k)] + "'");
                }
                z[k] = logit((x - b.lo) / (b.hi - b.lo));
                break;
            }
        }
    }
    return z;
}

MslParams ParamTransform::to_natural(const Eigen::VectorXd& z) const {
    if (z.size() != dim_) {
        throw ConfigError("ParamTransform: z dimension mismatch");
    }
    std::vector<std::pair<std::string, double>> named;
    named.reserve(static_cast<std::size_t>(dim_));
    for (int k = 0; k < dim_; ++k) {
        const Block& b = blocks_[static_cast<std::size_t>(k)];
        double x = z[k];
        if (b.kind == Kind::Log) {
            x = std::exp(z[k]);
        } else if (b.kind == Kind::Logit) {
            x = b.lo + (b.hi - b.lo) * sigmoid(z[k]);
        }
        named.emplace_back(names_[static_cast<std::size_t>(k)], x);
    }
    return MslParams::from_named(d_y_, d_f_, named);
}

double ParamTransform::log_jacobian(const Eigen::VectorXd& z) const {
    double lj = 0.0;
    for (int k = 0; k < dim_; ++k) {
        const Block& b = blocks_[static_cast<std::size_t>(k)];
        if (b.kind == Kind::Log) {
            lj += z[k];
        } else if (b.kind == Kind::Logit) {
            lj += std::log(b.hi - b.lo) - softplus(z[k]) - softplus(-z[k]);
        }
    }
    return lj;
}

void AdaptSchedule::validate() const {
    if (!(t0 > 0) || !(t1 > t0)) {
        throw ConfigError("AdaptSchedule: need 0 < t0 < t1");
    }
    if (epsilon <= 0.0) {
        throw ConfigError("AdaptSchedule: ridge epsilon must be positive");
    }
    if (sigma0.rows() != sigma0.cols() || sigma0.rows() == 0) {
        throw ConfigError("AdaptSchedule: sigma0 must be a square nonempty matrix");
    }
}

RunningCovariance::RunningCovariance(int dim)
    : count_(0), mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

void RunningCovariance::push(const Eigen::VectorXd& z) {
    ++count_;
    const Eigen::VectorXd delta = z - mean_;
    mean_ += delta / count_;
    m2_ += delta * (z - mean_).transpose();
}

Eigen::MatrixXd RunningCovariance::sample_covariance() const {
    if (count_ < 2) {
        return Eigen::MatrixXd::Zero(mean_.size(), mean_.size());
    }
    Eigen::MatrixXd s = m2_ / (count_ - 1);
    return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd adapt_covariance(const RunningCovariance& cov, const AdaptSchedule& schedule,
                                 int iteration) {
    schedule.validate();
    if (iteration <= schedule.t0 || cov.count() < 2) {
        return schedule.sigma0;
    }
    const int d = static_cast<int>(schedule.sigma0.rows());
    const double scale = 2.4 * 2.4 / d;
    return scale * (cov.sample_covariance() +
                    schedule.epsilon * Eigen::MatrixXd::Identity(d, d));
}

MhResult adaptive_mh_run(const MhTarget& target, const Eigen::VectorXd& z0, int n_iters,
                         const AdaptSchedule& schedule, std::uint64_t seed,
                         const MhProgress& progress) {
    schedule.validate();
    const int d = static_cast<int>(z0.size());
    if (schedule.sigma0.rows() != d) {
        throw ConfigError("adaptive_mh_run: sigma0 dimension mismatch");
    }
    if (n_iters < 1) {
        throw ConfigError("adaptive_mh_run: need at least one iteration");
    }

    MhResult result;
    result.chain.reserve(static_cast<std::size_t>(n_iters));

    auto chain_rng = stream_rng(seed, kTagChain);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    RunningCovariance history(d);

    MhSample current;
    current.z = z0;
    current.log_prior_jac = target.log_prior_jac(z0);
    if (!std::isfinite(current.log_prior_jac)) {
        throw ConfigError("adaptive_mh_run: initial state has zero prior density");
    }
    current.log_lik = target.log_lik(z0, mix_seed(seed, mix_seed(kTagEval, 1)));
    if (!std::isfinite(current.log_lik)) {
        throw NumericError("adaptive_mh_run: likelihood estimate failed at the initial state");
    }
    current.accepted = true;
    current.proposal_cov = std::make_shared<const Eigen::MatrixXd>(schedule.sigma0);
    result.chain.push_back(current);
    history.push(current.z);
    if (progress) progress(1, 0);

    // The covariance is frozen at its t1 value; reuse one shared matrix for
    // the whole tail (and for the pre-adaptation head).
    std::shared_ptr<const Eigen::MatrixXd> head_cov = current.proposal_cov;
    std::shared_ptr<const Eigen::MatrixXd> frozen_cov;

    for (int i = 2; i <= n_iters; ++i) {
        std::shared_ptr<const Eigen::MatrixXd> cov_i;
        if (i <= schedule.t0) {
            cov_i = head_cov;
        } else if (i <= schedule.t1) {
            cov_i = std::make_shared<const Eigen::MatrixXd>(
                adapt_covariance(history, schedule, i));
        } else {
            if (!frozen_cov) {
                frozen_cov = result.chain.back().proposal_cov;
            }
            cov_i = frozen_cov;
        }

        Eigen::LLT<Eigen::MatrixXd> llt(*cov_i);
        if (llt.info() != Eigen::Success) {
            throw NumericError("adaptive_mh_run: proposal covariance not positive definite");
        }
        Eigen::VectorXd step(d);
        for (int k = 0; k < d; ++k) step[k] = stdnorm(chain_rng);
        const Eigen::VectorXd proposal = current.z + llt.matrixL() * step;
        const double u = unif(chain_rng);

        MhSample next = current;
        next.accepted = false;
        next.proposal_cov = cov_i;

        const double lpj = target.log_prior_jac(proposal);
        if (std::isfinite(lpj)) {
            const double ll = target.log_lik(proposal, mix_seed(seed, mix_seed(kTagEval, i)));
            if (std::isfinite(ll)) {
                const double log_ratio = (lpj + ll) - (current.log_prior_jac + current.log_lik);
                if (std::log(u) < log_ratio) {
                    next.z = proposal;
                    next.log_prior_jac = lpj;
                    next.log_lik = ll;
                    next.accepted = true;
                    ++result.n_accepted;
                }
            } else {
                ++result.n_degenerate;
            }
        }
        result.chain.push_back(next);
        current = next;
        history.push(next.z);
        if (progress) progress(i, result.n_accepted);
    }
    return result;
}

double averaged_loglik(const MslParams& theta, const SelectorSpace& space,
                       const Eigen::MatrixXd& returns, int n_replicas, int n_particles,
                       std::uint64_t eval_seed, int max_workers) {
    if (n_replicas < 1) {
        throw ConfigError("averaged_loglik: need at least one replica");
    }
    Eigen::VectorXd logliks(n_replicas);
    std::vector<int> failed(static_cast<std::size_t>(n_replicas), 0);
    auto run_one = [&](int j) {
        try {
            logliks[j] = rbpf_run(theta, space, returns, n_particles,
                                  mix_seed(eval_seed, mix_seed(kTagReplica, j)))
                             .total_loglik;
        } catch (const NumericError&) {
            // degenerate weights or an overflowed covariance; both mean the
            // proposal cannot be scored
            failed[static_cast<std::size_t>(j)] = 1;
        }
    };
    const int workers = max_workers > 0 ? std::min(max_workers, n_replicas) : n_replicas;
    if (workers <= 1) {
        for (int j = 0; j < n_replicas; ++j) run_one(j);
    } else {
        for (int start = 0; start < n_replicas; start += workers) {
            const int end = std::min(start + workers, n_replicas);
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(end - start));
            for (int j = start; j < end; ++j) pool.emplace_back(run_one, j);
            for (auto& th : pool) th.join();
        }
    }
    for (int j = 0; j < n_replicas; ++j) {
        if (failed[static_cast<std::size_t>(j)]) {
            throw FilterDegeneracyError("replica " + std::to_string(j + 1) +
                                            " degenerated during likelihood averaging",
                                        0);
        }
    }
    // Average of the likelihoods (not the log-likelihoods), in log space:
    // the deterministic reduction order keeps runs bit-reproducible.
    return log_sum_exp(logliks) - std::log(double(n_replicas));
}

PmmhResult pmmh_run(const Eigen::MatrixXd& returns, const PriorSpec& prior,
                    const MslParams& init_theta, const SelectorSpace& space,
                    const PmmhConfig& config) {
    prior.validate();
    init_theta.validate();
    const ParamTransform transform(init_theta.d_y, init_theta.d_f, prior);
    const int d = transform.dim();

    AdaptSchedule schedule = config.schedule;
    if (schedule.sigma0.size() == 0) {
        schedule.sigma0 = 0.01 * Eigen::MatrixXd::Identity(d, d);
    }
    schedule.validate();

    if (!std::isfinite(log_prior(init_theta, prior))) {
        throw ConfigError("pmmh_run: initial theta has zero prior density");
    }

    MhTarget target;
    target.log_prior_jac = [&](const Eigen::VectorXd& z) {
        const MslParams theta = transform.to_natural(z);
        const double lp = log_prior(theta, prior);
        if (!std::isfinite(lp)) return kNegInf;
        return lp + transform.log_jacobian(z);
    };
    target.log_lik = [&](const Eigen::VectorXd& z, std::uint64_t eval_seed) {
        const MslParams theta = transform.to_natural(z);
        try {
            return averaged_loglik(theta, space, returns, config.n_replicas,
                                   config.n_particles, eval_seed, config.max_workers);
        } catch (const NumericError&) {
            return kNegInf;  // treated as a rejection by the MH core
        }
    };

    const Eigen::VectorXd z0 = transform.to_unconstrained(init_theta);
    MhResult mh;
    try {
        mh = adaptive_mh_run(target, z0, config.n_iters, schedule, config.seed,
                             config.progress);
    } catch (const NumericError&) {
        throw NumericError("pmmh_run: particle filter degenerated at the initial theta");
    }

    PmmhResult out;
    out.param_names = transform.names();
    out.n_accepted = mh.n_accepted;
    out.n_degenerate = mh.n_degenerate;
    out.chain.reserve(mh.chain.size());
    for (const auto& s : mh.chain) {
        ChainState cs;
        cs.z = s.z;
        cs.theta = transform.to_natural(s.z);
        cs.log_prior = log_prior(cs.theta, prior);
        cs.avg_loglik = s.log_lik;
        cs.accepted = s.accepted;
        cs.proposal_cov = s.proposal_cov;
        out.chain.push_back(std::move(cs));
    }
    return out;
}

double batch_means_mcse(const Eigen::VectorXd& series) {
    const int n = static_cast<int>(series.size());
    if (n < 4) return 0.0;
    const int n_batches = std::max(2, static_cast<int>(std::floor(std::sqrt(double(n)))));
    const int batch_size = n / n_batches;
    const int used = n_batches * batch_size;
    const double grand = series.tail(used).mean();
    double ss = 0.0;
    for (int b = 0; b < n_batches; ++b) {
        const double bm = series.segment(n - used + b * batch_size, batch_size).mean();
        ss += (bm - grand) * (bm - grand);
    }
    const double var_mean = batch_size * ss / (n_batches - 1) / used;
    return std::sqrt(var_mean);
}

double empirical_quantile(Eigen::VectorXd series, double prob) {
    const int n = static_cast<int>(series.size());
    if (n == 0) throw ConfigError("empirical_quantile: empty series");
    std::sort(series.data(), series.data() + n);
    if (n == 1) return series[0];
    const double h = prob * (n - 1);
    const int lo = static_cast<int>(std::floor(h));
    const int hi = std::min(lo + 1, n - 1);
    const double w = h - lo;
    return (1.0 - w) * series[lo] + w * series[hi];
}

std::vector<SummaryRow> summarize_chain(const std::vector<ChainState>& chain,
                                        const std::vector<std::string>& names, int burn_in) {
    const int n = static_cast<int>(chain.size());
    if (burn_in < 0 || burn_in >= n) {
        throw ConfigError("summarize_chain: burn-in must be smaller than the chain length");
    }
    const int kept = n - burn_in;
    const int d = static_cast<int>(names.size());
    Eigen::MatrixXd natural(kept, d);
    for (int i = 0; i < kept; ++i) {
        const auto named = chain[static_cast<std::size_t>(burn_in + i)].theta.to_named();
        if (static_cast<int>(named.size()) != d) {
            throw ConfigError("summarize_chain: the names do not match the chain dimension");
        }
        for (int k = 0; k < d; ++k) natural(i, k) = named[static_cast<std::size_t>(k)].second;
    }
    std::vector<SummaryRow> rows(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const Eigen::VectorXd series = natural.col(k);
        SummaryRow& row = rows[static_cast<std::size_t>(k)];
        row.name = names[static_cast<std::size_t>(k)];
        row.est = series.mean();
        row.mcse = batch_means_mcse(series);
        row.lower95 = empirical_quantile(series, 0.025);
        row.upper95 = empirical_quantile(series, 0.975);
    }
    return rows;
}

}  // namespace msl
