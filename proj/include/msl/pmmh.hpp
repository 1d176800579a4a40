#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "msl/params.hpp"
#include "msl/selector_space.hpp"

namespace msl {

// Bijection between theta and an unconstrained vector z: identity for the
// free loadings and mu, log for the variances, scaled logit for phi, lambda
// and p (bounds taken from the prior). Proposals random-walk on z, so the
// acceptance ratio carries log|d theta / d z|.
class ParamTransform {
public:
    ParamTransform(int d_y, int d_f, const PriorSpec& prior);

    int dim() const { return dim_; }
    const std::vector<std::string>& names() const { return names_; }

    Eigen::VectorXd to_unconstrained(const MslParams& theta) const;
    MslParams to_natural(const Eigen::VectorXd& z) const;
    double log_jacobian(const Eigen::VectorXd& z) const;

private:
    enum class Kind { Identity, Log, Logit };
    struct Block {
        Kind kind;
        double lo = 0.0, hi = 0.0;
    };
    int d_y_, d_f_, dim_;
    std::vector<Block> blocks_;  // one per coordinate, in name order
    std::vector<std::string> names_;
};

// Haario adaptation schedule: fixed sigma0 through iteration t0, empirical
// (2.4^2/d)(S_{i-1} + eps I) through t1, frozen afterwards.
struct AdaptSchedule {
    int t0 = 150;
    int t1 = 1000;
    double epsilon = 1e-8;
    Eigen::MatrixXd sigma0;

    void validate() const;
};

// Running covariance of the chain history in z-space; equals the batch
// sample covariance of everything pushed so far.
class RunningCovariance {
public:
    explicit RunningCovariance(int dim);
    void push(const Eigen::VectorXd& z);
    int count() const { return count_; }
    Eigen::MatrixXd sample_covariance() const;

private:
    int count_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

// Proposal covariance in force at iteration i (1-based), given the history
// pushed into cov so far (samples 1..i-1 by the time iteration i proposes).
Eigen::MatrixXd adapt_covariance(const RunningCovariance& cov, const AdaptSchedule& schedule,
                                 int iteration);

// Generic adaptive random-walk Metropolis-Hastings on R^d with a (possibly
// noisy) likelihood term, pseudo-marginal style: the incumbent's likelihood
// value is stored and never refreshed.
struct MhTarget {
    // Deterministic part (log prior + log Jacobian); -inf short-circuits the
    // likelihood evaluation and rejects.
    std::function<double(const Eigen::VectorXd&)> log_prior_jac;
    // Stochastic log-likelihood estimate; eval_seed is derived from the
    // chain seed and iteration index.
    std::function<double(const Eigen::VectorXd&, std::uint64_t)> log_lik;
};

struct MhSample {
    Eigen::VectorXd z;
    double log_prior_jac = 0.0;
    double log_lik = 0.0;
    bool accepted = false;
    std::shared_ptr<const Eigen::MatrixXd> proposal_cov;  // in force this iteration
};

struct MhResult {
    std::vector<MhSample> chain;
    int n_accepted = 0;   // over iterations 2..n
    int n_degenerate = 0; // proposals rejected because the estimator failed
};

// Invoked after every iteration with the cumulative acceptance count.
using MhProgress = std::function<void(int iteration, int n_accepted)>;

MhResult adaptive_mh_run(const MhTarget& target, const Eigen::VectorXd& z0, int n_iters,
                         const AdaptSchedule& schedule, std::uint64_t seed,
                         const MhProgress& progress = {});

// One PMMH iteration record on the natural scale.
struct ChainState {
    Eigen::VectorXd z;
    MslParams theta;
    double log_prior = 0.0;
    double avg_loglik = 0.0;
    bool accepted = false;
    std::shared_ptr<const Eigen::MatrixXd> proposal_cov;
};

struct PmmhConfig {
    int n_iters = 1000;
    int n_replicas = 1;      // parallel filters per likelihood evaluation
    int n_particles = 50;
    AdaptSchedule schedule;  // sigma0 defaults to 0.01 I when left empty
    std::uint64_t seed = 0;
    int max_workers = 0;     // 0 = run all replicas concurrently
    MhProgress progress;     // optional per-iteration callback
};

struct PmmhResult {
    std::vector<ChainState> chain;
    std::vector<std::string> param_names;
    int n_accepted = 0;
    int n_degenerate = 0;
};

// Algorithm: at each iteration propose z' ~ N(z, Sigma_i), map to theta',
// reject immediately on -inf prior, otherwise run n_replicas RBPFs with
// pre-derived seeds and average the likelihood estimates (log-sum-exp minus
// log n_p); accept by the symmetric-proposal MH rule on z-space.
PmmhResult pmmh_run(const Eigen::MatrixXd& returns, const PriorSpec& prior,
                    const MslParams& init_theta, const SelectorSpace& space,
                    const PmmhConfig& config);

// Averaged log-likelihood at a fixed theta (the evaluation PMMH performs per
// proposal); exposed for seeding and diagnostics.
double averaged_loglik(const MslParams& theta, const SelectorSpace& space,
                       const Eigen::MatrixXd& returns, int n_replicas, int n_particles,
                       std::uint64_t eval_seed, int max_workers = 0);

// Posterior summary row, Table-style.
struct SummaryRow {
    std::string name;
    double est = 0.0;
    double mcse = 0.0;
    double lower95 = 0.0;
    double upper95 = 0.0;
};

// Posterior mean, batch-means MCSE and the equal-tailed 95% interval per
// natural-scale parameter.
std::vector<SummaryRow> summarize_chain(const std::vector<ChainState>& chain,
                                        const std::vector<std::string>& names, int burn_in);

// Scalar helpers used by the summary (exposed for testing).
double batch_means_mcse(const Eigen::VectorXd& series);
double empirical_quantile(Eigen::VectorXd series, double prob);

}  // namespace msl
