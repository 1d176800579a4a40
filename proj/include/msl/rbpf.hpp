#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "msl/model.hpp"
#include "msl/selector_space.hpp"

namespace msl {

// Weighted particle set. Each particle carries its log-vol sample and the
// exact filtered regime distribution given its log-vol history (the
// Rao-Blackwellized marginal). `weights` is the normalized version of
// `log_weights` and sums to 1.
struct ParticleCloud {
    Eigen::MatrixXd logvols;      // n x 2 d_f
    Eigen::MatrixXd beliefs;      // n x S_K, rows normalized
    Eigen::VectorXd log_weights;  // unnormalized
    Eigen::VectorXd weights;      // normalized

    int n_particles() const { return static_cast<int>(logvols.rows()); }
};

struct FilterOutput {
    std::vector<double> loglik_increments;  // log p~(y_t | y_{1:t-1})
    std::vector<double> panic_probs;        // filtered P(regime != 1 | y_{1:t})
    std::vector<double> ess;                // effective sample size, pre-resampling
    double total_loglik = 0.0;
};

enum class ResamplePolicy {
    EveryStep,     // multinomial resampling after every observation
    EssThreshold,  // resample only when ESS < threshold * n
};

// Rao-Blackwellized bootstrap particle filter over the log-volatilities,
// with the regime chain marginalized exactly by a per-particle HMM filter.
//
// Construction draws the initial cloud from the stationary AR(1) law (these
// are the t=1 bootstrap proposals); assimilate() consumes one observation at
// a time. Likelihood increments and filtered expectations use the
// pre-resampling weights; resampling is deferred to the start of the next
// step, which is equivalent to resampling at the end of the current one and
// keeps the post-update cloud inspectable.
//
// All draws come from counter-based streams keyed by (seed, step, particle),
// so output depends only on the seed, not on evaluation order.
class RbpfFilter {
public:
    RbpfFilter(const MslParams& theta, const SelectorSpace& space, int n_particles,
               std::uint64_t seed, ResamplePolicy policy = ResamplePolicy::EveryStep,
               double ess_threshold = 0.5);

    // Returns the log conditional likelihood increment. Throws
    // FilterDegeneracyError when every particle weight collapses.
    double assimilate(const Eigen::VectorXd& y);

    const ParticleCloud& cloud() const { return cloud_; }
    const RegimeTransition& transition() const { return trans_; }
    const ObsDensityEvaluator& density() const { return obs_; }
    int step() const { return t_; }

    double panic_probability() const;
    double ess() const;

private:
    void resample_if_needed();
    void propagate();

    MslParams theta_;
    ObsDensityEvaluator obs_;
    RegimeTransition trans_;
    ParticleCloud cloud_;
    std::uint64_t seed_;
    ResamplePolicy policy_;
    double ess_threshold_;
    int t_ = 0;
};

using PostUpdateHook = std::function<void(int t, const RbpfFilter&)>;

// Whole-series convenience wrapper; the hook (if any) runs after each
// update, before the deferred resampling.
FilterOutput rbpf_run(const MslParams& theta, const SelectorSpace& space,
                      const Eigen::MatrixXd& returns, int n_particles, std::uint64_t seed,
                      ResamplePolicy policy = ResamplePolicy::EveryStep,
                      const PostUpdateHook& hook = {});

// Weighted filtered expectation of h(regime, logvol): the regime average is
// analytic over each particle's belief vector.
double filtered_expectation(const ParticleCloud& cloud,
                            const std::function<double(int, const Eigen::VectorXd&)>& h);

double panic_probability(const ParticleCloud& cloud);

// Multinomial resampling: n iid categorical draws from the normalized
// weights by inverse CDF.
std::vector<int> multinomial_resample(const Eigen::VectorXd& weights, int n,
                                      std::uint64_t seed);

// Plain SISR bootstrap filter that samples the regime indices as well;
// reference implementation for the variance-ordering comparison with the
// Rao-Blackwellized estimator.
FilterOutput sisr_run(const MslParams& theta, const SelectorSpace& space,
                      const Eigen::MatrixXd& returns, int n_particles, std::uint64_t seed);

}  // namespace msl
