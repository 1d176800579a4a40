#pragma once

#include <Eigen/Dense>

#include "msl/model.hpp"
#include "msl/selector_space.hpp"

namespace msl {

// Filtered regime distribution carried by each particle. probs is a
// normalized probability vector over the S_K regimes.
struct RegimeBelief {
    Eigen::VectorXd probs;
};

// Exact discrete forward filtering of the regime chain conditional on a
// log-volatility value for the current step. Both functions return the
// conditional log-likelihood contribution log p(y_t | y_{1:t-1}, x_{2,1:t});
// when every regime density underflows to -inf the returned increment is
// -inf and the belief is reset to uniform (the caller decides whether that
// is fatal).
//
// All accumulation is in log space with log-sum-exp.

// t = 1: uniform prior over regimes (the stationary law of the kernel).
double hmm_init(const ObsDensityEvaluator& obs, const Eigen::VectorXd& logvol,
                const Eigen::VectorXd& y, RegimeBelief& belief);

// t > 1: predictive = Pi^T probs via the rank-structure shortcut, then
// reweight by the per-regime observation densities.
double hmm_step(const ObsDensityEvaluator& obs, const RegimeTransition& trans,
                const Eigen::VectorXd& logvol, const Eigen::VectorXd& y,
                RegimeBelief& belief);

// One-step-ahead regime distribution Pi^T probs.
Eigen::VectorXd regime_predictive(const RegimeBelief& belief, const RegimeTransition& trans);

// Full forward pass over a fixed log-volatility trajectory; returns the
// exact conditional log-likelihood log p(y_{1:T} | x_{2,1:T}, theta).
// Throws NumericError when the pass diverges (-inf increment).
double hmm_full_pass(const MslParams& theta, const SelectorSpace& space,
                     const Eigen::MatrixXd& logvol_path, const Eigen::MatrixXd& returns);

}  // namespace msl
