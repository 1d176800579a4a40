#pragma once

#include <Eigen/Dense>
#include <functional>

#include "msl/model.hpp"
#include "msl/selector_space.hpp"

namespace msl {
namespace oracles {

// Brute-force references for the filter and sampler implementations. These
// deliberately share no machinery with the production code beyond the
// primitive observation-density evaluation: the transition kernel is built
// densely in place, the recursions are written from the definitions, and the
// quadrature is a plain tensor-product rule. They exist to be obviously
// correct at desk scale, not fast.

// log p(y_{1:T} | x_{2,1:T}, theta) by explicit summation over all S_K^T
// regime paths (uniform initial law, dense kernel). Guarded by a path-count
// budget.
double hmm_likelihood_enumeration(const MslParams& theta, const SelectorSpace& space,
                                  const Eigen::MatrixXd& logvol_path,
                                  const Eigen::MatrixXd& returns);

// Same quantity by an independently written forward recursion with a dense
// transition matrix.
double hmm_likelihood_forward(const MslParams& theta, const SelectorSpace& space,
                              const Eigen::MatrixXd& logvol_path,
                              const Eigen::MatrixXd& returns);

// Tensor-product quadrature over the log-volatility trajectory.
struct GridSpec {
    int nodes = 25;          // per log-vol dimension
    double width_sds = 5.0;  // grid spans mean +- width_sds stationary sds
    double budget = 1e13;    // cap on nodes^(2 d_f T) * S_K^T

    void validate() const;
    // Total path count in logs, for the budget check.
    double log_path_count(int d_f, int T, int S_K) const;
};

// log p(y_{1:T} | theta): trapezoid-weighted quadrature of the AR(1)
// transition densities against the exact regime-path sum. The sum over the
// product space of grid nodes and regimes is evaluated time-by-time, which
// reproduces the full tensor-product path sum exactly (distributivity); the
// budget still refers to that path count.
double grid_likelihood(const MslParams& theta, const SelectorSpace& space,
                       const Eigen::MatrixXd& returns, const GridSpec& grid);

struct Posterior1d {
    Eigen::VectorXd values;
    Eigen::VectorXd density;  // normalized by the trapezoid rule
    Eigen::VectorXd cdf;

    // Linear interpolation of the CDF at x (0 below, 1 above the grid).
    double cdf_at(double x) const;
};

// Normalized 1-D posterior over a single scalar parameter, all others fixed:
// pointwise prior(value) * grid_likelihood(theta with value).
Posterior1d grid_posterior_1d(const MslParams& base, const SelectorSpace& space,
                              const Eigen::MatrixXd& returns,
                              const std::function<MslParams(MslParams, double)>& with_value,
                              const std::function<double(double)>& prior_logpdf, double lo,
                              double hi, int n_points, const GridSpec& grid);

}  // namespace oracles
}  // namespace msl
