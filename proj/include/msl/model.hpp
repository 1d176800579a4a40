#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "msl/params.hpp"
#include "msl/selector_space.hpp"

namespace msl {

// Sum of component log prior densities; -inf when any bounded-support block
// falls outside its support.
double log_prior(const MslParams& theta, const PriorSpec& prior);

// Independent draw from the prior. Loadings keep the unit-diagonal
// constraint; only the free entries are sampled.
MslParams prior_draw(int d_y, int d_f, const PriorSpec& prior, std::uint64_t seed);

struct SimulationResult {
    Eigen::MatrixXd returns;  // T x d_y
    LatentPath truth;
};

// Generative simulator: regime chain from the uniform stationary law and the
// single-parameter kernel, log-vols from stationary AR(1) initialization,
// returns from the two-factor observation equation.
SimulationResult simulate(const MslParams& theta, const SelectorSpace& space, int T,
                          std::uint64_t seed);

// Per-(theta, space) evaluator of the conditional observation density
//   y | regime, logvol ~ N(B lambda, sum_j e^{x2_j} b_j b_j^T
//                          + e^{x3_j} (D b_j)(D b_j)^T + diag(R)),
// Cholesky-factorizing the assembled d_y x d_y covariance. Immutable after
// construction; safe to share across filter replicas.
class ObsDensityEvaluator {
public:
    ObsDensityEvaluator(const MslParams& theta, const SelectorSpace& space);

    int n_regimes() const { return static_cast<int>(masked_outer_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }

    // logvol is the 2 d_f vector (x2 block then x3 block); regime is 1-based.
    double log_density(int regime, const Eigen::VectorXd& logvol,
                       const Eigen::VectorXd& y) const;

    // All regimes at once, sharing the no-panic part of the assembly.
    void log_density_all(const Eigen::VectorXd& logvol, const Eigen::VectorXd& y,
                         Eigen::VectorXd& out) const;

    // Dense conditional covariance for a regime/logvol pair.
    Eigen::MatrixXd covariance(int regime, const Eigen::VectorXd& logvol) const;

private:
    int d_y_;
    int d_f_;
    Eigen::VectorXd mean_;                          // B lambda
    Eigen::VectorXd r_diag_;                        // diag(R)
    std::vector<Eigen::MatrixXd> outer_;            // b_j b_j^T per factor
    std::vector<std::vector<Eigen::MatrixXd>> masked_outer_;  // [regime][factor]

    double gaussian_logpdf(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y) const;
};

double conditional_obs_logdensity(const MslParams& theta, const SelectorSpace& space,
                                  int regime, const Eigen::VectorXd& logvol,
                                  const Eigen::VectorXd& y);

// Likelihood-preserving reparameterizations; the outputs generally violate
// the unit-diagonal loadings constraint and are meant for oracle testing.

// Column rescaling by a positive diagonal: {BP, R, mu+u, phi, q, P^-1 lambda, p}
// with u_j = 2 log(1/P_jj) applied to the matching entry of both log-vol
// blocks.
MslParams rescale_loadings(const MslParams& theta, const Eigen::VectorXd& scales);

// Factor permutation acting on loadings columns and blockwise on both log-vol
// blocks: {B P^T, R, P mu, P phi P^T, P q P^T, P lambda, p}. `perm[j]` is the
// new position of factor j.
MslParams permute_factors(const MslParams& theta, const std::vector<int>& perm);

// Column sign flips: {BS, R, mu, phi, q, S lambda, p}. The risk premia flip
// with the columns so the conditional mean B lambda is preserved.
MslParams flip_factor_signs(const MslParams& theta, const std::vector<int>& signs);

}  // namespace msl
