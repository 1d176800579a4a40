#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "msl/params.hpp"
#include "msl/rng.hpp"
#include "msl/selector_space.hpp"

namespace test {

// Small well-behaved parameter set used across the suites.
inline msl::MslParams make_theta(int d_y, int d_f = 1) {
    msl::MslParams theta;
    theta.d_y = d_y;
    theta.d_f = d_f;
    theta.B = Eigen::MatrixXd::Zero(d_y, d_f);
    for (int j = 0; j < d_f; ++j) {
        theta.B(j, j) = 1.0;
        for (int i = j + 1; i < d_y; ++i) {
            theta.B(i, j) = 0.8 + 0.05 * i + 0.02 * j;
        }
    }
    theta.R.resize(d_y);
    for (int i = 0; i < d_y; ++i) theta.R[i] = 0.5 + 0.15 * i;
    theta.mu.resize(2 * d_f);
    theta.phi.resize(2 * d_f);
    theta.q.resize(2 * d_f);
    for (int k = 0; k < d_f; ++k) {
        theta.mu[k] = 0.8 - 0.1 * k;
        theta.mu[d_f + k] = 0.3 + 0.1 * k;
        theta.phi[k] = 0.6;
        theta.phi[d_f + k] = 0.7;
        theta.q[k] = 0.3;
        theta.q[d_f + k] = 0.4;
    }
    theta.lambda = Eigen::VectorXd::Constant(d_f, 1.3e-3);
    theta.p = 0.9;
    return theta;
}

// Randomized variant for property-style checks; stays inside the prior
// supports.
inline msl::MslParams random_theta(int d_y, int d_f, std::uint64_t seed) {
    auto rng = msl::stream_rng(seed, 0x7e57);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    msl::MslParams theta = make_theta(d_y, d_f);
    for (int j = 0; j < d_f; ++j) {
        for (int i = j + 1; i < d_y; ++i) {
            theta.B(i, j) = 0.5 + unif(rng);
        }
    }
    for (int i = 0; i < d_y; ++i) theta.R[i] = 0.3 + unif(rng);
    for (int k = 0; k < 2 * d_f; ++k) {
        theta.mu[k] = -0.5 + unif(rng);
        theta.phi[k] = 0.45 + 0.4 * unif(rng);
        theta.q[k] = 0.2 + 0.4 * unif(rng);
    }
    theta.p = 0.6 + 0.35 * unif(rng);
    return theta;
}

// Dense multivariate normal log density, written from the definition; the
// reference the production Cholesky evaluation is checked against.
inline double dense_mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov) {
    const int d = static_cast<int>(y.size());
    const Eigen::MatrixXd inv = cov.inverse();
    const double det = cov.determinant();
    const Eigen::VectorXd c = y - mean;
    return -0.5 * (d * std::log(2.0 * M_PI) + std::log(det) + c.dot(inv * c));
}

// Conditional observation covariance assembled exactly as written in the
// model display: sum_j e^{x2_j} b_j b_j^T + e^{x3_j} (D b_j)(D b_j)^T + diag(R).
inline Eigen::MatrixXd dense_conditional_cov(const msl::MslParams& theta,
                                             const msl::SelectorSpace& space, int regime,
                                             const Eigen::VectorXd& logvol) {
    Eigen::MatrixXd cov = theta.R.asDiagonal();
    const Eigen::MatrixXd D = space.selector_matrix(regime);
    for (int j = 0; j < theta.d_f; ++j) {
        const Eigen::VectorXd b = theta.B.col(j);
        const Eigen::VectorXd db = D * b;
        cov += std::exp(logvol[j]) * b * b.transpose();
        cov += std::exp(logvol[theta.d_f + j]) * db * db.transpose();
    }
    return cov;
}

inline Eigen::MatrixXd random_returns(int T, int d_y, std::uint64_t seed, double scale = 1.5) {
    auto rng = msl::stream_rng(seed, 0xda7a);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    Eigen::MatrixXd y(T, d_y);
    for (int t = 0; t < T; ++t) {
        for (int c = 0; c < d_y; ++c) y(t, c) = scale * stdnorm(rng);
    }
    return y;
}

}  // namespace test
