#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace msl {

// Full parameter collection theta = (B, R, mu, phi, q, lambda, p).
//
// The loadings matrix carries the identification constraint B[i][i] = 1,
// B[i][j] = 0 for j > i; entries below the diagonal are free. The log-vol
// blocks are ordered market block first (indices 0..d_f-1) then panic block
// (d_f..2d_f-1) in mu, phi and q.
struct MslParams {
    int d_y = 0;
    int d_f = 0;
    Eigen::MatrixXd B;       // d_y x d_f loadings
    Eigen::VectorXd R;       // d_y idiosyncratic variances
    Eigen::VectorXd mu;      // 2 d_f log-vol means
    Eigen::VectorXd phi;     // 2 d_f AR(1) coefficients
    Eigen::VectorXd q;       // 2 d_f innovation variances
    Eigen::VectorXd lambda;  // d_f risk premia (market factor only)
    double p = 0.0;          // regime persistence

    // Count of free loadings entries (strictly below the diagonal).
    int n_free_loadings() const;

    // Dimension checks, positivity, |phi|<1, p in (0,1) and the restriction
    // that the observation covariance has fewer free parameters than
    // d_y + C(d_y,2). `strict_loadings` additionally enforces the unit
    // diagonal / zero upper triangle (the estimation-side constraint; the
    // lemma transforms legitimately violate it).
    void validate(bool strict_loadings = true) const;

    // Flat named-field record, Table-style row order: beta, phi, mu, ss
    // (innovation variances), R, lambda, p. For d_f = 1 the names are
    // beta2..betaN, phi1, phi2, mu1, mu2, ss1, ss2, R1..RN, lambda1, p.
    std::vector<std::pair<std::string, double>> to_named() const;
    static MslParams from_named(int d_y, int d_f,
                                const std::vector<std::pair<std::string, double>>& fields);

    static std::vector<std::string> field_names(int d_y, int d_f);
};

// Prior hyperparameters, one block per parameter group. Second argument of
// every normal is a variance; inverse-gamma blocks are (shape, scale).
struct PriorSpec {
    double loadings_mean = 1.0;
    double loadings_var = 0.125;
    double phi_lo = 0.4;
    double phi_hi = 0.9;
    double lambda_lo = 1.5e-4;
    double lambda_hi = 2.708178e-3;
    double r_shape = 0.001;
    double r_scale = 0.001;
    double mu_mean = 0.0;
    double mu_var = 1.0;
    double q_shape = 1.0;
    double q_scale = 1.0;
    double p_lo = 0.0;
    double p_hi = 1.0;

    void validate() const;
};

// Simulated ground truth: regimes are 1-based, logvol and factors are
// T x 2 d_f (market block columns first).
struct LatentPath {
    Eigen::VectorXi regimes;
    Eigen::MatrixXd logvol;
    Eigen::MatrixXd factors;
};

}  // namespace msl
