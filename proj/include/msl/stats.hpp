#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace msl {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

// InverseGamma(shape a, scale b): density b^a / Gamma(a) x^{-a-1} exp(-b/x).
inline double inverse_gamma_logpdf(double x, double shape, double scale) {
    if (x <= 0.0) return kNegInf;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
           scale / x;
}

inline double uniform_logpdf(double x, double lo, double hi) {
    if (x <= lo || x >= hi) return kNegInf;
    return -std::log(hi - lo);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;  // all -inf (or a nan poisoned the max)
    return m + std::log((v.array() - m).exp().sum());
}

// Standard normal quantile and chi-squared upper tail; thin wrappers defined
// in stats.cpp so <boost/math> stays out of this header.
double normal_quantile(double prob);
double chi_squared_sf(double x, int dof);

}  // namespace msl
