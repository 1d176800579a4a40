#include "msl/params.hpp"

#include <cmath>
#include <map>

#include "msl/errors.hpp"

namespace msl {

namespace {

std::string idx_name(const std::string& base, int i) { return base + std::to_string(i); }

}  // namespace

int MslParams::n_free_loadings() const {
    int n = 0;
    for (int j = 0; j < d_f; ++j) {
        n += d_y - j - 1;
    }
    return n;
}

void MslParams::validate(bool strict_loadings) const {
    if (d_y <= 0 || d_f <= 0 || d_f > d_y) {
        throw ConfigError("MslParams: need 0 < d_f <= d_y");
    }
    if (B.rows() != d_y || B.cols() != d_f) {
        throw ConfigError("MslParams: loadings matrix must be d_y x d_f");
    }
    if (R.size() != d_y || mu.size() != 2 * d_f || phi.size() != 2 * d_f ||
        q.size() != 2 * d_f || lambda.size() != d_f) {
        throw ConfigError("MslParams: parameter block dimensions inconsistent");
    }
    if (strict_loadings) {
        for (int i = 0; i < d_y; ++i) {
            for (int j = 0; j < d_f; ++j) {
                if (i == j && B(i, j) != 1.0) {
                    throw ConfigError("MslParams: loadings diagonal must equal 1");
                }
                if (j > i && B(i, j) != 0.0) {
                    throw ConfigError("MslParams: loadings above diagonal must equal 0");
                }
            }
        }
    }
    if (!(R.array() > 0.0).all()) {
        throw std::domain_error("MslParams: idiosyncratic variances must be positive");
    }
    if (!(q.array() >= 0.0).all()) {
        throw std::domain_error("MslParams: innovation variances must be nonnegative");
    }
    if (!(phi.array().abs() < 1.0).all()) {
        throw std::domain_error("MslParams: |phi| < 1 required for stationarity");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("MslParams: regime persistence p must lie in (0,1)");
    }
    // Free parameters in the observation covariance (loadings + R) must not
    // exceed its d_y + C(d_y,2) free entries.
    const int cov_free = n_free_loadings() + d_y;
    const int cov_cap = d_y + d_y * (d_y - 1) / 2;
    if (cov_free > cov_cap) {
        throw ConfigError("MslParams: d_f too large, observation covariance would be "
                          "over-parameterized");
    }
}

std::vector<std::string> MslParams::field_names(int d_y, int d_f) {
    std::vector<std::string> names;
    for (int j = 0; j < d_f; ++j) {
        for (int i = j + 1; i < d_y; ++i) {
            if (d_f == 1) {
                names.push_back(idx_name("beta", i + 1));
            } else {
                names.push_back("beta" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            }
        }
    }
    for (int i = 0; i < 2 * d_f; ++i) names.push_back(idx_name("phi", i + 1));
    for (int i = 0; i < 2 * d_f; ++i) names.push_back(idx_name("mu", i + 1));
    for (int i = 0; i < 2 * d_f; ++i) names.push_back(idx_name("ss", i + 1));
    for (int i = 0; i < d_y; ++i) names.push_back(idx_name("R", i + 1));
    for (int i = 0; i < d_f; ++i) names.push_back(idx_name("lambda", i + 1));
    names.push_back("p");
    return names;
}

std::vector<std::pair<std::string, double>> MslParams::to_named() const {
    std::vector<std::pair<std::string, double>> out;
    const auto names = field_names(d_y, d_f);
    std::size_t k = 0;
    for (int j = 0; j < d_f; ++j) {
        for (int i = j + 1; i < d_y; ++i) out.emplace_back(names[k++], B(i, j));
    }
    for (int i = 0; i < 2 * d_f; ++i) out.emplace_back(names[k++], phi[i]);
    for (int i = 0; i < 2 * d_f; ++i) out.emplace_back(names[k++], mu[i]);
    for (int i = 0; i < 2 * d_f; ++i) out.emplace_back(names[k++], q[i]);
    for (int i = 0; i < d_y; ++i) out.emplace_back(names[k++], R[i]);
    for (int i = 0; i < d_f; ++i) out.emplace_back(names[k++], lambda[i]);
    out.emplace_back(names[k++], p);
    return out;
}

MslParams MslParams::from_named(int d_y, int d_f,
                                const std::vector<std::pair<std::string, double>>& fields) {
    std::map<std::string, double> lookup;
    for (const auto& [name, value] : fields) {
        if (!lookup.emplace(name, value).second) {
            throw DataError("duplicate parameter field '" + name + "'");
        }
    }
    auto take = [&lookup](const std::string& name) {
        auto it = lookup.find(name);
        if (it == lookup.end()) {
            throw DataError("missing parameter field '" + name + "'");
        }
        const double v = it->second;
        lookup.erase(it);
        return v;
    };

    MslParams theta;
    theta.d_y = d_y;
    theta.d_f = d_f;
    theta.B = Eigen::MatrixXd::Zero(d_y, d_f);
    for (int j = 0; j < d_f && j < d_y; ++j) theta.B(j, j) = 1.0;
    theta.R.resize(d_y);
    theta.mu.resize(2 * d_f);
    theta.phi.resize(2 * d_f);
    theta.q.resize(2 * d_f);
    theta.lambda.resize(d_f);

    const auto names = field_names(d_y, d_f);
    std::size_t k = 0;
    for (int j = 0; j < d_f; ++j) {
        for (int i = j + 1; i < d_y; ++i) theta.B(i, j) = take(names[k++]);
    }
    for (int i = 0; i < 2 * d_f; ++i) theta.phi[i] = take(names[k++]);
    for (int i = 0; i < 2 * d_f; ++i) theta.mu[i] = take(names[k++]);
    for (int i = 0; i < 2 * d_f; ++i) theta.q[i] = take(names[k++]);
    for (int i = 0; i < d_y; ++i) theta.R[i] = take(names[k++]);
    for (int i = 0; i < d_f; ++i) theta.lambda[i] = take(names[k++]);
    theta.p = take(names[k++]);

    if (!lookup.empty()) {
        throw DataError("unexpected parameter field '" + lookup.begin()->first + "'");
    }
    return theta;
}

void PriorSpec::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(loadings_mean) || !finite(loadings_var) || loadings_var <= 0.0 ||
        !finite(mu_mean) || !finite(mu_var) || mu_var <= 0.0) {
        throw ConfigError("PriorSpec: normal blocks need finite mean and positive variance");
    }
    if (r_shape <= 0.0 || r_scale <= 0.0 || q_shape <= 0.0 || q_scale <= 0.0) {
        throw ConfigError("PriorSpec: inverse-gamma blocks need positive hyperparameters");
    }
    if (!(phi_lo < phi_hi) || !(lambda_lo < lambda_hi) || !(p_lo < p_hi)) {
        throw ConfigError("PriorSpec: uniform bounds must be ordered");
    }
}

}  // namespace msl
