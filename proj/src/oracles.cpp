#include "msl/oracles.hpp"

#include <cmath>
#include <vector>

#include "msl/errors.hpp"
#include "msl/stats.hpp"

namespace msl {
namespace oracles {

namespace {

Eigen::MatrixXd dense_kernel(double p, int S_K) {
    if (S_K == 1) return Eigen::MatrixXd::Ones(1, 1);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(S_K, S_K, (1.0 - p) / (S_K - 1));
    pi.diagonal().setConstant(p);
    return pi;
}

// Per-time per-regime observation log densities for a fixed log-vol path.
Eigen::MatrixXd regime_logdens(const MslParams& theta, const SelectorSpace& space,
                               const Eigen::MatrixXd& logvol_path,
                               const Eigen::MatrixXd& returns) {
    const int T = static_cast<int>(returns.rows());
    const ObsDensityEvaluator obs(theta, space);
    Eigen::MatrixXd ld(T, space.size());
    Eigen::VectorXd row(space.size());
    for (int t = 0; t < T; ++t) {
        obs.log_density_all(logvol_path.row(t).transpose(), returns.row(t).transpose(), row);
        ld.row(t) = row.transpose();
    }
    return ld;
}

}  // namespace

double hmm_likelihood_enumeration(const MslParams& theta, const SelectorSpace& space,
                                  const Eigen::MatrixXd& logvol_path,
                                  const Eigen::MatrixXd& returns) {
    const int T = static_cast<int>(returns.rows());
    const int S_K = space.size();
    if (T < 1) throw ConfigError("hmm_likelihood_enumeration: empty series");
    if (T * std::log(double(S_K)) > std::log(1e7)) {
        throw ConfigError("hmm_likelihood_enumeration: too many regime paths to enumerate");
    }
    const Eigen::MatrixXd ld = regime_logdens(theta, space, logvol_path, returns);
    const double log_unif = -std::log(double(S_K));
    const double log_stay = S_K > 1 ? std::log(theta.p) : 0.0;
    const double log_move = S_K > 1 ? std::log((1.0 - theta.p) / (S_K - 1)) : 0.0;

    std::vector<int> path(static_cast<std::size_t>(T), 0);
    std::vector<double> terms;
    for (;;) {
        double lp = log_unif + ld(0, path[0]);
        for (int t = 1; t < T; ++t) {
            lp += (path[static_cast<std::size_t>(t)] == path[static_cast<std::size_t>(t - 1)]
                       ? log_stay
                       : log_move) +
                  ld(t, path[static_cast<std::size_t>(t)]);
        }
        terms.push_back(lp);
        // odometer over regime paths
        int pos = 0;
        while (pos < T && ++path[static_cast<std::size_t>(pos)] == S_K) {
            path[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == T) break;
    }
    Eigen::Map<Eigen::VectorXd> v(terms.data(), static_cast<Eigen::Index>(terms.size()));
    return log_sum_exp(v);
}

double hmm_likelihood_forward(const MslParams& theta, const SelectorSpace& space,
                              const Eigen::MatrixXd& logvol_path,
                              const Eigen::MatrixXd& returns) {
    const int T = static_cast<int>(returns.rows());
    const int S_K = space.size();
    if (T < 1) throw ConfigError("hmm_likelihood_forward: empty series");
    const Eigen::MatrixXd ld = regime_logdens(theta, space, logvol_path, returns);
    const Eigen::MatrixXd pi = dense_kernel(theta.p, S_K);

    double log_scale = 0.0;
    Eigen::VectorXd alpha =
        (ld.row(0).transpose().array() - std::log(double(S_K))).exp().matrix();
    for (int t = 1; t < T; ++t) {
        const double m = alpha.maxCoeff();
        if (!(m > 0.0)) return kNegInf;
        alpha /= m;
        log_scale += std::log(m);
        alpha = (pi.transpose() * alpha).cwiseProduct(ld.row(t).transpose().array().exp().matrix());
    }
    const double total = alpha.sum();
    return total > 0.0 ? log_scale + std::log(total) : kNegInf;
}

void GridSpec::validate() const {
    if (nodes < 3) throw ConfigError("GridSpec: need at least 3 nodes per dimension");
    if (width_sds <= 0.0) throw ConfigError("GridSpec: width must be positive");
    if (budget <= 0.0) throw ConfigError("GridSpec: budget must be positive");
}

double GridSpec::log_path_count(int d_f, int T, int S_K) const {
    return 2.0 * d_f * T * std::log(double(nodes)) + T * std::log(double(S_K));
}

double grid_likelihood(const MslParams& theta, const SelectorSpace& space,
                       const Eigen::MatrixXd& returns, const GridSpec& grid) {
    grid.validate();
    theta.validate(/*strict_loadings=*/false);
    const int T = static_cast<int>(returns.rows());
    if (T == 0) return 0.0;
    const int S_K = space.size();
    const int dims = 2 * theta.d_f;
    // Budget on the tensor path count, with collapsed (q = 0) dimensions
    // contributing a single node each.
    double log_paths = T * std::log(double(S_K));
    for (int k = 0; k < dims; ++k) {
        if (theta.q[k] > 0.0) log_paths += T * std::log(double(grid.nodes));
    }
    if (log_paths > std::log(grid.budget)) {
        throw ConfigError("grid_likelihood: path count exceeds the configured budget");
    }

    // Per-dimension nodes, stationary weights and transition kernels. A zero
    // innovation variance collapses the dimension to the point mass at mu.
    std::vector<Eigen::VectorXd> nodes(static_cast<std::size_t>(dims));
    std::vector<Eigen::VectorXd> init_w(static_cast<std::size_t>(dims));
    std::vector<Eigen::MatrixXd> trans_w(static_cast<std::size_t>(dims));
    for (int k = 0; k < dims; ++k) {
        if (theta.q[k] == 0.0) {
            nodes[static_cast<std::size_t>(k)] = Eigen::VectorXd::Constant(1, theta.mu[k]);
            init_w[static_cast<std::size_t>(k)] = Eigen::VectorXd::Ones(1);
            trans_w[static_cast<std::size_t>(k)] = Eigen::MatrixXd::Ones(1, 1);
            continue;
        }
        const double sd0 = std::sqrt(theta.q[k] / (1.0 - theta.phi[k] * theta.phi[k]));
        const int n = grid.nodes;
        Eigen::VectorXd x(n);
        const double lo = theta.mu[k] - grid.width_sds * sd0;
        const double hi = theta.mu[k] + grid.width_sds * sd0;
        const double h = (hi - lo) / (n - 1);
        for (int j = 0; j < n; ++j) x[j] = lo + h * j;
        Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
        w[0] = w[n - 1] = 0.5 * h;

        Eigen::VectorXd iw(n);
        for (int j = 0; j < n; ++j) {
            iw[j] = w[j] * std::exp(normal_logpdf(x[j], theta.mu[k], sd0 * sd0));
        }
        Eigen::MatrixXd tw(n, n);
        for (int j = 0; j < n; ++j) {
            const double mean = theta.mu[k] + theta.phi[k] * (x[j] - theta.mu[k]);
            for (int j2 = 0; j2 < n; ++j2) {
                tw(j, j2) = w[j2] * std::exp(normal_logpdf(x[j2], mean, theta.q[k]));
            }
        }
        nodes[static_cast<std::size_t>(k)] = x;
        init_w[static_cast<std::size_t>(k)] = iw;
        trans_w[static_cast<std::size_t>(k)] = tw;
    }

    // Enumerate joint log-vol nodes.
    int n_joint = 1;
    for (int k = 0; k < dims; ++k) {
        n_joint *= static_cast<int>(nodes[static_cast<std::size_t>(k)].size());
    }
    Eigen::MatrixXd joint(n_joint, dims);
    {
        std::vector<int> idx(static_cast<std::size_t>(dims), 0);
        for (int j = 0; j < n_joint; ++j) {
            for (int k = 0; k < dims; ++k) {
                joint(j, k) = nodes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
            }
            for (int k = 0; k < dims; ++k) {
                if (++idx[static_cast<std::size_t>(k)] <
                    static_cast<int>(nodes[static_cast<std::size_t>(k)].size())) {
                    break;
                }
                idx[static_cast<std::size_t>(k)] = 0;
            }
        }
    }
    // Joint initial weights and transition kernel (products across dims).
    Eigen::VectorXd jinit = Eigen::VectorXd::Ones(n_joint);
    Eigen::MatrixXd jtrans = Eigen::MatrixXd::Ones(n_joint, n_joint);
    {
        std::vector<int> idx(static_cast<std::size_t>(dims), 0);
        std::vector<std::vector<int>> all_idx(static_cast<std::size_t>(n_joint));
        for (int j = 0; j < n_joint; ++j) {
            all_idx[static_cast<std::size_t>(j)] = idx;
            for (int k = 0; k < dims; ++k) {
                if (++idx[static_cast<std::size_t>(k)] <
                    static_cast<int>(nodes[static_cast<std::size_t>(k)].size())) {
                    break;
                }
                idx[static_cast<std::size_t>(k)] = 0;
            }
        }
        for (int j = 0; j < n_joint; ++j) {
            for (int k = 0; k < dims; ++k) {
                jinit[j] *= init_w[static_cast<std::size_t>(k)]
                                  [all_idx[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]];
            }
            for (int j2 = 0; j2 < n_joint; ++j2) {
                for (int k = 0; k < dims; ++k) {
                    jtrans(j, j2) *=
                        trans_w[static_cast<std::size_t>(k)](
                            all_idx[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)],
                            all_idx[static_cast<std::size_t>(j2)][static_cast<std::size_t>(k)]);
                }
            }
        }
    }

    const Eigen::MatrixXd pi = dense_kernel(theta.p, S_K);
    const ObsDensityEvaluator obs(theta, space);

    // alpha(j, s) over joint node x regime; scale extracted every step.
    Eigen::MatrixXd gdens(n_joint, S_K);
    Eigen::VectorXd row(S_K);
    auto fill_gdens = [&](int t) {
        for (int j = 0; j < n_joint; ++j) {
            obs.log_density_all(joint.row(j).transpose(), returns.row(t).transpose(), row);
            gdens.row(j) = row.transpose().array().exp();
        }
    };

    fill_gdens(0);
    Eigen::MatrixXd alpha =
        (jinit / double(S_K)).replicate(1, S_K).cwiseProduct(gdens);
    double log_scale = 0.0;
    for (int t = 1; t < T; ++t) {
        const double m = alpha.maxCoeff();
        if (!(m > 0.0)) return kNegInf;
        alpha /= m;
        log_scale += std::log(m);
        fill_gdens(t);
        alpha = (jtrans.transpose() * alpha * pi).cwiseProduct(gdens);
    }
    const double total = alpha.sum();
    return total > 0.0 ? log_scale + std::log(total) : kNegInf;
}

double Posterior1d::cdf_at(double x) const {
    const int n = static_cast<int>(values.size());
    if (x <= values[0]) return 0.0;
    if (x >= values[n - 1]) return 1.0;
    int lo = 0;
    int hi = n - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (values[mid] <= x ? lo : hi) = mid;
    }
    const double w = (x - values[lo]) / (values[hi] - values[lo]);
    return (1.0 - w) * cdf[lo] + w * cdf[hi];
}

Posterior1d grid_posterior_1d(const MslParams& base, const SelectorSpace& space,
                              const Eigen::MatrixXd& returns,
                              const std::function<MslParams(MslParams, double)>& with_value,
                              const std::function<double(double)>& prior_logpdf, double lo,
                              double hi, int n_points, const GridSpec& grid) {
    if (n_points < 3 || !(lo < hi)) {
        throw ConfigError("grid_posterior_1d: need an ordered interval and >= 3 points");
    }
    Posterior1d out;
    out.values.resize(n_points);
    Eigen::VectorXd log_post(n_points);
    const double h = (hi - lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        out.values[i] = lo + h * i;
        const double lp = prior_logpdf(out.values[i]);
        log_post[i] = std::isfinite(lp)
                          ? lp + grid_likelihood(with_value(base, out.values[i]), space,
                                                 returns, grid)
                          : kNegInf;
    }
    const double m = log_post.maxCoeff();
    if (!std::isfinite(m)) {
        throw NumericError("grid_posterior_1d: posterior vanished on the whole grid");
    }
    out.density = (log_post.array() - m).exp();
    // trapezoid normalization
    double z = 0.0;
    for (int i = 0; i + 1 < n_points; ++i) {
        z += 0.5 * h * (out.density[i] + out.density[i + 1]);
    }
    out.density /= z;
    out.cdf.resize(n_points);
    out.cdf[0] = 0.0;
    for (int i = 1; i < n_points; ++i) {
        out.cdf[i] = out.cdf[i - 1] + 0.5 * h * (out.density[i - 1] + out.density[i]);
    }
    out.cdf /= out.cdf[n_points - 1];
    return out;
}

}  // namespace oracles
}  // namespace msl
