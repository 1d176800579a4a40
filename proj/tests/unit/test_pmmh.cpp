#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "msl/errors.hpp"
#include "msl/model.hpp"
#include "msl/oracles.hpp"
#include "msl/pmmh.hpp"
#include "msl/rbpf.hpp"
#include "msl/rng.hpp"
#include "msl/stats.hpp"
#include "test_helpers.hpp"

using test::make_theta;

namespace {

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) {
            ++i;
        } else {
            ++j;
        }
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Acceptance probability of a random-walk chain with N(0, sigma^2 I_d) steps
// on the uniform unit box: per coordinate,
//   A1 = E_{x~U(0,1)} P(x + sigma xi in [0,1])
//      = sigma [2 z Phi(z) + 2 phi(z) - 2 phi(0) - z],  z = 1/sigma,
// and coordinates are independent under the stationary law.
double box_acceptance_rate(double sigma, int d) {
    const double z = 1.0 / sigma;
    const double a1 =
        sigma * (2.0 * z * std_normal_cdf(z) + 2.0 * std_normal_pdf(z) -
                 2.0 * std_normal_pdf(0.0) - z);
    return std::pow(a1, d);
}

}  // namespace

TEST_SUITE("pmmh") {

TEST_CASE("transform round trip and jacobian") {
    const msl::PriorSpec prior;
    const msl::ParamTransform transform(3, 1, prior);
    const auto theta = test::random_theta(3, 1, 99);
    const Eigen::VectorXd z = transform.to_unconstrained(theta);
    const auto back = transform.to_natural(z);
    CHECK((back.B - theta.B).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.R - theta.R).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.mu - theta.mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.phi - theta.phi).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.q - theta.q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(back.p - theta.p) < 1e-12);
    CHECK(std::isfinite(transform.log_jacobian(z)));

    // the bijection is coordinatewise, so log|J| is the sum of the log
    // derivatives; check against central differences
    double fd_sum = 0.0;
    for (int k = 0; k < transform.dim(); ++k) {
        const double h = 1e-6;
        Eigen::VectorXd zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        const double deriv = (transform.to_natural(zp).to_named()[static_cast<std::size_t>(k)].second -
                              transform.to_natural(zm).to_named()[static_cast<std::size_t>(k)].second) /
                             (2.0 * h);
        fd_sum += std::log(std::abs(deriv));
    }
    CHECK(transform.log_jacobian(z) == doctest::Approx(fd_sum).epsilon(1e-6));

    // values outside the open supports are rejected
    auto bad = theta;
    bad.phi[0] = prior.phi_hi;
    CHECK_THROWS_AS(transform.to_unconstrained(bad), msl::ConfigError);
}

TEST_CASE("adapt_covariance schedule") {
    msl::AdaptSchedule schedule;
    schedule.t0 = 10;
    schedule.t1 = 30;
    schedule.sigma0 = 0.5 * Eigen::MatrixXd::Identity(3, 3);

    msl::RunningCovariance cov(3);
    msl::SplitMix64 rng(8);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::vector<Eigen::VectorXd> history;
    for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd z(3);
        for (int k = 0; k < 3; ++k) z[k] = stdnorm(rng);
        history.push_back(z);
        cov.push(z);
    }

    // i <= t0 keeps sigma0 exactly
    CHECK(msl::adapt_covariance(cov, schedule, 10) == schedule.sigma0);
    CHECK(msl::adapt_covariance(cov, schedule, 1) == schedule.sigma0);

    // beyond t0: (2.4^2/d)(S + eps I) with S the batch sample covariance
    const Eigen::MatrixXd got = msl::adapt_covariance(cov, schedule, 11);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    for (const auto& z : history) mean += z;
    mean /= history.size();
    Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& z : history) batch += (z - mean) * (z - mean).transpose();
    batch /= history.size() - 1;
    const Eigen::MatrixXd want =
        (2.4 * 2.4 / 3.0) * (batch + schedule.epsilon * Eigen::MatrixXd::Identity(3, 3));
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("single-iteration chain returns the initial state") {
    const auto theta = make_theta(2);
    const auto space = msl::enumerate_selectors(2, 1);
    const auto sim = msl::simulate(theta, space, 5, 2);
    msl::PmmhConfig config;
    config.n_iters = 1;
    config.n_replicas = 2;
    config.n_particles = 10;
    config.seed = 14;
    const auto result = msl::pmmh_run(sim.returns, msl::PriorSpec{}, theta, space, config);
    REQUIRE(result.chain.size() == 1);
    CHECK(result.chain[0].theta.B == theta.B);
    CHECK(result.chain[0].accepted);
    const double direct = msl::averaged_loglik(theta, space, sim.returns, 2, 10,
                                               msl::mix_seed(14, msl::mix_seed(0xC1, 1)));
    CHECK(result.chain[0].avg_loglik == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("flat target on the unit box reproduces the closed-form acceptance rate") {
    const int d = 2;
    const double sigma = 0.3;
    const int n_iters = 30000;
    msl::MhTarget target;
    target.log_prior_jac = [](const Eigen::VectorXd& z) {
        for (int k = 0; k < z.size(); ++k) {
            if (z[k] < 0.0 || z[k] > 1.0) return msl::kNegInf;
        }
        return 0.0;
    };
    target.log_lik = [](const Eigen::VectorXd&, std::uint64_t) { return 0.0; };
    msl::AdaptSchedule schedule;
    schedule.t0 = n_iters + 1;  // adaptation never starts
    schedule.t1 = n_iters + 2;
    schedule.sigma0 = sigma * sigma * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd z0 = Eigen::VectorXd::Constant(d, 0.5);
    const auto result = msl::adaptive_mh_run(target, z0, n_iters, schedule, 123);

    const double rate = double(result.n_accepted) / (n_iters - 1);
    const double want = box_acceptance_rate(sigma, d);
    CHECK(rate == doctest::Approx(want).epsilon(0.05));

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : result.chain) mean += s.z;
    mean /= result.chain.size();
    for (int k = 0; k < d; ++k) {
        CHECK(mean[k] == doctest::Approx(0.5).epsilon(0.06));
    }
}

TEST_CASE("constant likelihood recovers the prior marginals") {
    // light-tailed hyperparameters so the chain mixes at desk scale
    msl::PriorSpec prior;
    prior.r_shape = 3.0;
    prior.r_scale = 2.0;
    prior.q_shape = 3.0;
    prior.q_scale = 2.0;
    const int d_y = 2, d_f = 1;
    const msl::ParamTransform transform(d_y, d_f, prior);

    msl::MhTarget target;
    target.log_prior_jac = [&](const Eigen::VectorXd& z) {
        const auto theta = transform.to_natural(z);
        const double lp = msl::log_prior(theta, prior);
        return std::isfinite(lp) ? lp + transform.log_jacobian(z) : msl::kNegInf;
    };
    target.log_lik = [](const Eigen::VectorXd&, std::uint64_t) { return 0.0; };

    msl::AdaptSchedule schedule;
    schedule.t0 = 200;
    schedule.t1 = 3000;
    schedule.sigma0 = 0.05 * Eigen::MatrixXd::Identity(transform.dim(), transform.dim());

    auto init = make_theta(d_y);
    init.R.setConstant(0.7);
    init.q.setConstant(0.7);
    const auto result = msl::adaptive_mh_run(target, transform.to_unconstrained(init), 150000,
                                             schedule, 2024);

    const int n_prior = 50000;
    const auto names = msl::MslParams::field_names(d_y, d_f);
    for (std::size_t k = 0; k < names.size(); ++k) {
        std::vector<double> chain_vals, prior_vals;
        chain_vals.reserve(result.chain.size() / 5);
        for (std::size_t i = 5000; i < result.chain.size(); i += 5) {
            chain_vals.push_back(
                transform.to_natural(result.chain[i].z).to_named()[k].second);
        }
        prior_vals.reserve(n_prior);
        for (int i = 0; i < n_prior; ++i) {
            prior_vals.push_back(
                msl::prior_draw(d_y, d_f, prior, 9000 + i).to_named()[k].second);
        }
        const double d = ks_distance(chain_vals, prior_vals);
        INFO("marginal ", names[k], " KS=", d);
        REQUIRE(d < 0.05);
    }
}

TEST_CASE("rejected iterations retain theta and the stored likelihood") {
    const auto theta = make_theta(2);
    const auto space = msl::enumerate_selectors(2, 1);
    const auto sim = msl::simulate(theta, space, 12, 7);
    msl::PmmhConfig config;
    config.n_iters = 300;
    config.n_replicas = 2;
    config.n_particles = 15;
    config.seed = 3;
    const auto result = msl::pmmh_run(sim.returns, msl::PriorSpec{}, theta, space, config);
    REQUIRE(result.chain.size() == 300);
    int n_rejected = 0;
    for (std::size_t i = 1; i < result.chain.size(); ++i) {
        if (!result.chain[i].accepted) {
            ++n_rejected;
            CHECK(result.chain[i].avg_loglik == result.chain[i - 1].avg_loglik);
            CHECK(result.chain[i].z == result.chain[i - 1].z);
        } else {
            CHECK(result.chain[i].avg_loglik != result.chain[i - 1].avg_loglik);
        }
    }
    CHECK(n_rejected > 0);  // something must get rejected on a 12-obs dataset
}

TEST_CASE("chains are bit-reproducible and independent of the worker cap") {
    const auto theta = make_theta(2);
    const auto space = msl::enumerate_selectors(2, 1);
    const auto sim = msl::simulate(theta, space, 8, 5);
    msl::PmmhConfig config;
    config.n_iters = 60;
    config.n_replicas = 3;
    config.n_particles = 10;
    config.seed = 11;
    const auto a = msl::pmmh_run(sim.returns, msl::PriorSpec{}, theta, space, config);
    const auto b = msl::pmmh_run(sim.returns, msl::PriorSpec{}, theta, space, config);
    config.max_workers = 1;  // serial execution must give identical output
    const auto c = msl::pmmh_run(sim.returns, msl::PriorSpec{}, theta, space, config);
    REQUIRE(a.chain.size() == b.chain.size());
    for (std::size_t i = 0; i < a.chain.size(); ++i) {
        REQUIRE(a.chain[i].avg_loglik == b.chain[i].avg_loglik);
        REQUIRE(a.chain[i].avg_loglik == c.chain[i].avg_loglik);
        REQUIRE(a.chain[i].z == b.chain[i].z);
        REQUIRE(a.chain[i].z == c.chain[i].z);
    }
}

TEST_CASE("replica averaging stays unbiased") {
    const auto theta = make_theta(2);
    const auto space = msl::enumerate_selectors(2, 1);
    const auto sim = msl::simulate(theta, space, 2, 613);
    msl::oracles::GridSpec grid;
    grid.nodes = 31;
    const double truth = std::exp(msl::oracles::grid_likelihood(theta, space, sim.returns, grid));

    const int reps = 1500;
    Eigen::VectorXd avg(reps), single(reps);
    for (int k = 0; k < reps; ++k) {
        avg[k] = std::exp(
            msl::averaged_loglik(theta, space, sim.returns, 4, 10, 40000 + k, 1));
        single[k] = std::exp(msl::rbpf_run(theta, space, sim.returns, 10, 80000 + k).total_loglik);
    }
    const double se_avg =
        std::sqrt((avg.array() - avg.mean()).square().sum() / (reps - 1) / reps);
    const double se_single =
        std::sqrt((single.array() - single.mean()).square().sum() / (reps - 1) / reps);
    CHECK(std::abs(avg.mean() - truth) < 4.0 * se_avg);
    CHECK(std::abs(single.mean() - truth) < 4.0 * se_single);
    // averaging reduces the estimator spread
    CHECK(se_avg < se_single);
}

TEST_CASE("summary of a constant chain is degenerate") {
    const auto theta = make_theta(2);
    std::vector<msl::ChainState> chain(100);
    for (auto& s : chain) {
        s.theta = theta;
        s.avg_loglik = -10.0;
    }
    const auto names = msl::MslParams::field_names(2, 1);
    const auto rows = msl::summarize_chain(chain, names, 10);
    for (const auto& row : rows) {
        const double scale = std::max(1.0, std::abs(row.est));
        CHECK(row.mcse <= 1e-12 * scale);
        CHECK(std::abs(row.lower95 - row.est) <= 1e-12 * scale);
        CHECK(std::abs(row.upper95 - row.est) <= 1e-12 * scale);
    }
}

TEST_CASE("batch-means MCSE on iid and AR(1) pseudo-chains") {
    msl::SplitMix64 rng(2718);
    std::normal_distribution<double> stdnorm(0.0, 1.0);

    // iid standard normal: mean within 3 mcse of zero, interval near +-1.96
    const int n = 10000;
    Eigen::VectorXd iid(n);
    for (int i = 0; i < n; ++i) iid[i] = stdnorm(rng);
    const double mcse = msl::batch_means_mcse(iid);
    CHECK(std::abs(iid.mean()) < 3.0 * mcse);
    CHECK(mcse == doctest::Approx(1.0 / std::sqrt(double(n))).epsilon(0.25));
    CHECK(msl::empirical_quantile(iid, 0.025) == doctest::Approx(-1.96).epsilon(0.05));
    CHECK(msl::empirical_quantile(iid, 0.975) == doctest::Approx(1.96).epsilon(0.05));

    // AR(1): asymptotic sd of the mean is sqrt(sigma_x^2 (1+rho)/(1-rho)/n)
    const double rho = 0.5;
    const int n2 = 200000;
    Eigen::VectorXd ar(n2);
    ar[0] = stdnorm(rng);
    for (int i = 1; i < n2; ++i) ar[i] = rho * ar[i - 1] + stdnorm(rng);
    const double sigma_x2 = 1.0 / (1.0 - rho * rho);
    const double want = std::sqrt(sigma_x2 * (1.0 + rho) / (1.0 - rho) / n2);
    CHECK(msl::batch_means_mcse(ar) == doctest::Approx(want).epsilon(0.2));
}

TEST_CASE("degenerate-model posterior matches the 1-D grid quadrature (quick)") {
    // shortened version of the acceptance criterion: lambda free, everything
    // else fixed, K=0 and q=0 make the filter deterministic (phi is inert
    // once q = 0, and must stay inside the transform's open interval)
    auto theta = make_theta(2);
    theta.q.setZero();
    theta.phi.setConstant(0.65);
    theta.lambda[0] = 1.2e-3;
    const auto space = msl::enumerate_selectors(2, 0);
    const auto sim = msl::simulate(theta, space, 30, 1001);

    msl::PriorSpec prior;

    // run the MH core on the single lambda coordinate through a scaled logit
    // (q = 0 is not representable in the full transform, and every other
    // parameter is held fixed anyway)
    const double lo = prior.lambda_lo;
    const double hi = prior.lambda_hi;
    auto to_lambda = [&](double z) { return lo + (hi - lo) / (1.0 + std::exp(-z)); };
    auto log_jac = [&](double z) {
        auto softplus = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
        return std::log(hi - lo) - softplus(z) - softplus(-z);
    };

    msl::MhTarget target;
    target.log_prior_jac = [&](const Eigen::VectorXd& z1) {
        return -std::log(hi - lo) + log_jac(z1[0]);  // uniform prior on lambda
    };
    target.log_lik = [&](const Eigen::VectorXd& z1, std::uint64_t eval_seed) {
        auto th = theta;
        th.lambda[0] = to_lambda(z1[0]);
        return msl::averaged_loglik(th, space, sim.returns, 1, 5, eval_seed, 1);
    };
    msl::AdaptSchedule schedule;
    schedule.t0 = 100;
    schedule.t1 = 800;
    schedule.sigma0 = Eigen::MatrixXd::Constant(1, 1, 0.25);
    Eigen::VectorXd z0(1);
    z0[0] = 0.0;
    const auto mh = msl::adaptive_mh_run(target, z0, 6000, schedule, 77);

    msl::oracles::GridSpec grid;
    const auto posterior = msl::oracles::grid_posterior_1d(
        theta, space, sim.returns,
        [](msl::MslParams base, double v) {
            base.lambda[0] = v;
            return base;
        },
        [](double) { return 0.0; }, lo, hi, 301, grid);

    std::vector<double> lambdas;
    for (std::size_t i = 1000; i < mh.chain.size(); ++i) {
        lambdas.push_back(to_lambda(mh.chain[i].z[0]));
    }
    std::sort(lambdas.begin(), lambdas.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double emp = double(i + 1) / lambdas.size();
        ks = std::max(ks, std::abs(emp - posterior.cdf_at(lambdas[i])));
    }
    CHECK(ks < 0.08);
}

}  // TEST_SUITE
