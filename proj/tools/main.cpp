#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "msl/artifacts.hpp"
#include "msl/config.hpp"
#include "msl/errors.hpp"
#include "msl/forecast.hpp"
#include "msl/model.hpp"
#include "msl/pmmh.hpp"
#include "msl/rbpf.hpp"
#include "msl/returns_io.hpp"
#include "msl/rng.hpp"
#include "msl/selector_space.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_override;
};

fs::path prepare_output(const msl::RunConfig& cfg, const CommonArgs& args,
                        const std::string& command, int workers) {
    const fs::path dir = args.out_override.empty() ? fs::path(cfg.output_dir)
                                                   : fs::path(args.out_override);
    fs::create_directories(dir);
    msl::write_text_file((dir / (command + "_config_echo.json")).string(),
                         msl::config_echo_json(cfg, workers));
    return dir;
}

msl::SelectorSpace space_from(const msl::RunConfig& cfg, int d_y) {
    return msl::enumerate_selectors(d_y, cfg.model.K);
}

int resolve_d_y(const msl::RunConfig& cfg, const msl::ReturnsSeries* series) {
    if (cfg.model.d_y > 0) {
        if (series && series->d_y() != cfg.model.d_y) {
            throw msl::ConfigError("model.d_y disagrees with the data file");
        }
        return cfg.model.d_y;
    }
    if (!series) {
        throw msl::ConfigError("model.d_y must be set when no data file is given");
    }
    return series->d_y();
}

msl::ReturnsSeries load_series(const msl::RunConfig& cfg) {
    if (cfg.data.returns_path.empty()) {
        throw msl::ConfigError("data.returns is required for this command");
    }
    return msl::ingest_returns(cfg.data.returns_path);
}

// Data-driven starting point: unit loadings, mid-prior bounded blocks,
// idiosyncratic variances from the sample variances.
msl::MslParams moment_init(int d_y, int d_f, const msl::PriorSpec& prior,
                           const Eigen::MatrixXd& returns) {
    msl::MslParams theta;
    theta.d_y = d_y;
    theta.d_f = d_f;
    theta.B = Eigen::MatrixXd::Zero(d_y, d_f);
    for (int j = 0; j < d_f; ++j) {
        theta.B(j, j) = 1.0;
        for (int i = j + 1; i < d_y; ++i) theta.B(i, j) = 1.0;
    }
    const Eigen::VectorXd mean = returns.colwise().mean();
    Eigen::VectorXd var(d_y);
    for (int c = 0; c < d_y; ++c) {
        var[c] = (returns.col(c).array() - mean[c]).square().sum() /
                 std::max(1, static_cast<int>(returns.rows()) - 1);
        var[c] = std::max(var[c], 1e-8);
    }
    theta.R = 0.5 * var;
    theta.mu.resize(2 * d_f);
    theta.phi.resize(2 * d_f);
    theta.q.resize(2 * d_f);
    const double mu0 = std::log(std::max(0.5 * var.mean(), 1e-8));
    for (int k = 0; k < d_f; ++k) {
        theta.mu[k] = mu0;
        theta.mu[d_f + k] = mu0 - 0.5;
        theta.phi[k] = 0.5 * (prior.phi_lo + prior.phi_hi);
        theta.phi[d_f + k] = 0.5 * (prior.phi_lo + prior.phi_hi);
        theta.q[k] = 0.5;
        theta.q[d_f + k] = 0.5;
    }
    theta.lambda =
        Eigen::VectorXd::Constant(d_f, 0.5 * (prior.lambda_lo + prior.lambda_hi));
    theta.p = prior.p_lo + 0.9 * (prior.p_hi - prior.p_lo);
    return theta;
}

msl::MslParams resolve_init(const msl::RunConfig& cfg, int d_y,
                            const msl::SelectorSpace& space,
                            const Eigen::MatrixXd& returns, int workers) {
    const int d_f = cfg.model.d_f;
    if (cfg.pmmh.init == "moment") {
        return moment_init(d_y, d_f, cfg.prior, returns);
    }
    if (cfg.pmmh.init == "prior") {
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto theta =
                msl::prior_draw(d_y, d_f, cfg.prior, msl::mix_seed(cfg.pmmh.seed, attempt));
            try {
                const double ll = msl::averaged_loglik(theta, space, returns, 1,
                                                       cfg.pmmh.particles,
                                                       msl::mix_seed(cfg.pmmh.seed, 0x1717),
                                                       workers);
                if (std::isfinite(ll)) return theta;
            } catch (const msl::NumericError&) {
            }
        }
        throw msl::NumericError(
            "no prior draw produced a finite likelihood after 100 attempts");
    }
    return msl::read_theta(cfg.pmmh.init, d_y, d_f);
}

int run_simulate(const CommonArgs& args) {
    const auto cfg = msl::load_config(args.config_path);
    if (cfg.model.d_y <= 0) {
        throw msl::ConfigError("simulate requires model.d_y");
    }
    if (cfg.simulate.theta_file.empty()) {
        throw msl::ConfigError("simulate requires simulate.theta_file");
    }
    const int workers = msl::worker_count_from_env();
    const fs::path dir = prepare_output(cfg, args, "simulate", workers);
    const auto theta = msl::read_theta(cfg.simulate.theta_file, cfg.model.d_y, cfg.model.d_f);
    const auto space = space_from(cfg, cfg.model.d_y);
    const auto sim = msl::simulate(theta, space, cfg.simulate.T, cfg.simulate.seed);

    msl::ReturnsSeries series;
    series.units = cfg.simulate.units;
    series.values = sim.returns;
    char buf[16];
    for (int t = 0; t < cfg.simulate.T; ++t) {
        std::snprintf(buf, sizeof(buf), "w%06d", t + 1);
        series.dates.push_back(buf);
    }
    for (int c = 0; c < cfg.model.d_y; ++c) {
        series.assets.push_back("asset" + std::to_string(c + 1));
    }
    msl::write_returns((dir / "returns.csv").string(), series);
    msl::write_latent_truth_csv((dir / "truth.csv").string(), sim.truth);
    msl::write_text_file((dir / "selector_space.txt").string(), space.to_table());
    std::cout << "simulated " << cfg.simulate.T << " weeks of " << cfg.model.d_y
              << " assets into " << dir.string() << "\n";
    return 0;
}

int run_estimate(const CommonArgs& args) {
    const auto cfg = msl::load_config(args.config_path);
    const int workers = msl::worker_count_from_env();
    const fs::path dir = prepare_output(cfg, args, "estimate", workers);
    const auto series = load_series(cfg);
    const int d_y = resolve_d_y(cfg, &series);
    const int train_end =
        cfg.data.train_end.empty() ? series.T() : series.split_index(cfg.data.train_end);
    if (train_end < 2) {
        throw msl::ConfigError("training window is empty; check data.train_end");
    }
    const Eigen::MatrixXd train = series.slice(0, train_end);
    const auto space = space_from(cfg, d_y);
    const auto init = resolve_init(cfg, d_y, space, train, workers);

    msl::PmmhConfig pc;
    pc.n_iters = cfg.pmmh.iterations;
    pc.n_replicas = cfg.pmmh.replicas;
    pc.n_particles = cfg.pmmh.particles;
    pc.seed = cfg.pmmh.seed;
    pc.max_workers = workers;
    pc.schedule.t0 = cfg.pmmh.t0;
    pc.schedule.t1 = cfg.pmmh.t1;
    pc.schedule.epsilon = cfg.pmmh.epsilon;
    const msl::ParamTransform transform(d_y, cfg.model.d_f, cfg.prior);
    pc.schedule.sigma0 = cfg.pmmh.sigma0_scale *
                         Eigen::MatrixXd::Identity(transform.dim(), transform.dim());
    pc.progress = [&](int iter, int accepted) {
        if (iter % 100 == 0 || iter == pc.n_iters) {
            std::fprintf(stderr, "iter %d/%d acceptance %.3f\n", iter, pc.n_iters,
                         iter > 1 ? double(accepted) / (iter - 1) : 0.0);
        }
    };

    const auto result = msl::pmmh_run(train, cfg.prior, init, space, pc);
    msl::write_chain_csv((dir / "chain.csv").string(), result);
    const auto rows =
        msl::summarize_chain(result.chain, result.param_names, cfg.resolved_burn_in());
    msl::write_summary_csv((dir / "summary.csv").string(), rows);

    std::vector<std::pair<std::string, double>> fields;
    for (const auto& row : rows) fields.emplace_back(row.name, row.est);
    msl::write_theta((dir / "posterior_mean_theta.csv").string(),
                     msl::MslParams::from_named(d_y, cfg.model.d_f, fields));
    std::cout << "chain of " << result.chain.size() << " iterations written to "
              << (dir / "chain.csv").string() << " (acceptance "
              << double(result.n_accepted) / std::max(1, pc.n_iters - 1) << ")\n";
    return 0;
}

int run_filter(const CommonArgs& args) {
    const auto cfg = msl::load_config(args.config_path);
    if (cfg.filter.theta_file.empty()) {
        throw msl::ConfigError("filter requires filter.theta_file");
    }
    const int workers = msl::worker_count_from_env();
    const fs::path dir = prepare_output(cfg, args, "filter", workers);
    const auto series = load_series(cfg);
    const int d_y = resolve_d_y(cfg, &series);
    const auto theta = msl::read_theta(cfg.filter.theta_file, d_y, cfg.model.d_f);
    const auto space = space_from(cfg, d_y);
    const auto output = msl::rbpf_run(theta, space, series.values, cfg.filter.particles,
                                      cfg.filter.seed);
    msl::write_trace_csv((dir / "filter_trace.csv").string(), output);
    std::cout << "filtered " << series.T() << " weeks, total log-likelihood "
              << output.total_loglik << "\n";
    return 0;
}

int run_backtest(const CommonArgs& args) {
    const auto cfg = msl::load_config(args.config_path);
    if (cfg.backtest.theta_file.empty()) {
        throw msl::ConfigError("backtest requires backtest.theta_file");
    }
    const int workers = msl::worker_count_from_env();
    const fs::path dir = prepare_output(cfg, args, "backtest", workers);
    const auto series = load_series(cfg);
    const int d_y = resolve_d_y(cfg, &series);
    const auto theta = msl::read_theta(cfg.backtest.theta_file, d_y, cfg.model.d_f);
    const auto space = space_from(cfg, d_y);
    const int split =
        cfg.data.train_end.empty() ? 0 : series.split_index(cfg.data.train_end);
    if (split >= series.T()) {
        throw msl::ConfigError("no out-of-sample weeks after data.train_end");
    }

    msl::BacktestConfig bc;
    bc.n_particles = cfg.backtest.particles;
    bc.alpha = cfg.backtest.alpha;
    bc.seed = cfg.backtest.seed;
    bc.return_scale = series.return_scale();
    if (cfg.backtest.warm_start && split > 0) {
        bc.warm_start_returns = series.slice(0, split);
    }
    const std::vector<std::string> oos_dates(series.dates.begin() + split,
                                             series.dates.end());
    const auto report =
        msl::run_backtest(theta, space, series.slice(split, series.T()), oos_dates, bc);
    msl::write_backtest_weeks_csv((dir / "backtest_weeks.csv").string(), report);
    msl::write_backtest_weights_csv((dir / "backtest_weights.csv").string(), report,
                                    series.assets);
    msl::write_text_file((dir / "backtest_summary.txt").string(),
                         msl::backtest_summary_text(report));
    std::cout << msl::backtest_summary_text(report);
    return 0;
}

int run_summarize(const std::string& chain_path, int burn_in, const std::string& out) {
    const auto file = msl::read_chain_csv(chain_path);
    const int resolved_burn =
        burn_in >= 0 ? burn_in : static_cast<int>(file.draws.rows()) / 4;
    const auto rows = msl::summarize_chain_file(file, resolved_burn);
    fs::path out_path;
    if (out.empty()) {
        out_path = fs::path(chain_path).parent_path() / "summary.csv";
    } else {
        fs::create_directories(out);
        out_path = fs::path(out) / "summary.csv";
    }
    msl::write_summary_csv(out_path.string(), rows);
    std::printf("%-10s %12s %12s %12s %12s\n", "param", "est", "mcse", "lower95",
                "upper95");
    for (const auto& row : rows) {
        std::printf("%-10s %12.5f %12.5f %12.5f %12.5f\n", row.name.c_str(), row.est,
                    row.mcse, row.lower95, row.upper95);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov-switching panic-regime factor stochastic volatility toolkit"};
    app.require_subcommand(1);

    CommonArgs sim_args, est_args, fil_args, bt_args;
    std::string chain_path, summarize_out;
    int burn_in = -1;

    auto add_common = [](CLI::App* cmd, CommonArgs& args) {
        cmd->add_option("--config", args.config_path, "config file (JSON)")->required();
        cmd->add_option("--out", args.out_override, "override output_dir");
    };
    add_common(app.add_subcommand("simulate", "generate returns and latent truth"), sim_args);
    add_common(app.add_subcommand("estimate", "run the PMMH sampler"), est_args);
    add_common(app.add_subcommand("filter", "run one particle filter and emit traces"),
               fil_args);
    add_common(app.add_subcommand("backtest", "out-of-sample portfolio and VaR run"),
               bt_args);
    auto* sum_cmd = app.add_subcommand("summarize", "posterior summary from a chain file");
    sum_cmd->add_option("--chain", chain_path, "chain CSV")->required();
    sum_cmd->add_option("--burn-in", burn_in, "iterations to drop (default: quarter)");
    sum_cmd->add_option("--out", summarize_out, "output directory");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("simulate")) return run_simulate(sim_args);
        if (app.got_subcommand("estimate")) return run_estimate(est_args);
        if (app.got_subcommand("filter")) return run_filter(fil_args);
        if (app.got_subcommand("backtest")) return run_backtest(bt_args);
        if (app.got_subcommand("summarize")) {
            return run_summarize(chain_path, burn_in, summarize_out);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const msl::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const msl::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const msl::NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
