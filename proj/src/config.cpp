#include "msl/config.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "msl/errors.hpp"

namespace msl {

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }

    RunConfig cfg;
    try {
        if (j.contains("model")) {
            const auto& m = j.at("model");
            maybe(m, "d_y", cfg.model.d_y);
            maybe(m, "d_f", cfg.model.d_f);
            maybe(m, "K", cfg.model.K);
        }
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            maybe(p, "loadings_mean", cfg.prior.loadings_mean);
            maybe(p, "loadings_var", cfg.prior.loadings_var);
            maybe(p, "phi_lo", cfg.prior.phi_lo);
            maybe(p, "phi_hi", cfg.prior.phi_hi);
            maybe(p, "lambda_lo", cfg.prior.lambda_lo);
            maybe(p, "lambda_hi", cfg.prior.lambda_hi);
            maybe(p, "r_shape", cfg.prior.r_shape);
            maybe(p, "r_scale", cfg.prior.r_scale);
            maybe(p, "mu_mean", cfg.prior.mu_mean);
            maybe(p, "mu_var", cfg.prior.mu_var);
            maybe(p, "q_shape", cfg.prior.q_shape);
            maybe(p, "q_scale", cfg.prior.q_scale);
            maybe(p, "p_lo", cfg.prior.p_lo);
            maybe(p, "p_hi", cfg.prior.p_hi);
        }
        if (j.contains("simulate")) {
            const auto& s = j.at("simulate");
            maybe(s, "theta_file", cfg.simulate.theta_file);
            maybe(s, "T", cfg.simulate.T);
            maybe(s, "seed", cfg.simulate.seed);
            if (s.contains("units")) {
                cfg.simulate.units =
                    return_units_from_string(s.at("units").get<std::string>());
            }
        }
        if (j.contains("pmmh")) {
            const auto& p = j.at("pmmh");
            maybe(p, "iterations", cfg.pmmh.iterations);
            maybe(p, "replicas", cfg.pmmh.replicas);
            maybe(p, "particles", cfg.pmmh.particles);
            maybe(p, "t0", cfg.pmmh.t0);
            maybe(p, "t1", cfg.pmmh.t1);
            maybe(p, "epsilon", cfg.pmmh.epsilon);
            maybe(p, "sigma0_scale", cfg.pmmh.sigma0_scale);
            maybe(p, "seed", cfg.pmmh.seed);
            maybe(p, "burn_in", cfg.pmmh.burn_in);
            maybe(p, "init", cfg.pmmh.init);
        }
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            maybe(f, "theta_file", cfg.filter.theta_file);
            maybe(f, "particles", cfg.filter.particles);
            maybe(f, "seed", cfg.filter.seed);
        }
        if (j.contains("backtest")) {
            const auto& b = j.at("backtest");
            maybe(b, "theta_file", cfg.backtest.theta_file);
            maybe(b, "alpha", cfg.backtest.alpha);
            maybe(b, "particles", cfg.backtest.particles);
            maybe(b, "seed", cfg.backtest.seed);
            maybe(b, "warm_start", cfg.backtest.warm_start);
        }
        if (j.contains("data")) {
            const auto& d = j.at("data");
            maybe(d, "returns", cfg.data.returns_path);
            maybe(d, "train_end", cfg.data.train_end);
        }
        maybe(j, "output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return cfg;
}

std::string config_echo_json(const RunConfig& cfg, int worker_count) {
    json j;
    j["model"] = {{"d_y", cfg.model.d_y}, {"d_f", cfg.model.d_f}, {"K", cfg.model.K}};
    j["prior"] = {{"loadings_mean", cfg.prior.loadings_mean},
                  {"loadings_var", cfg.prior.loadings_var},
                  {"phi_lo", cfg.prior.phi_lo},
                  {"phi_hi", cfg.prior.phi_hi},
                  {"lambda_lo", cfg.prior.lambda_lo},
                  {"lambda_hi", cfg.prior.lambda_hi},
                  {"r_shape", cfg.prior.r_shape},
                  {"r_scale", cfg.prior.r_scale},
                  {"mu_mean", cfg.prior.mu_mean},
                  {"mu_var", cfg.prior.mu_var},
                  {"q_shape", cfg.prior.q_shape},
                  {"q_scale", cfg.prior.q_scale},
                  {"p_lo", cfg.prior.p_lo},
                  {"p_hi", cfg.prior.p_hi}};
    j["simulate"] = {{"theta_file", cfg.simulate.theta_file},
                     {"T", cfg.simulate.T},
                     {"seed", cfg.simulate.seed},
                     {"units", to_string(cfg.simulate.units)}};
    j["pmmh"] = {{"iterations", cfg.pmmh.iterations},
                 {"replicas", cfg.pmmh.replicas},
                 {"particles", cfg.pmmh.particles},
                 {"t0", cfg.pmmh.t0},
                 {"t1", cfg.pmmh.t1},
                 {"epsilon", cfg.pmmh.epsilon},
                 {"sigma0_scale", cfg.pmmh.sigma0_scale},
                 {"seed", cfg.pmmh.seed},
                 {"burn_in", cfg.resolved_burn_in()},
                 {"init", cfg.pmmh.init}};
    j["filter"] = {{"theta_file", cfg.filter.theta_file},
                   {"particles", cfg.filter.particles},
                   {"seed", cfg.filter.seed}};
    j["backtest"] = {{"theta_file", cfg.backtest.theta_file},
                     {"alpha", cfg.backtest.alpha},
                     {"particles", cfg.backtest.particles},
                     {"seed", cfg.backtest.seed},
                     {"warm_start", cfg.backtest.warm_start}};
    j["data"] = {{"returns", cfg.data.returns_path}, {"train_end", cfg.data.train_end}};
    j["output_dir"] = cfg.output_dir;
    j["workers"] = worker_count;
    return j.dump(2) + "\n";
}

int worker_count_from_env() {
    const char* env = std::getenv("MSLFSV_WORKERS");
    if (!env) return 0;
    int n = 0;
    try {
        n = std::stoi(env);
    } catch (const std::exception&) {
        throw ConfigError("MSLFSV_WORKERS must be an integer");
    }
    if (n < 0) {
        throw ConfigError("MSLFSV_WORKERS must be nonnegative");
    }
    return n;
}

}  // namespace msl
