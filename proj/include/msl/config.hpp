#pragma once

#include <cstdint>
#include <string>

#include "msl/params.hpp"
#include "msl/returns_io.hpp"

namespace msl {

// One structured config file drives every subcommand; blocks that a
// subcommand does not use may be omitted.
struct RunConfig {
    struct Model {
        int d_y = 0;  // 0 = infer from the data file
        int d_f = 1;
        int K = 2;
    } model;

    PriorSpec prior;

    struct Simulate {
        std::string theta_file;
        int T = 200;
        std::uint64_t seed = 1;
        ReturnUnits units = ReturnUnits::Percent;
    } simulate;

    struct Pmmh {
        int iterations = 2000;
        int replicas = 2;
        int particles = 50;
        int t0 = 150;
        int t1 = 1000;
        double epsilon = 1e-8;
        double sigma0_scale = 0.01;
        std::uint64_t seed = 1;
        int burn_in = -1;  // -1 = iterations / 4
        // "moment", "prior", or a path to a theta file.
        std::string init = "moment";
    } pmmh;

    struct Filter {
        std::string theta_file;
        int particles = 100;
        std::uint64_t seed = 1;
    } filter;

    struct Backtest {
        std::string theta_file;
        double alpha = 0.05;
        int particles = 100;
        std::uint64_t seed = 1;
        bool warm_start = false;
    } backtest;

    struct Data {
        std::string returns_path;
        std::string train_end;  // last training week-end identifier
    } data;

    std::string output_dir = "out";

    int resolved_burn_in() const {
        return pmmh.burn_in >= 0 ? pmmh.burn_in : pmmh.iterations / 4;
    }
};

RunConfig load_config(const std::string& path);

// Full resolved configuration (defaults filled in), JSON text.
std::string config_echo_json(const RunConfig& config, int worker_count);

// Worker-count override from the MSLFSV_WORKERS environment variable;
// 0 = run all replicas concurrently.
int worker_count_from_env();

}  // namespace msl
