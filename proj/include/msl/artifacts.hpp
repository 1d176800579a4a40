#pragma once

#include <string>
#include <vector>

#include "msl/forecast.hpp"
#include "msl/params.hpp"
#include "msl/pmmh.hpp"
#include "msl/rbpf.hpp"

namespace msl {

// CSV persistence for every tabular artifact the CLI emits. All numbers are
// written with 17 significant digits so re-reads round-trip exactly.

void write_theta(const std::string& path, const MslParams& theta);
MslParams read_theta(const std::string& path, int d_y, int d_f);

void write_chain_csv(const std::string& path, const PmmhResult& result);

struct ChainFile {
    std::vector<std::string> param_names;
    Eigen::MatrixXd draws;             // iterations x d
    std::vector<int> accepted;
    std::vector<double> avg_loglik;
};
ChainFile read_chain_csv(const std::string& path);

// Summary rows recomputed from a persisted chain (no ChainState rebuild).
std::vector<SummaryRow> summarize_chain_file(const ChainFile& file, int burn_in);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

void write_trace_csv(const std::string& path, const FilterOutput& output);

void write_backtest_weeks_csv(const std::string& path, const BacktestReport& report);
void write_backtest_weights_csv(const std::string& path, const BacktestReport& report,
                                const std::vector<std::string>& assets);

void write_latent_truth_csv(const std::string& path, const LatentPath& truth);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace msl
