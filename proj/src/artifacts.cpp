#include "msl/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "msl/errors.hpp"

namespace msl {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    out.precision(17);
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

double parse_double(const std::string& cell, const std::string& path, int row) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError(path + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
    }
    return v;
}

}  // namespace

void write_theta(const std::string& path, const MslParams& theta) {
    auto out = open_out(path);
    out << "param,value\n";
    for (const auto& [name, value] : theta.to_named()) {
        out << name << ',' << value << '\n';
    }
}

MslParams read_theta(const std::string& path, int d_y, int d_f) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open theta file '" + path + "'");
    }
    std::string line;
    int row = 0;
    std::vector<std::pair<std::string, double>> fields;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "param,value") continue;
        const auto cells = split_line(line);
        if (cells.size() != 2) {
            throw DataError(path + ": row " + std::to_string(row) + ": expected name,value");
        }
        fields.emplace_back(cells[0], parse_double(cells[1], path, row));
    }
    return MslParams::from_named(d_y, d_f, fields);
}

void write_chain_csv(const std::string& path, const PmmhResult& result) {
    auto out = open_out(path);
    out << "iter,accepted,avg_loglik";
    for (const auto& name : result.param_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < result.chain.size(); ++i) {
        const auto& state = result.chain[i];
        out << (i + 1) << ',' << (state.accepted ? 1 : 0) << ',' << state.avg_loglik;
        for (const auto& [name, value] : state.theta.to_named()) {
            out << ',' << value;
        }
        out << '\n';
    }
}

ChainFile read_chain_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open chain file '" + path + "'");
    }
    ChainFile file;
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("chain file '" + path + "' is empty");
    }
    const auto header = split_line(line);
    if (header.size() < 4 || header[0] != "iter" || header[1] != "accepted" ||
        header[2] != "avg_loglik") {
        throw DataError("chain file '" + path + "' has an unexpected header");
    }
    file.param_names.assign(header.begin() + 3, header.end());
    std::vector<std::vector<double>> rows;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw DataError(path + ": row " + std::to_string(row) + ": wrong cell count");
        }
        file.accepted.push_back(static_cast<int>(parse_double(cells[1], path, row)));
        file.avg_loglik.push_back(parse_double(cells[2], path, row));
        std::vector<double> draw(file.param_names.size());
        for (std::size_t k = 0; k < draw.size(); ++k) {
            draw[k] = parse_double(cells[k + 3], path, row);
        }
        rows.push_back(std::move(draw));
    }
    if (rows.empty()) {
        throw DataError("chain file '" + path + "' has no draws");
    }
    file.draws.resize(static_cast<int>(rows.size()), static_cast<int>(file.param_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            file.draws(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
        }
    }
    return file;
}

std::vector<SummaryRow> summarize_chain_file(const ChainFile& file, int burn_in) {
    const int n = static_cast<int>(file.draws.rows());
    if (burn_in < 0 || burn_in >= n) {
        throw ConfigError("summarize: burn-in must be smaller than the chain length");
    }
    const int kept = n - burn_in;
    std::vector<SummaryRow> rows(file.param_names.size());
    for (std::size_t k = 0; k < file.param_names.size(); ++k) {
        const Eigen::VectorXd series = file.draws.col(static_cast<int>(k)).tail(kept);
        rows[k].name = file.param_names[k];
        rows[k].est = series.mean();
        rows[k].mcse = batch_means_mcse(series);
        rows[k].lower95 = empirical_quantile(series, 0.025);
        rows[k].upper95 = empirical_quantile(series, 0.975);
    }
    return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << "param,est,mcse,lower95,upper95\n";
    for (const auto& row : rows) {
        out << row.name << ',' << row.est << ',' << row.mcse << ',' << row.lower95 << ','
            << row.upper95 << '\n';
    }
}

void write_trace_csv(const std::string& path, const FilterOutput& output) {
    auto out = open_out(path);
    out << "t,loglik_increment,panic_prob,ess\n";
    for (std::size_t t = 0; t < output.loglik_increments.size(); ++t) {
        out << (t + 1) << ',' << output.loglik_increments[t] << ',' << output.panic_probs[t]
            << ',' << output.ess[t] << '\n';
    }
}

void write_backtest_weeks_csv(const std::string& path, const BacktestReport& report) {
    auto out = open_out(path);
    out << "week,date,var,portfolio_return,exceedance,panic_prob,loglik_increment,"
           "strategy_wealth,equal_weight_wealth\n";
    for (std::size_t t = 0; t < report.weeks.size(); ++t) {
        const auto& w = report.weeks[t];
        out << (t + 1) << ',' << w.date << ',' << w.var << ',' << w.portfolio_return << ','
            << w.exceedance << ',' << w.panic_prob << ',' << w.loglik_increment << ','
            << w.strategy_wealth << ',' << w.equal_weight_wealth << '\n';
    }
}

void write_backtest_weights_csv(const std::string& path, const BacktestReport& report,
                                const std::vector<std::string>& assets) {
    auto out = open_out(path);
    out << "week,date";
    for (const auto& a : assets) out << ',' << a;
    out << '\n';
    for (std::size_t t = 0; t < report.weeks.size(); ++t) {
        const auto& w = report.weeks[t];
        out << (t + 1) << ',' << w.date;
        for (int c = 0; c < w.weights.size(); ++c) out << ',' << w.weights[c];
        out << '\n';
    }
}

void write_latent_truth_csv(const std::string& path, const LatentPath& truth) {
    auto out = open_out(path);
    const int d2 = static_cast<int>(truth.logvol.cols());
    out << "t,regime";
    for (int k = 0; k < d2; ++k) out << ",logvol" << (k + 1);
    for (int k = 0; k < d2; ++k) out << ",factor" << (k + 1);
    out << '\n';
    for (int t = 0; t < truth.regimes.size(); ++t) {
        out << (t + 1) << ',' << truth.regimes[t];
        for (int k = 0; k < d2; ++k) out << ',' << truth.logvol(t, k);
        for (int k = 0; k < d2; ++k) out << ',' << truth.factors(t, k);
        out << '\n';
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
}

}  // namespace msl
