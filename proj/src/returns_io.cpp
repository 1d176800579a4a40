#include "msl/returns_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msl/errors.hpp"

namespace msl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& cell, int row, int col) {
    if (cell.empty()) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": empty cell");
    }
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(value)) {
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": non-finite value");
    }
    return value;
}

}  // namespace

std::string to_string(ReturnUnits units) {
    return units == ReturnUnits::Percent ? "percent" : "decimal";
}

ReturnUnits return_units_from_string(const std::string& s) {
    if (s == "percent") return ReturnUnits::Percent;
    if (s == "decimal") return ReturnUnits::Decimal;
    throw DataError("unknown return units '" + s + "' (expected percent or decimal)");
}

Eigen::MatrixXd ReturnsSeries::slice(int first, int last) const {
    if (first < 0 || last > T() || first > last) {
        throw ConfigError("ReturnsSeries::slice: range outside the series");
    }
    return values.middleRows(first, last - first);
}

int ReturnsSeries::split_index(const std::string& date) const {
    int idx = 0;
    while (idx < T() && dates[static_cast<std::size_t>(idx)] <= date) ++idx;
    return idx;
}

ReturnsSeries ingest_returns(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open returns file '" + path + "'");
    }
    ReturnsSeries series;
    std::string line;
    int row = 0;
    bool have_units = false;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto colon = t.find(':');
            if (colon != std::string::npos) {
                const std::string key = trim(t.substr(1, colon - 1));
                const std::string value = trim(t.substr(colon + 1));
                if (key == "units") {
                    series.units = return_units_from_string(value);
                    have_units = true;
                }
            }
            continue;
        }
        auto cells = split_csv(t);
        if (!have_header) {
            if (cells.size() < 2) {
                throw DataError("row " + std::to_string(row) +
                                ": header needs a date column and at least one asset");
            }
            series.assets.assign(cells.begin() + 1, cells.end());
            for (std::size_t c = 0; c < series.assets.size(); ++c) {
                if (series.assets[c].empty()) {
                    throw DataError("row " + std::to_string(row) + ", column " +
                                    std::to_string(c + 2) + ": empty asset name");
                }
            }
            have_header = true;
            continue;
        }
        if (cells.size() != series.assets.size() + 1) {
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(series.assets.size() + 1) + " cells, found " +
                            std::to_string(cells.size()));
        }
        const std::string date = cells[0];
        if (date.empty()) {
            throw DataError("row " + std::to_string(row) + ", column 1: empty date");
        }
        if (!series.dates.empty()) {
            if (date == series.dates.back()) {
                throw DataError("row " + std::to_string(row) + ": duplicate date '" + date + "'");
            }
            if (date < series.dates.back()) {
                throw DataError("row " + std::to_string(row) + ": dates not increasing ('" +
                                date + "' after '" + series.dates.back() + "')");
            }
        }
        series.dates.push_back(date);
        std::vector<double> values(series.assets.size());
        for (std::size_t c = 0; c < series.assets.size(); ++c) {
            values[c] = parse_cell(cells[c + 1], row, static_cast<int>(c + 2));
        }
        rows.push_back(std::move(values));
    }
    if (!have_header) {
        throw DataError("returns file '" + path + "' has no header row");
    }
    if (!have_units) {
        throw DataError("returns file '" + path +
                        "' is missing the mandatory '# units: percent|decimal' line");
    }
    if (rows.empty()) {
        throw DataError("returns file '" + path + "' has no data rows");
    }
    series.values.resize(static_cast<int>(rows.size()), static_cast<int>(series.assets.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            series.values(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
        }
    }
    return series;
}

void write_returns(const std::string& path, const ReturnsSeries& series) {
    if (static_cast<int>(series.dates.size()) != series.T() ||
        static_cast<int>(series.assets.size()) != series.d_y()) {
        throw ConfigError("write_returns: inconsistent series dimensions");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    out << "# units: " << to_string(series.units) << '\n';
    out << "date";
    for (const auto& a : series.assets) out << ',' << a;
    out << '\n';
    out.precision(17);
    for (int t = 0; t < series.T(); ++t) {
        out << series.dates[static_cast<std::size_t>(t)];
        for (int c = 0; c < series.d_y(); ++c) {
            out << ',' << series.values(t, c);
        }
        out << '\n';
    }
}

}  // namespace msl
