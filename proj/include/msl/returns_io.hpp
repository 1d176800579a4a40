#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace msl {

enum class ReturnUnits { Percent, Decimal };

std::string to_string(ReturnUnits units);
ReturnUnits return_units_from_string(const std::string& s);

// Weekly arithmetic returns with strictly increasing date identifiers and a
// mandatory unit declaration carried in the file header.
struct ReturnsSeries {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Eigen::MatrixXd values;  // T x d_y
    ReturnUnits units = ReturnUnits::Percent;

    int T() const { return static_cast<int>(values.rows()); }
    int d_y() const { return static_cast<int>(values.cols()); }

    // Multiplier turning raw values into decimal returns.
    double return_scale() const { return units == ReturnUnits::Percent ? 0.01 : 1.0; }

    // Row range [first, last) as a submatrix.
    Eigen::MatrixXd slice(int first, int last) const;

    // Index of the first date strictly greater than `date` (split point for
    // a train/test partition at a week-end identifier).
    int split_index(const std::string& date) const;
};

// CSV format:
//   # units: percent
//   date,AAA,BBB
//   2006-01-06,1.25,-0.31
// The "# units:" metadata line is mandatory; rows must be complete, numeric
// and strictly increasing in date. Errors carry row/column positions.
ReturnsSeries ingest_returns(const std::string& path);

void write_returns(const std::string& path, const ReturnsSeries& series);

}  // namespace msl
