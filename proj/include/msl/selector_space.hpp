#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace msl {

// Enumerated state space of the contained-panic regime chain. Regime r
// (1-based externally) selects a binary diagonal matrix whose ones mark the
// assets participating in the panic; at most K of the d_y assets may
// participate, and regime 1 is always the all-zeros selector.
struct SelectorSpace {
    int d_y = 0;
    int K = 0;
    // Lexicographically ordered diagonals; masks[r] bit i (LSB = asset 1)
    // is the (i,i) entry of the selector for 0-based regime r.
    std::vector<std::uint64_t> masks;

    int size() const { return static_cast<int>(masks.size()); }

    // Diagonal of the selector for a 1-based regime index.
    Eigen::VectorXd selector_diagonal(int regime) const;
    // Dense selector matrix; diagnostics only, hot paths use masks.
    Eigen::MatrixXd selector_matrix(int regime) const;

    bool asset_selected(int regime0, int asset) const {
        return (masks[static_cast<std::size_t>(regime0)] >> asset) & 1u;
    }

    // Text table "index  bit-string", one row per regime.
    std::string to_table() const;
};

SelectorSpace enumerate_selectors(int d_y, int K);

// Single-parameter regime transition kernel
//   Pi = p I + (1-p)/(S_K-1) (11^T - I),
// symmetric and doubly stochastic, with the discrete uniform as stationary
// distribution.
struct RegimeTransition {
    double p = 0.0;
    int S_K = 0;

    RegimeTransition(double persistence, int state_count);

    // Row of Pi for a 1-based origin regime.
    Eigen::VectorXd row(int from) const;
    Eigen::MatrixXd dense() const;

    // Pi^T v for a probability vector v (sum(v) = 1), using the rank
    // structure instead of the dense matrix.
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& probs) const;
};

inline Eigen::VectorXd transition_row(const RegimeTransition& trans, int from) {
    return trans.row(from);
}

}  // namespace msl
