#include "msl/selector_space.hpp"

#include <sstream>
#include <stdexcept>

#include "msl/errors.hpp"

namespace msl {

namespace {

void enumerate_rec(int d_y, int K, int pos, int ones, std::uint64_t mask,
                   std::vector<std::uint64_t>& out) {
    if (pos == d_y) {
        out.push_back(mask);
        return;
    }
    // 0 before 1 at each position keeps the list in lexicographic order of
    // the diagonal strings (asset 1 first).
    enumerate_rec(d_y, K, pos + 1, ones, mask, out);
    if (ones < K) {
        enumerate_rec(d_y, K, pos + 1, ones + 1, mask | (1ULL << pos), out);
    }
}

}  // namespace

SelectorSpace enumerate_selectors(int d_y, int K) {
    if (d_y <= 0) {
        throw ConfigError("enumerate_selectors: d_y must be positive, got " +
                          std::to_string(d_y));
    }
    if (K < 0 || K >= d_y) {
        throw ConfigError("enumerate_selectors: need 0 <= K < d_y so the panic factor "
                          "stays contained; got K=" + std::to_string(K) +
                          ", d_y=" + std::to_string(d_y));
    }
    if (d_y > 62) {
        throw ConfigError("enumerate_selectors: d_y > 62 not supported");
    }
    SelectorSpace space;
    space.d_y = d_y;
    space.K = K;
    enumerate_rec(d_y, K, 0, 0, 0, space.masks);
    return space;
}

Eigen::VectorXd SelectorSpace::selector_diagonal(int regime) const {
    if (regime < 1 || regime > size()) {
        throw std::out_of_range("selector regime index " + std::to_string(regime) +
                                " outside [1," + std::to_string(size()) + "]");
    }
    Eigen::VectorXd diag(d_y);
    for (int i = 0; i < d_y; ++i) {
        diag[i] = asset_selected(regime - 1, i) ? 1.0 : 0.0;
    }
    return diag;
}

Eigen::MatrixXd SelectorSpace::selector_matrix(int regime) const {
    return selector_diagonal(regime).asDiagonal();
}

std::string SelectorSpace::to_table() const {
    std::ostringstream os;
    for (int r = 0; r < size(); ++r) {
        os << (r + 1) << ' ';
        for (int i = 0; i < d_y; ++i) {
            os << (asset_selected(r, i) ? '1' : '0');
        }
        os << '\n';
    }
    return os.str();
}

RegimeTransition::RegimeTransition(double persistence, int state_count)
    : p(persistence), S_K(state_count) {
    if (S_K < 1) {
        throw ConfigError("RegimeTransition: state count must be >= 1");
    }
    if (S_K > 1 && (!(p > 0.0) || !(p < 1.0))) {
        throw std::domain_error("regime persistence p must lie in (0,1), got " +
                                std::to_string(p));
    }
}

Eigen::VectorXd RegimeTransition::row(int from) const {
    if (from < 1 || from > S_K) {
        throw std::out_of_range("transition_row: regime index " + std::to_string(from) +
                                " outside [1," + std::to_string(S_K) + "]");
    }
    if (S_K == 1) {
        return Eigen::VectorXd::Ones(1);
    }
    Eigen::VectorXd r = Eigen::VectorXd::Constant(S_K, (1.0 - p) / (S_K - 1));
    r[from - 1] = p;
    return r;
}

Eigen::MatrixXd RegimeTransition::dense() const {
    if (S_K == 1) {
        return Eigen::MatrixXd::Ones(1, 1);
    }
    const double off = (1.0 - p) / (S_K - 1);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(S_K, S_K, off);
    m.diagonal().setConstant(p);
    return m;
}

Eigen::VectorXd RegimeTransition::apply_transpose(const Eigen::VectorXd& probs) const {
    if (S_K == 1) {
        return probs;
    }
    // Pi^T v = p v + (1-p)/(S_K-1) (1 - v) when sum(v) = 1; Pi is symmetric.
    const double off = (1.0 - p) / (S_K - 1);
    return p * probs.array() + off * (1.0 - probs.array());
}

}  // namespace msl
