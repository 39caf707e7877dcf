#pragma once

// Test-side oracles, independent of the library implementation paths they
// check: naive dense rotation matrices for the group algebra, chi-square
// machinery for samplers, and plain random element generators.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

/// Dense block-diagonal rotation matrix built directly from cos/sin.
inline Mat rotation_matrix(std::size_t d, const Vec& angle_turns) {
    Mat m(d, Vec(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) m[i][i] = 1.0;
    for (std::size_t k = 0; k < angle_turns.size(); ++k) {
        const double a = 2.0 * std::numbers::pi * angle_turns[k];
        m[2 * k][2 * k] = std::cos(a);
        m[2 * k][2 * k + 1] = -std::sin(a);
        m[2 * k + 1][2 * k] = std::sin(a);
        m[2 * k + 1][2 * k + 1] = std::cos(a);
    }
    return m;
}

inline Vec mat_apply(const Mat& m, const Vec& v) {
    Vec out(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    return out;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
    const std::size_t n = a.size();
    Mat out(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

/// Motion composition realized with matrices only:
/// (A, s)(B, t) = (AB, s + A t). Angles never touch this path.
struct MatMotion {
    Mat rot;
    Vec trans;
};

inline MatMotion mat_compose(const MatMotion& g1, const MatMotion& g2) {
    Vec t = mat_apply(g1.rot, g2.trans);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += g1.trans[i];
    return {mat_mul(g1.rot, g2.rot), t};
}

/// Chi-square statistic over observed counts vs expected probabilities;
/// cells with zero expectation must be empty and are skipped.
inline double chi_square(const std::vector<std::uint64_t>& counts, const Vec& probs,
                         std::uint64_t total, std::size_t* df_out) {
    double stat = 0.0;
    std::size_t df = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double expected = probs[k] * static_cast<double>(total);
        if (expected == 0.0) {
            if (counts[k] != 0) throw std::runtime_error("count in zero-probability cell");
            continue;
        }
        const double diff = static_cast<double>(counts[k]) - expected;
        stat += diff * diff / expected;
        ++df;
    }
    *df_out = df > 0 ? df - 1 : 0;
    return stat;
}

/// 0.999 quantiles of chi-square (significance 0.001).
inline double chi_square_crit_999(std::size_t df) {
    static const double table[] = {0.0,    10.828, 13.816, 16.266, 18.467,
                                   20.515, 22.458, 24.322, 26.124, 27.877};
    if (df < 1 || df > 9) throw std::invalid_argument("chi_square_crit_999: df out of table");
    return table[df];
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace oracle
