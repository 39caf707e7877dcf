#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "motionwalk/matrix.hpp"
#include "motionwalk/step_laws.hpp"
#include "motionwalk/walk.hpp"

namespace motionwalk {

/// 3-sigma style envelope for an empirical character moment over M samples,
/// plus a fixed slack so failures indicate bugs rather than noise.
inline double character_moment_tolerance(std::uint64_t m_samples) {
    return 3.0 / std::sqrt(static_cast<double>(m_samples)) + 0.005;
}

/// Empirical Fourier coefficient (1/M) sum chi(sample).
inline std::complex<double> character_moment(const std::vector<TorusRotation>& samples,
                                             const Character& chi) {
    if (samples.size() < 100)
        throw std::invalid_argument("character_moment: need at least 100 samples");
    std::complex<double> sum = 0.0;
    for (const TorusRotation& rot : samples) sum += character_eval(chi, rot);
    return sum / static_cast<double>(samples.size());
}

/// Haar verdict on an ensemble checkpoint: every tracked non-trivial moment
/// within tolerance of 0. (Haar measure is the unique law with vanishing
/// non-trivial Fourier coefficients.)
inline bool haar_converged(const EnsembleSummary& summary, std::size_t checkpoint_index) {
    const CheckpointSummary& cs = summary.checkpoints.at(checkpoint_index);
    const double tol = character_moment_tolerance(summary.walkers);
    for (std::size_t q = 0; q < summary.characters.size(); ++q) {
        if (summary.characters[q].is_trivial()) continue;
        if (std::abs(cs.character_moments[q]) > tol) return false;
    }
    return true;
}

/// Deviation of the motion-group CLT limit from rotation invariance:
/// largest off-diagonal entry plus the spread of the diagonal.
inline double isotropy_score(const SquareMatrix& covariance) {
    return covariance.max_abs_offdiag() + covariance.diagonal_spread();
}

inline bool is_positive_definite(const SquareMatrix& a) {
    // Sylvester's criterion; fine at these dimensions.
    const std::size_t d = a.dim();
    for (std::size_t k = 1; k <= d; ++k) {
        SquareMatrix minor(k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) minor(i, j) = a(i, j);
        if (minor.det() <= 0.0) return false;
    }
    return true;
}

/// Local-limit reference value 2 / (sqrt(det A) * (4 pi n)^(d/2)) for the
/// return probability P(S_2n = 0) of the dynamic Z^d walk with CLT
/// covariance matrix A.
inline double llt_reference(std::size_t d, const SquareMatrix& a, std::uint64_t n) {
    if (a.dim() != d) throw std::invalid_argument("llt_reference: matrix dimension mismatch");
    if (n < 1) throw std::invalid_argument("llt_reference: n must be >= 1");
    if (!is_positive_definite(a))
        throw std::invalid_argument("llt_reference: covariance must be positive definite");
    const double det = a.det();
    return 2.0 / (std::sqrt(det) *
                  std::pow(4.0 * std::numbers::pi * static_cast<double>(n),
                           static_cast<double>(d) / 2.0));
}

/// Fraction of walkers sitting exactly at the origin at step n. Integer
/// equality: lattice walks keep exact integer coordinates in doubles.
inline double return_frequency(const EnsembleSummary& summary, std::uint64_t n) {
    if (!summary.lattice_valued)
        throw std::invalid_argument(
            "return_frequency: point returns are only meaningful for lattice-valued "
            "(identity-rotation) walks");
    for (const CheckpointSummary& cs : summary.checkpoints)
        if (cs.step == n) return cs.return_frequency;
    throw std::invalid_argument("return_frequency: step is not a recorded checkpoint");
}

/// v0 = (2 E(h_j | invariant sigma-field) - 1/d)_j, estimated by Birkhoff
/// averages of length n_avg (exact for constant profiles).
inline std::vector<double> compute_v0(const TranslationLaw& law, std::uint64_t n_avg) {
    const std::size_t d = law.dim();
    std::vector<double> v0(d);
    for (std::size_t j = 0; j < d; ++j)
        v0[j] = 2.0 * ergodic_mean(law.profiles()[j], law.dynamics(), n_avg) -
                1.0 / static_cast<double>(d);
    return v0;
}

/// Deterministic quantile on a copy of the values (linear interpolation
/// between order statistics).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double f = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - f) + values[lo + 1] * f;
}

struct ScaledNormQuantiles {
    std::uint64_t step = 0;
    double median = 0.0;
    double q90 = 0.0;
};

struct SllnReport {
    std::vector<ScaledNormQuantiles> per_checkpoint;
    bool median_decreasing = false;  // over the last three checkpoints
};

/// Quantiles of ||S_n / n^alpha - target|| across walkers, per checkpoint.
/// Requires per-walker positions (WalkConfig::record_positions).
inline SllnReport slln_scaled(const EnsembleSummary& summary, double alpha,
                              const std::vector<double>& target) {
    if (summary.positions.empty())
        throw std::invalid_argument("slln_scaled: ensemble was run without per-walker positions");
    const std::size_t C = summary.checkpoints.size();
    const std::size_t M = summary.walkers;
    const std::size_t d = target.size();
    SllnReport report;
    for (std::size_t c = 0; c < C; ++c) {
        const double scale = std::pow(static_cast<double>(summary.checkpoints[c].step), alpha);
        std::vector<double> norms(M);
        const std::vector<double>& rows = summary.positions[c];
        for (std::size_t w = 0; w < M; ++w) {
            double nrm2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double dev = rows[w * d + k] / scale - target[k];
                nrm2 += dev * dev;
            }
            norms[w] = std::sqrt(nrm2);
        }
        ScaledNormQuantiles qn;
        qn.step = summary.checkpoints[c].step;
        qn.median = quantile(norms, 0.5);
        qn.q90 = quantile(std::move(norms), 0.9);
        report.per_checkpoint.push_back(qn);
    }
    report.median_decreasing = true;
    const std::size_t from = C >= 3 ? C - 3 : 0;
    for (std::size_t c = from + 1; c < C; ++c)
        if (report.per_checkpoint[c].median >= report.per_checkpoint[c - 1].median)
            report.median_decreasing = false;
    if (C < 2) report.median_decreasing = false;
    return report;
}

/// Per-component medians of S_n / n^alpha across walkers at one checkpoint.
inline std::vector<double> scaled_component_medians(const EnsembleSummary& summary,
                                                    std::size_t checkpoint_index, double alpha,
                                                    std::size_t d) {
    if (summary.positions.empty())
        throw std::invalid_argument("scaled_component_medians: per-walker positions not recorded");
    const double scale =
        std::pow(static_cast<double>(summary.checkpoints.at(checkpoint_index).step), alpha);
    const std::vector<double>& rows = summary.positions[checkpoint_index];
    const std::size_t M = summary.walkers;
    std::vector<double> medians(d);
    std::vector<double> column(M);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t w = 0; w < M; ++w) column[w] = rows[w * d + k] / scale;
        medians[k] = quantile(column, 0.5);
    }
    return medians;
}

struct SummabilityReport {
    std::vector<double> partial_sums;  // s_N = sum_{n<=N} var_n / n^(2 alpha)
    double total = 0.0;
    double tail_fraction = 0.0;  // fraction of the total contributed by the last decade
    bool flattening = false;     // Cauchy-like: tail fraction below 1%
};

/// Partial sums of E||X_n - E(X_n)||^2 / n^(2 alpha). Steps have unit norm,
/// so every variance is <= 1 and for alpha > 1/2 the sums are dominated by
/// the zeta(2 alpha) series.
inline SummabilityReport summability_diagnostic(const std::vector<double>& variance_series,
                                                double alpha) {
    if (variance_series.empty())
        throw std::invalid_argument("summability_diagnostic: empty variance series");
    SummabilityReport report;
    report.partial_sums.resize(variance_series.size());
    double running = 0.0;
    for (std::size_t n = 1; n <= variance_series.size(); ++n) {
        running += variance_series[n - 1] / std::pow(static_cast<double>(n), 2.0 * alpha);
        report.partial_sums[n - 1] = running;
    }
    report.total = running;
    const std::size_t N = variance_series.size();
    if (N >= 10 && report.total > 0.0) {
        const double at_decade = report.partial_sums[N / 10 - 1];
        report.tail_fraction = (report.total - at_decade) / report.total;
        report.flattening = report.tail_fraction < 0.01;
    }
    return report;
}

/// Least-squares slope of y against x; used for the log-log return-rate fit.
inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares_slope: need matching series of length >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate abscissae");
    return sxy / sxx;
}

}  // namespace motionwalk
