#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "motionwalk/group.hpp"
#include "motionwalk/rng.hpp"

namespace motionwalk {

/// Concrete dynamical system (E, A, rho, tau): E = [0,1) with Lebesgue
/// measure, tau one of the three shipped maps, observed along the orbit of
/// a fixed starting point x0.
class DynamicalSystem {
public:
    enum class Kind { IrrationalRotation, Doubling, Identity };

    DynamicalSystem(Kind kind, double x0, double gamma = 0.0) : kind_(kind), x0_(x0), gamma_(gamma) {
        if (!(x0 >= 0.0 && x0 < 1.0)) throw std::invalid_argument("DynamicalSystem: x0 must be in [0,1)");
        if (kind == Kind::IrrationalRotation && !(gamma > 0.0 && gamma < 1.0))
            throw std::invalid_argument("DynamicalSystem: rotation gamma must be in (0,1)");
    }

    static DynamicalSystem rotation(double gamma, double x0) {
        return DynamicalSystem(Kind::IrrationalRotation, x0, gamma);
    }
    static DynamicalSystem doubling(double x0) { return DynamicalSystem(Kind::Doubling, x0); }
    static DynamicalSystem identity(double x0) { return DynamicalSystem(Kind::Identity, x0); }

    Kind kind() const { return kind_; }
    double x0() const { return x0_; }
    double gamma() const { return gamma_; }

    /// tau^i(x0). Pure in (descriptor, i); no incremental state, so orbit
    /// points can be queried in any order by any worker.
    ///
    /// IrrationalRotation evaluates frac(x0 + i*gamma) in one shot instead of
    /// accumulating i separate roundings. Doubling uses 64-bit fixed point
    /// (frac(2x) is a left shift there), which is exact until the mantissa is
    /// exhausted; past that horizon the orbit is continued as i.i.d. uniform
    /// draws from a stream seeded by x0 ("doubling-surrogate"), preserving
    /// the Lebesgue-ergodic statistics the step laws consume.
    double iterate(std::uint64_t i) const {
        switch (kind_) {
            case Kind::Identity:
                return x0_;
            case Kind::IrrationalRotation:
                return frac(x0_ + static_cast<double>(i) * gamma_);
            case Kind::Doubling: {
                if (i == 0) return x0_;
                if (i < 64) {
                    const std::uint64_t fixed = to_fixed64(x0_) << i;
                    return std::ldexp(static_cast<double>(fixed), -64);
                }
                RngStream surrogate(std::bit_cast<std::uint64_t>(x0_), 0x0D0B11A6ULL);
                return surrogate.uniform(i);
            }
        }
        return x0_;
    }

    /// Ergodicity flag for reports. Identity is never ergodic; a rotation by
    /// a (near-)rational angle of small denominator is flagged too. This is
    /// a lint on intent, not a proof: irrationality is undecidable from a
    /// float.
    bool likely_ergodic() const {
        switch (kind_) {
            case Kind::Identity:
                return false;
            case Kind::Doubling:
                return true;
            case Kind::IrrationalRotation:
                for (int q = 1; q <= 64; ++q) {
                    const double m = gamma_ * q;
                    if (std::fabs(m - std::round(m)) < 1e-12) return false;
                }
                return true;
        }
        return false;
    }

private:
    static std::uint64_t to_fixed64(double x) {
        // x in [0,1) has at most 53 mantissa bits, so x * 2^64 is an exactly
        // representable integer below 2^64.
        return static_cast<std::uint64_t>(std::ldexp(x, 64));
    }

    Kind kind_;
    double x0_;
    double gamma_;
};

/// Profile function E -> [0, B]: the h_j / f / f_k modulators of the step
/// laws. Range violations are configuration errors caught at construction.
class Profile {
public:
    enum class Kind { Constant, AffineCosine, Indicator };

    static Profile constant(double c, double range_bound) {
        Profile p(Kind::Constant, range_bound);
        p.c_ = c;
        if (!(c >= 0.0 && c <= range_bound))
            throw std::invalid_argument("Profile: constant value outside [0,B]");
        return p;
    }

    /// x -> mean + amplitude * cos(2*pi*x); requires mean-|amplitude| >= 0
    /// and mean+|amplitude| <= B.
    static Profile affine_cosine(double mean, double amplitude, double range_bound) {
        Profile p(Kind::AffineCosine, range_bound);
        p.a_ = mean;
        p.b_ = amplitude;
        if (!(mean - std::fabs(amplitude) >= 0.0 && mean + std::fabs(amplitude) <= range_bound))
            throw std::invalid_argument("Profile: affine cosine range exits [0,B]");
        return p;
    }

    /// x -> B on [0, threshold), 0 elsewhere.
    static Profile indicator(double threshold, double range_bound) {
        Profile p(Kind::Indicator, range_bound);
        p.s_ = threshold;
        if (!(threshold >= 0.0 && threshold <= 1.0))
            throw std::invalid_argument("Profile: indicator threshold outside [0,1]");
        return p;
    }

    Kind kind() const { return kind_; }
    double range_bound() const { return range_bound_; }

    double eval(double x) const {
        double v = 0.0;
        switch (kind_) {
            case Kind::Constant:
                return c_;
            case Kind::AffineCosine:
                v = a_ + b_ * std::cos(two_pi * x);
                break;
            case Kind::Indicator:
                return x < s_ ? range_bound_ : 0.0;
        }
        // Valid construction keeps v in [0,B] mathematically; anything beyond
        // one rounding of slack is a bug, not noise.
        if (v < -1e-12 || v > range_bound_ + 1e-12)
            throw std::logic_error("Profile::eval: value escaped [0,B]");
        return std::min(std::max(v, 0.0), range_bound_);
    }

    /// Closed-form integral against Lebesgue measure on [0,1).
    double mean() const {
        switch (kind_) {
            case Kind::Constant:
                return c_;
            case Kind::AffineCosine:
                return a_;
            case Kind::Indicator:
                return range_bound_ * s_;
        }
        return 0.0;
    }

    bool is_indicator() const { return kind_ == Kind::Indicator; }

private:
    Profile(Kind kind, double range_bound) : kind_(kind), range_bound_(range_bound) {
        if (!(range_bound > 0.0)) throw std::invalid_argument("Profile: range bound must be positive");
    }

    Kind kind_;
    double range_bound_;
    double c_ = 0.0;
    double a_ = 0.0;
    double b_ = 0.0;
    double s_ = 0.0;
};

/// Partial-sum deviations D_m = |sum_{i=1..m} (p(tau^i x) - int p drho)| for
/// m = 1..n. Growth of D_m against sqrt(m) and sqrt(m)/log(m) is what the
/// class-membership diagnostics look at; this only supplies the raw series.
inline std::vector<double> birkhoff_deviation(const Profile& p, const DynamicalSystem& ds,
                                              std::size_t n) {
    const double mean = p.mean();
    std::vector<double> out(n);
    double running = 0.0;
    for (std::size_t m = 1; m <= n; ++m) {
        running += p.eval(ds.iterate(m)) - mean;
        out[m - 1] = std::fabs(running);
    }
    return out;
}

/// Birkhoff average (1/n) sum_{i=1..n} p(tau^i x). For ergodic tau this
/// estimates int p drho = E(p | invariant sigma-field); for the identity map
/// it returns p(x0), which is that conditional expectation evaluated at x0.
inline double ergodic_mean(const Profile& p, const DynamicalSystem& ds, std::size_t n) {
    if (n == 0) throw std::invalid_argument("ergodic_mean: n must be >= 1");
    // Every term of a constant profile is c; summing would only add rounding.
    if (p.kind() == Profile::Kind::Constant) return p.eval(0.0);
    double sum = 0.0;
    for (std::size_t i = 1; i <= n; ++i) sum += p.eval(ds.iterate(i));
    return sum / static_cast<double>(n);
}

}  // namespace motionwalk
