#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "motionwalk/dynamics.hpp"
#include "motionwalk/group.hpp"
#include "motionwalk/rng.hpp"

namespace motionwalk {

/// Step-i law of the translation T_i on Z^d embedded in R^d:
///   P(T_i = +e_j) = h_j(tau^i x),  P(T_i = -e_j) = 1/d - h_j(tau^i x).
/// The profiles h_j must map into [0, 1/d] so all 2d cells are non-negative
/// and the row sums to 1.
class TranslationLaw {
public:
    TranslationLaw(std::size_t d, std::vector<Profile> profiles, DynamicalSystem ds)
        : d_(d), profiles_(std::move(profiles)), ds_(ds) {
        if (d_ < 1) throw std::invalid_argument("TranslationLaw: d must be >= 1");
        if (profiles_.size() != d_)
            throw std::invalid_argument("TranslationLaw: need one profile per coordinate");
        for (const Profile& p : profiles_)
            if (std::fabs(p.range_bound() - 1.0 / static_cast<double>(d_)) > 1e-12)
                throw std::invalid_argument("TranslationLaw: profile range bound must be 1/d");
    }

    std::size_t dim() const { return d_; }
    const std::vector<Profile>& profiles() const { return profiles_; }
    const DynamicalSystem& dynamics() const { return ds_; }

    /// P(+e_j) at step i, j = 0..d-1.
    double up_probability(std::size_t j, std::uint64_t i) const {
        return profiles_[j].eval(ds_.iterate(i));
    }

    /// E(T_i): component j equals 2 h_j(tau^i x) - 1/d.
    std::vector<double> expected_step(std::uint64_t i) const {
        const double x = ds_.iterate(i);
        std::vector<double> m(d_);
        for (std::size_t j = 0; j < d_; ++j)
            m[j] = 2.0 * profiles_[j].eval(x) - 1.0 / static_cast<double>(d_);
        return m;
    }

private:
    std::size_t d_;
    std::vector<Profile> profiles_;
    DynamicalSystem ds_;
};

struct WeightedVector {
    std::vector<double> outcome;
    double probability;
};

struct WeightedRotation {
    TorusRotation outcome;
    double probability;
};

/// The 2d-cell distribution of T_i, in the fixed order
/// +e_1, -e_1, +e_2, -e_2, ...
inline std::vector<WeightedVector> translation_distribution(const TranslationLaw& law,
                                                            std::uint64_t i) {
    const std::size_t d = law.dim();
    std::vector<WeightedVector> out;
    out.reserve(2 * d);
    for (std::size_t j = 0; j < d; ++j) {
        const double up = law.up_probability(j, i);
        std::vector<double> plus(d, 0.0), minus(d, 0.0);
        plus[j] = 1.0;
        minus[j] = -1.0;
        out.push_back({std::move(plus), up});
        out.push_back({std::move(minus), 1.0 / static_cast<double>(d) - up});
    }
    return out;
}

namespace detail {

/// Cumulative-scan draw. Zero-probability cells are unreachable (their
/// interval is empty); u >= running total due to rounding lands in the last
/// cell of positive mass.
inline std::size_t pick_cell(const std::vector<double>& probs, double u) {
    double c = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) last_positive = k;
        c += probs[k];
        if (u < c) return k;
    }
    return last_positive;
}

inline std::uint64_t translation_counter(std::uint64_t i) { return 2 * (i - 1); }
inline std::uint64_t rotation_counter(std::uint64_t i) { return 2 * (i - 1) + 1; }

}  // namespace detail

/// Draw T_i from the stream position reserved for step i.
inline std::vector<double> sample_translation(const TranslationLaw& law, std::uint64_t i,
                                              const RngStream& stream) {
    const std::size_t d = law.dim();
    const double x = law.dynamics().iterate(i);
    std::vector<double> probs(2 * d);
    for (std::size_t j = 0; j < d; ++j) {
        const double up = law.profiles()[j].eval(x);
        probs[2 * j] = up;
        probs[2 * j + 1] = 1.0 / static_cast<double>(d) - up;
    }
    const std::size_t cell = detail::pick_cell(probs, stream.uniform(detail::translation_counter(i)));
    std::vector<double> step(d, 0.0);
    step[cell / 2] = (cell % 2 == 0) ? 1.0 : -1.0;
    return step;
}

/// Rotations drawn per step: the three dynamic forms of the rotation law,
/// plus the degenerate identity law that turns the walk into the plain
/// dynamic Z^d walk.
struct So2Law {
    Angle theta;  // irrational by intent
    Profile f;    // range bound 1
};

struct MonotheticLaw {
    TorusRotation generator;  // a; the closed subgroup generated by a is K
    Profile f;                // range bound 1
};

struct TorusBasisLaw {
    std::vector<Angle> angles;     // theta_k per 2-plane, k = 1..r
    std::vector<Profile> profiles; // f_k, range bound 1/r
};

struct IdentityRotationLaw {};

class RotationLaw {
public:
    using Variant = std::variant<IdentityRotationLaw, So2Law, MonotheticLaw, TorusBasisLaw>;

    template <class Law>  // IdentityRotationLaw, So2Law, MonotheticLaw or TorusBasisLaw
    RotationLaw(std::size_t ambient_dim, Law law, DynamicalSystem ds)
        : d_(ambient_dim), law_(std::in_place_type<Law>, std::move(law)), ds_(ds) {
        validate();
        build_outcomes();
    }

    static RotationLaw identity(std::size_t ambient_dim) {
        return RotationLaw(ambient_dim, IdentityRotationLaw{},
                           DynamicalSystem::identity(0.0));
    }

    std::size_t ambient_dim() const { return d_; }
    std::size_t block_count() const { return d_ / 2; }
    const Variant& variant() const { return law_; }
    const DynamicalSystem& dynamics() const { return ds_; }
    bool is_identity_law() const { return std::holds_alternative<IdentityRotationLaw>(law_); }

    /// Fixed outcome list; only the probabilities vary with the step index.
    const std::vector<TorusRotation>& outcomes() const { return outcomes_; }

    /// Probabilities aligned with outcomes(), at step j.
    std::vector<double> probabilities(std::uint64_t j) const {
        if (is_identity_law()) return {1.0};
        const double x = ds_.iterate(j);
        if (const auto* so2 = std::get_if<So2Law>(&law_)) {
            const double f = so2->f.eval(x);
            return {f, 1.0 - f};
        }
        if (const auto* mono = std::get_if<MonotheticLaw>(&law_)) {
            const double f = mono->f.eval(x);
            return {f, 1.0 - f};
        }
        const auto& basis = std::get<TorusBasisLaw>(law_);
        const std::size_t r = basis.angles.size();
        std::vector<double> probs(2 * r);
        for (std::size_t k = 0; k < r; ++k) {
            const double fk = basis.profiles[k].eval(x);
            probs[2 * k] = fk;
            probs[2 * k + 1] = 1.0 / static_cast<double>(r) - fk;
        }
        return probs;
    }

    /// Coordinates of R^d fixed by the whole rotation group K (the closure
    /// of the subgroup the outcomes generate): the trailing axis when d is
    /// odd, plus both coordinates of any 2-plane no outcome ever rotates.
    std::vector<bool> invariant_coordinates() const {
        std::vector<bool> inv(d_, true);
        for (const TorusRotation& rot : outcomes_)
            for (std::size_t k = 0; k < rot.block_count(); ++k)
                if (rot.block_angle(k).turns() != 0.0) inv[2 * k] = inv[2 * k + 1] = false;
        return inv;
    }

    /// Orthogonal projection P_K onto the K-invariant subspace.
    SquareMatrix invariant_projection() const {
        const std::vector<bool> inv = invariant_coordinates();
        SquareMatrix p(d_);
        for (std::size_t i = 0; i < d_; ++i) p(i, i) = inv[i] ? 1.0 : 0.0;
        return p;
    }

    /// Configuration lints: angle irrationality is an intent flag, never a
    /// proof, so unfamiliar angles produce warnings rather than errors.
    std::vector<std::string> lint() const;

private:
    void validate() {
        if (is_identity_law()) return;
        if (d_ < 2) throw std::invalid_argument("RotationLaw: non-identity law needs d >= 2");
        if (const auto* so2 = std::get_if<So2Law>(&law_)) {
            if (d_ != 2) throw std::invalid_argument("RotationLaw: SO(2) law requires d = 2");
            if (std::fabs(so2->f.range_bound() - 1.0) > 1e-12)
                throw std::invalid_argument("RotationLaw: SO(2) profile range bound must be 1");
        } else if (const auto* mono = std::get_if<MonotheticLaw>(&law_)) {
            if (mono->generator.ambient_dim() != d_)
                throw std::invalid_argument("RotationLaw: generator dimension mismatch");
            if (std::fabs(mono->f.range_bound() - 1.0) > 1e-12)
                throw std::invalid_argument("RotationLaw: monothetic profile range bound must be 1");
        } else {
            const auto& basis = std::get<TorusBasisLaw>(law_);
            const std::size_t r = d_ / 2;
            if (basis.angles.size() != r)
                throw std::invalid_argument("RotationLaw: torus basis needs floor(d/2) angles");
            if (basis.profiles.size() != r)
                throw std::invalid_argument("RotationLaw: torus basis needs floor(d/2) profiles");
            for (const Profile& p : basis.profiles)
                if (std::fabs(p.range_bound() - 1.0 / static_cast<double>(r)) > 1e-12)
                    throw std::invalid_argument("RotationLaw: basis profile range bound must be 1/r");
        }
    }

    void build_outcomes() {
        const std::size_t r = d_ / 2;
        if (is_identity_law()) {
            outcomes_ = {TorusRotation::identity(d_)};
            return;
        }
        if (const auto* so2 = std::get_if<So2Law>(&law_)) {
            outcomes_ = {TorusRotation::so2(so2->theta), TorusRotation::so2(-so2->theta)};
            return;
        }
        if (const auto* mono = std::get_if<MonotheticLaw>(&law_)) {
            outcomes_ = {mono->generator, mono->generator.inverse()};
            return;
        }
        const auto& basis = std::get<TorusBasisLaw>(law_);
        outcomes_.clear();
        for (std::size_t k = 0; k < r; ++k) {
            // e_k: rotation by theta_k in the k-th 2-plane, all other blocks 0.
            std::vector<Angle> angles(r);
            angles[k] = basis.angles[k];
            TorusRotation ek(d_, angles);
            outcomes_.push_back(ek);
            outcomes_.push_back(ek.inverse());
        }
    }

    std::size_t d_;
    Variant law_;
    DynamicalSystem ds_;
    std::vector<TorusRotation> outcomes_;
};

/// The distribution of R_j: (outcome, probability) pairs in fixed order.
inline std::vector<WeightedRotation> rotation_distribution(const RotationLaw& law,
                                                           std::uint64_t j) {
    const std::vector<double> probs = law.probabilities(j);
    std::vector<WeightedRotation> out;
    out.reserve(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) out.push_back({law.outcomes()[k], probs[k]});
    return out;
}

/// Draw R_j from the stream position reserved for step j.
inline TorusRotation sample_rotation(const RotationLaw& law, std::uint64_t j,
                                     const RngStream& stream) {
    if (law.is_identity_law()) return TorusRotation::identity(law.ambient_dim());
    const std::vector<double> probs = law.probabilities(j);
    return law.outcomes()[detail::pick_cell(probs, stream.uniform(detail::rotation_counter(j)))];
}

/// Fourier transform of the step-j law at the character chi:
///   mu_j^(chi) = sum_outcomes P(outcome) * chi(outcome).
inline std::complex<double> step_fourier(const RotationLaw& law, std::uint64_t j,
                                         const Character& chi) {
    if (chi.indices.size() != law.block_count())
        throw std::invalid_argument("step_fourier: character incompatible with the law's torus");
    const std::vector<double> probs = law.probabilities(j);
    std::complex<double> sum = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
        sum += probs[k] * character_eval(chi, law.outcomes()[k]);
    return sum;
}

/// Exact Fourier transform of the law of the product R_1 R_2 ... R_n:
/// independence makes it the product of the step transforms.
inline std::complex<double> product_fourier_complex(const RotationLaw& law, std::uint64_t n,
                                                    const Character& chi) {
    std::complex<double> prod = 1.0;
    for (std::uint64_t j = 1; j <= n; ++j) prod *= step_fourier(law, j, chi);
    return prod;
}

/// prod_{j<=n} |mu_j^(chi)| in [0,1]; non-increasing in n, and equal to the
/// modulus of the complex product up to rounding.
inline double product_fourier(const RotationLaw& law, std::uint64_t n, const Character& chi) {
    double prod = 1.0;
    for (std::uint64_t j = 1; j <= n; ++j) prod *= std::abs(step_fourier(law, j, chi));
    return prod;
}

/// Expected operator E(R_1 ... R_n) on R^d, computed exactly: each 2x2
/// block is the realification of the complex number prod_j mu_j^(chi_m)
/// with chi_m the character selecting block m; the trailing odd axis is
/// fixed. Operator norm is the largest block modulus (1 on a fixed axis).
inline SquareMatrix expected_product_operator(const RotationLaw& law, std::uint64_t n) {
    const std::size_t d = law.ambient_dim();
    const std::size_t r = d / 2;
    SquareMatrix m = SquareMatrix::identity(d);
    for (std::size_t blk = 0; blk < r; ++blk) {
        Character chi{std::vector<int>(r, 0)};
        chi.indices[blk] = 1;
        const std::complex<double> z = product_fourier_complex(law, n, chi);
        m(2 * blk, 2 * blk) = z.real();
        m(2 * blk, 2 * blk + 1) = -z.imag();
        m(2 * blk + 1, 2 * blk) = z.imag();
        m(2 * blk + 1, 2 * blk + 1) = z.real();
    }
    return m;
}

/// max block modulus of E(R_1 ... R_n); the trailing fixed axis (odd d) and
/// never-rotated blocks contribute 1.
inline double expected_operator_norm(const RotationLaw& law, std::uint64_t n) {
    const std::size_t r = law.block_count();
    double norm = (law.ambient_dim() % 2 == 1) ? 1.0 : 0.0;
    if (r == 0) return 1.0;
    for (std::size_t blk = 0; blk < r; ++blk) {
        Character chi{std::vector<int>(r, 0)};
        chi.indices[blk] = 1;
        norm = std::max(norm, product_fourier(law, n, chi));
    }
    return norm;
}

/// Running average of f(tau^j x)(1 - f(tau^j x)) scaled to [0, 1/4]; the
/// minimum over blocks. A vanishing average means the law degenerates to an
/// indicator profile and the Haar limit fails.
inline double mixing_average(const RotationLaw& law, std::uint64_t n) {
    if (law.is_identity_law() || n == 0) return 0.0;
    const Profile* single = nullptr;
    if (const auto* so2 = std::get_if<So2Law>(&law.variant())) single = &so2->f;
    if (const auto* mono = std::get_if<MonotheticLaw>(&law.variant())) single = &mono->f;
    if (single != nullptr) {
        double sum = 0.0;
        for (std::uint64_t j = 1; j <= n; ++j) {
            const double f = single->eval(law.dynamics().iterate(j));
            sum += f * (1.0 - f);
        }
        return sum / static_cast<double>(n);
    }
    const auto& basis = std::get<TorusBasisLaw>(law.variant());
    const double r = static_cast<double>(basis.angles.size());
    double worst = 1.0;
    for (const Profile& fk : basis.profiles) {
        double sum = 0.0;
        for (std::uint64_t j = 1; j <= n; ++j) {
            const double f = fk.eval(law.dynamics().iterate(j));
            sum += f * (1.0 / r - f) * r * r;
        }
        worst = std::min(worst, sum / static_cast<double>(n));
    }
    return worst;
}

namespace detail {

/// Angles shipped with the presets, known irrational (and pairwise
/// independent with 1 over Q where used jointly).
inline bool known_irrational(double turns) {
    static const double table[] = {
        0.6180339887498949,   // (sqrt(5)-1)/2
        0.41421356237309515,  // sqrt(2)-1
        0.7320508075688772,   // sqrt(3)-1
        0.2360679774997896,   // sqrt(5)-2
        0.3819660112501051,   // (3-sqrt(5))/2
        0.7071067811865476,   // sqrt(2)/2
        0.14159265358979312,  // pi-3
    };
    for (double t : table)
        if (std::fabs(turns - t) < 1e-15) return true;
    return false;
}

}  // namespace detail

inline std::vector<std::string> RotationLaw::lint() const {
    std::vector<std::string> notes;
    auto check_angle = [&notes](Angle a, const std::string& what) {
        if (!detail::known_irrational(a.turns()))
            notes.push_back(what + " angle " + std::to_string(a.turns()) +
                            " is not a shipped irrational preset; density of the generated "
                            "subgroup is assumed, not verified");
    };
    if (const auto* so2 = std::get_if<So2Law>(&law_)) {
        check_angle(so2->theta, "SO(2)");
        if (so2->f.is_indicator())
            notes.push_back("SO(2) profile is an indicator: the step law is degenerate and the "
                            "product does not converge to Haar");
    } else if (const auto* mono = std::get_if<MonotheticLaw>(&law_)) {
        for (std::size_t k = 0; k < mono->generator.block_count(); ++k)
            check_angle(mono->generator.block_angle(k), "monothetic generator block " + std::to_string(k));
        if (mono->f.is_indicator()) notes.push_back("monothetic profile is an indicator (degenerate law)");
    } else if (const auto* basis = std::get_if<TorusBasisLaw>(&law_)) {
        for (std::size_t k = 0; k < basis->angles.size(); ++k)
            check_angle(basis->angles[k], "torus basis block " + std::to_string(k));
    }
    if (!is_identity_law() && !ds_.likely_ergodic() &&
        ds_.kind() != DynamicalSystem::Kind::Identity)
        notes.push_back("rotation clock is a rotation by a (near-)rational angle: flagged non-ergodic");
    return notes;
}

}  // namespace motionwalk
