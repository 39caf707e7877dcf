#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "motionwalk/matrix.hpp"

namespace motionwalk {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Fractional part mapped into [0,1). frac(-0.25) == 0.75.
inline double frac(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;  // guards the rounding case frac(1-eps) -> 1.0
}

/// Rotation angle measured in turns (1 turn = 2*pi radians), kept in [0,1).
/// Addition is exact fractional-part arithmetic; radians appear only inside
/// trig evaluation.
class Angle {
public:
    Angle() = default;
    explicit Angle(double turns) : turns_(frac(turns)) {}

    double turns() const { return turns_; }
    double radians() const { return two_pi * turns_; }

    Angle operator+(Angle other) const { return Angle(turns_ + other.turns_); }
    Angle operator-() const { return turns_ == 0.0 ? Angle(0.0) : Angle(1.0 - turns_); }

    bool operator==(const Angle&) const = default;

private:
    double turns_ = 0.0;
};

/// Element of a maximal torus in SO(d): block-diagonal planar rotations,
/// one angle per 2x2 block, plus a fixed trailing axis when d is odd.
/// For d=2 this is all of SO(2).
class TorusRotation {
public:
    TorusRotation() = default;

    TorusRotation(std::size_t ambient_dim, std::vector<Angle> block_angles)
        : d_(ambient_dim), angles_(std::move(block_angles)) {
        if (d_ < 1) throw std::invalid_argument("TorusRotation: ambient_dim must be >= 1");
        if (angles_.size() != d_ / 2)
            throw std::invalid_argument("TorusRotation: expected floor(d/2) block angles");
    }

    static TorusRotation identity(std::size_t ambient_dim) {
        return TorusRotation(ambient_dim, std::vector<Angle>(ambient_dim / 2));
    }

    /// SO(2) element: single planar rotation.
    static TorusRotation so2(Angle a) { return TorusRotation(2, {a}); }

    std::size_t ambient_dim() const { return d_; }
    std::size_t block_count() const { return angles_.size(); }
    const std::vector<Angle>& block_angles() const { return angles_; }
    Angle block_angle(std::size_t k) const { return angles_[k]; }

    bool is_identity() const {
        for (const Angle& a : angles_)
            if (a.turns() != 0.0) return false;
        return true;
    }

    TorusRotation compose(const TorusRotation& other) const {
        if (other.d_ != d_) throw std::invalid_argument("TorusRotation::compose: dimension mismatch");
        std::vector<Angle> out(angles_.size());
        for (std::size_t k = 0; k < angles_.size(); ++k) out[k] = angles_[k] + other.angles_[k];
        return TorusRotation(d_, std::move(out));
    }

    TorusRotation inverse() const {
        std::vector<Angle> out(angles_.size());
        for (std::size_t k = 0; k < angles_.size(); ++k) out[k] = -angles_[k];
        return TorusRotation(d_, std::move(out));
    }

    /// Rotate a d-vector. Norm-preserving.
    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != d_) throw std::invalid_argument("TorusRotation::apply: dimension mismatch");
        std::vector<double> out(d_);
        for (std::size_t k = 0; k < angles_.size(); ++k) {
            const double c = std::cos(angles_[k].radians());
            const double s = std::sin(angles_[k].radians());
            out[2 * k] = c * v[2 * k] - s * v[2 * k + 1];
            out[2 * k + 1] = s * v[2 * k] + c * v[2 * k + 1];
        }
        if (d_ % 2 == 1) out[d_ - 1] = v[d_ - 1];
        return out;
    }

    bool operator==(const TorusRotation&) const = default;

private:
    std::size_t d_ = 2;
    std::vector<Angle> angles_{Angle(0.0)};
};

/// Character of the torus: integer index per block. The zero vector is the
/// trivial character. For SO(2) (one block) the index is the integer k of
/// the character z -> z^k.
struct Character {
    std::vector<int> indices;

    static Character so2(int k) { return Character{{k}}; }

    bool is_trivial() const {
        for (int k : indices)
            if (k != 0) return false;
        return true;
    }
};

/// chi(rot) = exp(2*pi*i * sum_k indices[k] * angle_k). Unit modulus.
inline std::complex<double> character_eval(const Character& chi, const TorusRotation& rot) {
    if (chi.indices.size() != rot.block_count())
        throw std::invalid_argument("character_eval: character/torus block count mismatch");
    double exponent_turns = 0.0;
    for (std::size_t k = 0; k < chi.indices.size(); ++k)
        exponent_turns += chi.indices[k] * rot.block_angle(k).turns();
    const double arg = two_pi * frac(exponent_turns);
    return {std::cos(arg), std::sin(arg)};
}

/// Block-diagonal orthogonal matrix realizing the torus element in SO(d).
inline SquareMatrix torus_embed(const TorusRotation& rot) {
    const std::size_t d = rot.ambient_dim();
    SquareMatrix m = SquareMatrix::identity(d);
    for (std::size_t k = 0; k < rot.block_count(); ++k) {
        const double c = std::cos(rot.block_angle(k).radians());
        const double s = std::sin(rot.block_angle(k).radians());
        m(2 * k, 2 * k) = c;
        m(2 * k, 2 * k + 1) = -s;
        m(2 * k + 1, 2 * k) = s;
        m(2 * k + 1, 2 * k + 1) = c;
    }
    return m;
}

/// One element (R, T) of the motion group K x| R^d. Translations are real
/// vectors even for lattice step laws: a rotated lattice step generally
/// leaves the lattice.
struct MotionElement {
    TorusRotation rotation;
    std::vector<double> translation;

    MotionElement(TorusRotation rot, std::vector<double> trans)
        : rotation(std::move(rot)), translation(std::move(trans)) {
        if (rotation.ambient_dim() != translation.size())
            throw std::invalid_argument("MotionElement: rotation/translation dimension mismatch");
    }

    static MotionElement identity(std::size_t d) {
        return MotionElement(TorusRotation::identity(d), std::vector<double>(d, 0.0));
    }

    std::size_t dim() const { return translation.size(); }

    /// Affine action on R^d: g.v = R(v) + T.
    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != dim()) throw std::invalid_argument("MotionElement::apply: dimension mismatch");
        std::vector<double> out = rotation.apply(v);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += translation[i];
        return out;
    }
};

/// (R1,T1)(R2,T2) = (R1 R2, T1 + R1(T2)).
inline MotionElement compose(const MotionElement& g1, const MotionElement& g2) {
    if (g1.dim() != g2.dim()) throw std::invalid_argument("compose: dimension mismatch");
    std::vector<double> t = g1.rotation.apply(g2.translation);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += g1.translation[i];
    return MotionElement(g1.rotation.compose(g2.rotation), std::move(t));
}

/// (R,T)^-1 = (R^-1, -R^-1(T)).
inline MotionElement inverse(const MotionElement& g) {
    TorusRotation rinv = g.rotation.inverse();
    std::vector<double> t = rinv.apply(g.translation);
    for (double& x : t) x = -x;
    return MotionElement(std::move(rinv), std::move(t));
}

/// Left fold of compose over the list; empty list gives the identity
/// (in dimension empty_dim, since the elements carry no dimension then).
/// The translation part of the result is T1 + R1(T2) + R1R2(T3) + ...
inline MotionElement product_chain(const std::vector<MotionElement>& elements,
                                   std::size_t empty_dim = 1) {
    if (elements.empty()) return MotionElement::identity(empty_dim);
    MotionElement acc = elements.front();
    for (std::size_t i = 1; i < elements.size(); ++i) {
        if (elements[i].dim() != acc.dim())
            throw std::invalid_argument("product_chain: dimension mismatch");
        acc = compose(acc, elements[i]);
    }
    return acc;
}

}  // namespace motionwalk
