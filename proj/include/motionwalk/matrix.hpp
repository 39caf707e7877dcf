#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace motionwalk {

/// Minimal dense square matrix, row-major. Dimensions here are tiny
/// (the ambient dimension d), so no linear-algebra library is pulled in.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static SquareMatrix identity(std::size_t n) {
        SquareMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t dim() const { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    const std::vector<double>& data() const { return a_; }

    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != n_) throw std::invalid_argument("SquareMatrix::apply: dimension mismatch");
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    SquareMatrix multiply(const SquareMatrix& other) const {
        if (other.n_ != n_) throw std::invalid_argument("SquareMatrix::multiply: dimension mismatch");
        SquareMatrix out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = 0; k < n_; ++k) {
                const double aik = (*this)(i, k);
                for (std::size_t j = 0; j < n_; ++j) out(i, j) += aik * other(k, j);
            }
        return out;
    }

    /// Determinant by partial-pivot Gaussian elimination.
    double det() const {
        SquareMatrix m(*this);
        double sign = 1.0;
        for (std::size_t col = 0; col < n_; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < n_; ++r)
                if (std::fabs(m(r, col)) > std::fabs(m(piv, col))) piv = r;
            if (m(piv, col) == 0.0) return 0.0;
            if (piv != col) {
                for (std::size_t j = 0; j < n_; ++j) std::swap(m(piv, j), m(col, j));
                sign = -sign;
            }
            for (std::size_t r = col + 1; r < n_; ++r) {
                const double f = m(r, col) / m(col, col);
                for (std::size_t j = col; j < n_; ++j) m(r, j) -= f * m(col, j);
            }
        }
        double d = sign;
        for (std::size_t i = 0; i < n_; ++i) d *= m(i, i);
        return d;
    }

    double max_abs_offdiag() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (i != j) m = std::max(m, std::fabs((*this)(i, j)));
        return m;
    }

    double diagonal_spread() const {
        double lo = (*this)(0, 0), hi = (*this)(0, 0);
        for (std::size_t i = 1; i < n_; ++i) {
            lo = std::min(lo, (*this)(i, i));
            hi = std::max(hi, (*this)(i, i));
        }
        return hi - lo;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

}  // namespace motionwalk
