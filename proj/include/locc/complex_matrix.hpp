#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "locc/errors.hpp"

namespace locc {

using Complex = std::complex<double>;

/// Default tolerance for predicate checks; most entry points take it as a
/// parameter so callers can tighten or relax it.
inline constexpr double kDefaultTol = 1e-9;

/// Dense complex matrix in row-major order. The universal carrier for
/// states, measurement contractions and unitaries; dimensions stay small
/// (tens), so no attempt at sparsity or blocking.
class ComplexMatrix {
  public:
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Complex{0.0, 0.0}) {
        if (rows == 0 || cols == 0)
            throw DimensionError("ComplexMatrix: dimensions must be >= 1");
    }

    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (rows == 0 || cols == 0)
            throw DimensionError("ComplexMatrix: dimensions must be >= 1");
        if (data_.size() != rows * cols)
            throw DimensionError("ComplexMatrix: entry count does not match rows*cols");
        if (!is_finite())
            throw PreconditionError("ComplexMatrix: entries must be finite");
    }

    /// Row-major initializer, e.g. {{1,0},{0,1}}.
    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        if (rows_ == 0 || cols_ == 0)
            throw DimensionError("ComplexMatrix: dimensions must be >= 1");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_)
                throw DimensionError("ComplexMatrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        if (!is_finite())
            throw PreconditionError("ComplexMatrix: entries must be finite");
    }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix zero(std::size_t rows, std::size_t cols) { return ComplexMatrix(rows, cols); }

    /// Rectangular diagonal matrix with d on the main diagonal.
    static ComplexMatrix diagonal(const std::vector<double>& d, std::size_t rows, std::size_t cols) {
        ComplexMatrix m(rows, cols);
        const std::size_t k = std::min({d.size(), rows, cols});
        for (std::size_t i = 0; i < k; ++i) m(i, i) = d[i];
        return m;
    }

    static ComplexMatrix diagonal(const std::vector<double>& d) {
        return diagonal(d, d.size(), d.size());
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<Complex>& entries() const { return data_; }

    bool is_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const Complex& z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }

    ComplexMatrix transpose() const {
        ComplexMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Entrywise conjugation in the fixed basis.
    ComplexMatrix conjugate() const {
        ComplexMatrix c(rows_, cols_);
        for (std::size_t k = 0; k < data_.size(); ++k) c.data_[k] = std::conj(data_[k]);
        return c;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix a(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) a(j, i) = std::conj((*this)(i, j));
        return a;
    }

    ComplexMatrix operator*(const ComplexMatrix& rhs) const {
        if (cols_ != rhs.rows_)
            throw DimensionError("matrix product: inner dimensions differ");
        ComplexMatrix p(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < cols_; ++k) {
                const Complex a = (*this)(i, k);
                if (a == Complex{0.0, 0.0}) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) p(i, j) += a * rhs(k, j);
            }
        }
        return p;
    }

    ComplexMatrix operator+(const ComplexMatrix& rhs) const {
        check_same_shape(rhs, "matrix sum");
        ComplexMatrix s = *this;
        for (std::size_t k = 0; k < data_.size(); ++k) s.data_[k] += rhs.data_[k];
        return s;
    }

    ComplexMatrix operator-(const ComplexMatrix& rhs) const {
        check_same_shape(rhs, "matrix difference");
        ComplexMatrix s = *this;
        for (std::size_t k = 0; k < data_.size(); ++k) s.data_[k] -= rhs.data_[k];
        return s;
    }

    ComplexMatrix operator*(Complex scalar) const {
        ComplexMatrix s = *this;
        for (auto& z : s.data_) z *= scalar;
        return s;
    }

    friend ComplexMatrix operator*(Complex scalar, const ComplexMatrix& m) { return m * scalar; }

    /// Zero-pad into a (rows x cols) matrix, keeping this block at the top left.
    ComplexMatrix padded(std::size_t rows, std::size_t cols) const {
        if (rows < rows_ || cols < cols_)
            throw DimensionError("padded: target shape smaller than source");
        ComplexMatrix p(rows, cols);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) p(i, j) = (*this)(i, j);
        return p;
    }

  private:
    void check_same_shape(const ComplexMatrix& rhs, const char* what) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw DimensionError(std::string(what) + ": shapes differ");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<Complex> data_;
};

/// sqrt(Tr(m^dag m)).
inline double frobenius_norm(const ComplexMatrix& m) {
    double s = 0.0;
    for (const Complex& z : m.entries()) s += std::norm(z);
    return std::sqrt(s);
}

inline double max_abs_entry(const ComplexMatrix& m) {
    double s = 0.0;
    for (const Complex& z : m.entries()) s = std::max(s, std::abs(z));
    return s;
}

} // namespace locc
