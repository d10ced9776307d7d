#include "orderedae/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "orderedae/errors.hpp"

namespace oae {

namespace {

std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ContractError("Matrix: data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ContractError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

double Matrix::at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
        throw ContractError("Matrix::at: index (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for " + dims(*this));
    }
    return (*this)(i, j);
}

Vector Matrix::col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_col(std::size_t j, std::span<const double> v) {
    if (v.size() != rows_) throw ContractError("Matrix::set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
        throw ContractError("Matrix::block: out of range for " + dims(*this));
    }
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
        throw ContractError("Matrix::set_block: out of range for " + dims(*this));
    }
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Matrix& Matrix::operator+=(const Matrix& b) {
    require_same_shape(*this, b, "operator+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += b.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& b) {
    require_same_shape(*this, b, "operator-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= b.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (auto& v : data_) v *= s;
    return *this;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ContractError("matmul: inner dimensions differ, " + dims(a) + " * " + dims(b));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ContractError("matmul_tn: row counts differ, " + dims(a) + " vs " + dims(b));
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ak = a.row(k);
        auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ContractError("matmul_nt: column counts differ, " + dims(a) + " vs " + dims(b));
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(a.row(i), b.row(j));
    return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw ContractError("matvec: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) throw ContractError("vstack: column counts differ");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.set_block(0, 0, top);
    out.set_block(top.rows(), 0, bottom);
    return out;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) throw ContractError("hstack: row counts differ");
    Matrix out(left.rows(), left.cols() + right.cols());
    out.set_block(0, 0, left);
    out.set_block(0, left.cols(), right);
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t k = 0; k < cd.size(); ++k) cd[k] *= bd[k];
    return c;
}

double frobenius_sq(const Matrix& a) noexcept {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

double trace(const Matrix& a) {
    if (a.rows() != a.cols()) throw ContractError("trace: matrix is not square");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
    return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

Vector row_means(const Matrix& a) {
    if (a.cols() == 0) throw ContractError("row_means: no columns");
    Vector mu(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row(i)) s += v;
        mu[i] = s / static_cast<double>(a.cols());
    }
    return mu;
}

Vector row_variances(const Matrix& a) {
    if (a.cols() < 2) throw ContractError("row_variances: need at least two samples");
    const Vector mu = row_means(a);
    Vector var(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row(i)) s += (v - mu[i]) * (v - mu[i]);
        var[i] = s / static_cast<double>(a.cols() - 1);
    }
    return var;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace oae
