#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace oae {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Sizes in this project are tiny
/// (tens of rows, a few hundred columns), so everything is a plain loop.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix identity(std::size_t n) { return identity(n, n); }
    /// Rectangular identity I_[rows x cols]: ones on the leading diagonal.
    static Matrix identity(std::size_t rows, std::size_t cols);
    static Matrix diag(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    /// Bounds-checked access.
    double at(std::size_t i, std::size_t j) const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    Vector col(std::size_t j) const;
    void set_col(std::size_t j, std::span<const double> v);

    Matrix transpose() const;
    /// Rows [r0, r0+nr) and columns [c0, c0+nc).
    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

    Matrix& operator+=(const Matrix& b);
    Matrix& operator-=(const Matrix& b);
    Matrix& operator*=(double s) noexcept;

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// Matrix product. Throws ContractError unless a.cols() == b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);

Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix hstack(const Matrix& left, const Matrix& right);

/// Elementwise product.
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Sum of squared entries, ‖A‖²_F.
double frobenius_sq(const Matrix& a) noexcept;
double trace(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Per-row sample mean.
Vector row_means(const Matrix& a);
/// Per-row sample variance with the N-1 denominator. Requires cols() >= 2.
Vector row_variances(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace oae
