#pragma once

#include <optional>

#include "orderedae/matrix.hpp"

namespace oae {

/// Thin SVD, a = u · diag(s) · vᵀ with k = min(rows, cols).
struct Svd {
    Matrix u;  ///< rows x k, orthonormal columns
    Vector s;  ///< k values, nonincreasing, nonnegative
    Matrix v;  ///< cols x k, orthonormal columns
};

/// One-sided (Hestenes) Jacobi SVD. Stops once every column pair is
/// orthogonal to 1e-12 relative, or throws NumericalError after
/// 10·max(rows, cols) sweeps.
Svd svd(const Matrix& a);

/// Solves the square system a·x = b by LU with partial pivoting.
/// Returns nullopt when a pivot falls below `pivot_tol`·max|a|.
std::optional<Vector> lu_solve(const Matrix& a, std::span<const double> b, double pivot_tol = 1e-14);

}  // namespace oae
