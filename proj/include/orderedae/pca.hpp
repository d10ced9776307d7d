#pragma once

#include <span>
#include <string>
#include <vector>

#include "orderedae/dataset.hpp"
#include "orderedae/matrix.hpp"

namespace oae {

struct PcaModel {
    Matrix components;       ///< n x m, orthonormal columns
    Vector latent_variances;  ///< m values, nonincreasing (N-1 denominator)
    Vector mean;              ///< n values
};

/// Principal components of d.x from the SVD of the centered sample matrix.
/// Each column's largest-magnitude entry is made positive.
PcaModel fit_pca(const Dataset& d, std::size_t m);

/// y = Pᵀ(x − mean), columnwise.
Matrix pca_transform(const PcaModel& mdl, const Matrix& x);
/// x̂ = P·y + mean, columnwise.
Matrix pca_reconstruct(const PcaModel& mdl, const Matrix& y);

/// The linear model P_rᵀ(x − mean) = 0 spanned by low-variance components.
struct LinearRelation {
    Matrix residual_components;  ///< n x (n−p)
    Vector mean;
    std::vector<std::string> names;
    std::size_t num_residual() const noexcept { return residual_components.cols(); }
    /// True when no component fell under the threshold (nothing was found).
    bool empty() const noexcept { return residual_components.cols() == 0; }
};

/// Components whose latent variance is below eps. Requires a full (m = n) fit.
LinearRelation extract_linear_model(const PcaModel& mdl, double eps);
/// The trailing `residual_count` components regardless of their variance.
LinearRelation extract_linear_model_count(const PcaModel& mdl, std::size_t residual_count);

/// P_rᵀ(x − mean) evaluated at one sample.
Vector linear_relation_residual(const LinearRelation& rel, std::span<const double> x);

/// Solves the relation for the variables at `unknown` given all others
/// (entries of x at `unknown` are ignored). unknown.size() must equal the
/// residual count; throws NumericalError if that block is singular.
Vector solve_linear_relation(const LinearRelation& rel, std::span<const double> x,
                             std::span<const std::size_t> unknown);

}  // namespace oae
