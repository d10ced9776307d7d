#include "orderedae/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "orderedae/errors.hpp"
#include "orderedae/linalg.hpp"

namespace oae {

PcaModel fit_pca(const Dataset& d, std::size_t m) {
    const std::size_t n = d.num_vars();
    const std::size_t samples = d.num_samples();
    if (m < 1 || m > n) {
        throw ContractError("fit_pca: component count " + std::to_string(m) + " outside [1, " + std::to_string(n) +
                            "]");
    }
    if (samples < 2) throw ContractError("fit_pca: need at least two samples");

    PcaModel mdl;
    mdl.mean = row_means(d.x);
    // Samples as rows; zero rows pad short data so V is always n x n.
    Matrix centered(std::max(samples, n), n);
    for (std::size_t j = 0; j < samples; ++j)
        for (std::size_t i = 0; i < n; ++i) centered(j, i) = d.x(i, j) - mdl.mean[i];

    const Svd dec = svd(centered);
    mdl.components = Matrix(n, m);
    mdl.latent_variances.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(dec.v(i, k)) > std::abs(dec.v(argmax, k))) argmax = i;
        const double sign = dec.v(argmax, k) < 0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) mdl.components(i, k) = sign * dec.v(i, k);
        mdl.latent_variances[k] = dec.s[k] * dec.s[k] / static_cast<double>(samples - 1);
    }
    return mdl;
}

Matrix pca_transform(const PcaModel& mdl, const Matrix& x) {
    if (x.rows() != mdl.mean.size()) throw ContractError("pca_transform: variable count mismatch");
    Matrix c = x;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (double& v : c.row(i)) v -= mdl.mean[i];
    return matmul_tn(mdl.components, c);
}

Matrix pca_reconstruct(const PcaModel& mdl, const Matrix& y) {
    if (y.rows() != mdl.components.cols()) throw ContractError("pca_reconstruct: latent count mismatch");
    Matrix x = matmul(mdl.components, y);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (double& v : x.row(i)) v += mdl.mean[i];
    return x;
}

LinearRelation extract_linear_model(const PcaModel& mdl, double eps) {
    const std::size_t n = mdl.mean.size();
    if (mdl.components.cols() != n) throw ContractError("extract_linear_model: requires a full fit (m = n)");
    std::size_t p = n;
    while (p > 0 && mdl.latent_variances[p - 1] < eps) --p;
    return extract_linear_model_count(mdl, n - p);
}

LinearRelation extract_linear_model_count(const PcaModel& mdl, std::size_t residual_count) {
    const std::size_t n = mdl.mean.size();
    if (mdl.components.cols() != n) throw ContractError("extract_linear_model: requires a full fit (m = n)");
    if (residual_count > n) throw ContractError("extract_linear_model: more residuals than variables");
    LinearRelation rel;
    rel.residual_components = mdl.components.block(0, n - residual_count, n, residual_count);
    rel.mean = mdl.mean;
    return rel;
}

Vector linear_relation_residual(const LinearRelation& rel, std::span<const double> x) {
    if (x.size() != rel.mean.size()) throw ContractError("linear_relation_residual: dimension mismatch");
    Vector c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = x[i] - rel.mean[i];
    return matvec(rel.residual_components.transpose(), c);
}

Vector solve_linear_relation(const LinearRelation& rel, std::span<const double> x,
                             std::span<const std::size_t> unknown) {
    const std::size_t n = rel.mean.size();
    const std::size_t r = rel.num_residual();
    if (x.size() != n) throw ContractError("solve_linear_relation: dimension mismatch");
    if (unknown.size() != r || r == 0) {
        throw ContractError("solve_linear_relation: need exactly one unknown per residual component");
    }
    std::vector<bool> is_unknown(n, false);
    for (std::size_t u : unknown) {
        if (u >= n) throw ContractError("solve_linear_relation: unknown index out of range");
        is_unknown[u] = true;
    }
    // Rows k: Σ_unknown P(i,k)(x_i − μ_i) = −Σ_known P(i,k)(x_i − μ_i)
    Matrix a(r, r);
    Vector b(r, 0.0);
    for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t c = 0; c < r; ++c) a(k, c) = rel.residual_components(unknown[c], k);
        for (std::size_t i = 0; i < n; ++i)
            if (!is_unknown[i]) b[k] -= rel.residual_components(i, k) * (x[i] - rel.mean[i]);
    }
    const auto sol = lu_solve(a, b);
    if (!sol) throw NumericalError("solve_linear_relation: residual block is singular for the chosen unknowns");
    Vector out(r);
    for (std::size_t c = 0; c < r; ++c) out[c] = (*sol)[c] + rel.mean[unknown[c]];
    return out;
}

}  // namespace oae
