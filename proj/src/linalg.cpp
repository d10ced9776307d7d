#include "orderedae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "orderedae/errors.hpp"

namespace oae {

namespace {

constexpr double kJacobiTol = 1e-12;

// Fills the columns of u whose singular value was zero with unit vectors
// orthogonal to everything already present (modified Gram-Schmidt against
// the standard basis).
void complete_orthonormal(Matrix& u, const std::vector<bool>& filled) {
    const std::size_t r = u.rows();
    std::size_t basis = 0;
    for (std::size_t j = 0; j < u.cols(); ++j) {
        if (filled[j]) continue;
        for (; basis < r; ++basis) {
            Vector cand(r, 0.0);
            cand[basis] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < u.cols(); ++k) {
                    if (k == j || (!filled[k] && k > j)) continue;
                    double proj = 0.0;
                    for (std::size_t i = 0; i < r; ++i) proj += u(i, k) * cand[i];
                    for (std::size_t i = 0; i < r; ++i) cand[i] -= proj * u(i, k);
                }
            }
            const double nrm = norm2(cand);
            if (nrm > 1e-8) {
                for (std::size_t i = 0; i < r; ++i) u(i, j) = cand[i] / nrm;
                ++basis;
                break;
            }
        }
    }
}

Svd svd_tall(const Matrix& a) {
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    Matrix w = a;
    Matrix v = Matrix::identity(c);
    const std::size_t max_sweeps = 10 * std::max(r, c);

    bool converged = c < 2;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < c; ++p) {
            for (std::size_t q = p + 1; q < c; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < r; ++i) {
                    alpha += w(i, p) * w(i, p);
                    beta += w(i, q) * w(i, q);
                    gamma += w(i, p) * w(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < r; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = cs * wp - sn * wq;
                    w(i, q) = sn * wp + cs * wq;
                }
                for (std::size_t i = 0; i < c; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sn * vq;
                    v(i, q) = sn * vp + cs * vq;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged) throw NumericalError("svd: Jacobi sweeps did not converge");

    Vector sigma(c);
    for (std::size_t j = 0; j < c; ++j) sigma[j] = norm2(w.col(j));

    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    Svd out{Matrix(r, c), Vector(c), Matrix(c, c)};
    const double smax = c > 0 ? sigma[order[0]] : 0.0;
    std::vector<bool> filled(c, false);
    for (std::size_t k = 0; k < c; ++k) {
        const std::size_t j = order[k];
        out.s[k] = sigma[j];
        for (std::size_t i = 0; i < c; ++i) out.v(i, k) = v(i, j);
        if (sigma[j] > 1e-300 && sigma[j] > smax * 1e-15) {
            for (std::size_t i = 0; i < r; ++i) out.u(i, k) = w(i, j) / sigma[j];
            filled[k] = true;
        }
    }
    complete_orthonormal(out.u, filled);
    return out;
}

}  // namespace

Svd svd(const Matrix& a) {
    if (!a.all_finite()) throw ContractError("svd: input has non-finite entries");
    if (a.rows() >= a.cols()) return svd_tall(a);
    Svd t = svd_tall(a.transpose());
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

std::optional<Vector> lu_solve(const Matrix& a, std::span<const double> b, double pivot_tol) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw ContractError("lu_solve: system is not square");
    Matrix lu = a;
    Vector x(b.begin(), b.end());
    double scale = 0.0;
    for (double v : a.data()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return std::nullopt;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
        if (std::abs(lu(piv, k)) <= pivot_tol * scale) return std::nullopt;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            std::swap(x[k], x[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = x[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= lu(k, j) * x[j];
        x[k] = s / lu(k, k);
    }
    return x;
}

}  // namespace oae
