#include "orderedae/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>

#include "orderedae/errors.hpp"
#include "orderedae/linalg.hpp"

namespace oae {

std::string_view to_string(OptimizerKind k) noexcept {
    return k == OptimizerKind::Lbfgs ? "lbfgs" : "gd";
}

OptimizerKind optimizer_from_string(std::string_view name) {
    if (name == "lbfgs") return OptimizerKind::Lbfgs;
    if (name == "gd") return OptimizerKind::GradientDescent;
    throw ContractError("unknown optimizer '" + std::string(name) + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Evaluated point along the search ray.
struct Trial {
    double alpha = 0.0;
    double phi = kInf;
    double dphi = 0.0;
    Vector x;
    Vector g;
};

class LineSearch {
public:
    LineSearch(const ObjectiveFn& f, std::span<const double> x0, std::span<const double> dir, double phi0,
               double dphi0, double c1, double c2)
        : f_(f), x0_(x0), dir_(dir), phi0_(phi0), dphi0_(dphi0), c1_(c1), c2_(c2) {}

    /// Strong-Wolfe search (bracketing + zoom with cubic interpolation).
    /// Falls back to the best Armijo point seen if the budget runs out.
    std::optional<Trial> run(double alpha_init) {
        Trial prev;
        prev.alpha = 0.0;
        prev.phi = phi0_;
        prev.dphi = dphi0_;
        double alpha = alpha_init;
        for (int i = 0; i < kMaxBracket; ++i) {
            Trial t = eval(alpha);
            if (t.phi > phi0_ + c1_ * alpha * dphi0_ || (i > 0 && t.phi >= prev.phi)) {
                return zoom(std::move(prev), std::move(t));
            }
            if (std::abs(t.dphi) <= -c2_ * dphi0_) return t;
            if (t.dphi >= 0) return zoom(std::move(t), std::move(prev));
            prev = std::move(t);
            alpha *= 2.0;
        }
        return fallback();
    }

private:
    static constexpr int kMaxBracket = 30;
    static constexpr int kMaxZoom = 30;

    Trial eval(double alpha) {
        Trial t;
        t.alpha = alpha;
        t.x.assign(x0_.begin(), x0_.end());
        axpy(alpha, dir_, t.x);
        t.g.assign(t.x.size(), 0.0);
        const double v = f_(t.x, t.g);
        t.phi = std::isfinite(v) ? v : kInf;
        t.dphi = std::isfinite(v) ? dot(t.g, dir_) : 0.0;
        if (std::isfinite(t.phi) && t.phi <= phi0_ + c1_ * alpha * dphi0_ &&
            (!best_ || t.phi < best_->phi)) {
            best_ = t;
        }
        return t;
    }

    std::optional<Trial> zoom(Trial lo, Trial hi) {
        for (int j = 0; j < kMaxZoom; ++j) {
            const double a = interpolate(lo, hi);
            Trial t = eval(a);
            if (t.phi > phi0_ + c1_ * a * dphi0_ || t.phi >= lo.phi) {
                hi = std::move(t);
            } else {
                if (std::abs(t.dphi) <= -c2_ * dphi0_) return t;
                if (t.dphi * (hi.alpha - lo.alpha) >= 0) hi = lo;
                lo = std::move(t);
            }
            if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, lo.alpha)) break;
        }
        return fallback();
    }

    // Cubic minimizer through (lo, hi), safeguarded to the interior of the bracket.
    static double interpolate(const Trial& lo, const Trial& hi) {
        const double a0 = lo.alpha, a1 = hi.alpha;
        const double lower = std::min(a0, a1), upper = std::max(a0, a1);
        const double width = upper - lower;
        double a = 0.5 * (a0 + a1);
        if (std::isfinite(hi.phi)) {
            const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.phi - hi.phi) / (a0 - a1);
            const double disc = d1 * d1 - lo.dphi * hi.dphi;
            if (disc >= 0) {
                const double d2 = std::copysign(std::sqrt(disc), a1 - a0);
                const double denom = hi.dphi - lo.dphi + 2.0 * d2;
                if (denom != 0.0) a = a1 - (a1 - a0) * (hi.dphi + d2 - d1) / denom;
            }
        }
        if (!std::isfinite(a) || a < lower + 0.1 * width || a > upper - 0.1 * width) a = 0.5 * (a0 + a1);
        return a;
    }

    std::optional<Trial> fallback() { return best_; }

    const ObjectiveFn& f_;
    std::span<const double> x0_;
    std::span<const double> dir_;
    double phi0_, dphi0_, c1_, c2_;
    std::optional<Trial> best_;
};

double evaluate_checked(const ObjectiveFn& f, std::span<const double> x, std::span<double> g) {
    const double v = f(x, g);
    if (std::isnan(v)) throw NumericalError("minimize: objective returned NaN");
    for (double gi : g)
        if (std::isnan(gi)) throw NumericalError("minimize: gradient contains NaN");
    return v;
}

OptimResult minimize_gd(const ObjectiveFn& f, Vector x, const MinimizeOptions& opts) {
    Vector g(x.size());
    OptimResult best;
    best.loss = evaluate_checked(f, x, g);
    best.params = x;
    best.grad_norm = norm2(g);
    best.history.push_back(best.loss);
    int it = 0;
    for (; it < opts.max_iter && best.grad_norm > opts.grad_tol; ++it) {
        axpy(-opts.gd_step, g, x);
        if (opts.project) opts.project(x);
        const double v = evaluate_checked(f, x, g);
        if (v <= best.loss) {
            best.loss = v;
            best.params = x;
            best.grad_norm = norm2(g);
            best.history.push_back(v);
        }
    }
    best.iterations = it;
    best.converged = best.grad_norm <= opts.grad_tol;
    return best;
}

OptimResult minimize_lbfgs(const ObjectiveFn& f, Vector x, const MinimizeOptions& opts) {
    const std::size_t n = x.size();
    Vector g(n);
    if (opts.project) opts.project(x);
    double fx = evaluate_checked(f, x, g);

    OptimResult res;
    res.history.push_back(fx);
    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;
    Vector dir(n), alpha_buf;

    int it = 0;
    double gnorm = norm2(g);
    while (it < opts.max_iter && gnorm > opts.grad_tol) {
        // Two-loop recursion.
        dir = g;
        const std::size_t k = s_hist.size();
        alpha_buf.assign(k, 0.0);
        for (std::size_t i = k; i-- > 0;) {
            alpha_buf[i] = rho_hist[i] * dot(s_hist[i], dir);
            axpy(-alpha_buf[i], y_hist[i], dir);
        }
        if (k > 0) {
            const double scale = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double& d : dir) d *= scale;
        }
        for (std::size_t i = 0; i < k; ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], dir);
            axpy(alpha_buf[i] - beta, s_hist[i], dir);
        }
        for (double& d : dir) d = -d;

        double dphi0 = dot(g, dir);
        if (!(dphi0 < 0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            dphi0 = -gnorm * gnorm;
        }
        const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

        LineSearch ls(f, x, dir, fx, dphi0, opts.c1, opts.c2);
        auto trial = ls.run(alpha0);
        if (!trial || !(trial->phi <= fx)) {
            if (!s_hist.empty()) {
                // Retry once from steepest descent before giving up.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            break;
        }

        Vector x_new = std::move(trial->x);
        Vector g_new = std::move(trial->g);
        double f_new = trial->phi;
        if (opts.project) {
            opts.project(x_new);
            f_new = evaluate_checked(f, x_new, g_new);
        }

        Vector s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * norm2(s) * norm2(y)) {
            if (static_cast<int>(s_hist.size()) == opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        x = std::move(x_new);
        g = std::move(g_new);
        const bool stalled = std::abs(fx - f_new) <= 1e-16 * std::max(1.0, std::abs(fx)) && !opts.project;
        fx = f_new;
        gnorm = norm2(g);
        ++it;
        res.history.push_back(fx);
        if (stalled && s_hist.empty()) break;
    }
    res.params = std::move(x);
    res.loss = fx;
    res.iterations = it;
    res.grad_norm = gnorm;
    res.converged = gnorm <= opts.grad_tol;
    return res;
}

}  // namespace

OptimResult minimize(const ObjectiveFn& f, Vector x0, const MinimizeOptions& opts) {
    for (double v : x0)
        if (!std::isfinite(v)) throw ContractError("minimize: x0 has non-finite entries");
    if (opts.method == OptimizerKind::GradientDescent) return minimize_gd(f, std::move(x0), opts);
    return minimize_lbfgs(f, std::move(x0), opts);
}

namespace {

Matrix fd_jacobian(const SystemFn& f, std::span<const double> x, std::span<const double> fx, double rel_step) {
    const std::size_t k = x.size();
    Matrix jac(k, k);
    Vector xp(x.begin(), x.end()), fp(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double h = rel_step * (1.0 + std::abs(x[j]));
        xp[j] = x[j] + h;
        f(xp, fp);
        const double actual = xp[j] - x[j];
        for (std::size_t i = 0; i < k; ++i) jac(i, j) = (fp[i] - fx[i]) / actual;
        xp[j] = x[j];
    }
    return jac;
}

}  // namespace

Vector solve_system(const SystemFn& f, Vector x, const SolveOptions& opts) {
    const std::size_t k = x.size();
    for (double v : x)
        if (!std::isfinite(v)) throw ContractError("solve_system: x0 has non-finite entries");
    Vector fx(k), ftrial(k), xtrial(k);
    f(x, fx);
    double fnorm = norm2(fx);
    if (!std::isfinite(fnorm)) throw NoConvergenceError("solve_system: residual not finite at x0", x, fnorm);
    double radius = opts.initial_radius;

    for (int it = 0; it < opts.max_iter && fnorm > opts.resid_tol; ++it) {
        const Matrix jac = fd_jacobian(f, x, fx, opts.fd_rel_step);

        // Steepest-descent direction of ½‖f + J p‖² at p = 0.
        Vector grad(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) grad[j] += jac(i, j) * fx[i];
        const double gnorm = norm2(grad);
        if (gnorm == 0.0) {
            throw NoConvergenceError("solve_system: model Jacobian is singular at the current iterate", x, fnorm);
        }
        const Vector jg = matvec(jac, grad);
        const double jg2 = dot(jg, jg);
        Vector cauchy(k);
        const double t = jg2 > 0 ? gnorm * gnorm / jg2 : radius / gnorm;
        for (std::size_t j = 0; j < k; ++j) cauchy[j] = -t * grad[j];

        Vector neg_f(k);
        for (std::size_t i = 0; i < k; ++i) neg_f[i] = -fx[i];
        const std::optional<Vector> newton = lu_solve(jac, neg_f);

        // Inner loop: shrink the region until a step is accepted.
        bool accepted = false;
        while (!accepted) {
            Vector step(k);
            if (newton && norm2(*newton) <= radius) {
                step = *newton;
            } else if (norm2(cauchy) >= radius || !newton) {
                for (std::size_t j = 0; j < k; ++j) step[j] = -radius * grad[j] / gnorm;
            } else {
                // Walk from the Cauchy point toward the Newton point until ‖p‖ = radius.
                Vector diff(k);
                for (std::size_t j = 0; j < k; ++j) diff[j] = (*newton)[j] - cauchy[j];
                const double a = dot(diff, diff);
                const double b = 2.0 * dot(cauchy, diff);
                const double c = dot(cauchy, cauchy) - radius * radius;
                const double tau = (-b + std::sqrt(std::max(0.0, b * b - 4 * a * c))) / (2 * a);
                for (std::size_t j = 0; j < k; ++j) step[j] = cauchy[j] + tau * diff[j];
            }

            const Vector jstep = matvec(jac, step);
            double predicted = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double m = fx[i] + jstep[i];
                predicted += m * m;
            }
            predicted = fnorm * fnorm - predicted;

            for (std::size_t j = 0; j < k; ++j) xtrial[j] = x[j] + step[j];
            f(xtrial, ftrial);
            const double tnorm = norm2(ftrial);
            const double actual = std::isfinite(tnorm) ? fnorm * fnorm - tnorm * tnorm : -kInf;
            const double rho = predicted > 0 ? actual / predicted : (actual > 0 ? 1.0 : -1.0);
            const double step_norm = norm2(step);

            if (rho < 0.25) {
                radius = 0.25 * step_norm;
            } else if (rho > 0.75 && step_norm >= 0.99 * radius) {
                radius = 2.0 * radius;
            }
            if (rho > 1e-4 && std::isfinite(tnorm)) {
                x = xtrial;
                fx = ftrial;
                fnorm = tnorm;
                accepted = true;
            } else if (radius <= 1e-15 * (1.0 + norm2(x))) {
                throw NoConvergenceError("solve_system: trust region collapsed before reaching tolerance", x,
                                         fnorm);
            }
        }
    }
    if (!(fnorm <= opts.resid_tol)) {
        throw NoConvergenceError("solve_system: iteration limit reached with residual " + std::to_string(fnorm), x,
                                 fnorm);
    }
    return x;
}

double check_gradient(const ObjectiveFn& f, std::span<const double> x, double h) {
    if (!(h > 0)) throw ContractError("check_gradient: step must be positive");
    const std::size_t n = x.size();
    Vector g(n), scratch(n);
    f(x, g);
    Vector xp(x.begin(), x.end());
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        xp[j] = x[j] + h;
        const double fp = f(xp, scratch);
        xp[j] = x[j] - h;
        const double fm = f(xp, scratch);
        xp[j] = x[j];
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, std::abs(g[j] - fd) / (std::abs(g[j]) + h));
    }
    return worst;
}

}  // namespace oae
