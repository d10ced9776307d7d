#pragma once

#include <functional>
#include <span>
#include <string_view>

#include "orderedae/matrix.hpp"

namespace oae {

/// Returns f(x) and writes ∇f(x) into `grad` (same length as x).
/// Must be reentrant: solvers may be run from several threads at once.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Writes the k residuals f(x) into `out` (k == x.size()).
using SystemFn = std::function<void(std::span<const double> x, std::span<double> out)>;

enum class OptimizerKind { Lbfgs, GradientDescent };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind optimizer_from_string(std::string_view name);

struct MinimizeOptions {
    OptimizerKind method = OptimizerKind::Lbfgs;
    int max_iter = 2000;
    double grad_tol = 1e-6;
    int memory = 10;
    double c1 = 1e-4;  ///< sufficient decrease
    double c2 = 0.9;   ///< curvature
    double gd_step = 1e-3;  ///< fixed step for GradientDescent
    /// Optional projection applied to every accepted iterate (in place).
    /// Used for norm-constrained retraining; the loss is re-evaluated after it.
    std::function<void(std::span<double>)> project;
};

struct OptimResult {
    Vector params;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    /// Loss after each accepted iteration, starting with the loss at x0.
    std::vector<double> history;
};

/// Unconstrained minimization. A failed line search returns the best
/// iterate with converged = false; a NaN loss throws NumericalError.
OptimResult minimize(const ObjectiveFn& f, Vector x0, const MinimizeOptions& opts = {});

struct SolveOptions {
    int max_iter = 200;
    double resid_tol = 1e-10;
    double initial_radius = 1.0;
    double fd_rel_step = 1e-7;  ///< forward-difference step is fd_rel_step·(1 + |x_j|)
};

/// Powell dogleg trust-region solve of the square system f(x) = 0 with a
/// forward-difference Jacobian. Returns x with ‖f(x)‖₂ ≤ resid_tol or throws
/// NoConvergenceError carrying the best iterate seen.
Vector solve_system(const SystemFn& f, Vector x0, const SolveOptions& opts = {});

/// max_j |g_j − (f(x+h e_j) − f(x−h e_j)) / 2h| / (|g_j| + h).
double check_gradient(const ObjectiveFn& f, std::span<const double> x, double h);

}  // namespace oae
