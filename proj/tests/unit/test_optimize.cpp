#include <gtest/gtest.h>

#include <cmath>

#include "orderedae/errors.hpp"
#include "orderedae/optimize.hpp"
#include "orderedae/rng.hpp"

using namespace oae;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
}

}  // namespace

TEST(Minimize, QuadraticReachesCenter) {
    const Vector c{1, 2, 3};
    auto f = [&](std::span<const double> x, std::span<double> g) {
        double s = 0;
        for (std::size_t i = 0; i < 3; ++i) {
            g[i] = 2 * (x[i] - c[i]);
            s += (x[i] - c[i]) * (x[i] - c[i]);
        }
        return s;
    };
    MinimizeOptions o;
    o.grad_tol = 1e-8;
    auto r = minimize(f, Vector(3, 0.0), o);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.grad_norm, 1e-8);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.params[i], c[i], 1e-8);
}

TEST(Minimize, RosenbrockFromClassicStart) {
    MinimizeOptions o;
    o.grad_tol = 1e-10;
    auto r = minimize(rosenbrock, {-1.2, 1.0}, o);
    EXPECT_NEAR(r.params[0], 1, 1e-6);
    EXPECT_NEAR(r.params[1], 1, 1e-6);
    // The optimum really is stationary.
    Vector g(2);
    rosenbrock(r.params, g);
    EXPECT_LE(std::hypot(g[0], g[1]), 1e-6);
}

TEST(Minimize, ConstantConvergesImmediately) {
    auto f = [](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        return 7.0;
    };
    auto r = minimize(f, {0.3, -0.4});
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 1);
    EXPECT_EQ(r.params, (Vector{0.3, -0.4}));
}

TEST(Minimize, LossHistoryNonincreasingAndHonestFlag) {
    for (auto kind : {OptimizerKind::Lbfgs, OptimizerKind::GradientDescent}) {
        MinimizeOptions o;
        o.method = kind;
        o.max_iter = 300;
        auto r = minimize(rosenbrock, {-1.2, 1.0}, o);
        ASSERT_FALSE(r.history.empty());
        for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
        Vector g(2);
        EXPECT_LE(r.loss, rosenbrock(Vector{-1.2, 1.0}, g));
        if (r.converged) {
            EXPECT_LE(r.grad_norm, o.grad_tol);
        }
    }
}

TEST(Minimize, NanLossThrows) {
    auto f = [](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        return std::nan("");
    };
    EXPECT_THROW(minimize(f, {1.0}), NumericalError);
}

TEST(Minimize, Deterministic) {
    auto a = minimize(rosenbrock, {-1.2, 1.0});
    auto b = minimize(rosenbrock, {-1.2, 1.0});
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.history, b.history);
}

TEST(Minimize, ProjectionIsApplied) {
    // Minimize ‖x − (3,4)‖² on the unit circle via projection.
    auto f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2 * (x[0] - 3);
        g[1] = 2 * (x[1] - 4);
        return (x[0] - 3) * (x[0] - 3) + (x[1] - 4) * (x[1] - 4);
    };
    MinimizeOptions o;
    o.project = [](std::span<double> x) {
        const double n = std::hypot(x[0], x[1]);
        x[0] /= n;
        x[1] /= n;
    };
    auto r = minimize(f, {1.0, 0.0}, o);
    EXPECT_NEAR(std::hypot(r.params[0], r.params[1]), 1.0, 1e-12);
    EXPECT_NEAR(r.params[0], 0.6, 1e-4);
    EXPECT_NEAR(r.params[1], 0.8, 1e-4);
}

TEST(SolveSystem, ScalarRoot) {
    auto x = solve_system([](std::span<const double> v, std::span<double> o) { o[0] = v[0] * v[0] - 4; }, {1.0});
    EXPECT_NEAR(x[0], 2, 1e-10);
}

TEST(SolveSystem, LinearScalar) {
    auto x = solve_system([](std::span<const double> v, std::span<double> o) { o[0] = v[0] - std::tanh(0.0); },
                          {0.5});
    EXPECT_NEAR(x[0], 0, 1e-10);
}

TEST(SolveSystem, LinearPair) {
    auto x = solve_system(
        [](std::span<const double> v, std::span<double> o) {
            o[0] = v[0] + v[1] - 3;
            o[1] = v[0] - v[1] - 1;
        },
        {0.0, 0.0});
    EXPECT_NEAR(x[0], 2, 1e-10);
    EXPECT_NEAR(x[1], 1, 1e-10);
}

TEST(SolveSystem, RosenbrockGradientRoot) {
    SystemFn f = [](std::span<const double> v, std::span<double> o) { rosenbrock(v, o); };
    for (Vector x0 : {Vector{0, 0}, Vector{2, 2}, Vector{0.5, 0.5}, Vector{1.5, 1}}) {
        auto x = solve_system(f, x0);
        Vector r(2);
        f(x, r);
        EXPECT_LE(std::hypot(r[0], r[1]), 1e-10);
        EXPECT_NEAR(x[0], 1, 1e-8);
        EXPECT_NEAR(x[1], 1, 1e-8);
    }
}

// From x1 < 0 the merit ‖∇f‖ keeps falling along a valley toward x1 → −∞
// (it tends to 1 from above), so a dogleg has no reason to turn around.
TEST(SolveSystem, RosenbrockGradientFromClassicStartFailsHonestly) {
    SystemFn f = [](std::span<const double> v, std::span<double> o) { rosenbrock(v, o); };
    try {
        solve_system(f, {-1.2, 1.0});
        FAIL() << "expected NoConvergenceError";
    } catch (const NoConvergenceError& e) {
        EXPECT_GT(e.residual_norm(), 1.0);
        EXPECT_LT(e.best_iterate()[0], -1.2);
    }
}

TEST(SolveSystem, RosenbrockResidualSystem) {
    SystemFn f = [](std::span<const double> v, std::span<double> o) {
        o[0] = 10 * (v[1] - v[0] * v[0]);
        o[1] = 1 - v[0];
    };
    auto x = solve_system(f, {-1.2, 1.0});
    EXPECT_NEAR(x[0], 1, 1e-10);
    EXPECT_NEAR(x[1], 1, 1e-10);
}

TEST(SolveSystem, NoRootCarriesBestIterate) {
    SystemFn f = [](std::span<const double> v, std::span<double> o) { o[0] = v[0] * v[0] + 1; };
    try {
        solve_system(f, {3.0});
        FAIL() << "expected NoConvergenceError";
    } catch (const NoConvergenceError& e) {
        ASSERT_EQ(e.best_iterate().size(), 1u);
        EXPECT_GE(e.residual_norm(), 1.0);
        EXPECT_LT(e.residual_norm(), 10.0);
    }
}

TEST(SolveSystem, SuccessImpliesSmallResidual) {
    Rng rng(2);
    SolveOptions o;
    for (int t = 0; t < 50; ++t) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(0.5, 3);
        SystemFn f = [&](std::span<const double> v, std::span<double> out) { out[0] = v[0] + b * std::tanh(v[0]) - a; };
        try {
            auto x = solve_system(f, {rng.uniform(-3, 3)}, o);
            Vector r(1);
            f(x, r);
            EXPECT_LE(std::abs(r[0]), o.resid_tol);
        } catch (const NoConvergenceError&) {
        }
    }
}

TEST(CheckGradient, ExactQuadratic) {
    Rng rng(4);
    Vector x(6);
    for (auto& v : x) v = rng.uniform(-2, 2);
    auto f = [](std::span<const double> v, std::span<double> g) {
        double s = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i + 1.0) * v[i] * v[i];
            g[i] = 2 * (i + 1.0) * v[i];
        }
        return s;
    };
    EXPECT_LE(check_gradient(f, x, 1e-5), 1e-9);
}

TEST(CheckGradient, CatchesCorruptedCoordinate) {
    auto f = [](std::span<const double> v, std::span<double> g) {
        double s = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += std::sin(v[i]) * v[i];
            g[i] = std::cos(v[i]) * v[i] + std::sin(v[i]);
        }
        g[1] *= 2;
        return s;
    };
    EXPECT_GE(check_gradient(f, Vector{0.4, 0.7, -0.2}, 1e-6), 0.3);
}

TEST(Optimizer, NamesRoundTrip) {
    for (auto k : {OptimizerKind::Lbfgs, OptimizerKind::GradientDescent})
        EXPECT_EQ(optimizer_from_string(to_string(k)), k);
    EXPECT_THROW(optimizer_from_string("adam"), ContractError);
}
