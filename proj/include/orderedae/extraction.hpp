#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orderedae/autoencoder.hpp"
#include "orderedae/dataset.hpp"
#include "orderedae/optimize.hpp"
#include "orderedae/training.hpp"

namespace oae {

enum class RelationKind { Aeo, Raeo };

std::string_view to_string(RelationKind k) noexcept;
RelationKind relation_kind_from_string(std::string_view name);

/// F(x) = S_r·x + A_Er·h(x) − ȳ_r = 0 where h is the hidden encoder chain
/// σ_{E−1}(A_{E−1} … σ_1(A_1 x)) and S_r the residual rows of the encoder
/// skip (zero for AEO, [0 I] for RAEO 2-1). Variables p..n−1 are residual.
struct ImplicitRelation {
    RelationKind kind = RelationKind::Aeo;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<Layer> hidden;  ///< A_1 .. A_{E−1}
    Matrix a_er;                ///< (n−p) x m_{E−1}
    Matrix skip_r;              ///< (n−p) x n
    Vector ybar_r;
    std::vector<std::string> names;
    std::optional<NormStats> norm;  ///< relation lives in these normalized coordinates

    std::size_t num_residual() const noexcept { return n - p; }
};

/// x_r = ȳ_r − A_Er·h_p(x_p), with h_p the hidden chain whose first layer
/// keeps only the A_1p columns.
struct ExplicitRelation {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<Layer> hidden;  ///< first layer is A_1p (m_1 x p)
    Matrix a_er;
    Vector ybar_r;
    std::vector<std::string> names;
    std::optional<NormStats> norm;
};

/// Uses the outcome's report.p unless `p` is given. Throws
/// TrivialSolutionError on a collapsed model, NothingToExtractError when p == m,
/// ContractError when the model is not in extraction mode or m != n.
ImplicitRelation build_implicit(const TrainOutcome& outcome, std::optional<std::size_t> p = std::nullopt);

/// Requires an identity encoder skip and A_1r exactly zero; throws
/// ContractError when the outcome did not reach explicit_ok.
ExplicitRelation build_explicit(const TrainOutcome& outcome, std::size_t p);

/// Hidden-chain output h(x) for one sample.
Vector hidden_features(std::span<const Layer> hidden, std::span<const double> x);

Vector relation_residual(const ImplicitRelation& rel, std::span<const double> x);

/// Solves F(x_p, x_r) = 0 for x_r by dogleg from x0_r. Returns x_r with
/// ‖F‖ ≤ opts.resid_tol or throws NoConvergenceError.
Vector solve_residual(const ImplicitRelation& rel, std::span<const double> x_p, std::span<const double> x0_r,
                      const SolveOptions& opts = {});

Vector explicit_predict(const ExplicitRelation& rel, std::span<const double> x_p);

struct BatchSolveOptions {
    SolveOptions solver;
    /// Start each solve from the sample's measured x_r (leaks the answer;
    /// debugging only). Otherwise the start is 0.
    bool use_actual_initial_guess = false;
    /// Offsets tried, in order, after the primary start fails.
    std::vector<double> fallback_starts = {0.5, -0.5, 1.0, -1.0, 2.0, -2.0};
    int jobs = 1;
};

struct BatchSolveResult {
    Matrix x_r;  ///< (n−p) x N
    std::vector<bool> converged;
    Vector residual_norms;
    std::size_t num_failed() const;
};

/// Solves the relation at every column of x (n x N, normalized coordinates).
/// Non-converged samples keep the best iterate across all starts.
BatchSolveResult solve_all(const ImplicitRelation& rel, const Matrix& x, const BatchSolveOptions& opts = {});

/// Explicit prediction for every column of x; returns (n−p) x N.
Matrix predict_all(const ExplicitRelation& rel, const Matrix& x);

double prediction_mse(std::span<const double> target, std::span<const double> predicted);
/// MSE between row `target_var` of d.x and `predicted`.
double prediction_mse(const Dataset& d, std::span<const double> predicted, std::size_t target_var);

}  // namespace oae
