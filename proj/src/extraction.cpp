#include "orderedae/extraction.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "orderedae/errors.hpp"
#include "orderedae/parallel.hpp"

namespace oae {

std::string_view to_string(RelationKind k) noexcept { return k == RelationKind::Aeo ? "aeo" : "raeo"; }

RelationKind relation_kind_from_string(std::string_view name) {
    if (name == "aeo") return RelationKind::Aeo;
    if (name == "raeo") return RelationKind::Raeo;
    throw ContractError("unknown relation kind '" + std::string(name) + "'");
}

namespace {

void require_extractable(const AutoencoderModel& mdl) {
    if (!mdl.extraction_mode()) {
        throw ContractError("extraction needs linear output layers and zero biases");
    }
    if (mdl.m() != mdl.n()) throw ContractError("extraction needs a square latent space (m == n)");
}

std::vector<Layer> hidden_chain(const AutoencoderModel& mdl) {
    const auto enc = mdl.encoder_layers();
    return {enc.begin(), enc.end() - 1};
}

}  // namespace

ImplicitRelation build_implicit(const TrainOutcome& outcome, std::optional<std::size_t> p_override) {
    const AutoencoderModel& mdl = outcome.model;
    require_extractable(mdl);
    const std::size_t m = mdl.m();
    const std::size_t p = p_override.value_or(outcome.report.p);
    if (p >= m) throw NothingToExtractError("no residual latent variables to extract a relation from");
    if (p == 0) throw ContractError("build_implicit: p must be at least 1");

    LatentReport tail = outcome.report;
    tail.residual_set.clear();
    for (std::size_t i = p; i < m; ++i) tail.residual_set.push_back(i);
    if (detect_trivial(mdl, tail)) {
        throw TrivialSolutionError(
            "model collapsed to A_Er = 0, ybar_r = 0; retrain with the residual rows held at unit norm");
    }

    ImplicitRelation rel;
    rel.kind = mdl.encoder_skip().active() ? RelationKind::Raeo : RelationKind::Aeo;
    rel.n = mdl.n();
    rel.p = p;
    rel.hidden = hidden_chain(mdl);
    const Matrix& a_e = mdl.layer(mdl.num_encoder_layers() - 1).weights;
    rel.a_er = a_e.block(p, 0, m - p, a_e.cols());
    rel.skip_r = mdl.encoder_skip().materialize(m, mdl.n()).block(p, 0, m - p, mdl.n());
    rel.ybar_r.assign(outcome.report.means.begin() + static_cast<std::ptrdiff_t>(p), outcome.report.means.end());
    return rel;
}

ExplicitRelation build_explicit(const TrainOutcome& outcome, std::size_t p) {
    const AutoencoderModel& mdl = outcome.model;
    require_extractable(mdl);
    if (mdl.encoder_skip().kind != Skip::Kind::Identity) {
        throw ContractError("explicit relations need the identity encoder skip");
    }
    if (!outcome.explicit_ok.value_or(false)) {
        throw ContractError("explicit relation requested from an outcome without explicit_ok");
    }
    const EncoderPartition part = partition(mdl, p);
    for (double w : part.a_1r.data())
        if (w != 0.0) throw ContractError("explicit relation needs A_1r exactly zero");

    ExplicitRelation rel;
    rel.n = mdl.n();
    rel.p = p;
    rel.hidden = hidden_chain(mdl);
    rel.a_er = part.a_er;
    if (rel.hidden.empty()) {
        throw ContractError("explicit relation needs at least one hidden encoder layer");
    }
    rel.hidden.front().weights = part.a_1p;
    rel.ybar_r.assign(outcome.report.means.begin() + static_cast<std::ptrdiff_t>(p), outcome.report.means.end());
    return rel;
}

Vector hidden_features(std::span<const Layer> hidden, std::span<const double> x) {
    Vector h(x.begin(), x.end());
    for (const Layer& l : hidden) {
        Vector z = matvec(l.weights, h);
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (l.has_bias()) z[i] += l.bias[i];
            if (l.activation == Activation::Tanh) z[i] = std::tanh(z[i]);
        }
        h = std::move(z);
    }
    return h;
}

Vector relation_residual(const ImplicitRelation& rel, std::span<const double> x) {
    if (x.size() != rel.n) throw ContractError("relation_residual: expected " + std::to_string(rel.n) + " values");
    Vector r = matvec(rel.a_er, hidden_features(rel.hidden, x));
    const Vector s = matvec(rel.skip_r, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s[i] - rel.ybar_r[i];
    return r;
}

Vector solve_residual(const ImplicitRelation& rel, std::span<const double> x_p, std::span<const double> x0_r,
                      const SolveOptions& opts) {
    if (x_p.size() != rel.p || x0_r.size() != rel.num_residual()) {
        throw ContractError("solve_residual: expected " + std::to_string(rel.p) + " known and " +
                            std::to_string(rel.num_residual()) + " unknown values");
    }
    const SystemFn system = [&rel, x_p](std::span<const double> x_r, std::span<double> out) {
        Vector x(rel.n);
        std::copy(x_p.begin(), x_p.end(), x.begin());
        std::copy(x_r.begin(), x_r.end(), x.begin() + static_cast<std::ptrdiff_t>(rel.p));
        const Vector r = relation_residual(rel, x);
        std::copy(r.begin(), r.end(), out.begin());
    };
    return solve_system(system, Vector(x0_r.begin(), x0_r.end()), opts);
}

Vector explicit_predict(const ExplicitRelation& rel, std::span<const double> x_p) {
    if (x_p.size() != rel.p) throw ContractError("explicit_predict: expected " + std::to_string(rel.p) + " values");
    Vector x_r = matvec(rel.a_er, hidden_features(rel.hidden, x_p));
    for (std::size_t i = 0; i < x_r.size(); ++i) x_r[i] = rel.ybar_r[i] - x_r[i];
    return x_r;
}

std::size_t BatchSolveResult::num_failed() const {
    std::size_t c = 0;
    for (bool ok : converged) c += ok ? 0 : 1;
    return c;
}

BatchSolveResult solve_all(const ImplicitRelation& rel, const Matrix& x, const BatchSolveOptions& opts) {
    if (x.rows() != rel.n) throw ContractError("solve_all: sample dimension mismatch");
    const std::size_t k = rel.num_residual();
    const std::size_t samples = x.cols();
    BatchSolveResult out{Matrix(k, samples), std::vector<bool>(samples, false), Vector(samples, 0.0)};

    parallel_for(samples, opts.jobs, [&](std::size_t j) {
        const Vector col = x.col(j);
        const std::span<const double> x_p(col.data(), rel.p);
        Vector primary(k, 0.0);
        if (opts.use_actual_initial_guess) primary.assign(col.begin() + static_cast<std::ptrdiff_t>(rel.p), col.end());

        std::vector<Vector> starts{primary};
        for (double off : opts.fallback_starts) {
            Vector s = primary;
            for (double& v : s) v += off;
            starts.push_back(std::move(s));
        }
        Vector best;
        double best_norm = std::numeric_limits<double>::infinity();
        bool ok = false;
        for (const Vector& s : starts) {
            try {
                best = solve_residual(rel, x_p, s, opts.solver);
                Vector full(col);
                std::copy(best.begin(), best.end(), full.begin() + static_cast<std::ptrdiff_t>(rel.p));
                best_norm = norm2(relation_residual(rel, full));
                ok = true;
                break;
            } catch (const NoConvergenceError& e) {
                if (e.residual_norm() < best_norm) {
                    best_norm = e.residual_norm();
                    best = e.best_iterate();
                }
            }
        }
        for (std::size_t i = 0; i < k; ++i) out.x_r(i, j) = best[i];
        out.converged[j] = ok;
        out.residual_norms[j] = best_norm;
    });
    return out;
}

Matrix predict_all(const ExplicitRelation& rel, const Matrix& x) {
    if (x.rows() != rel.n) throw ContractError("predict_all: sample dimension mismatch");
    Matrix out(rel.n - rel.p, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const Vector col = x.col(j);
        out.set_col(j, explicit_predict(rel, std::span<const double>(col.data(), rel.p)));
    }
    return out;
}

double prediction_mse(std::span<const double> target, std::span<const double> predicted) {
    if (target.size() != predicted.size() || target.empty()) {
        throw ContractError("prediction_mse: sample counts differ or are zero");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) s += (target[j] - predicted[j]) * (target[j] - predicted[j]);
    return s / static_cast<double>(target.size());
}

double prediction_mse(const Dataset& d, std::span<const double> predicted, std::size_t target_var) {
    if (target_var >= d.num_vars()) throw ContractError("prediction_mse: target variable out of range");
    return prediction_mse(d.x.row(target_var), predicted);
}

}  // namespace oae
