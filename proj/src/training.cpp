#include "orderedae/training.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "orderedae/errors.hpp"
#include "orderedae/parallel.hpp"

namespace oae {

void TrainConfig::validate() const {
    arch.validate();
    loss.validate(arch.m());
    if (restarts < 1) throw ContractError("TrainConfig: restarts must be at least 1");
    if (!(eps > 0)) throw ContractError("TrainConfig: eps must be positive");
}

LatentReport variance_report(const AutoencoderModel& mdl, const Matrix& x, double eps) {
    const ForwardResult fw = forward(mdl, x);
    LatentReport r;
    r.means = row_means(fw.y);
    r.variances = row_variances(fw.y);
    r.ordered = true;
    for (std::size_t i = 0; i + 1 < r.variances.size(); ++i)
        if (r.variances[i + 1] > r.variances[i] + 1e-9) r.ordered = false;
    for (std::size_t i = 0; i < r.variances.size(); ++i)
        if (r.variances[i] < eps) r.residual_set.push_back(i);
    r.p = r.variances.size() - r.residual_set.size();
    return r;
}

bool detect_trivial(const AutoencoderModel& mdl, const LatentReport& report, const TrivialThresholds& thr) {
    if (report.residual_set.empty()) return false;
    const Matrix& a_e = mdl.layer(mdl.num_encoder_layers() - 1).weights;
    double norm_sq = 0.0;
    for (std::size_t i : report.residual_set)
        for (double w : a_e.row(i)) norm_sq += w * w;
    const double entries = static_cast<double>(report.residual_set.size() * a_e.cols());
    const double bound = thr.weight_norm.value_or(1e-6 * std::sqrt(entries));
    if (!(std::sqrt(norm_sq) < bound)) return false;
    for (std::size_t i : report.residual_set)
        if (!(std::abs(report.means[i]) < thr.mean)) return false;
    return true;
}

bool detect_trivial(const TrainOutcome& outcome, const TrivialThresholds& thr) {
    return detect_trivial(outcome.model, outcome.report, thr);
}

namespace {

struct RestartPlan {
    /// Builds the starting model of restart r.
    std::function<AutoencoderModel(int r)> init;
    /// Parameters that stay at their initial value (gradient masked).
    std::vector<bool> frozen;
    std::function<void(std::span<double>)> project;
};

struct RestartResult {
    std::optional<AutoencoderModel> model;
    OptimResult opt;
    std::string error;
};

TrainOutcome run_restarts(const Dataset& d, const TrainConfig& cfg, const RestartPlan& plan) {
    cfg.validate();
    if (d.num_vars() != cfg.arch.n) {
        throw ContractError("train: dataset has " + std::to_string(d.num_vars()) + " variables, model expects " +
                            std::to_string(cfg.arch.n));
    }
    if (d.num_samples() <= cfg.arch.m()) throw ContractError("train: need more samples than latent variables");

    std::vector<RestartResult> results(static_cast<std::size_t>(cfg.restarts));
    parallel_for(results.size(), cfg.jobs, [&](std::size_t r) {
        RestartResult& out = results[r];
        try {
            const AutoencoderModel start = plan.init(static_cast<int>(r));
            const ObjectiveFn objective = [&](std::span<const double> p, std::span<double> g) {
                AutoencoderModel mdl = start;
                mdl.set_params(p);
                const LossTerms t = loss_and_grad(mdl, d.x, cfg.loss, g);
                for (std::size_t k = 0; k < plan.frozen.size(); ++k)
                    if (plan.frozen[k]) g[k] = 0.0;
                return t.j;
            };
            MinimizeOptions opts = cfg.optimizer;
            if (plan.project) opts.project = plan.project;
            out.opt = minimize(objective, start.params(), opts);
            AutoencoderModel fitted = start;
            fitted.set_params(out.opt.params);
            out.model = std::move(fitted);
        } catch (const NumericalError& e) {
            out.error = e.what();
        }
    });

    TrainOutcome best;
    double best_j = std::numeric_limits<double>::infinity();
    int finished = 0;
    for (std::size_t r = 0; r < results.size(); ++r) {
        if (!results[r].model) {
            best.warnings.push_back("restart " + std::to_string(r) + " failed: " + results[r].error);
            continue;
        }
        ++finished;
        if (results[r].opt.loss < best_j) {
            best_j = results[r].opt.loss;
            best.model = *results[r].model;
            best.converged = results[r].opt.converged;
            best.iterations = results[r].opt.iterations;
            best.seed = cfg.seed + r;
        }
    }
    if (finished == 0) throw NumericalError("train: every restart failed numerically");
    best.restarts = finished;
    best.report = variance_report(best.model, d.x, cfg.eps);
    best.loss_terms = loss(best.model, d.x, cfg.loss);
    best.trivial = detect_trivial(best.model, best.report);
    if (!d.norm) best.warnings.emplace_back("dataset is not normalized");
    if (!cfg.loss.strictly_increasing()) best.warnings.emplace_back("ordering weights q are not strictly increasing");
    return best;
}

}  // namespace

TrainOutcome train(const Dataset& d, const TrainConfig& cfg) {
    RestartPlan plan;
    plan.init = [&](int r) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
        return AutoencoderModel::random(cfg.arch, rng);
    };
    return run_restarts(d, cfg, plan);
}

TrainOutcome retrain_normalized(const Dataset& d, const TrainConfig& cfg, const TrainOutcome& prev,
                                const TrivialThresholds& thr) {
    if (!detect_trivial(prev, thr)) return prev;

    const AutoencoderModel& base = prev.model;
    const std::size_t last_enc = base.num_encoder_layers() - 1;
    const std::size_t cols = base.layer(last_enc).weights.cols();
    const std::size_t offset = base.weight_offset(last_enc);
    const std::vector<std::size_t> rows = prev.report.residual_set;

    auto normalize_rows = [rows, cols, offset](std::span<double> p) {
        double s = 0.0;
        for (std::size_t i : rows)
            for (std::size_t c = 0; c < cols; ++c) s += p[offset + i * cols + c] * p[offset + i * cols + c];
        const double nrm = std::sqrt(s);
        if (nrm == 0.0) return;
        for (std::size_t i : rows)
            for (std::size_t c = 0; c < cols; ++c) p[offset + i * cols + c] /= nrm;
    };

    RestartPlan plan;
    plan.project = normalize_rows;
    plan.init = [&](int r) {
        // Fresh weights: the collapsed fit tends to carry duplicated hidden
        // units that let A_Er cancel itself out again.
        Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
        AutoencoderModel mdl = AutoencoderModel::random(cfg.arch, rng);
        Matrix& a_e = mdl.layer(last_enc).weights;
        for (std::size_t i : rows)
            for (double& w : a_e.row(i)) w = rng.uniform(-1.0, 1.0);
        Vector p = mdl.params();
        normalize_rows(p);
        mdl.set_params(p);
        return mdl;
    };
    TrainOutcome out = run_restarts(d, cfg, plan);
    return out;
}

TrainOutcome retrain_explicit(const Dataset& d, const TrainConfig& cfg, std::size_t p) {
    if (cfg.arch.encoder_skip.kind != Skip::Kind::Identity) {
        throw ContractError("retrain_explicit: explicit relations need the identity encoder skip");
    }
    const std::size_t n = cfg.arch.n;
    if (p < 1 || p >= n || p >= cfg.arch.m()) throw ContractError("retrain_explicit: p out of range");

    const AutoencoderModel shape(cfg.arch);
    std::vector<bool> frozen(shape.param_count(), false);
    const std::size_t width = shape.layer(0).weights.rows();
    for (std::size_t r = 0; r < width; ++r)
        for (std::size_t c = p; c < n; ++c) frozen[r * n + c] = true;

    RestartPlan plan;
    plan.frozen = frozen;
    plan.init = [&](int r) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
        AutoencoderModel mdl = AutoencoderModel::random(cfg.arch, rng);
        Matrix& a1 = mdl.layer(0).weights;
        for (std::size_t row = 0; row < a1.rows(); ++row)
            for (std::size_t c = p; c < n; ++c) a1(row, c) = 0.0;
        return mdl;
    };
    TrainOutcome out = run_restarts(d, cfg, plan);
    bool ok = true;
    for (std::size_t i = p; i < out.report.variances.size(); ++i)
        if (!(out.report.variances[i] < cfg.eps)) ok = false;
    out.explicit_ok = ok;
    return out;
}

}  // namespace oae
