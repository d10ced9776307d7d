#include "orderedae/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "orderedae/errors.hpp"
#include "orderedae/extraction.hpp"
#include "orderedae/parallel.hpp"
#include "orderedae/plot.hpp"

namespace oae {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kCheckGradSamples = 20;

// Keeps free text inside one CSV cell.
std::string cell_text(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string flag(bool b) { return b ? "1" : "0"; }

std::vector<std::size_t> index_range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    for (std::size_t i = lo; i < hi; ++i) v.push_back(i);
    return v;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream o;
    for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
    o << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
        o << '\n';
    }
    write_text(path, o.str());
}

// Defaults that depend on the variable count of a custom dataset.
ExperimentConfig resolve(ExperimentConfig c, std::size_t n) {
    if (c.experiment != ExperimentId::Custom) return c;
    if (c.q_const.empty() && c.q_linear.empty() && c.q_square.empty()) {
        c.q_const.assign(n, 0.0);
        c.q_linear.assign(n, 0.0);
        c.q_square.assign(n, 0.0);
        c.q_const[0] = 1.0;
        for (std::size_t i = 1; i < n; ++i) c.q_square[i] = static_cast<double>(i);
    }
    if (c.p == 0) c.p = n - 1;
    if (c.target == 0) c.target = n - 1;
    return c;
}

struct Prepared {
    Dataset data;
    ExperimentConfig cfg;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p{make_dataset(cfg), {}};
    p.cfg = resolve(cfg, p.data.num_vars());
    p.cfg.validate();
    if (p.cfg.num_vars() != p.data.num_vars()) {
        throw ContractError("config describes " + std::to_string(p.cfg.num_vars()) + " variables, data has " +
                            std::to_string(p.data.num_vars()));
    }
    return p;
}

// A copy of the outcome whose residual set is fixed to the configured split.
TrainOutcome at_split(const TrainOutcome& o, std::size_t p) {
    TrainOutcome probe = o;
    probe.report.residual_set = index_range(p, o.model.m());
    probe.report.p = p;
    return probe;
}

void fill_from_outcome(RunResult& r, const TrainOutcome& o) {
    r.restarts = o.restarts;
    r.iterations = o.iterations;
    r.converged = o.converged;
    r.ordered = o.report.ordered;
    r.variances = o.report.variances;
    r.means = o.report.means;
    r.terms = o.loss_terms;
    r.train_seed = o.seed;
}

std::span<const double> target_truth(const Dataset& d, std::size_t target) {
    return d.noise_free ? d.noise_free->row(target) : d.x.row(target);
}

void score(RunResult& r, const Dataset& d, std::size_t target) {
    r.prediction_mse = kNaN;
    r.reconstruction_mse = kNaN;
    if (!r.predicted.empty()) r.prediction_mse = prediction_mse(target_truth(d, target), r.predicted);
    if (r.reconstructed.rows() == d.num_vars()) {
        r.reconstruction_mse = prediction_mse(d.x.row(target), r.reconstructed.row(target));
    }
}

void run_pca(RunResult& r, const Dataset& d, const ExperimentConfig& cfg) {
    const std::size_t n = d.num_vars();
    const PcaModel full = fit_pca(d, n);
    r.variances = full.latent_variances;
    r.means.assign(n, 0.0);
    r.ordered = true;
    r.converged = true;
    r.terms = {kNaN, kNaN, kNaN, kNaN};
    // One residual component, solved for the target given every other variable.
    const LinearRelation rel = extract_linear_model_count(full, 1);
    const std::size_t unknown[] = {cfg.target};
    r.predicted.assign(d.num_samples(), kNaN);
    try {
        for (std::size_t j = 0; j < d.num_samples(); ++j) {
            const Vector col = d.x.col(j);
            r.predicted[j] = solve_linear_relation(rel, col, unknown)[0];
        }
    } catch (const NumericalError& e) {
        r.status = std::string("linear relation not solvable for the target: ") + e.what();
        r.predicted.clear();
    }
    const PcaModel reduced = fit_pca(d, cfg.p);
    r.reconstructed = pca_reconstruct(reduced, pca_transform(reduced, d.x));
    r.pca = full;
}

void run_autoencoder(RunResult& r, const Dataset& d, const ExperimentConfig& cfg, double q) {
    const TrainConfig tc = cfg.train_config(q);
    TrainOutcome o = train(d, tc);
    const TrainOutcome probe = at_split(o, cfg.p);
    r.trivial = detect_trivial(probe);
    if (r.trivial && cfg.retry_normalized) {
        o = retrain_normalized(d, tc, probe);
        r.retrained = true;
    }

    const std::size_t row = cfg.target - cfg.p;
    if (cfg.explicit_relation) {
        o = retrain_explicit(d, tc, cfg.p);
        r.explicit_ok = o.explicit_ok;
        if (*o.explicit_ok) {
            const ExplicitRelation rel = build_explicit(o, cfg.p);
            const Matrix xr = predict_all(rel, d.x);
            const auto pred = xr.row(row);
            r.predicted.assign(pred.begin(), pred.end());
        } else {
            r.status = "explicit_ok false: residual variances stayed above eps";
        }
    } else if (r.trivial && !r.retrained) {
        r.status = "trivial solution (A_Er = 0); rerun with --retry-normalized";
    } else {
        try {
            const ImplicitRelation rel = build_implicit(o, cfg.p);
            const BatchSolveResult res = solve_all(rel, d.x);
            const auto pred = res.x_r.row(row);
            r.predicted.assign(pred.begin(), pred.end());
            r.solve_failures = res.num_failed();
        } catch (const TrivialSolutionError& e) {
            r.status = e.what();
        } catch (const NothingToExtractError& e) {
            r.status = e.what();
        }
    }
    r.reconstructed = forward(o.model, d.x).xhat;
    fill_from_outcome(r, o);
    r.outcome = std::move(o);
}

RunResult failed_row(const ExperimentConfig& cfg, double q, const std::string& why) {
    RunResult r;
    r.q = q;
    r.method = cfg.method;
    r.seed = cfg.seed;
    r.train_seed = cfg.train_seed();
    r.p = cfg.p;
    r.variances.assign(cfg.num_vars(), kNaN);
    r.means.assign(cfg.num_vars(), kNaN);
    r.terms = {kNaN, kNaN, kNaN, kNaN};
    r.prediction_mse = kNaN;
    r.reconstruction_mse = kNaN;
    r.status = why;
    return r;
}

std::vector<double> column_or_empty(const CsvTable& t, const std::string& name) {
    for (const auto& h : t.header)
        if (h == name) return t.numbers(name);
    return {};
}

}  // namespace

std::string_view to_string(ExperimentId e) noexcept {
    switch (e) {
        case ExperimentId::TwoVar: return "two_var";
        case ExperimentId::FiveVar: return "five_var";
        case ExperimentId::Custom: return "custom";
    }
    return "two_var";
}

ExperimentId experiment_from_string(std::string_view name) {
    if (name == "two_var") return ExperimentId::TwoVar;
    if (name == "five_var") return ExperimentId::FiveVar;
    if (name == "custom") return ExperimentId::Custom;
    throw ContractError("unknown experiment '" + std::string(name) + "' (expected two_var, five_var or custom)");
}

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Pca: return "pca";
        case Method::Aeo: return "aeo";
        case Method::Raeo21: return "raeo21";
    }
    return "aeo";
}

Method method_from_string(std::string_view name) {
    if (name == "pca") return Method::Pca;
    if (name == "aeo") return Method::Aeo;
    if (name == "raeo21" || name == "raeo") return Method::Raeo21;
    throw ContractError("unknown method '" + std::string(name) + "' (expected pca, aeo or raeo21)");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentId e, Method m) {
    ExperimentConfig c;
    c.experiment = e;
    c.method = m;
    switch (e) {
        case ExperimentId::TwoVar:
            break;
        case ExperimentId::FiveVar:
            c.n_samples = 300;
            c.noise_var = 0.1;
            if (m == Method::Raeo21) {
                c.encoder_hidden = {5};
                c.decoder_hidden = {5};
                c.alpha = 0.3;
                c.beta = 0.1;
                c.gamma = 0.12;
            } else {
                c.encoder_hidden = {6};
                c.decoder_hidden = {6};
                c.alpha = 0.2;
                c.beta = 0.3;
                c.gamma = 0.08;
            }
            c.q_const = {0.1, 0, 0, 0, 0};
            c.q_linear = {0, 0.1, 0.5, 4, 5};
            c.q_square = {0, 0, 0, 0, 0};
            c.p = 3;
            c.target = 3;
            // At 2000 iterations every restart on this problem is still moving.
            c.optimizer.max_iter = 10000;
            break;
        case ExperimentId::Custom:
            c.q_const.clear();
            c.q_linear.clear();
            c.q_square.clear();
            c.p = 0;
            c.target = 0;
            break;
    }
    return c;
}

std::size_t ExperimentConfig::num_vars() const {
    switch (experiment) {
        case ExperimentId::TwoVar: return 2;
        case ExperimentId::FiveVar: return 5;
        case ExperimentId::Custom: return q_const.size();
    }
    return 0;
}

LossConfig ExperimentConfig::loss_at(double qv) const {
    LossConfig l;
    l.alpha = alpha;
    l.beta = beta;
    l.gamma = gamma;
    l.q.resize(q_const.size());
    for (std::size_t i = 0; i < l.q.size(); ++i) l.q[i] = q_const[i] + q_linear[i] * qv + q_square[i] * qv * qv;
    return l;
}

Architecture ExperimentConfig::architecture() const {
    const std::size_t n = num_vars();
    return Architecture::extraction(n, n, encoder_hidden, decoder_hidden,
                                    method == Method::Raeo21 ? Skip::identity() : Skip::none(), Skip::none());
}

TrainConfig ExperimentConfig::train_config(double qv) const {
    TrainConfig t;
    t.arch = architecture();
    t.loss = loss_at(qv);
    t.optimizer = optimizer;
    t.seed = train_seed();
    t.restarts = restarts;
    t.eps = eps;
    t.jobs = 1;
    return t;
}

void ExperimentConfig::validate() const {
    const std::size_t n = num_vars();
    if (n < 2) throw ContractError("config: need at least two variables");
    if (q_linear.size() != n || q_square.size() != n) {
        throw ContractError("config: q_const, q_linear and q_square need one entry per variable");
    }
    if (p < 1 || p >= n) throw ContractError("config: p must lie in [1, n)");
    if (target >= n) throw ContractError("config: target out of range");
    if (method != Method::Pca && target < p) {
        throw ContractError("config: target must be one of the solved-for variables (index >= p)");
    }
    if (q_sweep.empty()) throw ContractError("config: q_sweep is empty");
    if (!(eps > 0)) throw ContractError("config: eps must be positive");
    if (restarts < 1) throw ContractError("config: restarts must be at least 1");
    if (experiment != ExperimentId::Custom) {
        if (n_samples < 2) throw ContractError("config: n_samples must be at least 2");
        if (!(half_range > 0)) throw ContractError("config: half_range must be positive");
        if (!(noise_var >= 0)) throw ContractError("config: noise_var must be nonnegative");
    } else if (data_path.empty()) {
        throw ContractError("config: custom experiments need a data path");
    }
    if (encoder_hidden.empty() || decoder_hidden.empty()) {
        throw ContractError("config: encoder and decoder need at least one hidden layer");
    }
    if (explicit_relation && method != Method::Raeo21) {
        throw ContractError("explicit extraction requires the skip form (method raeo21)");
    }
    if (optimizer.max_iter < 1) throw ContractError("config: max_iter must be positive");
    loss_at(q).validate(n);
}

Json to_json(const ExperimentConfig& c) {
    Json j{{"experiment", std::string(to_string(c.experiment))},
           {"method", std::string(to_string(c.method))},
           {"n_samples", c.n_samples},
           {"noise_var", c.noise_var},
           {"half_range", c.half_range},
           {"sampling", std::string(to_string(c.sampling))},
           {"encoder_hidden", c.encoder_hidden},
           {"decoder_hidden", c.decoder_hidden},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"gamma", c.gamma},
           {"q_const", c.q_const},
           {"q_linear", c.q_linear},
           {"q_square", c.q_square},
           {"q", c.q},
           {"q_sweep", c.q_sweep},
           {"eps", c.eps},
           {"seed", c.seed},
           {"restarts", c.restarts},
           {"optimizer", std::string(to_string(c.optimizer.method))},
           {"max_iter", c.optimizer.max_iter},
           {"grad_tol", c.optimizer.grad_tol},
           {"p", c.p},
           {"target", c.target},
           {"explicit", c.explicit_relation},
           {"retry_normalized", c.retry_normalized}};
    if (!c.data_path.empty()) j["data"] = c.data_path.string();
    return j;
}

ExperimentConfig apply_config_json(const Json& j, ExperimentConfig c) {
    if (!j.is_object()) throw ParseError("config: top level must be an object", 0);
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "experiment") c.experiment = experiment_from_string(v.get<std::string>());
            else if (key == "method") c.method = method_from_string(v.get<std::string>());
            else if (key == "data") c.data_path = v.get<std::string>();
            else if (key == "n_samples") c.n_samples = v.get<std::size_t>();
            else if (key == "noise_var") c.noise_var = v.get<double>();
            else if (key == "half_range") c.half_range = v.get<double>();
            else if (key == "sampling") c.sampling = sampling_from_string(v.get<std::string>());
            else if (key == "encoder_hidden") c.encoder_hidden = v.get<std::vector<std::size_t>>();
            else if (key == "decoder_hidden") c.decoder_hidden = v.get<std::vector<std::size_t>>();
            else if (key == "alpha") c.alpha = v.get<double>();
            else if (key == "beta") c.beta = v.get<double>();
            else if (key == "gamma") c.gamma = v.get<double>();
            else if (key == "q_const") c.q_const = v.get<Vector>();
            else if (key == "q_linear") c.q_linear = v.get<Vector>();
            else if (key == "q_square") c.q_square = v.get<Vector>();
            else if (key == "q") c.q = v.get<double>();
            else if (key == "q_sweep") c.q_sweep = v.get<std::vector<double>>();
            else if (key == "eps") c.eps = v.get<double>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "restarts") c.restarts = v.get<int>();
            else if (key == "optimizer") c.optimizer.method = optimizer_from_string(v.get<std::string>());
            else if (key == "max_iter") c.optimizer.max_iter = v.get<int>();
            else if (key == "grad_tol") c.optimizer.grad_tol = v.get<double>();
            else if (key == "p") c.p = v.get<std::size_t>();
            else if (key == "target") c.target = v.get<std::size_t>();
            else if (key == "explicit") c.explicit_relation = v.get<bool>();
            else if (key == "retry_normalized") c.retry_normalized = v.get<bool>();
            else if (key == "jobs") c.jobs = v.get<int>();
            else if (key == "out") c.out = v.get<std::string>();
            else throw ContractError("config: unknown key '" + key + "'");
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("config: ") + e.what(), 0);
    }
    return c;
}

Dataset make_raw_dataset(const ExperimentConfig& cfg) {
    Rng rng(cfg.seed);
    switch (cfg.experiment) {
        case ExperimentId::TwoVar: return gen_two_var(cfg.n_samples, rng, cfg.half_range, cfg.sampling);
        case ExperimentId::FiveVar:
            return gen_five_var(cfg.n_samples, rng, cfg.noise_var, cfg.half_range, cfg.sampling);
        case ExperimentId::Custom: return load_csv(cfg.data_path);
    }
    throw ContractError("unknown experiment");
}

Dataset make_dataset(const ExperimentConfig& cfg) { return normalize(make_raw_dataset(cfg)); }

RunResult run_method(const Dataset& d, const ExperimentConfig& cfg, double q) {
    RunResult r;
    r.q = q;
    r.method = cfg.method;
    r.seed = cfg.seed;
    r.train_seed = cfg.train_seed();
    r.p = cfg.p;
    if (cfg.method == Method::Pca) {
        run_pca(r, d, cfg);
    } else {
        run_autoencoder(r, d, cfg, q);
    }
    score(r, d, cfg.target);
    return r;
}

std::vector<std::string> run_report_header(std::size_t m) {
    std::vector<std::string> h{"q", "method", "seed", "train_seed", "restarts", "iterations", "converged",
                               "p", "ordered", "trivial", "retrained", "explicit_ok"};
    for (std::size_t i = 0; i < m; ++i) h.push_back("V_y" + std::to_string(i + 1));
    for (std::size_t i = 0; i < m; ++i) h.push_back("ybar_" + std::to_string(i + 1));
    for (const char* s : {"J", "J1", "J2", "J3", "prediction_mse", "reconstruction_mse", "solve_failures", "status"})
        h.emplace_back(s);
    return h;
}

std::vector<std::string> run_report_row(const RunResult& r, std::size_t m) {
    std::vector<std::string> row{format_double(r.q),
                                 std::string(to_string(r.method)),
                                 std::to_string(r.seed),
                                 std::to_string(r.train_seed),
                                 std::to_string(r.restarts),
                                 std::to_string(r.iterations),
                                 flag(r.converged),
                                 std::to_string(r.p),
                                 flag(r.ordered),
                                 flag(r.trivial),
                                 flag(r.retrained),
                                 r.explicit_ok ? flag(*r.explicit_ok) : std::string("na")};
    for (std::size_t i = 0; i < m; ++i) row.push_back(format_double(i < r.variances.size() ? r.variances[i] : kNaN));
    for (std::size_t i = 0; i < m; ++i) row.push_back(format_double(i < r.means.size() ? r.means[i] : kNaN));
    for (double v : {r.terms.j, r.terms.j1, r.terms.j2, r.terms.j3, r.prediction_mse, r.reconstruction_mse})
        row.push_back(format_double(v));
    row.push_back(std::to_string(r.solve_failures));
    row.push_back(cell_text(r.status));
    return row;
}

void write_run_report(const fs::path& path, const std::vector<RunResult>& rows, std::size_t m) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) body.push_back(run_report_row(r, m));
    write_csv(path, run_report_header(m), body);
}

void write_prediction_csv(const fs::path& path, const Dataset& d, const RunResult& r, std::size_t target) {
    const auto truth = target_truth(d, target);
    std::vector<std::vector<std::string>> body;
    for (std::size_t j = 0; j < d.num_samples(); ++j) {
        body.push_back({std::to_string(j + 1), format_double(d.x(0, j)), format_double(d.x(target, j)),
                        format_double(truth[j]), format_double(j < r.predicted.size() ? r.predicted[j] : kNaN)});
    }
    write_csv(path, {"sample", "x_in", "actual", "noise_free", "predicted"}, body);
}

void write_reconstruction_csv(const fs::path& path, const Dataset& d, const RunResult& r, std::size_t target) {
    std::vector<std::vector<std::string>> body;
    const bool have = r.reconstructed.rows() == d.num_vars() && r.reconstructed.cols() == d.num_samples();
    for (std::size_t j = 0; j < d.num_samples(); ++j) {
        body.push_back({std::to_string(j + 1), format_double(d.x(0, j)),
                        format_double(have ? r.reconstructed(0, j) : kNaN), format_double(d.x(target, j)),
                        format_double(have ? r.reconstructed(target, j) : kNaN)});
    }
    write_csv(path, {"sample", "x_in", "x_in_hat", "actual", "reconstructed"}, body);
}

void render_sweep_plots(const fs::path& dir) {
    const CsvTable sweep = read_csv_table(dir / "sweep.csv");
    const std::vector<double> q = sweep.numbers("q");

    std::vector<Series> var_series;
    for (std::size_t i = 1;; ++i) {
        const std::vector<double> v = column_or_empty(sweep, "V_y" + std::to_string(i));
        if (v.empty()) break;
        var_series.push_back({"V_y" + std::to_string(i), q, v, false});
    }
    write_text(dir / "variances.svg",
               render_svg({"Latent variances", "q", "variance (log scale)", true}, var_series));

    std::vector<Series> j_series;
    for (const char* name : {"J1", "J2", "J3"}) j_series.push_back({name, q, sweep.numbers(name), false});
    write_text(dir / "loss_terms.svg", render_svg({"Loss terms", "q", "value", false}, j_series));

    if (fs::exists(dir / "prediction.csv")) {
        const CsvTable t = read_csv_table(dir / "prediction.csv");
        const auto x = t.numbers("x_in");
        write_text(dir / "prediction.svg",
                   render_svg({"Prediction at largest q", "x1 (normalized)", "target (normalized)", false},
                              {{"actual", x, t.numbers("actual"), true}, {"predicted", x, t.numbers("predicted"), true}}));
    }
    if (fs::exists(dir / "reconstruction.csv")) {
        const CsvTable t = read_csv_table(dir / "reconstruction.csv");
        const auto s = t.numbers("sample");
        write_text(dir / "reconstruction.svg",
                   render_svg({"Reconstruction at largest q", "sample", "value (normalized)", false},
                              {{"x1", s, t.numbers("x_in"), false},
                               {"x1 reconstructed", s, t.numbers("x_in_hat"), false},
                               {"target", s, t.numbers("actual"), false},
                               {"target reconstructed", s, t.numbers("reconstructed"), false}}));
    }
}

std::vector<RunResult> table1_rows(const ExperimentConfig& base) {
    if (base.experiment != ExperimentId::FiveVar) throw ContractError("table1 needs the five_var experiment");
    const Dataset d = make_dataset(base);
    const Method methods[] = {Method::Pca, Method::Aeo, Method::Raeo21};
    std::vector<RunResult> rows(3);
    parallel_for(3, base.jobs, [&](std::size_t k) {
        ExperimentConfig c = ExperimentConfig::defaults(ExperimentId::FiveVar, methods[k]);
        c.seed = base.seed;
        c.q = base.q;
        c.eps = base.eps;
        c.restarts = base.restarts;
        c.optimizer = base.optimizer;
        c.n_samples = base.n_samples;
        c.noise_var = base.noise_var;
        c.half_range = base.half_range;
        c.sampling = base.sampling;
        c.retry_normalized = true;
        c.validate();
        try {
            rows[k] = run_method(d, c, c.q);
        } catch (const NumericalError& e) {
            rows[k] = failed_row(c, c.q, std::string("training failed: ") + e.what());
        }
    });
    return rows;
}

void write_table1(const fs::path& path, const std::vector<RunResult>& rows) {
    std::vector<std::vector<std::string>> body;
    for (const auto& r : rows) {
        body.push_back({std::string(to_string(r.method)), std::to_string(r.seed), std::to_string(r.train_seed),
                        std::to_string(r.restarts), std::to_string(r.p), format_double(r.prediction_mse),
                        format_double(r.reconstruction_mse), flag(r.trivial), flag(r.retrained),
                        std::to_string(r.solve_failures), cell_text(r.status)});
    }
    write_csv(path,
              {"method", "seed", "train_seed", "restarts", "p", "prediction_mse", "reconstruction_mse", "trivial",
               "retrained", "solve_failures", "status"},
              body);
}

std::string cmd_generate(const ExperimentConfig& cfg) {
    if (cfg.experiment == ExperimentId::Custom) throw ContractError("generate needs two_var or five_var");
    cfg.validate();
    const Dataset d = make_raw_dataset(cfg);
    fs::create_directories(cfg.out);
    save_csv(d, cfg.out / "data.csv");
    Json manifest{{"experiment", std::string(to_string(cfg.experiment))},
                  {"seed", cfg.seed},
                  {"n_samples", cfg.n_samples},
                  {"half_range", cfg.half_range},
                  {"sampling", std::string(to_string(cfg.sampling))},
                  {"noise_var", cfg.noise_var},
                  {"names", d.names},
                  {"file", "data.csv"}};
    write_json(manifest, cfg.out / "manifest.json");
    return "wrote " + (cfg.out / "data.csv").string() + " (" + std::to_string(d.num_samples()) + " samples, " +
           std::to_string(d.num_vars()) + " variables)";
}

std::string cmd_train(const ExperimentConfig& cfg) {
    const Prepared prep = prepare(cfg);
    const ExperimentConfig& c = prep.cfg;
    if (c.method == Method::Pca) throw ContractError("train needs aeo or raeo21; PCA has nothing to train");
    const TrainConfig tc = c.train_config(c.q);
    TrainOutcome o = train(prep.data, tc);
    const bool trivial = detect_trivial(at_split(o, c.p));
    if (trivial && c.retry_normalized) o = retrain_normalized(prep.data, tc, at_split(o, c.p));

    fs::create_directories(c.out);
    Json j = to_json(o, tc.loss);
    if (prep.data.norm) j["normalization"] = to_json(*prep.data.norm);
    j["names"] = prep.data.names;
    j["config"] = to_json(c);
    write_json(j, c.out / "outcome.json");

    std::ostringstream s;
    s << "trained " << to_string(c.method) << " at q=" << format_double(c.q) << ": J=" << format_double(o.loss_terms.j)
      << " p=" << o.report.p << " ordered=" << o.report.ordered << "\n  variances:";
    for (double v : o.report.variances) s << ' ' << format_double(v);
    if (trivial) s << "\n  warning: trivial solution at p=" << c.p << (c.retry_normalized ? " (retrained)" : "");
    for (const auto& w : o.warnings) s << "\n  warning: " << w;
    s << "\n  wrote " << (c.out / "outcome.json").string();
    return s.str();
}

std::string cmd_sweep(const ExperimentConfig& cfg) {
    const Prepared prep = prepare(cfg);
    const ExperimentConfig& c = prep.cfg;
    const Dataset& d = prep.data;
    std::vector<RunResult> rows(c.q_sweep.size());
    parallel_for(rows.size(), c.jobs, [&](std::size_t k) {
        try {
            rows[k] = run_method(d, c, c.q_sweep[k]);
        } catch (const NumericalError& e) {
            rows[k] = failed_row(c, c.q_sweep[k], std::string("training failed: ") + e.what());
        }
    });
    fs::create_directories(c.out);
    write_run_report(c.out / "sweep.csv", rows, d.num_vars());

    std::size_t last = 0;
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k].q > rows[last].q) last = k;
    write_prediction_csv(c.out / "prediction.csv", d, rows[last], c.target);
    write_reconstruction_csv(c.out / "reconstruction.csv", d, rows[last], c.target);
    render_sweep_plots(c.out);

    std::ostringstream s;
    s << "swept " << rows.size() << " q values with " << to_string(c.method) << "; wrote "
      << (c.out / "sweep.csv").string();
    for (const auto& r : rows)
        if (r.status != "ok") s << "\n  q=" << format_double(r.q) << ": " << r.status;
    return s.str();
}

std::string cmd_extract(const ExperimentConfig& cfg, const fs::path& model) {
    const Prepared prep = prepare(cfg);
    ExperimentConfig c = prep.cfg;
    const Dataset& d = prep.data;

    TrainOutcome o;
    if (model.empty()) {
        if (c.method == Method::Pca) throw ContractError("extract needs aeo or raeo21");
        o = train(d, c.train_config(c.q));
    } else {
        o = train_outcome_from_json(read_json(model));
        c.method = o.model.encoder_skip().active() ? Method::Raeo21 : Method::Aeo;
        if (o.model.n() != d.num_vars()) throw ContractError("model and data disagree on the variable count");
    }
    if (c.explicit_relation && o.model.encoder_skip().kind != Skip::Kind::Identity) {
        throw ContractError("explicit extraction requires the skip form (method raeo21)");
    }

    std::ostringstream s;
    const TrainConfig tc = c.train_config(c.q);
    if (detect_trivial(at_split(o, c.p))) {
        if (!c.retry_normalized) {
            throw TrivialSolutionError(
                "trivial solution: A_Er = 0 and ybar_r = 0, so the model encodes no relation. "
                "Rerun with --retry-normalized to retrain with ||A_Er||_F = 1");
        }
        s << "warning: trivial solution, retrained with ||A_Er||_F = 1\n";
        o = retrain_normalized(d, tc, at_split(o, c.p));
    }

    fs::create_directories(c.out);
    ImplicitRelation rel = build_implicit(o, c.p);
    rel.names = d.names;
    rel.norm = d.norm;
    write_json(to_json(rel), c.out / "implicit.json");
    RunResult r;
    r.method = c.method;
    const BatchSolveResult res = solve_all(rel, d.x);
    const auto pred = res.x_r.row(c.target - c.p);
    r.predicted.assign(pred.begin(), pred.end());
    r.reconstructed = forward(o.model, d.x).xhat;
    score(r, d, c.target);
    write_prediction_csv(c.out / "implicit_prediction.csv", d, r, c.target);
    s << "implicit relation (" << to_string(rel.kind) << ", p=" << rel.p << ") -> "
      << (c.out / "implicit.json").string() << "\n  prediction MSE " << format_double(r.prediction_mse) << ", "
      << res.num_failed() << " unsolved samples";

    if (c.explicit_relation) {
        const TrainOutcome ex = retrain_explicit(d, tc, c.p);
        Json ej = to_json(ex, tc.loss);
        ej["names"] = d.names;
        write_json(ej, c.out / "explicit_outcome.json");
        s << "\n  explicit_ok=" << (*ex.explicit_ok ? "true" : "false");
        if (*ex.explicit_ok) {
            ExplicitRelation er = build_explicit(ex, c.p);
            er.names = d.names;
            er.norm = d.norm;
            write_json(to_json(er), c.out / "explicit.json");
            RunResult xr;
            const Matrix all = predict_all(er, d.x);
            const auto row = all.row(c.target - c.p);
            xr.predicted.assign(row.begin(), row.end());
            score(xr, d, c.target);
            write_prediction_csv(c.out / "explicit_prediction.csv", d, xr, c.target);
            s << ", explicit prediction MSE " << format_double(xr.prediction_mse) << " -> "
              << (c.out / "explicit.json").string();
        } else {
            s << " (residual variances stayed above eps=" << format_double(c.eps) << ")";
        }
    }
    return s.str();
}

std::string cmd_table1(const ExperimentConfig& cfg) {
    const std::vector<RunResult> rows = table1_rows(cfg);
    fs::create_directories(cfg.out);
    write_table1(cfg.out / "table1.csv", rows);
    std::ostringstream s;
    s << "method  prediction_mse  reconstruction_mse";
    for (const auto& r : rows) {
        s << "\n" << to_string(r.method) << "  " << format_double(r.prediction_mse) << "  "
          << format_double(r.reconstruction_mse);
        if (r.status != "ok") s << "  (" << r.status << ")";
    }
    s << "\nwrote " << (cfg.out / "table1.csv").string();
    return s.str();
}

std::string cmd_check_grad(const ExperimentConfig& cfg, double* max_error) {
    const Prepared prep = prepare(cfg);
    const ExperimentConfig& c = prep.cfg;
    if (c.method == Method::Pca) throw ContractError("check-grad needs aeo or raeo21");
    Rng rng(c.train_seed());
    const AutoencoderModel start = AutoencoderModel::random(c.architecture(), rng);
    const LossConfig loss_cfg = c.loss_at(c.q);
    // Central differences lose about eps·J/h to cancellation, so keep J small with a short batch.
    const std::size_t batch = std::min<std::size_t>(prep.data.num_samples(), kCheckGradSamples);
    const Matrix x = prep.data.x.block(0, 0, prep.data.num_vars(), batch);
    const ObjectiveFn f = [&](std::span<const double> p, std::span<double> g) {
        AutoencoderModel m = start;
        m.set_params(p);
        return loss_and_grad(m, x, loss_cfg, g).j;
    };
    const Vector x0 = start.params();
    const double err = check_gradient(f, x0, 1e-6);
    if (max_error) *max_error = err;
    return "max relative gradient error " + format_double(err) + " over " + std::to_string(x0.size()) +
           " parameters on " + std::to_string(batch) + " samples (" + (err <= 1e-5 ? "ok" : "FAILED") + ")";
}

}  // namespace oae
