// Command-line harness for the ordered-variance autoencoder experiments.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orderedae/errors.hpp"
#include "orderedae/experiment.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct Flags {
    std::string config;
    std::string experiment;
    std::string method;
    std::string data;
    std::optional<std::uint64_t> seed;
    std::optional<double> q;
    std::vector<double> q_sweep;
    std::optional<double> eps;
    std::optional<int> restarts;
    std::optional<int> max_iter;
    std::string optimizer;
    std::string out;
    std::string model;
    std::optional<int> jobs;
    bool explicit_relation = false;
    bool retry_normalized = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--experiment", f.experiment, "two_var | five_var | custom");
    cmd->add_option("--data", f.data, "CSV file for the custom experiment");
    cmd->add_option("--method", f.method, "pca | aeo | raeo21");
    cmd->add_option("--seed", f.seed, "seed (falls back to $ORDEREDAE_SEED, then 0)");
    cmd->add_option("--q", f.q, "ordering weight q for single runs");
    cmd->add_option("--eps", f.eps, "residual variance threshold");
    cmd->add_option("--restarts", f.restarts, "random restarts per training");
    cmd->add_option("--max-iter", f.max_iter, "optimizer iteration budget");
    cmd->add_option("--optimizer", f.optimizer, "lbfgs | gd");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--jobs", f.jobs, "parallel workers (0 = all cores)");
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("ORDEREDAE_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0') throw oae::ContractError("ORDEREDAE_SEED is not a nonnegative integer: '" + std::string(s) + "'");
    return v;
}

oae::ExperimentConfig build_config(const Flags& f, oae::ExperimentId fallback_experiment) {
    oae::Json file = oae::Json::object();
    if (!f.config.empty()) {
        file = oae::read_json(f.config);
    } else if (!f.model.empty()) {
        // A trained outcome carries the config it was trained with.
        const oae::Json outcome = oae::read_json(f.model);
        if (outcome.contains("config")) file = outcome["config"];
    }
    if (!file.is_object()) throw oae::ParseError("config: top level must be an object", 0);

    oae::ExperimentId e = fallback_experiment;
    if (file.contains("experiment")) e = oae::experiment_from_string(file["experiment"].get<std::string>());
    if (!f.experiment.empty()) e = oae::experiment_from_string(f.experiment);
    oae::Method m = oae::Method::Aeo;
    if (file.contains("method")) m = oae::method_from_string(file["method"].get<std::string>());
    if (!f.method.empty()) m = oae::method_from_string(f.method);

    oae::ExperimentConfig c = oae::apply_config_json(file, oae::ExperimentConfig::defaults(e, m));
    c.experiment = e;
    c.method = m;
    if (f.seed) {
        c.seed = *f.seed;
    } else if (!file.contains("seed")) {
        if (auto s = env_seed()) c.seed = *s;
    }
    if (!f.data.empty()) c.data_path = f.data;
    if (f.q) c.q = *f.q;
    if (!f.q_sweep.empty()) c.q_sweep = f.q_sweep;
    if (f.eps) c.eps = *f.eps;
    if (f.restarts) c.restarts = *f.restarts;
    if (f.max_iter) c.optimizer.max_iter = *f.max_iter;
    if (!f.optimizer.empty()) c.optimizer.method = oae::optimizer_from_string(f.optimizer);
    if (!f.out.empty()) c.out = f.out;
    if (f.jobs) c.jobs = *f.jobs;
    if (f.explicit_relation) c.explicit_relation = true;
    if (f.retry_normalized) c.retry_normalized = true;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoencoders with ordered latent variance: training, relation extraction and experiments"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset CSV and its manifest");
    auto* trn = app.add_subcommand("train", "train one model and write outcome.json");
    auto* swp = app.add_subcommand("sweep", "train over a list of q values; write sweep.csv and SVG panels");
    auto* ext = app.add_subcommand("extract", "extract and solve the implicit (and explicit) relation");
    auto* tb1 = app.add_subcommand("table1", "PCA / AEO / RAEO comparison on the five-variable data");
    auto* grd = app.add_subcommand("check-grad", "compare the analytic loss gradient with finite differences");
    for (auto* cmd : {gen, trn, swp, ext, tb1, grd}) add_common(cmd, f);
    swp->add_option("--q-sweep", f.q_sweep, "q values")->delimiter(',');
    for (auto* cmd : {trn, swp, ext}) cmd->add_flag("--retry-normalized", f.retry_normalized,
                                                    "retrain a collapsed model with ||A_Er||_F = 1");
    swp->add_flag("--explicit", f.explicit_relation, "score the explicit relation (raeo21 only)");
    ext->add_flag("--explicit", f.explicit_relation, "also retrain with A_1r = 0 and export the explicit relation");
    ext->add_option("--model", f.model, "outcome.json from train (default: train inline)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        std::string summary;
        if (gen->parsed()) {
            summary = oae::cmd_generate(build_config(f, oae::ExperimentId::TwoVar));
        } else if (trn->parsed()) {
            summary = oae::cmd_train(build_config(f, oae::ExperimentId::TwoVar));
        } else if (swp->parsed()) {
            summary = oae::cmd_sweep(build_config(f, oae::ExperimentId::TwoVar));
        } else if (ext->parsed()) {
            summary = oae::cmd_extract(build_config(f, oae::ExperimentId::TwoVar), f.model);
        } else if (tb1->parsed()) {
            summary = oae::cmd_table1(build_config(f, oae::ExperimentId::FiveVar));
        } else if (grd->parsed()) {
            double err = 0;
            summary = oae::cmd_check_grad(build_config(f, oae::ExperimentId::TwoVar), &err);
            std::cout << summary << '\n';
            return err <= 1e-5 ? kOk : kNumerical;
        }
        std::cout << summary << '\n';
        return kOk;
    } catch (const oae::ContractError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const oae::ParseError& e) {
        std::cerr << "data error: " << e.what();
        if (e.line() > 0) std::cerr << " (line " << e.line() << ')';
        std::cerr << '\n';
        return kData;
    } catch (const oae::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const oae::TrivialSolutionError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const oae::NothingToExtractError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const oae::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
}
