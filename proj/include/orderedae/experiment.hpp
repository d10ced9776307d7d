#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orderedae/dataset.hpp"
#include "orderedae/pca.hpp"
#include "orderedae/serialize.hpp"
#include "orderedae/training.hpp"

namespace oae {

enum class ExperimentId { TwoVar, FiveVar, Custom };
enum class Method { Pca, Aeo, Raeo21 };

std::string_view to_string(ExperimentId e) noexcept;
ExperimentId experiment_from_string(std::string_view name);
std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

/// Everything a command needs. Ordering weights follow
/// q_i = q_const[i] + q_linear[i]·q + q_square[i]·q².
struct ExperimentConfig {
    ExperimentId experiment = ExperimentId::TwoVar;
    std::filesystem::path data_path;  ///< custom experiments only
    Method method = Method::Aeo;

    std::size_t n_samples = 100;
    double noise_var = 0.0;
    double half_range = 1.0;
    Sampling sampling = Sampling::Antithetic;

    std::vector<std::size_t> encoder_hidden{5};
    std::vector<std::size_t> decoder_hidden{5};
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.1;
    Vector q_const{1.0, 0.0};
    Vector q_linear{0.0, 0.0};
    Vector q_square{0.0, 1.0};

    double q = 10.0;  ///< single-run commands
    std::vector<double> q_sweep{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double eps = 1e-4;
    std::uint64_t seed = 0;
    int restarts = 5;
    MinimizeOptions optimizer;

    std::size_t p = 1;       ///< significant variables; the rest are solved for
    std::size_t target = 1;  ///< variable whose prediction / reconstruction is scored
    bool explicit_relation = false;
    bool retry_normalized = false;
    int jobs = 0;  ///< worker threads; 0 = available parallelism
    std::filesystem::path out = "out";

    /// Paper settings for the experiment/method pair.
    static ExperimentConfig defaults(ExperimentId e, Method m);

    std::size_t num_vars() const;
    LossConfig loss_at(double q) const;
    Architecture architecture() const;
    TrainConfig train_config(double q) const;
    /// Restart r of a run trains from seed 100·seed + r.
    std::uint64_t train_seed() const noexcept { return seed * 100; }
    /// Throws ContractError on inconsistent settings.
    void validate() const;
};

Json to_json(const ExperimentConfig& c);
/// Applies every key present in j on top of `base`. Unknown keys are errors.
ExperimentConfig apply_config_json(const Json& j, ExperimentConfig base);

/// Generated (seeded by cfg.seed) or loaded data, not normalized.
Dataset make_raw_dataset(const ExperimentConfig& cfg);
/// make_raw_dataset followed by normalize.
Dataset make_dataset(const ExperimentConfig& cfg);

/// One trained/evaluated point of an experiment.
struct RunResult {
    double q = 0;
    Method method = Method::Aeo;
    std::uint64_t seed = 0;
    std::uint64_t train_seed = 0;
    int restarts = 0;
    int iterations = 0;
    bool converged = false;
    std::size_t p = 0;
    bool ordered = false;
    bool trivial = false;    ///< first fit collapsed
    bool retrained = false;  ///< retrain_normalized was run
    std::optional<bool> explicit_ok;
    Vector variances;
    Vector means;
    LossTerms terms{};
    std::optional<TrainOutcome> outcome;
    std::optional<PcaModel> pca;
    Vector predicted;  ///< target variable, normalized, NaN when unavailable
    Matrix reconstructed;
    double prediction_mse = 0;
    double reconstruction_mse = 0;
    std::size_t solve_failures = 0;
    std::string status = "ok";
};

/// Fits cfg.method at ordering weight q and scores it. Prediction MSE is
/// against the noise-free target when the dataset carries one, otherwise the
/// measured target; reconstruction MSE is always against the measured target.
/// Extraction problems are reported in status; training errors propagate.
RunResult run_method(const Dataset& d, const ExperimentConfig& cfg, double q);

/// Column names of the sweep report for an m-latent model.
std::vector<std::string> run_report_header(std::size_t m);
std::vector<std::string> run_report_row(const RunResult& r, std::size_t m);
void write_run_report(const std::filesystem::path& path, const std::vector<RunResult>& rows, std::size_t m);

/// Sample-wise data behind the prediction and reconstruction panels.
void write_prediction_csv(const std::filesystem::path& path, const Dataset& d, const RunResult& r,
                          std::size_t target);
void write_reconstruction_csv(const std::filesystem::path& path, const Dataset& d, const RunResult& r,
                              std::size_t target);

/// Renders the SVG panels of a sweep directory from its CSV files.
void render_sweep_plots(const std::filesystem::path& dir);

/// PCA, AEO and RAEO 2-1 on the five-variable data for one seed. `base` must be
/// a five_var config; per-method settings come from defaults() with base's
/// seed, q, eps, restarts, optimizer and jobs.
std::vector<RunResult> table1_rows(const ExperimentConfig& base);
void write_table1(const std::filesystem::path& path, const std::vector<RunResult>& rows);

/// Command entry points. Each writes into cfg.out (created if missing) and
/// returns a short human-readable summary.
std::string cmd_generate(const ExperimentConfig& cfg);
std::string cmd_train(const ExperimentConfig& cfg);
std::string cmd_sweep(const ExperimentConfig& cfg);
/// `model` is an outcome JSON from cmd_train; when empty the model is trained
/// inline. Throws TrivialSolutionError when the model collapsed and
/// retry_normalized is off, ContractError for --explicit without the skip.
std::string cmd_extract(const ExperimentConfig& cfg, const std::filesystem::path& model = {});
std::string cmd_table1(const ExperimentConfig& cfg);
/// Gradient check of cfg's architecture and loss at random parameters on the
/// experiment data; also returns the measured error through `max_error`.
std::string cmd_check_grad(const ExperimentConfig& cfg, double* max_error = nullptr);

}  // namespace oae
