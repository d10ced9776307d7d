#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orderedae/autoencoder.hpp"
#include "orderedae/dataset.hpp"
#include "orderedae/optimize.hpp"

namespace oae {

struct TrainConfig {
    Architecture arch;
    LossConfig loss;
    MinimizeOptions optimizer;
    std::uint64_t seed = 0;
    int restarts = 5;   ///< restart r uses seed + r; lowest final J wins
    double eps = 1e-4;  ///< residual-variance threshold
    int jobs = 1;       ///< restarts evaluated concurrently

    void validate() const;
};

/// Per-latent sample statistics on the training data.
struct LatentReport {
    Vector variances;  ///< N-1 denominator
    Vector means;
    bool ordered = false;  ///< variances nonincreasing within 1e-9
    std::vector<std::size_t> residual_set;  ///< {i : variances[i] < eps}
    std::size_t p = 0;                      ///< m − |residual_set|
};

struct TrainOutcome {
    AutoencoderModel model;
    LatentReport report;
    LossTerms loss_terms;
    bool trivial = false;
    bool converged = false;
    std::uint64_t seed = 0;    ///< seed of the winning restart
    int restarts = 0;          ///< restarts that finished
    int iterations = 0;        ///< optimizer iterations of the winning restart
    /// Set by retrain_explicit: every residual variance fell below eps.
    std::optional<bool> explicit_ok;
    std::vector<std::string> warnings;
};

LatentReport variance_report(const AutoencoderModel& mdl, const Matrix& x, double eps);

struct TrivialThresholds {
    /// Frobenius bound on A_Er; default 1e-6·sqrt(entries of A_Er).
    std::optional<double> weight_norm;
    double mean = 1e-6;
};

/// True iff the residual rows of the final encoder weight and the residual
/// latent means are both (numerically) zero. False when there are no residuals.
bool detect_trivial(const AutoencoderModel& mdl, const LatentReport& report, const TrivialThresholds& thr = {});
bool detect_trivial(const TrainOutcome& outcome, const TrivialThresholds& thr = {});

/// Minimizes J from `restarts` random initializations.
TrainOutcome train(const Dataset& d, const TrainConfig& cfg);

/// If `prev` is trivial, retrains with the residual rows of A_E held at unit
/// Frobenius norm (projected after every accepted step). Otherwise returns prev.
TrainOutcome retrain_normalized(const Dataset& d, const TrainConfig& cfg, const TrainOutcome& prev,
                                const TrivialThresholds& thr = {});

/// Trains an identity-skip model with the last n − p columns of A_1 fixed at
/// zero, so the residual latents depend on x_p only through the MLP.
/// explicit_ok reports whether all of them reached variance < eps.
TrainOutcome retrain_explicit(const Dataset& d, const TrainConfig& cfg, std::size_t p);

}  // namespace oae
