#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orderedae/matrix.hpp"
#include "orderedae/rng.hpp"

namespace oae {

/// Per-variable z-score parameters. scales are sample standard deviations.
struct NormStats {
    Vector means;
    Vector scales;

    /// (x - mean) / scale, row by row.
    Matrix apply(const Matrix& x) const;
    Matrix invert(const Matrix& z) const;
    double apply(std::size_t var, double value) const { return (value - means[var]) / scales[var]; }
    double invert(std::size_t var, double value) const { return value * scales[var] + means[var]; }
};

/// Column-sample data: x has one row per variable and one column per sample.
struct Dataset {
    Matrix x;
    std::vector<std::string> names;
    std::optional<NormStats> norm;
    /// Generator output before measurement noise, in the same coordinates as x.
    /// Only synthetic datasets carry it; it is never written to CSV.
    std::optional<Matrix> noise_free;

    std::size_t num_vars() const noexcept { return x.rows(); }
    std::size_t num_samples() const noexcept { return x.cols(); }
};

/// How uniform inputs are drawn. Antithetic emits pairs (u, −u) so every
/// input row has sample mean exactly zero (up to one unpaired sample when N
/// is odd); centering then leaves odd relations untouched.
enum class Sampling { Iid, Antithetic };

std::string_view to_string(Sampling s) noexcept;
Sampling sampling_from_string(std::string_view name);

/// x1 ~ U[-half_range, half_range], x2 = tanh(3·x1). Noise free.
Dataset gen_two_var(std::size_t n_samples, Rng& rng, double half_range = 1.0,
                    Sampling sampling = Sampling::Antithetic);

/// x1..x3 ~ U[-half_range, half_range]; x4 = sin(3·x1) + η₄;
/// x5 = x2 − tan(0.5·x3) + η₅ with η ~ N(0, noise_var).
Dataset gen_five_var(std::size_t n_samples, Rng& rng, double noise_var = 0.1, double half_range = 1.0,
                     Sampling sampling = Sampling::Antithetic);

/// Per-variable z-score with N-1 sample variance. Throws DataError naming
/// the first variable whose standard deviation is zero.
Dataset normalize(const Dataset& d);
/// Inverse of normalize; a dataset without NormStats is returned as is.
Dataset denormalize(const Dataset& d);

/// CSV with a header of variable names, one row per sample, one column per
/// variable, values printed in shortest round-trip form.
void save_csv(const Dataset& d, const std::filesystem::path& path);
/// Throws ParseError with the 1-based line number on malformed input.
Dataset load_csv(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace oae
