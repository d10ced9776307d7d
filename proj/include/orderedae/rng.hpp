#pragma once

#include <array>
#include <cstdint>

namespace oae {

/// xoshiro256** seeded through splitmix64. The stream depends only on the
/// seed, never on the platform's <random> implementation, so generated
/// datasets and initial weights are reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (both halves of each pair are used).
    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace oae
