#pragma once

#include "mushroom/dynamics.hpp"
#include "mushroom/histogram.hpp"
#include "mushroom/protocol.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace mushroom {

class TheoryEngine;

struct EnsembleConfig
{
    std::size_t particles = 5000;
    double e0 = 1e6;
    std::size_t cycles = 1;
    std::uint64_t seed = 1;
    std::size_t bins = 100;
    unsigned threads = 0;  ///< 0: one per hardware thread
    Tolerances tol{};

    /// Throws std::invalid_argument unless N >= 1, E0 > 0, n >= 1, bins >= 1.
    void validate() const;
};

struct ParticleResult
{
    std::size_t index = 0;
    Outcome outcome = Outcome::completed;
    std::uint64_t collisions = 0;
    /// ln(E_k / E0) after cycle k = 1..n (shorter when aborted).
    std::vector<double> log_ratio;
    /// Capture entry times during the first cycle (usually zero or one).
    std::vector<double> capture_times;
    /// First capture of the first cycle; NaN when not captured.
    double t_in = 0.0;
    double t_out = 0.0;

    bool aborted() const { return outcome != Outcome::completed; }
    bool captured() const { return !capture_times.empty(); }
};

struct EnsembleStats
{
    EnsembleConfig config;
    double period = 0.0;
    std::size_t completed = 0;
    std::size_t aborted = 0;
    std::size_t captured = 0;  ///< particles captured during the first cycle

    double m1_star = 0.0;  ///< mean of (1/n) ln(E_n/E0)
    double sigma_n = 0.0;  ///< standard error of m1_star
    double p_nc_star = 0.0;
    double p_nc_sigma = 0.0;  ///< binomial standard error
    double mean_collisions = 0.0;

    Histogram log_energy;     ///< (1/n) ln(E_n/E0)
    Histogram capture_times;  ///< first-cycle capture times over [0, T]
    std::vector<ParticleResult> particles;

    double aborted_fraction() const;
};

/// Per-particle draws come from a generator seeded with (seed, index), so a
/// particle's initial state does not depend on N or on thread scheduling.
ParticleState sample_particle(const MushroomShape& shape, double e0, std::uint64_t seed, std::size_t index);

std::vector<ParticleState> sample_initial(const MushroomShape& shape, std::size_t n, double e0, std::uint64_t seed);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Simulates every particle for config.cycles periods. The result is
/// bitwise independent of the thread count.
EnsembleStats run_ensemble(const Protocol& protocol, const EnsembleConfig& config, ProgressFn progress = {});

/// Simulates one particle of an ensemble (exposed for tests and tools).
ParticleResult run_particle(const Protocol& protocol, const EnsembleConfig& config, std::size_t index);

/// Histogram of (1/n) ln(E_n/E0) from per-particle results.
Histogram multi_cycle_normalized(std::span<const ParticleResult> particles, std::size_t n, std::size_t bins);

struct MomentSummary
{
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased sample variance
    double std_error = 0.0;
};

/// Moments of (1/n) ln(E_n/E0) over completed particles that reached cycle n.
MomentSummary normalized_moments(std::span<const ParticleResult> particles, std::size_t n);

struct ChiSquareResult
{
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::size_t bins_used = 0;
    std::vector<double> observed;
    std::vector<double> expected;
    std::vector<double> edges;
};

/// Pearson test of capture times against the conditional density
/// -dp_cha/dt / (1 - p_nc) over the (single) capture window, with `bins`
/// equal cells merged left to right until each expects at least min_expected.
ChiSquareResult capture_time_chi_square(std::span<const double> capture_times, const TheoryEngine& theory,
                                        std::size_t bins, double min_expected = 5.0);

}  // namespace mushroom
