#pragma once

#include "mushroom/histogram.hpp"
#include "mushroom/protocol.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace mushroom {

/// The protocol's capture set does not have the shape an operation needs
/// (e.g. more than one capture interval per cycle).
class TopologyError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct TheoryOptions
{
    /// Quadrature cells per capture interval; the rest of the cycle gets a
    /// proportional share.
    std::size_t panels = 10000;
    std::size_t curve_samples = 10001;
    std::size_t bins = 100;
    std::size_t loop_samples = 10000;
};

struct Curve
{
    std::vector<double> t;
    std::vector<double> value;
};

/// Distribution of ln(E1/E0) after one cycle: an atom for particles that are
/// never captured plus the capture-time mass pushed through E1(t_in).
struct PredictedDistribution
{
    double atom_value = 0.0;
    double atom_mass = 0.0;
    std::vector<double> values;  ///< ln E1/E0 at capture-cell midpoints
    std::vector<double> masses;  ///< -delta p_cha of each cell
    Histogram histogram;

    double total_mass() const;
    double mean() const;
};

struct TheoryPrediction
{
    double m1 = 0.0;
    double p_nc = 1.0;
    double ln_e_nc = 0.0;
    double loop_area = 0.0;
    TimeInterval capture{};  ///< empty (begin == end) when nothing is captured
    Curve p_cha;
    Curve p_ell;
    Curve g;
    Curve ln_e1;
    PredictedDistribution distribution;
};

/// Flux-corrected adiabatic theory for one protocol. Integrals are taken in
/// time with d(delta) = delta'(nu) nu' dt; the cycle is gridded once at
/// construction.
class TheoryEngine
{
public:
    explicit TheoryEngine(std::shared_ptr<const Protocol> protocol, TheoryOptions options = {});

    const Protocol& protocol() const { return *protocol_; }
    const std::vector<TimeInterval>& capture_windows() const { return windows_; }
    bool single_window() const { return windows_.size() == 1; }

    /// Integrand of the flux term, (V_cap / V_cha) d(delta)/dt.
    double flux_rate(double t) const;
    /// Cumulative integral of flux_rate from 0, extended periodically.
    double flux_integral(double t) const;

    /// p_cha(t) inside a capture window (1 at the window start); outside
    /// the windows particles are paired with their release times.
    double capture_probability(double t) const;
    double compression_factor(double t) const;
    double growth_rate() const;
    double energy_noncaptured() const;
    /// ln(E1(t_in)/E0). Throws TopologyError unless there is exactly one
    /// capture window.
    double energy_captured(double t_in) const;
    PredictedDistribution predicted_distribution(std::size_t bins) const;
    double loop_area(std::size_t samples) const;

    /// Independent route to m1: integrates -p_cha d log(V_cha/V_cap) and
    /// -p_cha (V_cap/V_cha) d(delta) over the whole cycle, with p_cha
    /// continued through the release phase. Returns {I1, I2}.
    std::pair<double, double> growth_rate_by_parts() const;

    /// Single-window protocols only.
    TheoryPrediction predict() const;

private:
    struct Node
    {
        double t;
        double f;
        double cumulative;
    };

    const TimeInterval& window_of(double t) const;
    double p_at_window(const TimeInterval& w, double t) const;
    double log_relative_chaotic(double t) const;
    double d_log_relative_chaotic(double t) const;
    void require_single_window(const char* what) const;

    std::shared_ptr<const Protocol> protocol_;
    TheoryOptions options_;
    std::vector<TimeInterval> windows_;
    std::vector<Node> nodes_;
    double period_ = 0.0;
    double nu_max_ = 1.0;
};

}  // namespace mushroom
