#include "mushroom/ensemble.hpp"

#include "mushroom/theory.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace mushroom {

void EnsembleConfig::validate() const
{
    if (particles < 1)
        throw std::invalid_argument("ensemble: N >= 1 violated");
    if (!(e0 > 0.0) || !std::isfinite(e0))
        throw std::invalid_argument("ensemble: E0 > 0 violated");
    if (cycles < 1)
        throw std::invalid_argument("ensemble: n >= 1 violated");
    if (bins < 1)
        throw std::invalid_argument("ensemble: bins >= 1 violated");
}

double EnsembleStats::aborted_fraction() const
{
    const std::size_t total = completed + aborted;
    return total == 0 ? 0.0 : static_cast<double>(aborted) / static_cast<double>(total);
}

ParticleState sample_particle(const MushroomShape& shape, double e0, std::uint64_t seed, std::size_t index)
{
    const auto idx = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double half = std::max(shape.r, shape.w);
    const double y_lo = -shape.h;
    const double y_hi = shape.r;
    ParticleState s;
    do {
        s.x = -half + 2.0 * half * unit(rng);
        s.y = y_lo + (y_hi - y_lo) * unit(rng);
    } while (contains(shape, {s.x, s.y}) == Region::outside);

    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double v = std::sqrt(2.0 * e0);
    s.vx = v * std::cos(angle);
    s.vy = v * std::sin(angle);
    s.t = 0.0;
    return s;
}

std::vector<ParticleState> sample_initial(const MushroomShape& shape, std::size_t n, double e0, std::uint64_t seed)
{
    shape.validate();
    if (!(e0 > 0.0))
        throw std::invalid_argument("sample_initial: E0 > 0 violated");
    std::vector<ParticleState> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sample_particle(shape, e0, seed, i));
    return out;
}

ParticleResult run_particle(const Protocol& protocol, const EnsembleConfig& config, std::size_t index)
{
    const double period = protocol.period();
    const ParticleState start = sample_particle(protocol.shape_at(0.0), config.e0, config.seed, index);
    SimulationOptions opts;
    opts.tol = config.tol;

    ParticleResult res;
    res.index = index;
    res.t_in = std::numeric_limits<double>::quiet_NaN();
    res.t_out = std::numeric_limits<double>::quiet_NaN();

    Simulator sim(protocol, start, opts);
    const double e0 = start.energy();
    for (std::size_t k = 1; k <= config.cycles; ++k) {
        if (sim.advance_to(static_cast<double>(k) * period) != Outcome::completed)
            break;
        res.log_ratio.push_back(std::log(sim.state().energy() / e0));
    }
    sim.finish();
    res.outcome = sim.outcome();
    res.collisions = sim.collisions();

    for (const auto& c : sim.captures()) {
        if (!c.captured || c.t_in >= period)
            continue;
        if (res.capture_times.empty()) {
            res.t_in = c.t_in;
            res.t_out = c.t_out;
        }
        res.capture_times.push_back(c.t_in);
    }
    return res;
}

EnsembleStats run_ensemble(const Protocol& protocol, const EnsembleConfig& config, ProgressFn progress)
{
    config.validate();
    EnsembleStats st;
    st.config = config;
    st.period = protocol.period();
    st.particles.resize(config.particles);

    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.particles));

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex progress_mutex;
    std::exception_ptr error;

    auto work = [&] {
        try {
            for (std::size_t i = next++; i < config.particles; i = next++) {
                st.particles[i] = run_particle(protocol, config, i);
                if (progress) {
                    std::lock_guard lock(progress_mutex);
                    progress(++done, config.particles);
                }
            }
        } catch (...) {
            std::lock_guard lock(progress_mutex);
            if (!error)
                error = std::current_exception();
            next = config.particles;
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);

    // Reductions run in particle order so the result is independent of the
    // schedule.
    std::vector<double> capture_times;
    double collisions = 0.0;
    for (const auto& p : st.particles) {
        collisions += static_cast<double>(p.collisions);
        if (p.aborted()) {
            ++st.aborted;
            continue;
        }
        ++st.completed;
        if (p.captured()) {
            ++st.captured;
            capture_times.insert(capture_times.end(), p.capture_times.begin(), p.capture_times.end());
        }
    }
    st.mean_collisions = collisions / static_cast<double>(config.particles);

    const MomentSummary m = normalized_moments(st.particles, config.cycles);
    st.m1_star = m.mean;
    st.sigma_n = m.std_error;
    if (st.completed > 0) {
        const double n = static_cast<double>(st.completed);
        st.p_nc_star = static_cast<double>(st.completed - st.captured) / n;
        st.p_nc_sigma = std::sqrt(st.p_nc_star * (1.0 - st.p_nc_star) / n);
    }
    st.log_energy = multi_cycle_normalized(st.particles, config.cycles, config.bins);
    st.capture_times = make_histogram(capture_times, config.bins, 0.0, st.period);
    return st;
}

namespace {

std::vector<double> normalized_values(std::span<const ParticleResult> particles, std::size_t n)
{
    if (n < 1)
        throw std::invalid_argument("cycle count n >= 1 violated");
    std::vector<double> v;
    v.reserve(particles.size());
    for (const auto& p : particles)
        if (!p.aborted() && p.log_ratio.size() >= n)
            v.push_back(p.log_ratio[n - 1] / static_cast<double>(n));
    return v;
}

}  // namespace

Histogram multi_cycle_normalized(std::span<const ParticleResult> particles, std::size_t n, std::size_t bins)
{
    return make_histogram(normalized_values(particles, n), bins);
}

MomentSummary normalized_moments(std::span<const ParticleResult> particles, std::size_t n)
{
    const auto v = normalized_values(particles, n);
    MomentSummary m;
    m.count = v.size();
    if (v.empty())
        return m;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    m.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - m.mean) * (x - m.mean);
        m.variance = ss / static_cast<double>(v.size() - 1);
        m.std_error = std::sqrt(m.variance / static_cast<double>(v.size()));
    }
    return m;
}

ChiSquareResult capture_time_chi_square(std::span<const double> capture_times, const TheoryEngine& theory,
                                        std::size_t bins, double min_expected)
{
    if (!theory.single_window())
        throw TopologyError("capture-time test needs exactly one capture interval per cycle");
    if (bins < 2)
        throw std::invalid_argument("capture-time test needs at least two bins");
    const TimeInterval w = theory.capture_windows().front();
    const double p_end = theory.capture_probability(w.end);
    const double captured_mass = 1.0 - p_end;
    if (!(captured_mass > 0.0))
        throw std::invalid_argument("capture-time test: protocol captures nothing");

    const double width = (w.end - w.begin) / static_cast<double>(bins);
    std::vector<double> observed(bins, 0.0);
    for (double t : capture_times) {
        auto i = static_cast<std::ptrdiff_t>(std::floor((t - w.begin) / width));
        i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        observed[static_cast<std::size_t>(i)] += 1.0;
    }
    const double total = static_cast<double>(capture_times.size());
    std::vector<double> expected(bins);
    double p_prev = 1.0;
    for (std::size_t i = 0; i < bins; ++i) {
        const double t = i + 1 == bins ? w.end : w.begin + width * static_cast<double>(i + 1);
        const double p = theory.capture_probability(t);
        expected[i] = total * (p_prev - p) / captured_mass;
        p_prev = p;
    }

    ChiSquareResult res;
    double obs_acc = 0.0;
    double exp_acc = 0.0;
    res.edges.push_back(w.begin);
    for (std::size_t i = 0; i < bins; ++i) {
        obs_acc += observed[i];
        exp_acc += expected[i];
        if (exp_acc >= min_expected) {
            res.observed.push_back(obs_acc);
            res.expected.push_back(exp_acc);
            res.edges.push_back(w.begin + width * static_cast<double>(i + 1));
            obs_acc = exp_acc = 0.0;
        }
    }
    if (exp_acc > 0.0 || obs_acc > 0.0) {
        if (res.expected.empty()) {
            res.observed.push_back(obs_acc);
            res.expected.push_back(exp_acc);
            res.edges.push_back(w.end);
        } else {
            res.observed.back() += obs_acc;
            res.expected.back() += exp_acc;
            res.edges.back() = w.end;
        }
    }
    res.bins_used = res.expected.size();
    for (std::size_t i = 0; i < res.bins_used; ++i) {
        const double d = res.observed[i] - res.expected[i];
        if (res.expected[i] > 0.0)
            res.statistic += d * d / res.expected[i];
    }
    res.dof = res.bins_used > 1 ? res.bins_used - 1 : 0;
    res.p_value = res.dof > 0 ? boost::math::gamma_q(0.5 * static_cast<double>(res.dof), 0.5 * res.statistic) : 1.0;
    return res;
}

}  // namespace mushroom
