#include "mushroom/ensemble.hpp"
#include "mushroom/geometry.hpp"
#include "mushroom/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <numbers>
#include <random>

using namespace mushroom;
using std::numbers::pi;

namespace {

EnsembleConfig small_config(std::size_t n = 40)
{
    EnsembleConfig c;
    c.particles = n;
    c.e0 = 200.0;
    c.seed = 12345;
    c.bins = 20;
    c.threads = 1;
    return c;
}

bool same_bits(double a, double b)
{
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

// Inverse-CDF draws from the conditional capture-time density of the
// theory, optionally shifted in time.
std::vector<double> draw_capture_times(const TheoryEngine& e, std::size_t n, double shift, std::uint64_t seed)
{
    const auto w = e.capture_windows().front();
    const double p_nc = e.capture_probability(w.end);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(p_nc, 1.0);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = u(rng);
        double lo = w.begin;
        double hi = w.end;
        for (int k = 0; k < 60; ++k) {
            const double mid = 0.5 * (lo + hi);
            (e.capture_probability(mid) > target ? lo : hi) = mid;
        }
        out.push_back(std::min(w.end, 0.5 * (lo + hi) + shift));
    }
    return out;
}

}  // namespace

TEST_CASE("initial conditions")
{
    const MushroomShape s = MushroomShape::make(1.0, 0.3, 2.0, std::tan(2.3 * pi / 180));
    CHECK(sample_initial(s, 0, 1e6, 1).empty());

    const auto many = sample_initial(s, 1'000'000, 1e6, 9);
    std::size_t cap = 0;
    for (const auto& p : many) {
        CHECK(p.energy() == doctest::Approx(1e6).epsilon(1e-14));
        CHECK(contains(s, {p.x, p.y}) != Region::outside);
        cap += contains(s, {p.x, p.y}) == Region::cap;
    }
    const double p = cap_area(s) / area(s);
    const double sigma = std::sqrt(p * (1 - p) / many.size());
    CHECK(std::abs(static_cast<double>(cap) / many.size() - p) < 3 * sigma);
}

TEST_CASE("particle streams depend only on the seed and the index")
{
    const MushroomShape s = MushroomShape::make(1.0, 0.5, 1.0, 0.0);
    const auto a = sample_initial(s, 10, 5.0, 3);
    const auto b = sample_initial(s, 50, 5.0, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(same_bits(a[i].x, b[i].x));
        CHECK(same_bits(a[i].vy, b[i].vy));
        const auto c = sample_particle(s, 5.0, 3, i);
        CHECK(same_bits(a[i].y, c.y));
    }
    const auto d = sample_initial(s, 10, 5.0, 4);
    CHECK_FALSE(same_bits(a[0].x, d[0].x));
}

TEST_CASE("ensemble results are independent of the worker count and of N")
{
    const SinusoidalCycle p(SinusoidalParams{});
    EnsembleConfig one = small_config(40);
    EnsembleConfig three = one;
    three.threads = 3;
    const auto a = run_ensemble(p, one);
    const auto b = run_ensemble(p, three);
    CHECK(same_bits(a.m1_star, b.m1_star));
    CHECK(same_bits(a.sigma_n, b.sigma_n));
    CHECK(a.captured == b.captured);
    REQUIRE(a.particles.size() == b.particles.size());
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        REQUIRE(a.particles[i].log_ratio.size() == b.particles[i].log_ratio.size());
        CHECK(same_bits(a.particles[i].log_ratio[0], b.particles[i].log_ratio[0]));
    }
    for (std::size_t i = 0; i < a.log_energy.density.size(); ++i)
        CHECK(same_bits(a.log_energy.density[i], b.log_energy.density[i]));

    EnsembleConfig fewer = one;
    fewer.particles = 15;
    const auto c = run_ensemble(p, fewer);
    for (std::size_t i = 0; i < c.particles.size(); ++i)
        CHECK(same_bits(c.particles[i].log_ratio[0], a.particles[i].log_ratio[0]));

    const auto single = run_particle(p, one, 7);
    CHECK(same_bits(single.log_ratio[0], a.particles[7].log_ratio[0]));
}

TEST_CASE("ensemble statistics are consistent with the per-particle results")
{
    const SinusoidalCycle p(SinusoidalParams{});
    const auto s = run_ensemble(p, small_config(60));
    CHECK(s.completed + s.aborted == 60);
    CHECK(s.period == doctest::Approx(2 * pi));
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t n = 0;
    std::size_t captured = 0;
    for (const auto& r : s.particles) {
        if (r.aborted())
            continue;
        sum += r.log_ratio[0];
        sum2 += r.log_ratio[0] * r.log_ratio[0];
        ++n;
        captured += r.captured();
        if (r.captured()) {
            CHECK(r.t_in == r.capture_times.front());
            CHECK(r.t_in <= r.t_out);
        } else {
            CHECK(std::isnan(r.t_in));
        }
    }
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1);
    CHECK(s.m1_star == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.sigma_n == doctest::Approx(std::sqrt(var / n)).epsilon(1e-9));
    CHECK(s.captured == captured);
    CHECK(s.p_nc_star == doctest::Approx(1.0 - static_cast<double>(captured) / n));
    CHECK(s.p_nc_sigma == doctest::Approx(std::sqrt(s.p_nc_star * (1 - s.p_nc_star) / n)));
    CHECK(s.log_energy.integral() == doctest::Approx(1.0).epsilon(1e-9));
    if (s.captured > 0) {
        CHECK(s.capture_times.integral() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(s.capture_times.edges.front() == 0.0);
        CHECK(s.capture_times.edges.back() == doctest::Approx(2 * pi));
    }
    CHECK(s.aborted_fraction() == doctest::Approx(static_cast<double>(s.aborted) / 60));
}

TEST_CASE("normalized multi-cycle histograms")
{
    const SinusoidalCycle p(SinusoidalParams{});
    const auto s = run_ensemble(p, small_config(30));
    const Histogram h = multi_cycle_normalized(s.particles, 1, s.config.bins);
    REQUIRE(h.edges.size() == s.log_energy.edges.size());
    for (std::size_t i = 0; i < h.density.size(); ++i) {
        CHECK(same_bits(h.edges[i], s.log_energy.edges[i]));
        CHECK(same_bits(h.density[i], s.log_energy.density[i]));
    }

    EnsembleConfig c = small_config(20);
    c.cycles = 3;
    const auto m = run_ensemble(p, c);
    for (const auto& r : m.particles)
        if (!r.aborted())
            CHECK(r.log_ratio.size() == 3);
    const auto mom = normalized_moments(m.particles, 3);
    CHECK(mom.count == m.completed);
    CHECK(m.m1_star == doctest::Approx(mom.mean).epsilon(1e-12));
    const auto mom1 = normalized_moments(m.particles, 1);
    CHECK(mom1.count == m.completed);
    CHECK(multi_cycle_normalized(m.particles, 2, 10).integral() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a protocol with constant nu captures nobody")
{
    const StaticProtocol p(MushroomShape::make(1.0, 0.4, 1.0, 0.0), 1.0);
    const auto s = run_ensemble(p, small_config(50));
    CHECK(s.p_nc_star == 1.0);
    CHECK(s.captured == 0);
    CHECK(std::abs(s.m1_star) < 1e-12);
    for (double d : s.capture_times.density)
        CHECK(d == 0.0);
}

TEST_CASE("configuration validation")
{
    EnsembleConfig c;
    CHECK_NOTHROW(c.validate());
    c.particles = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.e0 = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.cycles = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.bins = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("capture-time chi-square accepts the theory and rejects a shifted law")
{
    const TheoryEngine e(std::make_shared<SinusoidalCycle>(SinusoidalParams{}));
    const auto good = draw_capture_times(e, 3000, 0.0, 21);
    const auto r = capture_time_chi_square(good, e, 50);
    CHECK(r.bins_used >= 20);
    CHECK(r.dof == r.bins_used - 1);
    CHECK(r.p_value > 0.01);
    double obs = 0.0;
    double exp = 0.0;
    for (std::size_t i = 0; i < r.observed.size(); ++i) {
        obs += r.observed[i];
        exp += r.expected[i];
        CHECK(r.expected[i] >= 5.0);
    }
    CHECK(obs == doctest::Approx(3000));
    CHECK(exp == doctest::Approx(3000).epsilon(1e-6));

    const auto bad = draw_capture_times(e, 3000, 0.15, 21);
    CHECK(capture_time_chi_square(bad, e, 50).p_value < 1e-6);

    SinusoidalParams two;
    two.nu_rate = 1.0;
    two.tan_theta = 0.05;
    const TheoryEngine multi(std::make_shared<SinusoidalCycle>(two));
    CHECK_THROWS_AS(capture_time_chi_square(good, multi, 50), TopologyError);
}
