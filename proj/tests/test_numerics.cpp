#include "mushroom/histogram.hpp"
#include "mushroom/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

using namespace mushroom;

TEST_CASE("Simpson integrates cubics exactly")
{
    auto cubic = [](double x) { return 2 * x * x * x - x * x + 3; };
    const double exact = 0.5 * 16 - 8.0 / 3 + 6;  // over [0, 2]
    CHECK(simpson(cubic, 0, 2, 2) == doctest::Approx(exact).epsilon(1e-14));
    CHECK(simpson(cubic, 0, 2, 100) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("Simpson converges at fourth order and reports its error")
{
    auto f = [](double x) { return std::exp(std::sin(x)); };
    const double ref = simpson(f, 0, 3, 1 << 14);
    const double e1 = std::abs(simpson(f, 0, 3, 16) - ref);
    const double e2 = std::abs(simpson(f, 0, 3, 32) - ref);
    CHECK(e1 / e2 == doctest::Approx(16).epsilon(0.1));
    const auto r = simpson_checked(f, 0, 3, 16);
    CHECK(std::abs(r.value - ref) < 3 * r.error_estimate);
}

TEST_CASE("Simpson rejects bad panel counts and non-finite integrands")
{
    auto one = [](double) { return 1.0; };
    CHECK_THROWS_AS(simpson(one, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(simpson(one, 0, 1, 3), std::invalid_argument);
    auto bad = [](double x) { return x > 0.5 ? std::numeric_limits<double>::infinity() : 0.0; };
    CHECK_THROWS_AS(simpson(bad, 0, 1, 10), std::domain_error);
}

TEST_CASE("histogram densities integrate to one")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.1, 0.3);
    std::vector<double> v(10000);
    for (auto& x : v)
        x = g(rng);
    const Histogram h = make_histogram(v, 100);
    CHECK(h.bins() == 100);
    CHECK(h.integral() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i)
        CHECK(h.edges[i] < h.edges[i + 1]);
    for (double d : h.density)
        CHECK(d >= 0.0);
    const std::size_t m = h.mode(0, h.bins());
    CHECK(std::abs(h.center(m) - 0.1) < 0.15);
}

TEST_CASE("histogram clamps outliers and handles degenerate ranges")
{
    const std::vector<double> v{-5, 0.25, 0.75, 7};
    const Histogram h = make_histogram(v, 2, 0, 1);
    CHECK(h.density[0] == doctest::Approx(2.0 / 4 / 0.5));
    CHECK(h.density[1] == doctest::Approx(2.0 / 4 / 0.5));

    const std::vector<double> same(5, 3.0);
    const Histogram d = make_histogram(same, 4);
    CHECK(d.integral() == doctest::Approx(1.0));
    CHECK(d.edges.front() < 3.0);
    CHECK(d.edges.back() > 3.0);

    CHECK_THROWS_AS(make_histogram(v, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_histogram(v, 3, 1, 1), std::invalid_argument);
}

TEST_CASE("weighted histogram")
{
    const std::vector<double> v{0.1, 0.9};
    const std::vector<double> w{3.0, 1.0};
    const Histogram h = make_weighted_histogram(v, w, 2, 0, 1);
    CHECK(h.density[0] == doctest::Approx(1.5));
    CHECK(h.density[1] == doctest::Approx(0.5));
    const std::vector<double> short_w{1.0};
    CHECK_THROWS_AS(make_weighted_histogram(v, short_w, 2, 0, 1), std::invalid_argument);
}
