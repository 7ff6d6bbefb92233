#include "mushroom/geometry.hpp"
#include "mushroom/protocol.hpp"
#include "mushroom/theory.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace mushroom;
using boost::math::quadrature::gauss_kronrod;
using std::numbers::pi;

namespace {

std::shared_ptr<const Protocol> sinusoidal(SinusoidalParams p = {})
{
    return std::make_shared<SinusoidalCycle>(p);
}

RectangleParams rectangle(LoopDirection d)
{
    RectangleParams p;
    p.direction = d;
    p.period = 20.0;
    return p;
}

// Along a w-leg at fixed h, d ln E = -(V_cap / V_cha) d(delta) for a chaotic
// particle; the h-legs leave delta unchanged and the ln V_cha part integrates
// to zero around the loop. Integrated in w, independently of the time grid.
double rectangle_ln_e_nc(const RectangleParams& p)
{
    auto f = [&](double h) {
        return [&p, h](double w) {
            const auto v = volumes(MushroomShape::make(p.r, w, h, p.tan_theta));
            return v.v_cap * delta_derivative(w / p.r) / (p.r * v.v_cha);
        };
    };
    const double top = gauss_kronrod<double, 61>::integrate(f(p.h1), p.w1, p.w0, 15, 1e-13);
    const double bottom = gauss_kronrod<double, 61>::integrate(f(p.h0), p.w0, p.w1, 15, 1e-13);
    const double anticlockwise = -(top + bottom);
    return p.direction == LoopDirection::anticlockwise ? anticlockwise : -anticlockwise;
}

// Green's theorem in the (delta, V_cap/(V_cap+V_stem)) plane, area = loop
// integral of x dy. q depends on w through V_stem, so the w-legs contribute too.
double rectangle_loop_area(const RectangleParams& p)
{
    auto q = [&](double w, double h) {
        const auto v = volumes(MushroomShape::make(p.r, w, h, p.tan_theta));
        return v.v_cap / (v.v_cap + v.v_stem);
    };
    auto x_dy_w = [&](double h, double from, double to) {
        auto g = [&](double w) {
            const double hi = std::min(w + 1e-6, p.r);
            const double lo = hi - 2e-6;
            const double dq = (q(hi, h) - q(lo, h)) / (hi - lo);
            return delta(w / p.r) * dq;
        };
        return gauss_kronrod<double, 61>::integrate(g, from, to, 15, 1e-12);
    };
    auto x_dy_h = [&](double w, double from, double to) {
        return delta(w / p.r) * (q(w, to) - q(w, from));
    };
    double area = x_dy_w(p.h1, p.w1, p.w0) + x_dy_h(p.w0, p.h1, p.h0) + x_dy_w(p.h0, p.w0, p.w1) +
                  x_dy_h(p.w1, p.h0, p.h1);
    return p.direction == LoopDirection::anticlockwise ? area : -area;
}

}  // namespace

TEST_CASE("published sinusoidal numbers")
{
    const TheoryEngine e(sinusoidal());
    const auto p = e.predict();
    CHECK(p.m1 == doctest::Approx(0.122768).epsilon(1e-5));
    CHECK(p.p_nc == doctest::Approx(0.38474).epsilon(1e-4));
    CHECK(p.ln_e_nc == doctest::Approx(-0.422465).epsilon(1e-5));
    CHECK(p.capture.begin == doctest::Approx(0.0).scale(1));
    CHECK(p.capture.end == doctest::Approx(pi));
}

TEST_CASE("doubling the quadrature grid changes nothing beyond 1e-8")
{
    for (auto proto : {sinusoidal(), std::shared_ptr<const Protocol>(std::make_shared<RectangleCycle>(
                                         rectangle(LoopDirection::anticlockwise)))}) {
        TheoryOptions coarse;
        TheoryOptions fine;
        fine.panels = 2 * coarse.panels;
        const auto a = TheoryEngine(proto, coarse).predict();
        const auto b = TheoryEngine(proto, fine).predict();
        CHECK(std::abs(a.m1 - b.m1) < 1e-8);
        CHECK(std::abs(a.p_nc - b.p_nc) < 1e-8);
        CHECK(std::abs(a.ln_e_nc - b.ln_e_nc) < 1e-8);
    }
}

TEST_CASE("rectangle cycle against an integration in w")
{
    for (auto d : {LoopDirection::anticlockwise, LoopDirection::clockwise}) {
        const RectangleParams rp = rectangle(d);
        const TheoryEngine e(std::make_shared<RectangleCycle>(rp));
        const auto p = e.predict();
        CHECK(p.ln_e_nc == doctest::Approx(rectangle_ln_e_nc(rp)).epsilon(1e-8).scale(1));
        CHECK(p.loop_area == doctest::Approx(rectangle_loop_area(rp)).epsilon(1e-4).scale(1));
        CHECK(p.m1 >= 0.0);
    }
    const auto acw = TheoryEngine(std::make_shared<RectangleCycle>(rectangle(LoopDirection::anticlockwise))).predict();
    CHECK(acw.ln_e_nc == doctest::Approx(0.1612053).epsilon(1e-6));
    CHECK(acw.m1 == doctest::Approx(0.0449262).epsilon(1e-6));
}

TEST_CASE("reversing the loop negates the non-captured energy change")
{
    const auto acw = TheoryEngine(std::make_shared<RectangleCycle>(rectangle(LoopDirection::anticlockwise))).predict();
    const auto cw = TheoryEngine(std::make_shared<RectangleCycle>(rectangle(LoopDirection::clockwise))).predict();
    CHECK(acw.ln_e_nc == doctest::Approx(-cw.ln_e_nc).epsilon(1e-10));
    CHECK(acw.loop_area == doctest::Approx(-cw.loop_area).epsilon(1e-10));
}

TEST_CASE("growth rate is non-negative on random admissible protocols")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int tried = 0;
    int accepted = 0;
    while (accepted < 100 && tried < 10000) {
        ++tried;
        std::shared_ptr<const Protocol> proto;
        try {
            if (u(rng) < 0.5) {
                SinusoidalParams p;
                p.a = 0.8 * (u(rng) - 0.5);
                p.b = 1.6 * (u(rng) - 0.5);
                p.c = 0.95 * u(rng);
                p.tan_theta = 0.05 * u(rng);
                proto = sinusoidal(p);
            } else {
                RectangleParams p;
                p.w0 = 0.05 + 0.5 * u(rng);
                p.w1 = p.w0 + (1.0 - p.w0) * (0.05 + 0.95 * u(rng));
                p.h0 = 0.1 + 2 * u(rng);
                p.h1 = p.h0 + 0.1 + 4 * u(rng);
                p.tan_theta = 0.9 * p.w0 / p.h1 * u(rng);
                p.direction = u(rng) < 0.5 ? LoopDirection::anticlockwise : LoopDirection::clockwise;
                p.period = 10.0;
                proto = std::make_shared<RectangleCycle>(p);
            }
        } catch (const ShapeError&) {
            continue;
        }
        TheoryOptions o;
        o.panels = 2000;
        const TheoryEngine e(proto, o);
        if (!e.single_window())
            continue;
        ++accepted;
        INFO(proto->to_json());
        CHECK(e.growth_rate() >= -1e-10);
    }
    CHECK(accepted == 100);
}

TEST_CASE("single-parameter protocols do not accelerate")
{
    SinusoidalParams nu_only;
    nu_only.a = 0.0;
    nu_only.b = 0.0;
    const auto p = TheoryEngine(sinusoidal(nu_only)).predict();
    CHECK(std::abs(p.m1) < 1e-10);
    CHECK(std::abs(p.ln_e_nc) < 1e-10);
    CHECK(std::abs(p.loop_area) < 1e-10);

    SinusoidalParams frozen_hole;
    frozen_hole.c = 0.0;
    const TheoryEngine e(sinusoidal(frozen_hole));
    CHECK(e.capture_windows().empty());
    const auto q = e.predict();
    CHECK(std::abs(q.m1) < 1e-10);
    CHECK(q.p_nc == 1.0);
    CHECK(std::abs(q.loop_area) < 1e-10);
}

TEST_CASE("the two routes to m1 agree")
{
    const TheoryEngine e(sinusoidal());
    const auto [i1, i2] = e.growth_rate_by_parts();
    CHECK(i1 + i2 == doctest::Approx(e.growth_rate()).epsilon(1e-7));
    const TheoryEngine r(std::make_shared<RectangleCycle>(rectangle(LoopDirection::clockwise)));
    const auto [j1, j2] = r.growth_rate_by_parts();
    CHECK(j1 + j2 == doctest::Approx(r.growth_rate()).epsilon(1e-7));
}

TEST_CASE("the predicted distribution has mean m1 and unit mass")
{
    const TheoryEngine e(sinusoidal());
    const auto d = e.predicted_distribution(100);
    CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.mean() == doctest::Approx(e.growth_rate()).epsilon(1e-6));
    CHECK(d.histogram.integral() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.atom_value == doctest::Approx(-0.422465).epsilon(1e-5));
    CHECK(d.atom_mass == doctest::Approx(0.38474).epsilon(1e-4));
}

TEST_CASE("captured energy curve")
{
    const TheoryEngine e(sinusoidal());
    // a particle captured at the end of the window never left the chaotic sea
    CHECK(e.energy_captured(pi - 1e-9) == doctest::Approx(-0.422465).epsilon(1e-5));
    // one captured at the start has E1/E0 = g(0)^-1 times the complementary flux
    CHECK(std::isfinite(e.energy_captured(1e-9)));
    CHECK(e.capture_probability(0.0) == doctest::Approx(1.0));
    double prev = 1.0;
    for (int i = 1; i <= 100; ++i) {
        const double p = e.capture_probability(pi * i / 100.0);
        CHECK(p <= prev + 1e-14);
        prev = p;
    }
}

TEST_CASE("multi-window protocols are rejected by the single-window operations")
{
    SinusoidalParams two;
    two.nu_rate = 1.0;
    two.tan_theta = 0.05;
    const TheoryEngine e(sinusoidal(two));
    CHECK(e.capture_windows().size() == 2);
    CHECK_THROWS_AS(e.predict(), TopologyError);
    CHECK_THROWS_AS(e.energy_captured(0.3), TopologyError);
    CHECK(std::isfinite(e.energy_noncaptured()));
    CHECK(std::isfinite(e.loop_area(1000)));
}
