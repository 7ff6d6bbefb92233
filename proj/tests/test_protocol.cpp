#include "mushroom/protocol.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace mushroom;
using std::numbers::pi;

namespace {

RectangleParams rect(LoopDirection d)
{
    RectangleParams p;
    p.direction = d;
    p.period = 20.0;
    return p;
}

std::vector<std::shared_ptr<const Protocol>> sample_protocols()
{
    SinusoidalParams two;
    two.nu_rate = 1.0;
    two.tan_theta = 0.05;
    SinusoidalParams flipped;
    flipped.a = -0.5;
    flipped.b = 0.5;
    SinusoidalParams slow;
    slow.time_scale = 3.0;
    return {std::make_shared<RectangleCycle>(rect(LoopDirection::anticlockwise)),
            std::make_shared<RectangleCycle>(rect(LoopDirection::clockwise)),
            std::make_shared<SinusoidalCycle>(SinusoidalParams{}),
            std::make_shared<SinusoidalCycle>(two),
            std::make_shared<SinusoidalCycle>(flipped),
            std::make_shared<SinusoidalCycle>(slow)};
}

bool near_breakpoint(const Protocol& p, double t)
{
    const double T = p.period();
    const double tr = t - T * std::floor(t / T);
    for (double b : p.breakpoints())
        if (std::abs(tr - b) < 1e-4 * T || std::abs(tr - b - T) < 1e-4 * T)
            return true;
    return false;
}

}  // namespace

TEST_CASE("protocols are periodic")
{
    for (const auto& p : sample_protocols()) {
        const double T = p->period();
        for (double t : {0.0, 0.1 * T, 0.37 * T, 0.8 * T}) {
            const auto a = p->kinematics_at(t);
            const auto b = p->kinematics_at(t + T);
            const auto c = p->kinematics_at(t + 3 * T);
            CHECK(a.shape.r == doctest::Approx(b.shape.r).epsilon(1e-12));
            CHECK(a.shape.w == doctest::Approx(c.shape.w).epsilon(1e-12));
            CHECK(a.shape.h == doctest::Approx(b.shape.h).epsilon(1e-12));
            CHECK(a.rates.dw == doctest::Approx(c.rates.dw).epsilon(1e-9).scale(1));
        }
    }
}

TEST_CASE("wall velocities match finite differences of the shape")
{
    std::mt19937_64 rng(8);
    for (const auto& p : sample_protocols()) {
        std::uniform_real_distribution<double> ut(0.0, p->period());
        int checked = 0;
        while (checked < 1000) {
            const double t = ut(rng);
            if (near_breakpoint(*p, t))
                continue;
            const double h = 1e-6 * p->period();
            const auto lo = p->shape_at(t - h);
            const auto hi = p->shape_at(t + h);
            const auto v = p->wall_velocities(t);
            const double scale = 1.0;
            CHECK(std::abs((hi.r - lo.r) / (2 * h) - v.dr) <= 1e-6 * std::max(scale, std::abs(v.dr)));
            CHECK(std::abs((hi.w - lo.w) / (2 * h) - v.dw) <= 1e-6 * std::max(scale, std::abs(v.dw)));
            CHECK(std::abs((hi.h - lo.h) / (2 * h) - v.dh) <= 1e-6 * std::max(scale, std::abs(v.dh)));
            ++checked;
        }
    }
}

TEST_CASE("motion bounds hold over the cycle")
{
    for (const auto& p : sample_protocols()) {
        const MotionBounds b = p->motion_bounds();
        const double T = p->period();
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double t = T * i / n;
            const auto k = p->kinematics_at(t);
            CHECK(k.shape.r <= b.r_max * (1 + 1e-12));
            CHECK(std::abs(k.rates.dr) <= b.dr_max * (1 + 1e-12) + 1e-15);
            if (near_breakpoint(*p, t))
                continue;
            const double h = 1e-5 * T;
            const auto lo = p->wall_velocities(t - h);
            const auto hi = p->wall_velocities(t + h);
            CHECK(std::abs(hi.dr - lo.dr) / (2 * h) <= b.ddr_max * (1 + 1e-4) + 1e-9);
            CHECK(std::abs(hi.dw - lo.dw) / (2 * h) <= b.ddw_max * (1 + 1e-4) + 1e-9);
            CHECK(std::abs(hi.dh - lo.dh) / (2 * h) <= b.ddh_max * (1 + 1e-4) + 1e-9);
        }
    }
}

TEST_CASE("nu is maximal at the start of the cycle")
{
    for (const auto& p : sample_protocols()) {
        const double nu0 = p->nu_at(0.0);
        for (int i = 1; i < 1000; ++i)
            CHECK(p->nu_at(p->period() * i / 1000.0) <= nu0 + 1e-12);
    }
}

TEST_CASE("closed-form release times agree with the generic search")
{
    for (const auto& p : sample_protocols()) {
        const double T = p->period();
        for (int i = 0; i < 400; ++i) {
            const double t = T * (i + 0.5) / 400.0;
            const double fast = p->release_time(t);
            const double slow = p->release_time_by_search(t);
            INFO("t = " << t);
            CHECK(fast == doctest::Approx(slow).epsilon(1e-8).scale(T));
            CHECK(fast >= t);
            if (p->d_nu(t) < 0.0)
                CHECK(p->nu_at(fast) == doctest::Approx(p->nu_at(t)).epsilon(1e-10).scale(1));
        }
    }
}

TEST_CASE("release time is the identity where nu does not decrease")
{
    const SinusoidalCycle s(SinusoidalParams{});
    CHECK(s.release_time(4.0) == 4.0);
    CHECK(s.release_time(1.0) == doctest::Approx(2 * pi - 1.0));
    const RectangleCycle r(rect(LoopDirection::anticlockwise));
    CHECK(r.release_time(7.0) == 7.0);     // h leg
    CHECK(r.release_time(1.0) == doctest::Approx(14.0));  // mirrored w leg
}

TEST_CASE("capture intervals agree with the scan")
{
    for (const auto& p : sample_protocols()) {
        const auto fast = p->capture_intervals();
        const auto slow = p->capture_intervals_by_scan();
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].begin == doctest::Approx(slow[i].begin).epsilon(1e-8).scale(p->period()));
            CHECK(fast[i].end == doctest::Approx(slow[i].end).epsilon(1e-8).scale(p->period()));
        }
    }
    SinusoidalParams two;
    two.nu_rate = 1.0;
    two.tan_theta = 0.05;
    CHECK(SinusoidalCycle(two).capture_intervals().size() == 2);
    CHECK(SinusoidalCycle(SinusoidalParams{}).capture_intervals().size() == 1);
    const auto acw = RectangleCycle(rect(LoopDirection::anticlockwise)).capture_intervals();
    const auto cw = RectangleCycle(rect(LoopDirection::clockwise)).capture_intervals();
    CHECK(acw.front().begin == 0.0);
    CHECK(acw.front().end == doctest::Approx(5.0));
    CHECK(cw.front().begin == doctest::Approx(5.0));
    CHECK(cw.front().end == doctest::Approx(10.0));
    SinusoidalParams flat;
    flat.c = 0.0;
    CHECK(SinusoidalCycle(flat).capture_intervals().empty());
}

TEST_CASE("rectangle corners and legs")
{
    const RectangleCycle r(rect(LoopDirection::anticlockwise));
    auto at = [&](double t) { return r.shape_at(t); };
    CHECK(at(0).w == doctest::Approx(1.0));
    CHECK(at(0).h == doctest::Approx(6.0));
    CHECK(at(5).w == doctest::Approx(0.3));
    CHECK(at(10).h == doctest::Approx(2.0));
    CHECK(at(15).w == doctest::Approx(1.0));
    CHECK(r.wall_velocities(5.0).dw == doctest::Approx(0.0).scale(1));
    CHECK(r.leg_at(21.0) == 0);
    CHECK(r.leg_at(12.0) == 2);

    const RectangleCycle c(rect(LoopDirection::clockwise));
    CHECK(c.shape_at(5).h == doctest::Approx(2.0));
    CHECK(c.shape_at(5).w == doctest::Approx(1.0));
    CHECK(c.shape_at(10).w == doctest::Approx(0.3));
}

TEST_CASE("adiabatic period gives the requested wall-speed ratio")
{
    RectangleParams p;
    const double e0 = 1e6;
    p.period = RectangleCycle::adiabatic_period(p, e0);
    const RectangleCycle r(p);
    const double v0 = std::sqrt(2 * e0);
    double umax = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto k = r.wall_velocities(p.period * i / 10000.0);
        umax = std::max({umax, std::abs(k.dw), std::abs(k.dh)});
    }
    CHECK(umax / v0 == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("invalid parameters are rejected")
{
    RectangleParams bad = rect(LoopDirection::anticlockwise);
    bad.w1 = 1.2;
    CHECK_THROWS_AS(RectangleCycle{bad}, ShapeError);
    bad = rect(LoopDirection::anticlockwise);
    bad.w0 = 0.1;  // 6 tan(2.3 deg) = 0.24 > 0.1
    CHECK_THROWS_AS(RectangleCycle{bad}, ShapeError);
    bad = rect(LoopDirection::anticlockwise);
    bad.period = 0.0;
    CHECK_THROWS_AS(RectangleCycle{bad}, ShapeError);

    SinusoidalParams s;
    s.a = 1.0;
    CHECK_THROWS_AS(SinusoidalCycle{s}, ShapeError);
    s = {};
    s.b = -1.5;
    CHECK_THROWS_AS(SinusoidalCycle{s}, ShapeError);
    s = {};
    s.c = 1.5;
    CHECK_THROWS_AS(SinusoidalCycle{s}, ShapeError);
    s = {};
    s.time_scale = -1;
    CHECK_THROWS_AS(SinusoidalCycle{s}, ShapeError);
    // the two-branch law narrows the stem below h tan(theta) near t = 4.34
    s = {};
    s.nu_rate = 1.0;
    CHECK_THROWS_AS(SinusoidalCycle{s}, ShapeError);
}

TEST_CASE("JSON descriptors round-trip")
{
    for (const auto& p : sample_protocols()) {
        const auto q = protocol_from_json(p->to_json());
        CHECK(q->period() == doctest::Approx(p->period()));
        for (double f : {0.0, 0.13, 0.5, 0.77}) {
            const double t = f * p->period();
            CHECK(q->shape_at(t).w == doctest::Approx(p->shape_at(t).w));
            CHECK(q->shape_at(t).h == doctest::Approx(p->shape_at(t).h));
            CHECK(q->shape_at(t).r == doctest::Approx(p->shape_at(t).r));
        }
        CHECK(q->to_json() == p->to_json());
    }
    const StaticProtocol st(MushroomShape::make(1, 0.5, 1, 0), 2.0);
    CHECK(protocol_from_json(st.to_json())->shape_at(0.3).w == 0.5);
}

TEST_CASE("JSON schema errors name the problem")
{
    auto message = [](const char* text, double e0 = 0.0) -> std::string {
        try {
            protocol_from_json(text, e0);
        } catch (const ShapeError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message("{").find("parse") != std::string::npos);
    CHECK(message(R"({"kind":"triangle"})").find("triangle") != std::string::npos);
    CHECK(message(R"({"kind":"sinusoidal","r0":1})").find("h0") != std::string::npos);
    const char* rect_no_period =
        R"({"kind":"rectangle","r":1,"w0":0.3,"w1":1,"h0":2,"h1":6,"tan_theta":0.04})";
    CHECK(message(rect_no_period).find("period") != std::string::npos);
    CHECK(message(rect_no_period, 1e6).empty());
    CHECK(message(R"({"kind":"rectangle","r":1,"w0":0.3,"w1":1,"h0":2,"h1":6,"tan_theta":0.04,
                      "period":1,"direction":"sideways"})")
              .find("direction") != std::string::npos);
    CHECK(message(R"({"kind":"static","r":1,"w":2,"h":1,"tan_theta":0})").find("w <= r") != std::string::npos);
}
