#include "mushroom/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mushroom {

using std::numbers::pi;

namespace {

// Reduce t into [0, period).
double reduce(double t, double period)
{
    double tau = std::fmod(t, period);
    if (tau < 0.0)
        tau += period;
    if (tau >= period)
        tau = 0.0;
    return tau;
}

}  // namespace

//---------------------------------------------------------------------------//
// Protocol
//---------------------------------------------------------------------------//

double Protocol::nu_at(double t) const
{
    return shape_at(t).nu();
}

double Protocol::d_nu(double t) const
{
    auto k = kinematics_at(t);
    const auto& s = k.shape;
    return (s.r * k.rates.dw - s.w * k.rates.dr) / (s.r * s.r);
}

double Protocol::release_time(double t) const
{
    return release_time_by_search(t);
}

std::vector<TimeInterval> Protocol::capture_intervals() const
{
    return capture_intervals_by_scan();
}

double Protocol::release_time_by_search(double t) const
{
    if (d_nu(t) >= 0.0)
        return t;
    const double level = nu_at(t);
    const double T = period();
    constexpr int steps = 2048;
    const double dt = T / steps;

    double lo = t;
    double hi = t + T;
    bool found = false;
    for (int k = 1; k <= steps; ++k) {
        double tk = t + k * dt;
        if (nu_at(tk) >= level) {
            hi = tk;
            found = true;
            break;
        }
        lo = tk;
    }
    if (!found)
        return t + T;
    // nu(lo) < level <= nu(hi)
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (nu_at(mid) >= level)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<TimeInterval> Protocol::capture_intervals_by_scan() const
{
    const double T = period();
    constexpr int samples = 8192;
    std::vector<double> grid;
    grid.reserve(samples + 16);
    for (int i = 0; i < samples; ++i)
        grid.push_back(T * i / samples);
    for (double b : breakpoints())
        grid.push_back(b);
    grid.push_back(T);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> rate(grid.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rate[i] = d_nu(grid[i]);
        scale = std::max(scale, std::abs(rate[i]));
    }
    if (scale == 0.0)
        return {};
    const double eps = 1e-10 * scale;
    auto decreasing = [&](double t) { return d_nu(t) < -eps; };

    auto refine = [&](double lo, double hi, bool lo_state) {
        for (int it = 0; it < 100 && hi - lo > 1e-14 * T; ++it) {
            double mid = 0.5 * (lo + hi);
            if (decreasing(mid) == lo_state)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<TimeInterval> out;
    bool inside = rate[0] < -eps;
    double begin = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        bool now = rate[i] < -eps;
        if (now != inside) {
            double edge = refine(grid[i - 1], grid[i], inside);
            if (now)
                begin = edge;
            else
                out.push_back({begin, edge});
            inside = now;
        }
    }
    if (inside)
        out.push_back({begin, T});
    // Snap ends onto nearby breakpoints, where the law changes character.
    for (auto& iv : out) {
        for (double b : breakpoints()) {
            if (std::abs(iv.begin - b) < 1e-9 * T)
                iv.begin = b;
            if (std::abs(iv.end - b) < 1e-9 * T)
                iv.end = b;
        }
        if (std::abs(iv.end - T) < 1e-9 * T)
            iv.end = T;
    }
    return out;
}

void Protocol::validate(std::size_t samples) const
{
    const double T = period();
    if (!(T > 0.0) || !std::isfinite(T))
        throw ShapeError("period > 0 violated");
    std::vector<double> times;
    for (std::size_t i = 0; i < samples; ++i)
        times.push_back(T * static_cast<double>(i) / static_cast<double>(samples));
    for (double b : breakpoints())
        times.push_back(b);
    const double nu0 = nu_at(0.0);
    for (double t : times) {
        auto shape = shape_at(t);
        try {
            shape.validate();
        } catch (const ShapeError& e) {
            std::ostringstream msg;
            msg << e.what() << " at t=" << t;
            throw ShapeError(msg.str());
        }
        if (shape.nu() > nu0 + 1e-12) {
            std::ostringstream msg;
            msg << "nu maximal at t=0 violated (nu(" << t << ")=" << shape.nu() << " > nu(0)=" << nu0 << ")";
            throw ShapeError(msg.str());
        }
    }
}

//---------------------------------------------------------------------------//
// StaticProtocol
//---------------------------------------------------------------------------//

StaticProtocol::StaticProtocol(MushroomShape shape, double period)
    : shape_(shape), period_(period)
{
    shape_.validate();
    if (!(period_ > 0.0))
        throw ShapeError("period > 0 violated");
}

MotionBounds StaticProtocol::motion_bounds() const
{
    MotionBounds b;
    b.r_max = shape_.r;
    return b;
}

//---------------------------------------------------------------------------//
// RectangleCycle
//---------------------------------------------------------------------------//

RectangleCycle::RectangleCycle(RectangleParams params) : params_(params)
{
    const auto& p = params_;
    if (!(p.w0 < p.w1))
        throw ShapeError("w0 < w1 violated");
    if (!(p.h0 < p.h1))
        throw ShapeError("h0 < h1 violated");
    if (!(p.period > 0.0) || !std::isfinite(p.period))
        throw ShapeError("period > 0 violated");
    // Admissibility constraints are linear in (w, h), so the corners decide.
    for (int i = 0; i < 4; ++i) {
        auto c = corner(i);
        MushroomShape{p.r, c.w, c.h, p.tan_theta}.validate();
    }
}

double RectangleCycle::adiabatic_period(const RectangleParams& p, double e0, double ratio)
{
    if (!(e0 > 0.0) || !(ratio > 0.0))
        throw ShapeError("E0 > 0 violated");
    // Peak bang-bang speed over a leg of length D and duration T/4 is 8D/T.
    double longest = std::max(p.w1 - p.w0, p.h1 - p.h0);
    return 8.0 * longest / (ratio * std::sqrt(2.0 * e0));
}

RectangleCycle::Corner RectangleCycle::corner(int i) const
{
    const auto& p = params_;
    static constexpr int anti[4][2] = {{1, 1}, {0, 1}, {0, 0}, {1, 0}};
    static constexpr int clock[4][2] = {{1, 1}, {1, 0}, {0, 0}, {0, 1}};
    const auto& sel = p.direction == LoopDirection::anticlockwise ? anti[i & 3] : clock[i & 3];
    return {sel[0] ? p.w1 : p.w0, sel[1] ? p.h1 : p.h0};
}

int RectangleCycle::leg_at(double t) const
{
    const double quarter = params_.period / 4.0;
    return std::min(3, static_cast<int>(reduce(t, params_.period) / quarter));
}

Kinematics RectangleCycle::kinematics_at(double t) const
{
    const double quarter = params_.period / 4.0;
    const double tau = reduce(t, params_.period);
    const int leg = std::min(3, static_cast<int>(tau / quarter));
    const double sigma = (tau - leg * quarter) / quarter;

    double s, ds;
    if (sigma < 0.5) {
        s = 2.0 * sigma * sigma;
        ds = 4.0 * sigma;
    } else {
        double rem = 1.0 - sigma;
        s = 1.0 - 2.0 * rem * rem;
        ds = 4.0 * rem;
    }
    const Corner from = corner(leg);
    const Corner to = corner(leg + 1);

    Kinematics k;
    k.shape.r = params_.r;
    k.shape.tan_theta = params_.tan_theta;
    k.shape.w = from.w + (to.w - from.w) * s;
    k.shape.h = from.h + (to.h - from.h) * s;
    k.rates.dw = (to.w - from.w) * ds / quarter;
    k.rates.dh = (to.h - from.h) * ds / quarter;
    return k;
}

MotionBounds RectangleCycle::motion_bounds() const
{
    const auto& p = params_;
    const double quarter = p.period / 4.0;
    MotionBounds b;
    b.r_max = p.r;
    b.ddw_max = 4.0 * (p.w1 - p.w0) / (quarter * quarter);
    b.ddh_max = 4.0 * (p.h1 - p.h0) / (quarter * quarter);
    return b;
}

std::vector<double> RectangleCycle::breakpoints() const
{
    std::vector<double> out;
    for (int i = 0; i < 8; ++i)
        out.push_back(params_.period * i / 8.0);
    return out;
}

double RectangleCycle::release_time(double t) const
{
    const double T = params_.period;
    const double quarter = T / 4.0;
    const double tau = reduce(t, T);
    const double base = t - tau;
    const int capture_leg = params_.direction == LoopDirection::anticlockwise ? 0 : 1;
    const int leg = std::min(3, static_cast<int>(tau / quarter));
    if (leg != capture_leg)
        return t;
    const double sigma = (tau - leg * quarter) / quarter;
    if (sigma <= 0.0)
        return t;
    // The release leg mirrors the capture leg: s(1 - sigma) = 1 - s(sigma).
    return base + (capture_leg + 2) * quarter + (1.0 - sigma) * quarter;
}

std::vector<TimeInterval> RectangleCycle::capture_intervals() const
{
    const double quarter = params_.period / 4.0;
    const int leg = params_.direction == LoopDirection::anticlockwise ? 0 : 1;
    return {{leg * quarter, (leg + 1) * quarter}};
}

//---------------------------------------------------------------------------//
// SinusoidalCycle
//---------------------------------------------------------------------------//

namespace {

int nu_harmonic(double nu_rate)
{
    double m = 2.0 * nu_rate;
    if (!(m >= 1.0) || std::abs(m - std::round(m)) > 1e-12)
        throw ShapeError("2*nu_rate a positive integer violated");
    return static_cast<int>(std::round(m));
}

}  // namespace

SinusoidalCycle::SinusoidalCycle(SinusoidalParams params) : params_(params)
{
    const auto& p = params_;
    if (!(p.time_scale > 0.0) || !std::isfinite(p.time_scale))
        throw ShapeError("time_scale > 0 violated");
    if (!(p.c >= 0.0 && p.c <= 1.0))
        throw ShapeError("0 <= c <= 1 violated");
    if (!(p.r0 - std::abs(p.a) > 0.0))
        throw ShapeError("r0 > |a| violated");
    if (!(p.h0 - std::abs(p.b) >= 0.0))
        throw ShapeError("h0 >= |b| violated");
    harmonic_ = nu_harmonic(p.nu_rate);
    validate();
}

double SinusoidalCycle::period() const
{
    return 2.0 * pi * params_.time_scale;
}

Kinematics SinusoidalCycle::kinematics_at(double t) const
{
    const auto& p = params_;
    const double inv_s = 1.0 / p.time_scale;
    const double theta = t * inv_s;
    const double sn = std::sin(theta);
    const double cs = std::cos(theta);

    // nu = 1 - c sin^2(k theta) = 1 - c (1 - cos(m theta)) / 2, m = 2k
    double sin_m, cos_m;
    const int m = harmonic_;
    if (m == 1) {
        sin_m = sn;
        cos_m = cs;
    } else if (m == 2) {
        sin_m = 2.0 * sn * cs;
        cos_m = 1.0 - 2.0 * sn * sn;
    } else {
        sin_m = std::sin(m * theta);
        cos_m = std::cos(m * theta);
    }
    const double nu = 1.0 - 0.5 * p.c * (1.0 - cos_m);
    const double dnu = -0.5 * p.c * m * sin_m * inv_s;

    Kinematics k;
    k.shape.r = p.r0 + p.a * sn;
    k.shape.h = p.h0 + p.b * sn;
    k.shape.w = k.shape.r * nu;
    k.shape.tan_theta = p.tan_theta;
    k.rates.dr = p.a * cs * inv_s;
    k.rates.dh = p.b * cs * inv_s;
    k.rates.dw = k.rates.dr * nu + k.shape.r * dnu;
    return k;
}

MotionBounds SinusoidalCycle::motion_bounds() const
{
    const auto& p = params_;
    const double s2 = p.time_scale * p.time_scale;
    const double m = harmonic_;
    const double abs_a = std::abs(p.a);
    const double dnu_max = 0.5 * p.c * m / p.time_scale;
    const double ddnu_max = 0.5 * p.c * m * m / s2;

    MotionBounds b;
    b.r_max = p.r0 + abs_a;
    b.dr_max = abs_a / p.time_scale;
    b.ddr_max = abs_a / s2;
    b.ddh_max = std::abs(p.b) / s2;
    // w'' = r'' nu + 2 r' nu' + r nu'', with 0 <= nu <= 1
    b.ddw_max = b.ddr_max + 2.0 * b.dr_max * dnu_max + b.r_max * ddnu_max;
    return b;
}

double SinusoidalCycle::release_time(double t) const
{
    if (harmonic_ != 1 || params_.c == 0.0)
        return release_time_by_search(t);
    const double T = period();
    const double tau = reduce(t, T);
    if (tau <= 0.0 || tau >= 0.5 * T)
        return t;
    return (t - tau) + T - tau;
}

std::vector<TimeInterval> SinusoidalCycle::capture_intervals() const
{
    if (params_.c == 0.0)
        return {};
    const int m = harmonic_;
    const double T = period();
    std::vector<TimeInterval> out;
    for (int j = 0; j < m; ++j)
        out.push_back({T * j / m, T * (j + 0.5) / m});
    return out;
}

}  // namespace mushroom
