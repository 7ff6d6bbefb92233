#pragma once

#include "mushroom/geometry.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mushroom {

/// Time derivatives of the shape parameters. tan_theta never moves.
struct WallRates
{
    double dr = 0.0;
    double dw = 0.0;
    double dh = 0.0;
};

struct Kinematics
{
    MushroomShape shape;
    WallRates rates;
};

/// Global bounds on the wall motion over a whole period. The collision
/// solver builds its root brackets from these, so they must be true upper
/// bounds (not estimates).
struct MotionBounds
{
    double r_max = 0.0;
    double dr_max = 0.0;   ///< max |dr/dt|
    double ddr_max = 0.0;  ///< max |d2r/dt2|
    double ddw_max = 0.0;  ///< max |d2w/dt2|
    double ddh_max = 0.0;  ///< max |d2h/dt2|
};

struct TimeInterval
{
    double begin = 0.0;
    double end = 0.0;
};

/// Time-periodic law for the mushroom parameters.
///
/// Implementations provide kinematics_at() and motion_bounds(); everything
/// else has a generic default. By convention nu(t) = w/r is maximal at t = 0.
class Protocol
{
public:
    virtual ~Protocol() = default;

    virtual double period() const = 0;
    virtual Kinematics kinematics_at(double t) const = 0;
    virtual MotionBounds motion_bounds() const = 0;

    /// Times in [0, T) where the law is not smooth. Default: none.
    virtual std::vector<double> breakpoints() const { return {}; }

    /// JSON descriptor that round-trips through protocol_from_json().
    virtual std::string to_json() const = 0;

    /// inf{t' > t : nu(t') >= nu(t)}; t itself where nu is not decreasing.
    /// The default scans forward and bisects.
    virtual double release_time(double t) const;

    /// Maximal intervals within [0, T) on which nu decreases. The default
    /// scans the sign of d(nu)/dt and bisects the ends.
    virtual std::vector<TimeInterval> capture_intervals() const;

    MushroomShape shape_at(double t) const { return kinematics_at(t).shape; }
    WallRates wall_velocities(double t) const { return kinematics_at(t).rates; }
    double nu_at(double t) const;
    double d_nu(double t) const;

    /// Generic implementations, exposed so that closed-form overrides can be
    /// checked against them.
    double release_time_by_search(double t) const;
    std::vector<TimeInterval> capture_intervals_by_scan() const;

    /// Checks shape admissibility over the period and the nu-maximal-at-zero
    /// phase convention. Throws ShapeError.
    void validate(std::size_t samples = 4096) const;
};

/// All walls frozen.
class StaticProtocol final : public Protocol
{
public:
    explicit StaticProtocol(MushroomShape shape, double period = 1.0);

    double period() const override { return period_; }
    Kinematics kinematics_at(double) const override { return {shape_, {}}; }
    MotionBounds motion_bounds() const override;
    std::string to_json() const override;
    double release_time(double t) const override { return t; }
    std::vector<TimeInterval> capture_intervals() const override { return {}; }

private:
    MushroomShape shape_;
    double period_;
};

enum class LoopDirection { anticlockwise, clockwise };

struct RectangleParams
{
    double r = 1.0;
    double w0 = 0.3;
    double w1 = 1.0;
    double h0 = 2.0;
    double h1 = 6.0;
    double tan_theta = 0.04016414896719182;  // tan(2.3 deg)
    LoopDirection direction = LoopDirection::anticlockwise;
    double period = 1.0;
};

/// Fixed cap, (w, h) traversing the rectangle with corners w0 < w1, h0 < h1,
/// starting at (w1, h1). Each leg lasts T/4 and follows a bang-bang profile:
/// constant acceleration over the first half-leg and its negation over the
/// second, so the wall velocity vanishes at the corners.
class RectangleCycle final : public Protocol
{
public:
    explicit RectangleCycle(RectangleParams params);

    /// Period for which the fastest wall moves at ratio * sqrt(2 e0).
    static double adiabatic_period(const RectangleParams& params, double e0, double ratio = 1e-3);

    const RectangleParams& params() const { return params_; }

    double period() const override { return params_.period; }
    Kinematics kinematics_at(double t) const override;
    MotionBounds motion_bounds() const override;
    std::vector<double> breakpoints() const override;
    std::string to_json() const override;
    double release_time(double t) const override;
    std::vector<TimeInterval> capture_intervals() const override;

    /// Index of the leg (0..3) containing t, after reduction modulo T.
    int leg_at(double t) const;

private:
    struct Corner
    {
        double w;
        double h;
    };
    Corner corner(int i) const;

    RectangleParams params_;
};

struct SinusoidalParams
{
    double r0 = 1.0;
    double h0 = 1.0;
    double a = 0.5;
    double b = -0.5;
    double c = 0.8;
    double tan_theta = 0.1111;
    double time_scale = 1.0;
    /// nu = 1 - c sin^2(nu_rate t / s). 0.5 gives a single decreasing branch
    /// of nu per period; 1 gives two.
    double nu_rate = 0.5;
};

/// r = r0 + a sin(t/s), h = h0 + b sin(t/s), nu = 1 - c sin^2(k t/s),
/// w = r nu, period 2 pi s.
class SinusoidalCycle final : public Protocol
{
public:
    explicit SinusoidalCycle(SinusoidalParams params);

    const SinusoidalParams& params() const { return params_; }

    double period() const override;
    Kinematics kinematics_at(double t) const override;
    MotionBounds motion_bounds() const override;
    std::string to_json() const override;
    double release_time(double t) const override;
    std::vector<TimeInterval> capture_intervals() const override;

private:
    SinusoidalParams params_;
    int harmonic_ = 1;  // 2 * nu_rate
};

/// Parses the protocol JSON schema ("kind": "rectangle" | "sinusoidal" |
/// "static"). Throws ShapeError on schema or admissibility violations.
/// A rectangle without "period" needs default_e0 > 0 to derive one.
std::shared_ptr<const Protocol> protocol_from_json(std::string_view json, double default_e0 = 0.0);

}  // namespace mushroom
