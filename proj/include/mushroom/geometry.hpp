#pragma once

#include <stdexcept>
#include <string>

namespace mushroom {

/// Raised when a billiard shape or protocol violates its admissibility
/// constraints. The message names the violated invariant.
class ShapeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;
};

enum class Region { cap, stem, outside };

const char* to_string(Region region);

/// Frozen tilted mushroom: a half-disk cap of radius r over a trapezoidal
/// stem of length h whose top half-width is w and whose walls are
/// x = +/-(w + y tan_theta) for -h <= y <= 0.
struct MushroomShape
{
    double r = 1.0;
    double w = 0.0;
    double h = 0.0;
    double tan_theta = 0.0;

    /// Validated construction; throws ShapeError.
    static MushroomShape make(double r, double w, double h, double tan_theta);

    /// Throws ShapeError naming the first violated invariant.
    void validate() const;

    /// Hole half-width relative to the cap radius, w/r.
    double nu() const { return w / r; }

    /// Half-width of the stem at its bottom end y = -h.
    double bottom_half_width() const { return w - h * tan_theta; }
};

/// Phase-space volumes of the unit-speed energy shell (H = 1/2).
struct PhaseVolumes
{
    double v_cap = 0.0;
    double v_stem = 0.0;
    double v_ell = 0.0;
    double v_cha = 0.0;
};

/// Fraction of the cap phase volume occupied by the elliptic island,
/// (2/pi)(acos nu - nu sqrt(1 - nu^2)). Throws std::domain_error outside [0,1].
double delta(double nu);

/// d(delta)/d(nu) = -(4/pi) sqrt(1 - nu^2).
double delta_derivative(double nu);

double area(const MushroomShape& shape);
double cap_area(const MushroomShape& shape);
double stem_area(const MushroomShape& shape);

PhaseVolumes volumes(const MushroomShape& shape);

/// Boundary points count as inside; the shared segment y = 0, |x| <= w is
/// reported as cap.
Region contains(const MushroomShape& shape, Vec2 point);

}  // namespace mushroom
