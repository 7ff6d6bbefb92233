#include "mushroom/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mushroom {

using std::numbers::pi;

const char* to_string(Region region)
{
    switch (region) {
    case Region::cap:
        return "cap";
    case Region::stem:
        return "stem";
    case Region::outside:
        return "outside";
    }
    return "unknown";
}

MushroomShape MushroomShape::make(double r, double w, double h, double tan_theta)
{
    MushroomShape shape{r, w, h, tan_theta};
    shape.validate();
    return shape;
}

void MushroomShape::validate() const
{
    auto fail = [](const std::string& what) { throw ShapeError(what + " violated"); };
    if (!std::isfinite(r) || !std::isfinite(w) || !std::isfinite(h) || !std::isfinite(tan_theta))
        fail("finite parameters");
    if (!(r > 0.0))
        fail("r > 0");
    if (!(h >= 0.0))
        fail("h >= 0");
    if (!(w >= 0.0))
        fail("w >= 0");
    if (!(w <= r)) {
        std::ostringstream msg;
        msg << "w <= r (w=" << w << ", r=" << r << ")";
        fail(msg.str());
    }
    // A tiny relative slack absorbs round-off at shapes built exactly on
    // the boundary w = h tan(theta).
    if (tan_theta > 0.0 && w < h * tan_theta * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "w >= h*tan_theta (w=" << w << ", h*tan_theta=" << h * tan_theta << ")";
        fail(msg.str());
    }
}

double delta(double nu)
{
    if (!(nu >= 0.0 && nu <= 1.0))
        throw std::domain_error("delta: nu must lie in [0, 1]");
    return 2.0 / pi * (std::acos(nu) - nu * std::sqrt(1.0 - nu * nu));
}

double delta_derivative(double nu)
{
    if (!(nu >= 0.0 && nu <= 1.0))
        throw std::domain_error("delta_derivative: nu must lie in [0, 1]");
    return -4.0 / pi * std::sqrt(1.0 - nu * nu);
}

double cap_area(const MushroomShape& shape)
{
    return 0.5 * pi * shape.r * shape.r;
}

double stem_area(const MushroomShape& shape)
{
    return 2.0 * shape.w * shape.h - shape.h * shape.h * shape.tan_theta;
}

double area(const MushroomShape& shape)
{
    return cap_area(shape) + stem_area(shape);
}

PhaseVolumes volumes(const MushroomShape& shape)
{
    shape.validate();
    PhaseVolumes v;
    v.v_cap = pi * pi * shape.r * shape.r;
    v.v_stem = 2.0 * pi * stem_area(shape);
    v.v_ell = delta(shape.nu()) * v.v_cap;
    v.v_cha = v.v_cap + v.v_stem - v.v_ell;
    return v;
}

Region contains(const MushroomShape& shape, Vec2 p)
{
    if (p.y >= 0.0) {
        if (p.x * p.x + p.y * p.y <= shape.r * shape.r)
            return Region::cap;
        return Region::outside;
    }
    if (p.y >= -shape.h && std::abs(p.x) <= shape.w + p.y * shape.tan_theta)
        return Region::stem;
    return Region::outside;
}

}  // namespace mushroom
