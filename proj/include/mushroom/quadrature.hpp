#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mushroom {

struct QuadratureResult
{
    double value = 0.0;
    /// Richardson estimate |S(2n) - S(n)| / 15 of the error in value.
    double error_estimate = 0.0;
};

/// Composite Simpson rule with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, std::size_t panels)
{
    if (panels == 0 || panels % 2 != 0)
        throw std::invalid_argument("simpson: panel count must be even and positive");
    const double h = (b - a) / static_cast<double>(panels);
    auto eval = [&](double x) {
        double v = f(x);
        if (!std::isfinite(v))
            throw std::domain_error("simpson: non-finite integrand value");
        return v;
    };
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < panels; ++i) {
        double x = a + h * static_cast<double>(i);
        (i % 2 ? odd : even) += eval(x);
    }
    return h / 3.0 * (eval(a) + 4.0 * odd + 2.0 * even + eval(b));
}

/// Simpson at 2n panels, with the n-panel result used for the error bound.
template <class F>
QuadratureResult simpson_checked(F&& f, double a, double b, std::size_t panels)
{
    double coarse = simpson(f, a, b, panels);
    double fine = simpson(f, a, b, 2 * panels);
    return {fine, std::abs(fine - coarse) / 15.0};
}

}  // namespace mushroom
