#include "mushroom/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mushroom {

double Histogram::integral() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < bins(); ++i)
        sum += density[i] * width(i);
    return sum;
}

std::size_t Histogram::mode(std::size_t first, std::size_t last) const
{
    last = std::min(last, bins());
    std::size_t best = first;
    for (std::size_t i = first; i < last; ++i)
        if (density[i] > density[best])
            best = i;
    return best;
}

namespace {

void check_range(std::size_t bins, double lo, double hi)
{
    if (bins == 0)
        throw std::invalid_argument("histogram: bin count must be positive");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("histogram: empty or non-finite range");
}

std::size_t bin_of(double v, std::size_t bins, double lo, double hi)
{
    double u = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(u > 0.0))
        return 0;
    return std::min(bins - 1, static_cast<std::size_t>(u));
}

std::vector<double> uniform_edges(std::size_t bins, double lo, double hi)
{
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    edges.back() = hi;
    return edges;
}

void normalize(Histogram& h, double total)
{
    if (total <= 0.0)
        return;
    for (std::size_t i = 0; i < h.bins(); ++i)
        h.density[i] /= total * h.width(i);
}

}  // namespace

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi)
{
    check_range(bins, lo, hi);
    Histogram h;
    h.edges = uniform_edges(bins, lo, hi);
    h.density.assign(bins, 0.0);
    for (double v : values)
        h.density[bin_of(v, bins, lo, hi)] += 1.0;
    h.samples = values.size();
    normalize(h, static_cast<double>(values.size()));
    return h;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins)
{
    double lo = 0.0;
    double hi = 0.0;
    if (!values.empty()) {
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
    }
    if (!(hi > lo)) {
        double pad = std::max(1e-6, 1e-6 * std::abs(lo));
        lo -= pad;
        hi += pad;
    }
    return make_histogram(values, bins, lo, hi);
}

Histogram make_weighted_histogram(std::span<const double> values, std::span<const double> weights,
                                  std::size_t bins, double lo, double hi)
{
    check_range(bins, lo, hi);
    if (values.size() != weights.size())
        throw std::invalid_argument("histogram: values and weights differ in length");
    Histogram h;
    h.edges = uniform_edges(bins, lo, hi);
    h.density.assign(bins, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        h.density[bin_of(values[i], bins, lo, hi)] += weights[i];
        total += weights[i];
    }
    normalize(h, total);
    return h;
}

}  // namespace mushroom
