#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mushroom {

/// Relative-frequency density over contiguous bins.
struct Histogram
{
    std::vector<double> edges;    ///< bins + 1 strictly increasing values
    std::vector<double> density;  ///< mass / (total mass * bin width)
    std::size_t samples = 0;      ///< number of values binned (0 for weighted input)

    std::size_t bins() const { return density.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    /// Sum of density * width; 1 for any non-empty histogram.
    double integral() const;
    /// Index of the bin with the largest density among [first, last).
    std::size_t mode(std::size_t first, std::size_t last) const;
};

/// Equal-width bins spanning [lo, hi]. Values outside are clamped into the
/// end bins. Throws std::invalid_argument when bins == 0 or hi <= lo.
Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

/// Bins over the observed range of the values; a degenerate range is widened
/// symmetrically.
Histogram make_histogram(std::span<const double> values, std::size_t bins);

/// Weighted variant: deposits weights[i] at values[i].
Histogram make_weighted_histogram(std::span<const double> values, std::span<const double> weights,
                                  std::size_t bins, double lo, double hi);

}  // namespace mushroom
