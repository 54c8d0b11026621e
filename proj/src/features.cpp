#include "pedirl/features.hpp"

#include <cmath>
#include <stdexcept>

namespace pedirl {

Histogram4 shell_histogram(const SemanticGrid& grid, const Point2& p, double radius,
                           int samples) {
    if (radius <= 0.0) throw std::invalid_argument("shell_histogram: radius must be positive");
    if (samples <= 0) throw std::invalid_argument("shell_histogram: samples must be positive");

    std::array<int, kNumClasses> counts{};
    for (int m = 0; m < samples; ++m) {
        const double a = 2.0 * M_PI * m / samples;
        const Point2 q{p.x + radius * std::cos(a), p.y + radius * std::sin(a)};
        ++counts[static_cast<int>(label_at(grid, q))];
    }
    Histogram4 hist{};
    for (int c = 0; c < kNumClasses; ++c)
        hist[c] = static_cast<double>(counts[c]) / static_cast<double>(samples);
    return hist;
}

FeatureVector feature_vector(const SemanticGrid& grid, const Point2& p, double r1, double r2,
                             int samples) {
    if (r1 <= 0.0 || r1 >= r2)
        throw std::invalid_argument("feature_vector: requires 0 < r1 < r2");

    FeatureVector psi;
    const SemanticClass local = label_at(grid, p);
    psi.v[static_cast<int>(local)] = 1.0;

    const bool road = local == SemanticClass::Road;
    const bool walkable = local == SemanticClass::Sidewalk || local == SemanticClass::Crosswalk;
    if (!road && !walkable) return psi;

    const Histogram4 inner = shell_histogram(grid, p, r1, samples);
    const Histogram4 outer = shell_histogram(grid, p, r2, samples);
    const std::size_t base = road ? 4 : 12;
    for (int c = 0; c < kNumClasses; ++c) {
        psi.v[base + c] = inner[c];
        psi.v[base + 4 + c] = outer[c];
    }
    return psi;
}

}  // namespace pedirl
