#pragma once

#include <array>
#include <cstddef>

#include "pedirl/grid.hpp"

namespace pedirl {

/// Shell sampling and radii for the context feature. Defaults: inner radius
/// 1 m, outer radius 3 m, 36 sample points per circle. The sample count must
/// stay a multiple of 4 so the feature is exactly invariant under quarter-turn
/// transforms.
struct FeatureConfig {
    double r1 = 1.0;
    double r2 = 3.0;
    int shell_samples = 36;
};

using Histogram4 = std::array<double, 4>;

/// 20-component context feature. Component indices are 1-based to match the
/// weight subscripts used throughout the model:
///   psi1 = components 1-4,  one-hot of the local class
///   psi2 = components 5-12, (hist(r1), hist(r2)) when the local class is Road
///   psi3 = components 13-20, same pair when the local class is Sidewalk or Crosswalk
/// Inactive conditional blocks are exactly zero; every active 4-component
/// histogram is nonnegative and sums to 1.
struct FeatureVector {
    static constexpr std::size_t kSize = 20;
    std::array<double, kSize> v{};

    /// 1-based accessors, matching w subscripts.
    double at1(std::size_t i) const { return v[i - 1]; }
    double& at1(std::size_t i) { return v[i - 1]; }
};

/// Normalized class histogram of `config.shell_samples` points placed at
/// uniform angles on the circle of the given radius centered at p. Components
/// are ordered (Obstacle, Road, Sidewalk, Crosswalk) and sum to 1.
/// Rejects radius <= 0.
Histogram4 shell_histogram(const SemanticGrid& grid, const Point2& p, double radius,
                           int samples = FeatureConfig{}.shell_samples);

/// The conditional context feature at p. Rejects r1 <= 0 or r1 >= r2.
FeatureVector feature_vector(const SemanticGrid& grid, const Point2& p, double r1, double r2,
                             int samples = FeatureConfig{}.shell_samples);

inline FeatureVector feature_vector(const SemanticGrid& grid, const Point2& p,
                                    const FeatureConfig& config = {}) {
    return feature_vector(grid, p, config.r1, config.r2, config.shell_samples);
}

}  // namespace pedirl
