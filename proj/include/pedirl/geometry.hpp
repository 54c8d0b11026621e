#pragma once

#include <cmath>
#include <stdexcept>

namespace pedirl {

/// 2-D point or vector in the map frame, in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2& o) const = default;

    double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a <= -M_PI) a += two_pi;
    if (a > M_PI) a -= two_pi;
    return a;
}

/// Rigid body motion p -> R(angle) * p + translation. No scaling, no reflection.
struct RigidTransform {
    double angle = 0.0;   // radians, counterclockwise
    Point2 translation{};

    Point2 apply(const Point2& p) const {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
    }

    /// Quarter-turn count in [0,3] if the rotation is a multiple of 90 degrees,
    /// otherwise -1.
    int quarter_turns(double tol = 1e-12) const {
        const double q = angle / (M_PI / 2.0);
        const double r = std::round(q);
        if (std::abs(q - r) > tol) return -1;
        long long k = static_cast<long long>(r) % 4;
        if (k < 0) k += 4;
        return static_cast<int>(k);
    }
};

inline Point2 transform_point(const Point2& p, const RigidTransform& t) { return t.apply(p); }

}  // namespace pedirl
