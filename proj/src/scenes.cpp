#include "pedirl/scenes.hpp"

#include <cmath>
#include <stdexcept>

namespace pedirl {

namespace {

struct Bands {
    double cx, cy, rh, sw, cw;
};

SemanticClass classify(const Bands& b, const Point2& p, bool north_arm_only) {
    const double dx = std::abs(p.x - b.cx);
    const double dy = std::abs(p.y - b.cy);
    const bool in_v_road = dx <= b.rh && (!north_arm_only || p.y >= b.cy - b.rh);
    const bool in_h_road = dy <= b.rh;

    if (in_v_road) {
        const double arm = p.y - b.cy;
        if (arm > b.rh && arm <= b.rh + b.cw) return SemanticClass::Crosswalk;
        if (!north_arm_only && arm < -b.rh && arm >= -(b.rh + b.cw))
            return SemanticClass::Crosswalk;
    }
    if (in_h_road) {
        const double arm = p.x - b.cx;
        if (std::abs(arm) > b.rh && std::abs(arm) <= b.rh + b.cw) return SemanticClass::Crosswalk;
    }
    if (in_v_road || in_h_road) return SemanticClass::Road;

    const bool near_v = dx <= b.rh + b.sw && (!north_arm_only || p.y >= b.cy - b.rh);
    const bool near_h = dy <= b.rh + b.sw;
    if (near_v || near_h) return SemanticClass::Sidewalk;
    return SemanticClass::Obstacle;
}

Scene build(const SceneSpec& spec, bool north_arm_only) {
    const int n = spec.cells_per_side;
    if (n < 12) throw std::invalid_argument("SceneSpec: map too small");
    const double cs = spec.cell_size;
    const double extent = n * cs;
    const Bands b{extent / 2.0, extent / 2.0, spec.road_halfwidth, spec.sidewalk_width,
                  spec.crosswalk_width};

    std::vector<SemanticClass> labels(static_cast<std::size_t>(n) * n);
    for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col)
            labels[static_cast<std::size_t>(row) * n + col] =
                classify(b, {(col + 0.5) * cs, (row + 0.5) * cs}, north_arm_only);

    Scene scene{SemanticGrid({0.0, 0.0}, cs, n, n, std::move(labels)), {}};

    const double margin = 1.5 * cs;
    const double walk_mid = b.rh + 0.5 * b.sw;  // center of the sidewalk strip
    auto add_goal = [&](const std::string& id, double x, double y) {
        const Point2 p{x, y};
        if (label_at(scene.grid, p) != SemanticClass::Sidewalk)
            throw std::logic_error("scene goal '" + id + "' is not on a sidewalk");
        scene.goals.goals.push_back({id, p, spec.goal_radius});
    };
    add_goal("E", extent - margin, b.cy + walk_mid);
    add_goal("W", margin, b.cy - walk_mid);
    add_goal("N", b.cx - walk_mid, extent - margin);
    if (!north_arm_only) add_goal("S", b.cx + walk_mid, margin);
    scene.goals.validate();
    return scene;
}

}  // namespace

Scene make_four_way(const SceneSpec& spec) { return build(spec, false); }

Scene make_t_junction(const SceneSpec& spec) { return build(spec, true); }

}  // namespace pedirl
