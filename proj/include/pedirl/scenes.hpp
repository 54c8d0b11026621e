#pragma once

#include "pedirl/grid.hpp"
#include "pedirl/params.hpp"

namespace pedirl {

/// A synthetic intersection: the rasterized map plus its manually placed
/// goal set.
struct Scene {
    SemanticGrid grid;
    GoalSet goals;
};

struct SceneSpec {
    int cells_per_side = 30;
    double cell_size = 0.5;        // meters
    double road_halfwidth = 2.0;   // meters
    double sidewalk_width = 1.5;   // meters
    double crosswalk_width = 1.0;  // meters
    double goal_radius = 1.0;      // meters
};

/// Four-way intersection: two orthogonal roads through the center, crosswalks
/// on every arm next to the junction, sidewalk strips flanking the roads,
/// obstacle blocks in the corners. Goals sit on the sidewalk near each arm
/// end (ids N, S, E, W).
Scene make_four_way(const SceneSpec& spec = {});

/// T-junction: a full horizontal road with a single north arm. Goals on the
/// east, west, and north arm ends (ids E, W, N).
Scene make_t_junction(const SceneSpec& spec = {});

}  // namespace pedirl
