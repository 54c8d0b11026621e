#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pedirl/mdp.hpp"
#include "pedirl/parallel.hpp"
#include "pedirl/rng.hpp"

using namespace pedirl;

namespace {

SemanticGrid uniform_grid(int w, int h, SemanticClass c, double cs = 0.5) {
    return SemanticGrid({0, 0}, cs, w, h,
                        std::vector<SemanticClass>(static_cast<std::size_t>(w) * h, c));
}

ModelParams corridor_params(int num_actions) {
    ModelParams p = ModelParams::default_init();
    p.num_actions = num_actions;
    p.delta_t = 0.5;
    return p;
}

/// Feasible params whose context reward vanishes on all-sidewalk maps, so a
/// covered goal region is absorbing with reward exactly zero.
ModelParams zero_context_params(int num_actions) {
    ModelParams p = corridor_params(num_actions);
    p.w_at(7) = p.w_at(8) = 0.0;
    p.w_at(11) = p.w_at(12) = 0.0;
    p.w_at(13) = p.w_at(14) = p.w_at(17) = p.w_at(18) = 0.0;
    return p;
}

/// Brute-force finite-horizon DP oracle over the same discretization:
/// Q_h(s,a) = R(succ) + gamma * max_a' Q_{h-1}(succ, a'), Q_0 = 0.
std::vector<double> dp_oracle(const SemanticGrid& grid, const ModelParams& params,
                              const Goal& goal, double speed, int horizon) {
    const ActionSpace actions(params.num_actions);
    const std::size_t cells = grid.cell_count();
    const int na = actions.count;

    std::vector<std::size_t> succ(cells * na);
    std::vector<double> reward(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const Point2 c = grid.cell_center(cell);
        reward[cell] = total_reward(params, grid, goal, c);
        for (int a = 0; a < na; ++a) {
            const Point2 next = step_dynamics(c, actions.heading(a), speed, params.delta_t, grid);
            succ[cell * na + a] = grid.nearest_cell(next);
        }
    }

    std::vector<double> value(cells, 0.0), next_value(cells, 0.0);
    std::vector<double> q(cells * na, 0.0);
    for (int h = 0; h < horizon; ++h) {
        for (std::size_t cell = 0; cell < cells; ++cell) {
            double best = -1e300;
            for (int a = 0; a < na; ++a) {
                const std::size_t s2 = succ[cell * na + a];
                q[cell * na + a] = reward[s2] + params.gamma * value[s2];
                best = std::max(best, q[cell * na + a]);
            }
            next_value[cell] = best;
        }
        value.swap(next_value);
    }
    return q;
}

}  // namespace

TEST_CASE("step dynamics moves along the heading") {
    auto grid = uniform_grid(40, 40, SemanticClass::Sidewalk);
    const Point2 a = step_dynamics({0.0, 0.0}, 0.0, 1.0, 1.0, grid);
    CHECK(a.x == 1.0);
    CHECK(a.y == doctest::Approx(0.0).epsilon(1e-15));
    const Point2 b = step_dynamics({0.0, 0.0}, M_PI / 2.0, 2.0, 0.5, grid);
    CHECK(b.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.y == 1.0);
}

TEST_CASE("step dynamics clamps to the map extent") {
    auto grid = uniform_grid(4, 4, SemanticClass::Sidewalk);  // extent 2 x 2 m
    const Point2 p = step_dynamics({1.9, 1.0}, 0.0, 2.0, 1.0, grid);
    CHECK(p.x == 2.0);
    const Point2 q = step_dynamics({0.1, 0.1}, M_PI, 2.0, 1.0, grid);
    CHECK(q.x == 0.0);
}

TEST_CASE("action space snapping") {
    const ActionSpace actions(8);
    CHECK(actions.nearest(0.0) == 0);
    CHECK(actions.nearest(M_PI / 4.0 + 0.01) == 1);
    CHECK(actions.nearest(-M_PI / 4.0) == 7);
    CHECK(actions.nearest(M_PI) == 4);
    CHECK_THROWS_AS(ActionSpace(1), std::invalid_argument);
}

TEST_CASE("gamma = 0 reduces Q to the next-step reward") {
    auto grid = uniform_grid(10, 10, SemanticClass::Sidewalk);
    ModelParams p = corridor_params(4);
    p.gamma = 0.0;
    const Goal goal{"G", {4.75, 4.75}, 1.0};
    const SolveContext ctx(grid, p.num_actions, 1.0, p.delta_t, p.features);
    const QTable table = solve_q(ctx, p, goal);
    REQUIRE(table.converged);
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        for (int a = 0; a < 4; ++a) {
            const std::size_t succ = ctx.successor(cell, a);
            const double expect = total_reward(p, grid, goal, grid.cell_center(succ));
            CHECK(table.q_at(cell, a) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("uniform sidewalk map with a covering goal has V = 0") {
    auto grid = uniform_grid(8, 8, SemanticClass::Sidewalk);
    ModelParams p = zero_context_params(4);
    const Goal goal{"G", {2.0, 2.0}, 10.0};  // disk covers the whole map
    const QTable table = solve_q(grid, p, goal, 1.0);
    REQUIRE(table.converged);
    for (double v : table.v) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("corridor Q matches the finite-horizon DP oracle") {
    // 1-D sidewalk corridors with an absorbing zero-reward goal region at the
    // east end; 2 and 4 actions.
    for (int na : {2, 4}) {
        for (int len : {5, 10}) {
            auto grid = uniform_grid(len, 1, SemanticClass::Sidewalk);
            ModelParams p = zero_context_params(na);
            const Goal goal{"G", {len * 0.5 - 0.25, 0.25}, 1.0};
            const double speed = 1.0;  // step = 0.5 m = one cell

            const QTable table = solve_q(grid, p, goal, speed);
            REQUIRE(table.converged);
            const auto oracle = dp_oracle(grid, p, goal, speed, 200);
            for (std::size_t cell = 0; cell < grid.cell_count(); ++cell)
                for (int a = 0; a < na; ++a)
                    CHECK(std::abs(table.q_at(cell, a) - oracle[cell * na + a]) <= 1e-6);
        }
    }
}

TEST_CASE("Bellman consistency and V = max Q on a random map") {
    Rng rng(41);
    std::vector<SemanticClass> labels(20 * 20);
    for (auto& l : labels) l = static_cast<SemanticClass>(rng.uniform_index(4));
    SemanticGrid grid({0, 0}, 0.5, 20, 20, std::move(labels));
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {5.0, 5.0}, 1.0};
    const SolveContext ctx(grid, p.num_actions, 1.4, p.delta_t, p.features);
    const QTable table = solve_q(ctx, p, goal);
    REQUIRE(table.converged);

    std::vector<double> reward(grid.cell_count());
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell)
        reward[cell] = total_reward(p, grid, goal, grid.cell_center(cell));

    double max_residual = 0.0;
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell) {
        double best = -1e300;
        for (int a = 0; a < 8; ++a) {
            const std::size_t succ = ctx.successor(cell, a);
            double vmax = -1e300;
            for (int a2 = 0; a2 < 8; ++a2) vmax = std::max(vmax, table.q_at(succ, a2));
            max_residual = std::max(
                max_residual, std::abs(table.q_at(cell, a) - (reward[succ] + p.gamma * vmax)));
            best = std::max(best, table.q_at(cell, a));
        }
        CHECK(table.v_at(cell) == best);  // exact
    }
    CHECK(max_residual <= 1e-6);
}

TEST_CASE("sup-norm residual trace is nonincreasing") {
    auto grid = uniform_grid(15, 15, SemanticClass::Road);
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {3.0, 3.0}, 0.5};
    const QTable table = solve_q(grid, p, goal, 1.4);
    REQUIRE(table.residual_trace.size() > 2);
    for (std::size_t i = 1; i < table.residual_trace.size(); ++i)
        CHECK(table.residual_trace[i] <= table.residual_trace[i - 1] + 1e-15);
}

TEST_CASE("transfer symmetry: quarter-turn solve equals permuted original") {
    Rng rng(43);
    std::vector<SemanticClass> labels(16 * 16);
    for (auto& l : labels) l = static_cast<SemanticClass>(rng.uniform_index(4));
    SemanticGrid grid({0, 0}, 0.5, 16, 16, std::move(labels));
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {3.0, 5.0}, 1.0};

    const QTable base = solve_q(grid, p, goal, 1.4);
    REQUIRE(base.converged);

    for (int k : {1, 2, 3}) {
        const RigidTransform t{k * M_PI / 2.0, {7.0, -3.0}};
        const auto moved_grid = transform_grid(grid, t);
        const Goal moved_goal{goal.id, transform_point(goal.position, t), goal.radius};
        const QTable moved = solve_q(moved_grid, p, moved_goal, 1.4);
        REQUIRE(moved.converged);

        const int shift = k * p.num_actions / 4;
        for (int row = 0; row < grid.height(); ++row) {
            for (int col = 0; col < grid.width(); ++col) {
                const Point2 c = grid.cell_center(col, row);
                const Point2 mc = transform_point(c, t);
                int mcol, mrow;
                REQUIRE(moved_grid.locate(mc, mcol, mrow));
                const std::size_t cell = static_cast<std::size_t>(row) * grid.width() + col;
                const std::size_t mcell =
                    static_cast<std::size_t>(mrow) * moved_grid.width() + mcol;
                for (int a = 0; a < p.num_actions; ++a) {
                    const int ma = (a + shift) % p.num_actions;
                    CHECK(std::abs(base.q_at(cell, a) - moved.q_at(mcell, ma)) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("surrogate Q adds the turn penalty") {
    auto grid = uniform_grid(10, 10, SemanticClass::Sidewalk);
    ModelParams p = corridor_params(8);
    p.c_phi = 1.0;
    p.beta = 100.0;
    p.alpha = 1.0;
    const Goal goal{"G", {2.5, 2.5}, 0.5};
    const QTable table = solve_q(grid, p, goal, 1.0);

    const std::size_t cell = grid.nearest_cell({1.0, 1.0});
    // same heading: no penalty
    CHECK(surrogate_q(table, cell, 2, ActionSpace(8).heading(2), p) == table.q_at(cell, 2));
    // absent previous heading: no penalty
    CHECK(surrogate_q(table, cell, 3, std::nullopt, p) == table.q_at(cell, 3));
    // opposite heading saturates to about Q - 1
    const double opposite = ActionSpace(8).heading(4) - M_PI;
    CHECK(surrogate_q(table, cell, 4, opposite, p) ==
          doctest::Approx(table.q_at(cell, 4) - 1.0).epsilon(1e-6));

    ModelParams free = p;
    free.c_phi = 0.0;
    for (int a = 0; a < 8; ++a)
        CHECK(surrogate_q(table, cell, a, 1.234, free) == table.q_at(cell, a));
}

TEST_CASE("policy distribution: uniform at eta = 0, saturated at large gaps") {
    auto grid = uniform_grid(10, 10, SemanticClass::Sidewalk);
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {2.5, 2.5}, 0.5};
    const QTable table = solve_q(grid, p, goal, 1.0);
    const std::size_t cell = grid.nearest_cell({4.0, 4.0});

    ModelParams zero = p;
    zero.eta = 0.0;
    const auto uniform = policy_distribution(table, cell, std::nullopt, zero);
    for (double q : uniform) CHECK(q == doctest::Approx(1.0 / 8).epsilon(1e-12));

    QTable spiked = table;
    spiked.q[cell * 8 + 5] += 50.0;
    ModelParams unit = p;
    unit.eta = 1.0;
    const auto sat = policy_distribution(spiked, cell, std::nullopt, unit);
    CHECK(sat[5] >= 1.0 - 1e-20);  // saturates to 1.0 at double precision
}

TEST_CASE("policy distribution matches a log-sum-exp oracle") {
    Rng rng(47);
    auto grid = uniform_grid(6, 6, SemanticClass::Sidewalk);
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {1.5, 1.5}, 0.5};
    QTable table = solve_q(grid, p, goal, 1.0);

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t cell = rng.uniform_index(grid.cell_count());
        for (int a = 0; a < 8; ++a) table.q[cell * 8 + a] = rng.uniform(-40.0, 10.0);
        p.eta = rng.uniform(0.0, 4.0);
        p.c_phi = rng.uniform(0.0, 1.0);
        const std::optional<double> prev =
            trial % 2 == 0 ? std::optional<double>(rng.uniform(-M_PI, M_PI)) : std::nullopt;

        const auto probs = policy_distribution(table, cell, prev, p);

        // independent stable softmax: lse subtraction in long double
        long double lse = 0.0L;
        std::vector<long double> z(8);
        long double zmax = -1e30L;
        for (int a = 0; a < 8; ++a) {
            z[a] = static_cast<long double>(p.eta) * surrogate_q(table, cell, a, prev, p);
            zmax = std::max(zmax, z[a]);
        }
        for (int a = 0; a < 8; ++a) lse += expl(z[a] - zmax);
        double total = 0.0;
        for (int a = 0; a < 8; ++a) {
            const double expect = static_cast<double>(expl(z[a] - zmax) / lse);
            CHECK(std::abs(probs[a] - expect) <= 1e-12);
            total += probs[a];
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("non-convergence is reported, not hidden") {
    auto grid = uniform_grid(12, 12, SemanticClass::Road);
    ModelParams p = corridor_params(4);
    const Goal goal{"G", {3.0, 3.0}, 0.5};
    SolveOptions opts;
    opts.max_sweeps = 3;  // far too few
    const QTable table = solve_q(grid, p, goal, 1.4, opts);
    CHECK_FALSE(table.converged);
    CHECK(table.sweeps == 3);
    CHECK(table.residual > opts.tolerance);
}

TEST_CASE("solve is identical under serial and parallel sweeps") {
    Rng rng(53);
    std::vector<SemanticClass> labels(20 * 20);
    for (auto& l : labels) l = static_cast<SemanticClass>(rng.uniform_index(4));
    SemanticGrid grid({0, 0}, 0.5, 20, 20, std::move(labels));
    ModelParams p = corridor_params(8);
    const Goal goal{"G", {4.0, 6.0}, 1.0};

    set_max_threads(1);
    const QTable serial = solve_q(grid, p, goal, 1.4);
    set_max_threads(4);
    const QTable parallel = solve_q(grid, p, goal, 1.4);
    set_max_threads(0);

    CHECK(serial.sweeps == parallel.sweeps);
    CHECK(serial.q == parallel.q);
    CHECK(serial.v == parallel.v);
}

TEST_CASE("qtable dump carries the header and one row per cell") {
    auto grid = uniform_grid(4, 3, SemanticClass::Sidewalk);
    ModelParams p = corridor_params(4);
    const Goal goal{"G", {1.0, 0.75}, 0.5};
    const QTable table = solve_q(grid, p, goal, 1.0);
    std::ostringstream out;
    dump_qtable(out, table, grid);
    std::istringstream in(out.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++lines;
    CHECK(lines == 1 + grid.cell_count());  // header + rows
}
