#include "pedirl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pedirl/parallel.hpp"

namespace pedirl {

Point2 step_dynamics(const Point2& p, double phi, double speed, double delta_t,
                     const SemanticGrid& grid) {
    if (speed <= 0.0) throw std::invalid_argument("step_dynamics: speed must be positive");
    if (delta_t <= 0.0) throw std::invalid_argument("step_dynamics: delta_t must be positive");
    const Point2 moved{p.x + speed * delta_t * std::cos(phi), p.y + speed * delta_t * std::sin(phi)};
    return grid.clamp(moved);
}

SolveContext::SolveContext(const SemanticGrid& grid, int num_actions, double speed,
                           double delta_t, const FeatureConfig& features)
    : grid_(&grid), actions_(num_actions), speed_(speed), delta_t_(delta_t) {
    const std::size_t cells = grid.cell_count();
    successor_.resize(cells * actions_.count);
    cell_features_.resize(cells);

    parallel_for(cells, [&](std::size_t cell) {
        const Point2 center = grid.cell_center(cell);
        cell_features_[cell] = feature_vector(grid, center, features);
        for (int a = 0; a < actions_.count; ++a) {
            const Point2 next = step_dynamics(center, actions_.heading(a), speed_, delta_t_, grid);
            successor_[cell * actions_.count + a] = grid.nearest_cell(next);
        }
    });
}

QTable solve_q(const SolveContext& context, const ModelParams& params, const Goal& goal,
               const SolveOptions& options) {
    const SemanticGrid& grid = context.grid();
    if (!grid.contains(goal.position))
        throw std::invalid_argument("solve_q: goal '" + goal.id + "' lies outside the map");

    const std::size_t cells = grid.cell_count();
    const int na = context.actions().count;

    // Reward at each successor cell center: context reward plus goal pull.
    std::vector<double> reward(cells);
    parallel_for(cells, [&](std::size_t cell) {
        reward[cell] = semantic_reward(params, context.cell_features()[cell]) +
                       goal_reward(goal, grid.cell_center(cell));
    });

    std::vector<double> value(cells, 0.0);
    std::vector<double> next_value(cells, 0.0);
    std::vector<double> sweep_max(effective_threads() > 1 ? cells : 1, 0.0);

    QTable table;
    table.residual_trace.reserve(256);

    double residual = std::numeric_limits<double>::infinity();
    int sweep = 0;
    const bool track_per_cell = effective_threads() > 1;
    while (sweep < options.max_sweeps && residual > options.tolerance) {
        if (track_per_cell) {
            parallel_for(cells, [&](std::size_t cell) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < na; ++a) {
                    const std::size_t succ = context.successor(cell, a);
                    best = std::max(best, reward[succ] + params.gamma * value[succ]);
                }
                next_value[cell] = best;
                sweep_max[cell] = std::abs(best - value[cell]);
            });
            residual = *std::max_element(sweep_max.begin(), sweep_max.end());
        } else {
            residual = 0.0;
            for (std::size_t cell = 0; cell < cells; ++cell) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < na; ++a) {
                    const std::size_t succ = context.successor(cell, a);
                    best = std::max(best, reward[succ] + params.gamma * value[succ]);
                }
                next_value[cell] = best;
                residual = std::max(residual, std::abs(best - value[cell]));
            }
        }
        value.swap(next_value);
        table.residual_trace.push_back(residual);
        ++sweep;
    }

    table.goal_id = goal.id;
    table.goal = goal;
    table.width = grid.width();
    table.height = grid.height();
    table.num_actions = na;
    table.speed = context.speed();
    table.delta_t = context.delta_t();
    table.gamma = params.gamma;
    table.converged = residual <= options.tolerance;
    table.residual = residual;
    table.sweeps = sweep;

    // Final tables from the converged values; V = max_a Q holds exactly.
    table.q.resize(cells * na);
    table.v.resize(cells);
    parallel_for(cells, [&](std::size_t cell) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
            const std::size_t succ = context.successor(cell, a);
            const double q = reward[succ] + params.gamma * value[succ];
            table.q[cell * na + a] = q;
            best = std::max(best, q);
        }
        table.v[cell] = best;
    });
    return table;
}

QTable solve_q(const SemanticGrid& grid, const ModelParams& params, const Goal& goal,
               double speed, const SolveOptions& options) {
    const SolveContext context(grid, params.num_actions, speed, params.delta_t, params.features);
    return solve_q(context, params, goal, options);
}

std::vector<QTable> solve_all(const SolveContext& context, const ModelParams& params,
                              const GoalSet& goals, const SolveOptions& options) {
    std::vector<QTable> tables(goals.size());
    parallel_for(goals.size(), [&](std::size_t i) {
        tables[i] = solve_q(context, params, goals[i], options);
    });
    return tables;
}

double surrogate_q(const QTable& table, std::size_t cell, int action,
                   std::optional<double> prev_heading, const ModelParams& params) {
    double q = table.q_at(cell, action);
    if (prev_heading) {
        const double phi = 2.0 * M_PI * action / table.num_actions;
        q += turn_penalty(params, phi - *prev_heading);
    }
    return q;
}

std::vector<double> policy_logits(const QTable& table, std::size_t cell,
                                  std::optional<double> prev_heading, const ModelParams& params) {
    if (params.eta < 0.0)
        throw std::invalid_argument("policy_distribution: eta must be nonnegative");
    const int na = table.num_actions;
    std::vector<double> logits(na);
    for (int a = 0; a < na; ++a)
        logits[a] = params.eta * surrogate_q(table, cell, a, prev_heading, params);
    return logits;
}

std::vector<double> policy_distribution(const QTable& table, std::size_t cell,
                                        std::optional<double> prev_heading,
                                        const ModelParams& params) {
    std::vector<double> logits = policy_logits(table, cell, prev_heading, params);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) {
        z = std::exp(z - max_logit);
        total += z;
    }
    for (double& z : logits) z /= total;
    return logits;
}

double log_policy_probability(const QTable& table, std::size_t cell, int action,
                              std::optional<double> prev_heading, const ModelParams& params) {
    const std::vector<double> logits = policy_logits(table, cell, prev_heading, params);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - max_logit);
    return logits[action] - max_logit - std::log(total);
}

void dump_qtable(std::ostream& out, const QTable& table, const SemanticGrid& grid) {
    out << "qtable v1 goal=" << table.goal_id << " width=" << table.width
        << " height=" << table.height << " actions=" << table.num_actions
        << " speed=" << table.speed << " delta_t=" << table.delta_t << " gamma=" << table.gamma
        << " converged=" << (table.converged ? 1 : 0) << " residual=" << table.residual
        << " sweeps=" << table.sweeps << "\n";
    out << "# cell col row x y V Q0..Q" << table.num_actions - 1 << "\n";
    for (std::size_t cell = 0; cell < table.v.size(); ++cell) {
        const int row = static_cast<int>(cell) / table.width;
        const int col = static_cast<int>(cell) % table.width;
        const Point2 c = grid.cell_center(col, row);
        out << cell << " " << col << " " << row << " " << c.x << " " << c.y << " "
            << table.v_at(cell);
        for (int a = 0; a < table.num_actions; ++a) out << " " << table.q_at(cell, a);
        out << "\n";
    }
}

}  // namespace pedirl
