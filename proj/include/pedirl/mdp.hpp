#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pedirl/grid.hpp"
#include "pedirl/params.hpp"

namespace pedirl {

/// N_a uniformly spaced heading angles phi_j = 2*pi*j / N_a. Two headings are
/// the minimum (a 1-D corridor); real scenes use 8 or more.
struct ActionSpace {
    int count = 16;

    explicit ActionSpace(int n) : count(n) {
        if (n < 2) throw std::invalid_argument("ActionSpace: need at least 2 headings");
    }

    double heading(int j) const { return 2.0 * M_PI * j / count; }

    /// Index of the discrete heading closest to phi (circular distance);
    /// ties break toward the lower index.
    int nearest(double phi) const {
        int best = 0;
        double best_d = std::abs(wrap_angle(phi - heading(0)));
        for (int j = 1; j < count; ++j) {
            const double d = std::abs(wrap_angle(phi - heading(j)));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        return best;
    }
};

/// Deterministic transition: p + v * dt * (cos phi, sin phi), clamped to the
/// map extent.
Point2 step_dynamics(const Point2& p, double phi, double speed, double delta_t,
                     const SemanticGrid& grid);

/// Converged per-goal action values over (cell, heading), with the companion
/// state values V(cell) = max_a Q(cell, a) held exactly. Immutable after the
/// solve and shareable across threads.
struct QTable {
    std::string goal_id;
    Goal goal;
    int width = 0;
    int height = 0;
    int num_actions = 0;
    double speed = 0.0;
    double delta_t = 0.0;
    double gamma = 0.0;

    std::vector<double> q;  // [cell * num_actions + action]
    std::vector<double> v;  // [cell]

    bool converged = false;
    double residual = 0.0;
    int sweeps = 0;
    std::vector<double> residual_trace;  // sup-norm residual per sweep

    double q_at(std::size_t cell, int action) const { return q[cell * num_actions + action]; }
    double v_at(std::size_t cell) const { return v[cell]; }
};

struct SolveOptions {
    double tolerance = 1e-6;
    int max_sweeps = 10000;
};

/// Precomputation shared by every solve on the same (grid, N_a, speed, dt,
/// feature config): successor cells per (cell, action) and per-cell context
/// features. Reward weights are applied per solve, so reusing a context across
/// solves with different w is cheap.
class SolveContext {
public:
    SolveContext(const SemanticGrid& grid, int num_actions, double speed, double delta_t,
                 const FeatureConfig& features);

    const SemanticGrid& grid() const { return *grid_; }
    const ActionSpace& actions() const { return actions_; }
    double speed() const { return speed_; }
    double delta_t() const { return delta_t_; }
    std::size_t successor(std::size_t cell, int action) const {
        return successor_[cell * actions_.count + action];
    }
    const std::vector<FeatureVector>& cell_features() const { return cell_features_; }

private:
    const SemanticGrid* grid_;
    ActionSpace actions_;
    double speed_;
    double delta_t_;
    std::vector<std::size_t> successor_;
    std::vector<FeatureVector> cell_features_;
};

/// Value iteration to the Bellman fixed point Q(s,a) = R(s') + gamma * V(s'),
/// where s' is the cell containing step_dynamics from the cell center and R
/// is the total reward at the successor cell center. Iteration stops when the
/// sup-norm residual drops to options.tolerance or max_sweeps elapse; the
/// convergence flag reports which.
QTable solve_q(const SolveContext& context, const ModelParams& params, const Goal& goal,
               const SolveOptions& options = {});

/// Convenience wrapper building a one-shot context.
QTable solve_q(const SemanticGrid& grid, const ModelParams& params, const Goal& goal,
               double speed, const SolveOptions& options = {});

/// Solves every goal in the set; tables are independent and run concurrently.
std::vector<QTable> solve_all(const SolveContext& context, const ModelParams& params,
                              const GoalSet& goals, const SolveOptions& options = {});

/// Q plus the turn penalty for switching from prev_heading to the action's
/// heading; no penalty on the first step (absent prev_heading).
double surrogate_q(const QTable& table, std::size_t cell, int action,
                   std::optional<double> prev_heading, const ModelParams& params);

/// eta * surrogate Q per action: the softmax scores behind the policy.
std::vector<double> policy_logits(const QTable& table, std::size_t cell,
                                  std::optional<double> prev_heading, const ModelParams& params);

/// Softmax over eta * surrogate Q across the N_a actions. Nonnegative,
/// sums to 1.
std::vector<double> policy_distribution(const QTable& table, std::size_t cell,
                                        std::optional<double> prev_heading,
                                        const ModelParams& params);

/// log of policy_distribution[action], evaluated in log space so saturated
/// policies keep finite tails.
double log_policy_probability(const QTable& table, std::size_t cell, int action,
                              std::optional<double> prev_heading, const ModelParams& params);

/// Structured-text dump of a QTable (one row per cell: index, center, V,
/// per-action Q). Inspection aid, not a stability-guaranteed format.
void dump_qtable(std::ostream& out, const QTable& table, const SemanticGrid& grid);

}  // namespace pedirl
