#include "pedirl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pedirl {

std::vector<double> stable_softmax(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("stable_softmax: empty scores");
    const double m = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - m);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

double trajectory_log_likelihood(const Trajectory& traj, const QTable& table,
                                 const SemanticGrid& grid, const ModelParams& params) {
    const ActionSpace actions(table.num_actions);
    double total = 0.0;
    std::optional<double> prev;
    for (std::size_t k = 0; k < traj.step_count(); ++k) {
        const std::size_t cell = grid.nearest_cell(traj[k].p);
        const double phi = traj.heading(k);
        const int action = actions.nearest(phi);
        total += log_policy_probability(table, cell, action, prev, params);
        prev = phi;
    }
    return total;
}

namespace {

void check_tables(const std::vector<QTable>& tables, const GoalSet& goals) {
    if (goals.size() == 0) throw std::invalid_argument("intent_posterior: empty goal set");
    if (tables.size() != goals.size())
        throw std::invalid_argument("intent_posterior: one Q-table per goal required");
    for (std::size_t i = 0; i < goals.size(); ++i) {
        if (tables[i].goal_id != goals[i].id)
            throw std::invalid_argument("intent_posterior: table order must match goal order");
    }
}

}  // namespace

IntentPosterior intent_posterior(const Trajectory& traj, const std::vector<QTable>& tables,
                                 const SemanticGrid& grid, const ModelParams& params,
                                 const GoalSet& goals) {
    check_tables(tables, goals);
    const double steps = static_cast<double>(traj.step_count());
    const double temper = std::sqrt(steps) + 10.0;
    std::vector<double> scores(goals.size());
    for (std::size_t i = 0; i < goals.size(); ++i)
        scores[i] = trajectory_log_likelihood(traj, tables[i], grid, params) / temper;
    return IntentPosterior{stable_softmax(scores)};
}

Trajectory sample_rollout_with(Rng& rng, const Point2& start, std::optional<double> prev_heading,
                               const QTable& table, const SemanticGrid& grid,
                               const ModelParams& params, const RolloutOptions& options) {
    if (options.horizon <= 0.0)
        throw std::invalid_argument("sample_rollout: horizon must be positive");
    const ActionSpace actions(table.num_actions);
    const double dt = table.delta_t;
    const std::size_t max_steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(options.horizon / dt + 1e-9)));

    std::vector<TrajectorySample> samples;
    samples.reserve(max_steps + 1);
    samples.push_back({options.start_time, start});

    Point2 p = start;
    std::optional<double> prev = prev_heading;
    for (std::size_t k = 1; k <= max_steps; ++k) {
        const std::size_t cell = grid.nearest_cell(p);
        const std::vector<double> policy = policy_distribution(table, cell, prev, params);
        const int action = static_cast<int>(rng.categorical(policy));
        const double phi = actions.heading(action);
        p = step_dynamics(p, phi, table.speed, dt, grid);
        samples.push_back({options.start_time + k * dt, p});
        prev = phi;
        if (k >= options.min_steps && distance(p, table.goal.position) <= table.goal.radius)
            break;
    }
    return Trajectory(std::move(samples));
}

Trajectory sample_rollout(const Point2& start, std::optional<double> prev_heading,
                          const QTable& table, const SemanticGrid& grid,
                          const ModelParams& params, double horizon, std::uint64_t seed) {
    Rng rng(seed);
    RolloutOptions options;
    options.horizon = horizon;
    return sample_rollout_with(rng, start, prev_heading, table, grid, params, options);
}

Prediction predict_distribution(const Trajectory& partial, const std::vector<QTable>& tables,
                                const SemanticGrid& grid, const ModelParams& params,
                                const GoalSet& goals, double horizon, int num_samples,
                                std::uint64_t seed) {
    if (num_samples < 1)
        throw std::invalid_argument("predict_distribution: need at least one sample");
    check_tables(tables, goals);
    if (horizon < 2.0 * tables.front().delta_t)
        throw std::invalid_argument("predict_distribution: horizon must cover at least two steps");

    Prediction out;
    out.posterior = intent_posterior(partial, tables, grid, params, goals);

    const Point2 start = partial.back().p;
    const double start_time = partial.back().t;
    const double last_heading = partial.heading(partial.step_count() - 1);

    out.futures.reserve(num_samples);
    out.sampled_goals.reserve(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const std::size_t goal_idx = rng.categorical(out.posterior.probs);
        RolloutOptions options;
        options.horizon = horizon;
        options.start_time = start_time;
        options.min_steps = 2;  // futures must keep >= 2 samples after the cut is dropped
        const Trajectory rollout = sample_rollout_with(rng, start, last_heading, tables[goal_idx],
                                                       grid, params, options);
        // Drop the seed sample: predicted futures start strictly after the cut.
        std::vector<TrajectorySample> future(rollout.samples().begin() + 1,
                                             rollout.samples().end());
        out.futures.emplace_back(std::move(future));
        out.sampled_goals.push_back(goal_idx);
    }
    return out;
}

}  // namespace pedirl
