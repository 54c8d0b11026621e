#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pedirl/mdp.hpp"
#include "pedirl/rng.hpp"
#include "pedirl/trajectory.hpp"

namespace pedirl {

/// Probability per goal, aligned with the owning GoalSet's order. Nonnegative,
/// sums to 1.
struct IntentPosterior {
    std::vector<double> probs;

    double operator[](std::size_t i) const { return probs[i]; }
    std::size_t size() const { return probs.size(); }
};

/// Numerically stable softmax of a score vector.
std::vector<double> stable_softmax(std::span<const double> scores);

/// Log-likelihood of the trajectory under the Boltzmann policy for the
/// table's goal: the sum over steps k of the log-probability that
/// policy_distribution at (cell of x_k, previous heading) assigns to the
/// discrete action nearest the observed heading. Always <= 0.
/// Rejects trajectories with fewer than 2 samples (enforced by Trajectory).
double trajectory_log_likelihood(const Trajectory& traj, const QTable& table,
                                 const SemanticGrid& grid, const ModelParams& params);

/// Posterior over goals given a (partial) trajectory: softmax over goals of
/// the per-goal step-log-likelihood sums divided by (sqrt(N) + 10), N being
/// the observed step count. Rejects empty goal sets and mismatched tables.
IntentPosterior intent_posterior(const Trajectory& traj, const std::vector<QTable>& tables,
                                 const SemanticGrid& grid, const ModelParams& params,
                                 const GoalSet& goals);

struct RolloutOptions {
    double horizon = 5.0;      // seconds
    std::size_t min_steps = 1; // goal-disk termination is checked after this many steps
    double start_time = 0.0;   // timestamp of the start sample
};

/// Samples one trajectory by repeatedly drawing an action from
/// policy_distribution (carrying the previous heading into the surrogate Q)
/// and applying step_dynamics, until the horizon elapses or the goal disk is
/// entered. Deterministic given the seed. The start point is the first
/// sample.
Trajectory sample_rollout(const Point2& start, std::optional<double> prev_heading,
                          const QTable& table, const SemanticGrid& grid,
                          const ModelParams& params, double horizon, std::uint64_t seed);

/// Core rollout drawing randomness from an existing stream.
Trajectory sample_rollout_with(Rng& rng, const Point2& start, std::optional<double> prev_heading,
                               const QTable& table, const SemanticGrid& grid,
                               const ModelParams& params, const RolloutOptions& options);

/// Output of the generative prediction: the intent posterior inferred from the
/// partial trajectory plus N sampled futures. Futures start strictly after the
/// last observed sample and continue its timestamps.
struct Prediction {
    IntentPosterior posterior;
    std::vector<Trajectory> futures;
    std::vector<std::size_t> sampled_goals;  // goal index drawn for each future
};

/// Ancestral sampling of N future trajectories: goal ~ posterior(partial),
/// then a rollout from the last observed state and heading. Sample i draws
/// from an independent stream derived from (seed, i), so permuting seeds
/// permutes samples.
Prediction predict_distribution(const Trajectory& partial, const std::vector<QTable>& tables,
                                const SemanticGrid& grid, const ModelParams& params,
                                const GoalSet& goals, double horizon, int num_samples,
                                std::uint64_t seed);

}  // namespace pedirl
