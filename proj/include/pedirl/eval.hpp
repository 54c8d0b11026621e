#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedirl/learning.hpp"

namespace pedirl {

/// Modified Hausdorff Distance between two nonempty point sets:
/// max(mean over a of min-distance to b, mean over b of min-distance to a).
double mhd(std::span<const Point2> a, std::span<const Point2> b);

struct EmhdResult {
    double mean = 0.0;       // meters
    double std_error = 0.0;  // Monte Carlo standard error of the mean
};

/// Mean per-sample MHD against the truth, plus the sample standard error of
/// that mean. Rejects empty sample lists.
EmhdResult emhd(const std::vector<std::vector<Point2>>& sample_point_sets,
                std::span<const Point2> truth);
EmhdResult emhd(const std::vector<Trajectory>& samples, const Trajectory& truth);

/// Observe / predict protocol: use the initial observe_horizon of each
/// trajectory, predict the next predict_horizon, truncate at truncate_at.
struct EvalProtocol {
    double observe_horizon = 2.5;  // seconds
    double predict_horizon = 5.0;
    double truncate_at = 7.5;
    int samples = 100;

    void validate() const;
};

/// A prediction backend: maps an observed partial trajectory to sampled
/// futures. The built-in model predictor wraps predict_distribution;
/// externally supplied prediction files can be scored through the same
/// interface.
using Predictor = std::function<std::vector<Trajectory>(
    const Trajectory& observed, double horizon, int num_samples, std::uint64_t seed)>;

struct TrajectoryScore {
    std::size_t index = 0;
    double emhd = 0.0;
    double std_error = 0.0;
    double predict_seconds = 0.0;
};

/// Truncate-then-split of one test trajectory: the observed head (relative
/// time <= observe_horizon) and the future ground-truth points. Empty when the
/// trajectory is too short to score.
struct ProtocolSplit {
    Trajectory observed;
    std::vector<Point2> future;
};
std::optional<ProtocolSplit> protocol_split(const Trajectory& traj, const EvalProtocol& protocol);

/// Median per-step speed over the observed prefixes of a test set; falls back
/// to 1.4 m/s when no steps are available.
double median_prefix_speed(const std::vector<Trajectory>& testset, double observe_horizon);

struct EvalResult {
    std::vector<TrajectoryScore> per_trajectory;
    std::vector<std::string> warnings;  // skipped trajectories
    double mean_emhd = 0.0;
    double monte_carlo_std_error = 0.0;      // pooled over trajectories
    double mean_predict_seconds = 0.0;
    std::size_t scored = 0;
    std::size_t skipped = 0;
};

/// Runs the protocol over a test set: truncate, split at the observation
/// horizon, predict with `samples` futures, score the unobserved part with
/// EMHD. Trajectories shorter than the observation horizon (or with no
/// future part) are skipped with a warning; it is an error if all are
/// skipped. Per-trajectory seeds derive from (seed, index).
EvalResult run_protocol(const std::vector<Trajectory>& testset, const Predictor& predictor,
                        const EvalProtocol& protocol, std::uint64_t seed);

/// Ready-to-predict model for one intersection: Q-tables are solved once at
/// construction.
class ModelPredictor {
public:
    ModelPredictor(const SemanticGrid& grid, const GoalSet& goals, const ModelParams& params,
                   double speed, const SolveOptions& options = {});

    Prediction predict(const Trajectory& observed, double horizon, int num_samples,
                       std::uint64_t seed) const;

    Predictor as_predictor() const;

    const std::vector<QTable>& tables() const { return tables_; }

private:
    const SemanticGrid* grid_;
    GoalSet goals_;
    ModelParams params_;
    std::vector<QTable> tables_;
};

struct SynthOptions {
    double horizon = 40.0;     // seconds per rollout
    double noise_sigma = 0.0;  // optional observation noise on recorded points
    double speed = 1.4;        // planning/rollout speed
};

struct SynthResult {
    TrainingSet set;
    std::vector<std::string> goal_labels;  // ground-truth goal id per trajectory
};

/// Draws start states uniformly over Sidewalk cell centers, assigns goals
/// uniformly, and emits policy rollouts with their generating goal recorded.
/// Deterministic per seed; fails if the map has no Sidewalk cell.
SynthResult synth_generate(const SemanticGrid& grid, const GoalSet& goals,
                           const ModelParams& theta_star, int count, std::uint64_t seed,
                           const SynthOptions& options = {});

/// One intersection's data bundle for transfer experiments.
struct SceneBundle {
    std::string name;
    SemanticGrid grid;
    GoalSet goals;
    std::vector<Trajectory> trajectories;
};

struct TransferOptions {
    ModelParams theta0 = ModelParams::default_init();
    EmOptions em{};
    std::uint64_t seed = 1;
};

struct TransferRow {
    std::string train_name;
    std::string test_name;
    bool ok = false;
    std::string error;
    double mean_emhd = 0.0;
    double monte_carlo_std_error = 0.0;
    double mean_predict_seconds = 0.0;
};

/// Trains on every training bundle and evaluates each fit on every test
/// bundle with the test bundle's own goals. Emits one row per (train, test)
/// pair; per-pair failures are recorded and the remaining pairs continue.
std::vector<TransferRow> transfer_eval(const std::vector<SceneBundle>& train_sets,
                                       const std::vector<SceneBundle>& test_sets,
                                       const EvalProtocol& protocol,
                                       const TransferOptions& options = {});

}  // namespace pedirl
