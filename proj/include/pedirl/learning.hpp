#pragma once

#include <array>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "pedirl/inference.hpp"

namespace pedirl {

/// A trajectory corpus bound to one intersection: the map, its goal set, and
/// the planning speed (median per-step walking speed of the corpus).
/// Every sample must lie inside the map bounds.
struct TrainingSet {
    SemanticGrid grid;
    GoalSet goals;
    std::vector<Trajectory> trajectories;
    double speed = 1.4;

    static TrainingSet from_data(SemanticGrid grid, GoalSet goals,
                                 std::vector<Trajectory> trajectories);
    void validate() const;
};

/// The eleven coordinates optimized by the M-step: the tied weight pairs
/// (w7,w8) and (w11,w12) move as single coordinates so the equality
/// constraints hold exactly throughout.
inline constexpr std::size_t kNumFreeCoords = 11;
using FreeVector = std::array<double, kNumFreeCoords>;
using FreeMask = std::array<bool, kNumFreeCoords>;

FreeVector to_free_vector(const ModelParams& params);
ModelParams from_free_vector(const ModelParams& base, const FreeVector& x);
std::array<std::string, kNumFreeCoords> free_coord_names();

struct EmOptions {
    int max_iters = 50;
    double objective_tol = 1e-4;   // stop when the recorded objective improves less
    double fd_step = 1e-4;         // central-difference step per coordinate
    double pg_tol = 1e-4;          // projected-gradient norm stopping threshold
    int max_inner_iters = 200;     // M-step iteration cap
    double armijo_c = 1e-4;
    double min_step = 1e-9;
    SolveOptions solve{};
    FreeMask free_mask = {true, true, true, true, true, true, true, true, true, true, true};
};

struct FitReport {
    ModelParams theta;
    std::vector<double> objective_trace;          // expected log-likelihood per EM iteration
    std::vector<std::vector<double>> posteriors;  // final E-step posteriors, one row per trajectory
    bool converged = false;
    int iterations = 0;                           // M-steps executed
    std::vector<std::string> active_constraints;  // inequality constraints tight at the optimum
};

/// Q-table cache keyed by the weight vector (grid, goals, discretization are
/// fixed per context). Safe for concurrent read with exclusive insert.
class QTableCache {
public:
    std::shared_ptr<const std::vector<QTable>> get_or_solve(const SolveContext& context,
                                                            const ModelParams& params,
                                                            const GoalSet& goals,
                                                            const SolveOptions& options);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<const std::vector<QTable>>> cache_;
};

/// Shared state for one training run: the solve context, the Q-table cache,
/// and digitized trajectories (cell and snapped-action sequences, which do
/// not depend on theta). Discretization settings (N_a, delta_t, feature
/// radii) are taken from `discretization` and stay fixed for the run.
class LearnContext {
public:
    LearnContext(const TrainingSet& data, const ModelParams& discretization,
                 const EmOptions& options = {});

    const TrainingSet& data() const { return *data_; }
    const EmOptions& options() const { return options_; }
    std::shared_ptr<const std::vector<QTable>> tables(const ModelParams& params);

    /// Log-likelihood of trajectory i under the table's goal.
    double log_likelihood(std::size_t traj_index, const QTable& table,
                          const ModelParams& params) const;

private:
    struct DigitizedStep {
        std::size_t cell;
        int action;
        bool has_prev;
        double prev_heading;
    };

    const TrainingSet* data_;
    EmOptions options_;
    SolveContext solve_context_;
    QTableCache cache_;
    std::vector<std::vector<DigitizedStep>> digitized_;
};

/// E-step: intent posterior of every training trajectory under theta.
/// Propagates solver non-convergence.
std::vector<IntentPosterior> e_step(LearnContext& ctx, const ModelParams& theta);

/// Expected log-likelihood: sum over trajectories and goals of
/// posterior * log-likelihood.
double expected_log_likelihood(LearnContext& ctx, const ModelParams& theta,
                               const std::vector<IntentPosterior>& posteriors);

/// The training objective: the expected log-likelihood with the posterior
/// weights re-evaluated at theta itself (the mixture weights carry the same
/// parameters as the per-goal likelihoods). Maximized by the M-step; the
/// recorded EM trace is this quantity, which makes the trace nondecreasing
/// by construction.
double em_objective(LearnContext& ctx, const ModelParams& theta);

/// One M-step: projected gradient ascent on em_objective with central finite
/// differences and backtracking line search. The posteriors argument is the
/// E-step output at theta; the objective re-evaluates the weights at every
/// probe, so the argument serves validation only. Returns a feasible theta
/// whose objective is never below the input's (within 1e-9); when no ascent
/// step exists the input theta is returned unchanged.
ModelParams m_step(LearnContext& ctx, const ModelParams& theta,
                   const std::vector<IntentPosterior>& posteriors);

/// Full EM loop: alternates e_step and m_step until the recorded expected
/// log-likelihood improves by less than objective_tol or max_iters M-steps
/// have run. Records the objective after each E-step (one more entry than
/// M-steps when the loop runs to the cap).
FitReport em_train(LearnContext& ctx, const ModelParams& theta0);

/// Convenience wrappers constructing a fresh context.
std::vector<IntentPosterior> e_step(const TrainingSet& data, const ModelParams& theta);
FitReport em_train(const TrainingSet& data, const ModelParams& theta0,
                   const EmOptions& options = {});

void save_fit_report(const std::string& path, const FitReport& report);

}  // namespace pedirl
