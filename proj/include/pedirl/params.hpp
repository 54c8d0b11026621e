#pragma once

#include <array>
#include <string>
#include <vector>

#include "pedirl/features.hpp"
#include "pedirl/geometry.hpp"

namespace pedirl {

/// Indices (1-based) of the weight entries that are free to be learned. Every
/// other entry of w is forced to zero; each forced zero has a concrete
/// behavioral interpretation (e.g. w3 = 0: walking on sidewalk is not
/// penalized).
inline constexpr std::array<int, 10> kFreeWeightIndices = {1, 2, 7, 8, 11, 12, 13, 14, 17, 18};

bool is_free_weight(int index_1based);

/// Transferable model parameters: the 20 context-reward weights plus the
/// turn-penalty shape (C_phi, beta, alpha), the rationality level eta, and the
/// discretization settings used by the solver and the feature extractor.
struct ModelParams {
    std::array<double, 20> w{};  // w[i-1] holds w_i (1-based weight subscripts)
    double c_phi = 0.5;
    double beta = 1.0;
    double alpha = 1.0;
    double eta = 1.0;

    double gamma = 0.99;
    int num_actions = 16;
    double delta_t = 0.5;
    FeatureConfig features{};

    /// 1-based weight accessors.
    double w_at(int i) const { return w[i - 1]; }
    double& w_at(int i) { return w[i - 1]; }

    /// Interior-feasible default initialization for learning.
    static ModelParams default_init();
};

/// One goal location with its finite radius d >= 0.
struct Goal {
    std::string id;
    Point2 position{};
    double radius = 0.0;
};

/// Ordered, uniquely-labeled goal list for one intersection. Goals are scene
/// data and are not transferable.
struct GoalSet {
    std::vector<Goal> goals;

    std::size_t size() const { return goals.size(); }
    const Goal& operator[](std::size_t i) const { return goals[i]; }

    /// Index of the goal with the given id; throws if absent.
    std::size_t index_of(const std::string& id) const;

    void validate() const;  // nonempty, unique ids, radii >= 0
};

/// One violated parameter constraint, as data.
struct ConstraintViolation {
    std::string constraint;   // e.g. "w1 = -2.5" or "sparsity w5 = 0"
    std::string description;
};

/// Evaluates the thirteen parameter constraints plus the sparsity mask.
/// Returns an empty list iff all hold. Equalities (w1 = -2.5, w7 = w8,
/// w11 = w12, sparsity zeros) are checked exactly; inequalities to 1e-12.
std::vector<ConstraintViolation> check_constraints(const ModelParams& params);

inline bool is_feasible(const ModelParams& params) { return check_constraints(params).empty(); }

/// Nearest feasible parameters in the Euclidean sense over the free entries.
/// Idempotent on feasible input. The coupled constraint
/// 2 w2 + w7 + w11 <= w14 + w18 is restored by scaling (w7, w11) down
/// uniformly; if that cannot reach feasibility, w2 absorbs the remainder.
ModelParams project_to_constraints(const ModelParams& params);

/// w^T psi(x): the semantic-context component of the reward.
double semantic_reward(const ModelParams& params, const FeatureVector& psi);

/// Radial goal attraction: 0 inside the goal disk, else -0.5 * sqrt(dist - d).
double goal_reward(const Goal& goal, const Point2& p);

/// semantic_reward at p's context plus goal_reward.
double total_reward(const ModelParams& params, const SemanticGrid& grid, const Goal& goal,
                    const Point2& p);

/// -C_phi * tanh(beta * |delta_phi|^alpha); delta_phi is wrapped to (-pi, pi]
/// before evaluation. Always nonpositive.
double turn_penalty(const ModelParams& params, double delta_phi);

/// Parameter / goal files (JSON documents with a schema-version field).
ModelParams load_params(const std::string& path);
void save_params(const std::string& path, const ModelParams& params);
GoalSet load_goals(const std::string& path);
void save_goals(const std::string& path, const GoalSet& goals);

}  // namespace pedirl
