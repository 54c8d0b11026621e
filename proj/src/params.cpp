#include "pedirl/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pedirl {

namespace {
constexpr double kIneqTol = 1e-12;

void add_violation(std::vector<ConstraintViolation>& out, const std::string& name,
                   const std::string& detail) {
    out.push_back({name, detail});
}
}  // namespace

bool is_free_weight(int index_1based) {
    return std::find(kFreeWeightIndices.begin(), kFreeWeightIndices.end(), index_1based) !=
           kFreeWeightIndices.end();
}

ModelParams ModelParams::default_init() {
    ModelParams p;
    p.w_at(1) = -2.5;
    p.w_at(2) = -0.5;
    p.w_at(7) = 0.1;
    p.w_at(8) = 0.1;
    p.w_at(11) = 0.1;
    p.w_at(12) = 0.1;
    p.w_at(13) = -0.1;
    p.w_at(14) = -0.1;
    p.w_at(17) = -0.1;
    p.w_at(18) = -0.1;
    p.c_phi = 0.5;
    p.beta = 1.0;
    p.alpha = 1.0;
    p.eta = 1.0;
    return p;
}

std::size_t GoalSet::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < goals.size(); ++i)
        if (goals[i].id == id) return i;
    throw std::invalid_argument("GoalSet: no goal with id '" + id + "'");
}

void GoalSet::validate() const {
    if (goals.empty()) throw std::invalid_argument("GoalSet: must be nonempty");
    std::set<std::string> ids;
    for (const auto& g : goals) {
        if (!ids.insert(g.id).second)
            throw std::invalid_argument("GoalSet: duplicate goal id '" + g.id + "'");
        if (g.radius < 0.0)
            throw std::invalid_argument("GoalSet: goal '" + g.id + "' has negative radius");
    }
}

std::vector<ConstraintViolation> check_constraints(const ModelParams& p) {
    std::vector<ConstraintViolation> v;
    auto num = [](double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    };

    for (int i = 1; i <= 20; ++i) {
        if (!is_free_weight(i) && p.w_at(i) != 0.0)
            add_violation(v, "sparsity w" + std::to_string(i) + " = 0",
                          "w" + std::to_string(i) + " = " + num(p.w_at(i)));
    }
    if (p.w_at(1) != -2.5) add_violation(v, "(1) w1 = -2.5", "w1 = " + num(p.w_at(1)));
    if (p.w_at(2) > -0.5 + kIneqTol)
        add_violation(v, "(2) w2 <= -0.5", "w2 = " + num(p.w_at(2)));
    if (p.w_at(7) != p.w_at(8) || p.w_at(7) < -kIneqTol)
        add_violation(v, "(3) w7 = w8 >= 0", "w7 = " + num(p.w_at(7)) + ", w8 = " + num(p.w_at(8)));
    if (p.w_at(11) != p.w_at(12) || p.w_at(11) < -kIneqTol)
        add_violation(v, "(4) w11 = w12 >= 0",
                      "w11 = " + num(p.w_at(11)) + ", w12 = " + num(p.w_at(12)));
    if (p.w_at(13) > kIneqTol) add_violation(v, "(5) w13 <= 0", "w13 = " + num(p.w_at(13)));
    if (p.w_at(14) > kIneqTol) add_violation(v, "(6) w14 <= 0", "w14 = " + num(p.w_at(14)));
    if (p.w_at(17) > kIneqTol) add_violation(v, "(7) w17 <= 0", "w17 = " + num(p.w_at(17)));
    if (p.w_at(18) > kIneqTol) add_violation(v, "(8) w18 <= 0", "w18 = " + num(p.w_at(18)));
    const double lhs = 2.0 * p.w_at(2) + p.w_at(7) + p.w_at(11);
    const double rhs = p.w_at(14) + p.w_at(18);
    if (lhs > rhs + kIneqTol)
        add_violation(v, "(9) 2 w2 + w7 + w11 <= w14 + w18",
                      num(lhs) + " > " + num(rhs));
    if (p.c_phi < -kIneqTol) add_violation(v, "(10) C_phi >= 0", "C_phi = " + num(p.c_phi));
    if (p.beta < -kIneqTol) add_violation(v, "(11) beta >= 0", "beta = " + num(p.beta));
    if (p.alpha < -kIneqTol) add_violation(v, "(12) alpha >= 0", "alpha = " + num(p.alpha));
    if (p.eta < -kIneqTol) add_violation(v, "(13) eta >= 0", "eta = " + num(p.eta));
    return v;
}

ModelParams project_to_constraints(const ModelParams& params) {
    ModelParams p = params;
    for (int i = 1; i <= 20; ++i)
        if (!is_free_weight(i)) p.w_at(i) = 0.0;
    p.w_at(1) = -2.5;
    p.w_at(2) = std::min(p.w_at(2), -0.5);

    // Tied pairs project to their midpoint, then onto the nonnegative half-line.
    const double pair1 = std::max(0.0, 0.5 * (p.w_at(7) + p.w_at(8)));
    p.w_at(7) = p.w_at(8) = pair1;
    const double pair2 = std::max(0.0, 0.5 * (p.w_at(11) + p.w_at(12)));
    p.w_at(11) = p.w_at(12) = pair2;

    p.w_at(13) = std::min(p.w_at(13), 0.0);
    p.w_at(14) = std::min(p.w_at(14), 0.0);
    p.w_at(17) = std::min(p.w_at(17), 0.0);
    p.w_at(18) = std::min(p.w_at(18), 0.0);

    p.c_phi = std::max(p.c_phi, 0.0);
    p.beta = std::max(p.beta, 0.0);
    p.alpha = std::max(p.alpha, 0.0);
    p.eta = std::max(p.eta, 0.0);

    // Coupled constraint: scale (w7, w11) down uniformly toward equality.
    // Excess within the inequality tolerance counts as satisfied, keeping the
    // projection idempotent at the bit level.
    double excess = 2.0 * p.w_at(2) + p.w_at(7) + p.w_at(11) - (p.w_at(14) + p.w_at(18));
    if (excess > kIneqTol) {
        const double mass = p.w_at(7) + p.w_at(11);
        const double scale = mass > excess ? (mass - excess) / mass : 0.0;
        p.w_at(7) *= scale;
        p.w_at(8) = p.w_at(7);
        p.w_at(11) *= scale;
        p.w_at(12) = p.w_at(11);
        excess = 2.0 * p.w_at(2) - (p.w_at(14) + p.w_at(18));
        if (excess > kIneqTol) p.w_at(2) = 0.5 * (p.w_at(14) + p.w_at(18));
    }
    return p;
}

double semantic_reward(const ModelParams& params, const FeatureVector& psi) {
    double r = 0.0;
    for (std::size_t i = 0; i < FeatureVector::kSize; ++i) r += params.w[i] * psi.v[i];
    return r;
}

double goal_reward(const Goal& goal, const Point2& p) {
    const double dist = distance(p, goal.position);
    if (dist <= goal.radius) return 0.0;
    return -0.5 * std::sqrt(dist - goal.radius);
}

double total_reward(const ModelParams& params, const SemanticGrid& grid, const Goal& goal,
                    const Point2& p) {
    return semantic_reward(params, feature_vector(grid, p, params.features)) +
           goal_reward(goal, p);
}

double turn_penalty(const ModelParams& params, double delta_phi) {
    const double d = std::abs(wrap_angle(delta_phi));
    return -params.c_phi * std::tanh(params.beta * std::pow(d, params.alpha));
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

}  // namespace

ModelParams load_params(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    try {
        if (j.at("schema").get<std::string>() != "params v1")
            throw std::runtime_error("unsupported schema");
        ModelParams p;
        const auto& w = j.at("w");
        if (w.size() != 20) throw std::runtime_error("field 'w' must hold 20 numbers");
        for (std::size_t i = 0; i < 20; ++i) p.w[i] = w.at(i).get<double>();
        p.c_phi = j.at("C_phi").get<double>();
        p.beta = j.at("beta").get<double>();
        p.alpha = j.at("alpha").get<double>();
        p.eta = j.at("eta").get<double>();
        p.gamma = j.at("gamma").get<double>();
        p.num_actions = j.at("N_a").get<int>();
        p.delta_t = j.at("delta_t").get<double>();
        if (j.contains("r1")) p.features.r1 = j.at("r1").get<double>();
        if (j.contains("r2")) p.features.r2 = j.at("r2").get<double>();
        if (j.contains("shell_samples")) p.features.shell_samples = j.at("shell_samples").get<int>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_params(const std::string& path, const ModelParams& p) {
    nlohmann::json j;
    j["schema"] = "params v1";
    j["w"] = p.w;
    j["C_phi"] = p.c_phi;
    j["beta"] = p.beta;
    j["alpha"] = p.alpha;
    j["eta"] = p.eta;
    j["gamma"] = p.gamma;
    j["N_a"] = p.num_actions;
    j["delta_t"] = p.delta_t;
    j["r1"] = p.features.r1;
    j["r2"] = p.features.r2;
    j["shell_samples"] = p.features.shell_samples;
    write_json_file(path, j);
}

GoalSet load_goals(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    try {
        if (j.at("schema").get<std::string>() != "goals v1")
            throw std::runtime_error("unsupported schema");
        GoalSet set;
        for (const auto& g : j.at("goals")) {
            Goal goal;
            goal.id = g.at("id").get<std::string>();
            goal.position = {g.at("x").get<double>(), g.at("y").get<double>()};
            goal.radius = g.at("d").get<double>();
            set.goals.push_back(std::move(goal));
        }
        set.validate();
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_goals(const std::string& path, const GoalSet& goals) {
    nlohmann::json j;
    j["schema"] = "goals v1";
    j["goals"] = nlohmann::json::array();
    for (const auto& g : goals.goals)
        j["goals"].push_back({{"id", g.id}, {"x", g.position.x}, {"y", g.position.y},
                              {"d", g.radius}});
    write_json_file(path, j);
}

}  // namespace pedirl
