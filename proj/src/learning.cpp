#include "pedirl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pedirl/parallel.hpp"

namespace pedirl {

TrainingSet TrainingSet::from_data(SemanticGrid grid, GoalSet goals,
                                   std::vector<Trajectory> trajectories) {
    TrainingSet set{std::move(grid), std::move(goals), std::move(trajectories)};
    std::vector<double> speeds;
    for (const auto& t : set.trajectories)
        for (std::size_t k = 0; k < t.step_count(); ++k) speeds.push_back(t.speed(k));
    if (!speeds.empty()) {
        std::sort(speeds.begin(), speeds.end());
        const std::size_t n = speeds.size();
        set.speed = n % 2 == 1 ? speeds[n / 2] : 0.5 * (speeds[n / 2 - 1] + speeds[n / 2]);
    }
    set.validate();
    return set;
}

void TrainingSet::validate() const {
    if (trajectories.empty()) throw std::invalid_argument("TrainingSet: needs >= 1 trajectory");
    goals.validate();
    if (speed <= 0.0) throw std::invalid_argument("TrainingSet: speed must be positive");
    for (const auto& t : trajectories)
        for (const auto& s : t.samples())
            if (!grid.within_extent(s.p))
                throw std::invalid_argument("TrainingSet: trajectory sample outside map bounds");
}

namespace {

// Free coordinates: w2, w7(=w8), w11(=w12), w13, w14, w17, w18, C_phi, beta, alpha, eta.
constexpr std::array<const char*, kNumFreeCoords> kCoordNames = {
    "w2", "w7=w8", "w11=w12", "w13", "w14", "w17", "w18", "C_phi", "beta", "alpha", "eta"};

}  // namespace

std::array<std::string, kNumFreeCoords> free_coord_names() {
    std::array<std::string, kNumFreeCoords> names;
    for (std::size_t i = 0; i < kNumFreeCoords; ++i) names[i] = kCoordNames[i];
    return names;
}

FreeVector to_free_vector(const ModelParams& p) {
    return {p.w_at(2), p.w_at(7), p.w_at(11), p.w_at(13), p.w_at(14), p.w_at(17), p.w_at(18),
            p.c_phi, p.beta, p.alpha, p.eta};
}

ModelParams from_free_vector(const ModelParams& base, const FreeVector& x) {
    ModelParams p = base;
    p.w_at(2) = x[0];
    p.w_at(7) = p.w_at(8) = x[1];
    p.w_at(11) = p.w_at(12) = x[2];
    p.w_at(13) = x[3];
    p.w_at(14) = x[4];
    p.w_at(17) = x[5];
    p.w_at(18) = x[6];
    p.c_phi = x[7];
    p.beta = x[8];
    p.alpha = x[9];
    p.eta = x[10];
    return p;
}

std::shared_ptr<const std::vector<QTable>> QTableCache::get_or_solve(const SolveContext& context,
                                                                     const ModelParams& params,
                                                                     const GoalSet& goals,
                                                                     const SolveOptions& options) {
    // Only the weights change across probes; everything else is fixed per context.
    std::string key(sizeof(params.w), '\0');
    std::memcpy(key.data(), params.w.data(), sizeof(params.w));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto tables = std::make_shared<std::vector<QTable>>(solve_all(context, params, goals, options));
    for (const auto& t : *tables) {
        if (!t.converged) {
            std::ostringstream os;
            os << "solve_q did not converge for goal '" << t.goal_id << "': residual "
               << t.residual << " after " << t.sweeps << " sweeps";
            throw std::runtime_error(os.str());
        }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(tables));
    return it->second;
}

std::size_t QTableCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

LearnContext::LearnContext(const TrainingSet& data, const ModelParams& discretization,
                           const EmOptions& options)
    : data_(&data), options_(options),
      solve_context_(data.grid, discretization.num_actions, data.speed, discretization.delta_t,
                     discretization.features) {
    data.validate();
    const ActionSpace& actions = solve_context_.actions();
    digitized_.resize(data.trajectories.size());
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        const Trajectory& traj = data.trajectories[i];
        auto& steps = digitized_[i];
        steps.resize(traj.step_count());
        for (std::size_t k = 0; k < traj.step_count(); ++k) {
            steps[k].cell = data.grid.nearest_cell(traj[k].p);
            steps[k].action = actions.nearest(traj.heading(k));
            steps[k].has_prev = k > 0;
            steps[k].prev_heading = k > 0 ? traj.heading(k - 1) : 0.0;
        }
    }
}

std::shared_ptr<const std::vector<QTable>> LearnContext::tables(const ModelParams& params) {
    return cache_.get_or_solve(solve_context_, params, data_->goals, options_.solve);
}

double LearnContext::log_likelihood(std::size_t traj_index, const QTable& table,
                                    const ModelParams& params) const {
    double total = 0.0;
    for (const auto& step : digitized_[traj_index]) {
        const std::optional<double> prev =
            step.has_prev ? std::optional<double>(step.prev_heading) : std::nullopt;
        total += log_policy_probability(table, step.cell, step.action, prev, params);
    }
    return total;
}

namespace {

/// Per-trajectory, per-goal log-likelihood matrix.
std::vector<std::vector<double>> likelihood_matrix(LearnContext& ctx, const ModelParams& theta) {
    const auto tables = ctx.tables(theta);
    const std::size_t n = ctx.data().trajectories.size();
    const std::size_t g = ctx.data().goals.size();
    std::vector<std::vector<double>> ll(n, std::vector<double>(g));
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < g; ++j)
            ll[i][j] = ctx.log_likelihood(i, (*tables)[j], theta);
    });
    return ll;
}

std::vector<IntentPosterior> posteriors_from_matrix(LearnContext& ctx,
                                                    const std::vector<std::vector<double>>& ll) {
    std::vector<IntentPosterior> posteriors(ll.size());
    for (std::size_t i = 0; i < ll.size(); ++i) {
        const double steps = static_cast<double>(ctx.data().trajectories[i].step_count());
        const double temper = std::sqrt(steps) + 10.0;
        std::vector<double> scores(ll[i].size());
        for (std::size_t j = 0; j < scores.size(); ++j) scores[j] = ll[i][j] / temper;
        posteriors[i] = IntentPosterior{stable_softmax(scores)};
    }
    return posteriors;
}

}  // namespace

std::vector<IntentPosterior> e_step(LearnContext& ctx, const ModelParams& theta) {
    return posteriors_from_matrix(ctx, likelihood_matrix(ctx, theta));
}

double expected_log_likelihood(LearnContext& ctx, const ModelParams& theta,
                               const std::vector<IntentPosterior>& posteriors) {
    if (posteriors.size() != ctx.data().trajectories.size())
        throw std::invalid_argument("expected_log_likelihood: one posterior per trajectory");
    const auto ll = likelihood_matrix(ctx, theta);
    double total = 0.0;
    for (std::size_t i = 0; i < ll.size(); ++i)
        for (std::size_t j = 0; j < ll[i].size(); ++j) total += posteriors[i][j] * ll[i][j];
    return total;
}

double em_objective(LearnContext& ctx, const ModelParams& theta) {
    const auto ll = likelihood_matrix(ctx, theta);
    const auto posteriors = posteriors_from_matrix(ctx, ll);
    double total = 0.0;
    for (std::size_t i = 0; i < ll.size(); ++i)
        for (std::size_t j = 0; j < ll[i].size(); ++j) total += posteriors[i][j] * ll[i][j];
    return total;
}

namespace {

FreeVector project_free(const ModelParams& base, const FreeVector& x) {
    return to_free_vector(project_to_constraints(from_free_vector(base, x)));
}

double norm(const FreeVector& a, const FreeVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

ModelParams m_step(LearnContext& ctx, const ModelParams& theta,
                   const std::vector<IntentPosterior>& posteriors) {
    const EmOptions& opt = ctx.options();
    ModelParams current = project_to_constraints(theta);
    FreeVector x = to_free_vector(current);
    if (!posteriors.empty() && posteriors.size() != ctx.data().trajectories.size())
        throw std::invalid_argument("m_step: one posterior per trajectory");
    auto objective = [&](const FreeVector& v) {
        return em_objective(ctx, from_free_vector(current, v));
    };
    double fx = objective(x);

    for (int iter = 0; iter < opt.max_inner_iters; ++iter) {
        // Central finite differences over the unmasked coordinates.
        FreeVector grad{};
        for (std::size_t i = 0; i < kNumFreeCoords; ++i) {
            if (!opt.free_mask[i]) continue;
            FreeVector hi = x, lo = x;
            hi[i] += opt.fd_step;
            lo[i] -= opt.fd_step;
            grad[i] = (objective(hi) - objective(lo)) / (2.0 * opt.fd_step);
        }

        // Unit-step gradient mapping measures how far ascent can actually move.
        FreeVector mapped = x;
        for (std::size_t i = 0; i < kNumFreeCoords; ++i) mapped[i] += grad[i];
        mapped = project_free(current, mapped);
        for (std::size_t i = 0; i < kNumFreeCoords; ++i)
            if (!opt.free_mask[i]) mapped[i] = x[i];
        if (norm(mapped, x) < opt.pg_tol) break;

        // Backtracking line search along the gradient, projecting each trial.
        bool improved = false;
        for (double step = 1.0; step >= opt.min_step; step *= 0.5) {
            FreeVector trial = x;
            for (std::size_t i = 0; i < kNumFreeCoords; ++i) trial[i] += step * grad[i];
            trial = project_free(current, trial);
            for (std::size_t i = 0; i < kNumFreeCoords; ++i)
                if (!opt.free_mask[i]) trial[i] = x[i];
            double dot = 0.0;
            for (std::size_t i = 0; i < kNumFreeCoords; ++i) dot += grad[i] * (trial[i] - x[i]);
            const double ft = objective(trial);
            if (ft >= fx + opt.armijo_c * dot && ft > fx) {
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
        }
        if (!improved) break;  // no ascent step found; keep the current point
    }
    return project_to_constraints(from_free_vector(current, x));
}

FitReport em_train(LearnContext& ctx, const ModelParams& theta0) {
    const EmOptions& opt = ctx.options();
    if (opt.max_iters < 1) throw std::invalid_argument("em_train: max_iters must be >= 1");

    FitReport report;
    ModelParams theta = project_to_constraints(theta0);
    std::vector<IntentPosterior> posteriors;

    int m_steps = 0;
    for (;;) {
        double objective = 0.0;
        try {
            const auto ll = likelihood_matrix(ctx, theta);
            posteriors = posteriors_from_matrix(ctx, ll);
            for (std::size_t i = 0; i < ll.size(); ++i)
                for (std::size_t j = 0; j < ll[i].size(); ++j)
                    objective += posteriors[i][j] * ll[i][j];
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("em_train: E-step failed at iteration " +
                                     std::to_string(m_steps) + ": " + e.what());
        }
        report.objective_trace.push_back(objective);
        const std::size_t n = report.objective_trace.size();
        if (n >= 2 &&
            report.objective_trace[n - 1] - report.objective_trace[n - 2] < opt.objective_tol) {
            report.converged = true;
            break;
        }
        if (m_steps >= opt.max_iters) break;
        try {
            theta = m_step(ctx, theta, posteriors);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("em_train: M-step failed at iteration " +
                                     std::to_string(m_steps) + ": " + e.what());
        }
        ++m_steps;
    }

    report.theta = theta;
    report.iterations = m_steps;
    report.posteriors.reserve(posteriors.size());
    for (const auto& p : posteriors) report.posteriors.push_back(p.probs);

    const double activity_tol = 1e-9;
    const auto x = to_free_vector(theta);
    if (std::abs(x[0] + 0.5) < activity_tol) report.active_constraints.push_back("w2 = -0.5");
    if (x[1] < activity_tol) report.active_constraints.push_back("w7 = w8 = 0");
    if (x[2] < activity_tol) report.active_constraints.push_back("w11 = w12 = 0");
    for (std::size_t i = 3; i <= 6; ++i)
        if (std::abs(x[i]) < activity_tol)
            report.active_constraints.push_back(std::string(kCoordNames[i]) + " = 0");
    for (std::size_t i = 7; i <= 10; ++i)
        if (x[i] < activity_tol)
            report.active_constraints.push_back(std::string(kCoordNames[i]) + " = 0");
    const double lhs = 2.0 * theta.w_at(2) + theta.w_at(7) + theta.w_at(11);
    const double rhs = theta.w_at(14) + theta.w_at(18);
    if (std::abs(lhs - rhs) < activity_tol)
        report.active_constraints.push_back("2 w2 + w7 + w11 = w14 + w18");
    return report;
}

std::vector<IntentPosterior> e_step(const TrainingSet& data, const ModelParams& theta) {
    LearnContext ctx(data, theta);
    return e_step(ctx, theta);
}

FitReport em_train(const TrainingSet& data, const ModelParams& theta0, const EmOptions& options) {
    LearnContext ctx(data, theta0, options);
    return em_train(ctx, theta0);
}

void save_fit_report(const std::string& path, const FitReport& report) {
    nlohmann::json j;
    j["schema"] = "fit_report v1";
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["objective_trace"] = report.objective_trace;
    j["posteriors"] = report.posteriors;
    j["active_constraints"] = report.active_constraints;
    nlohmann::json t;
    t["w"] = report.theta.w;
    t["C_phi"] = report.theta.c_phi;
    t["beta"] = report.theta.beta;
    t["alpha"] = report.theta.alpha;
    t["eta"] = report.theta.eta;
    t["gamma"] = report.theta.gamma;
    t["N_a"] = report.theta.num_actions;
    t["delta_t"] = report.theta.delta_t;
    j["theta"] = t;
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

}  // namespace pedirl
