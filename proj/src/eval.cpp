#include "pedirl/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pedirl/parallel.hpp"

namespace pedirl {

double mhd(std::span<const Point2> a, std::span<const Point2> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mhd: point sets must be nonempty");
    auto directed = [](std::span<const Point2> from, std::span<const Point2> to) {
        double sum = 0.0;
        for (const Point2& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Point2& q : to) best = std::min(best, distance(p, q));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return std::max(directed(a, b), directed(b, a));
}

EmhdResult emhd(const std::vector<std::vector<Point2>>& sample_point_sets,
                std::span<const Point2> truth) {
    if (sample_point_sets.empty()) throw std::invalid_argument("emhd: no samples");
    const std::size_t n = sample_point_sets.size();
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = mhd(sample_point_sets[i], truth);

    EmhdResult r;
    for (double v : values) r.mean += v;
    r.mean /= static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std_error = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    }
    return r;
}

EmhdResult emhd(const std::vector<Trajectory>& samples, const Trajectory& truth) {
    std::vector<std::vector<Point2>> sets;
    sets.reserve(samples.size());
    for (const auto& s : samples) sets.push_back(s.points());
    return emhd(sets, truth.points());
}

void EvalProtocol::validate() const {
    if (observe_horizon <= 0.0 || predict_horizon <= 0.0 || truncate_at <= 0.0)
        throw std::invalid_argument("EvalProtocol: horizons must be positive");
    if (std::abs(observe_horizon + predict_horizon - truncate_at) > 1e-9)
        throw std::invalid_argument("EvalProtocol: observe + predict must equal truncate");
    if (samples < 1) throw std::invalid_argument("EvalProtocol: need at least one sample");
}

std::optional<ProtocolSplit> protocol_split(const Trajectory& traj,
                                            const EvalProtocol& protocol) {
    if (traj.duration() + 1e-9 < protocol.observe_horizon) return std::nullopt;
    const double t0 = traj.front().t;
    std::vector<TrajectorySample> observed;
    std::vector<Point2> future;
    for (const auto& s : traj.samples()) {
        const double rel = s.t - t0;
        if (rel > protocol.truncate_at + 1e-9) break;
        if (rel <= protocol.observe_horizon + 1e-9)
            observed.push_back(s);
        else
            future.push_back(s.p);
    }
    if (observed.size() < 2 || future.empty()) return std::nullopt;
    return ProtocolSplit{Trajectory(std::move(observed)), std::move(future)};
}

double median_prefix_speed(const std::vector<Trajectory>& testset, double observe_horizon) {
    std::vector<double> speeds;
    for (const auto& t : testset)
        for (std::size_t k = 0; k < t.step_count(); ++k)
            if (t[k].t - t.front().t <= observe_horizon + 1e-9) speeds.push_back(t.speed(k));
    if (speeds.empty()) return 1.4;
    std::sort(speeds.begin(), speeds.end());
    const std::size_t n = speeds.size();
    return n % 2 == 1 ? speeds[n / 2] : 0.5 * (speeds[n / 2 - 1] + speeds[n / 2]);
}

EvalResult run_protocol(const std::vector<Trajectory>& testset, const Predictor& predictor,
                        const EvalProtocol& protocol, std::uint64_t seed) {
    protocol.validate();
    if (testset.empty()) throw std::invalid_argument("run_protocol: empty test set");

    EvalResult result;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        auto split = protocol_split(testset[i], protocol);
        if (!split) {
            std::ostringstream os;
            os << "trajectory " << i << ": shorter than the observation horizon or no future"
               << " samples; skipped";
            result.warnings.push_back(os.str());
            continue;
        }
        const std::vector<Point2>& truth = split->future;

        const auto start = std::chrono::steady_clock::now();
        const std::vector<Trajectory> futures =
            predictor(split->observed, protocol.predict_horizon, protocol.samples,
                      derive_seed(seed, i));
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

        std::vector<std::vector<Point2>> sets;
        sets.reserve(futures.size());
        for (const auto& f : futures) sets.push_back(f.points());
        const EmhdResult r = emhd(sets, truth);

        result.per_trajectory.push_back({i, r.mean, r.std_error, elapsed.count()});
    }

    if (result.per_trajectory.empty())
        throw std::runtime_error("run_protocol: every test trajectory was skipped");

    result.scored = result.per_trajectory.size();
    result.skipped = result.warnings.size();
    double se_sq = 0.0;
    for (const auto& row : result.per_trajectory) {
        result.mean_emhd += row.emhd;
        result.mean_predict_seconds += row.predict_seconds;
        se_sq += row.std_error * row.std_error;
    }
    const double n = static_cast<double>(result.scored);
    result.mean_emhd /= n;
    result.mean_predict_seconds /= n;
    result.monte_carlo_std_error = std::sqrt(se_sq) / n;
    return result;
}

ModelPredictor::ModelPredictor(const SemanticGrid& grid, const GoalSet& goals,
                               const ModelParams& params, double speed,
                               const SolveOptions& options)
    : grid_(&grid), goals_(goals), params_(params) {
    goals_.validate();
    const SolveContext context(grid, params.num_actions, speed, params.delta_t, params.features);
    tables_ = solve_all(context, params, goals_, options);
    for (const auto& t : tables_)
        if (!t.converged)
            throw std::runtime_error("ModelPredictor: solve_q did not converge for goal '" +
                                     t.goal_id + "'");
}

Prediction ModelPredictor::predict(const Trajectory& observed, double horizon, int num_samples,
                                   std::uint64_t seed) const {
    return predict_distribution(observed, tables_, *grid_, params_, goals_, horizon, num_samples,
                                seed);
}

Predictor ModelPredictor::as_predictor() const {
    return [this](const Trajectory& observed, double horizon, int num_samples,
                  std::uint64_t seed) {
        return predict(observed, horizon, num_samples, seed).futures;
    };
}

SynthResult synth_generate(const SemanticGrid& grid, const GoalSet& goals,
                           const ModelParams& theta_star, int count, std::uint64_t seed,
                           const SynthOptions& options) {
    if (count < 1) throw std::invalid_argument("synth_generate: count must be >= 1");
    goals.validate();

    std::vector<std::size_t> sidewalk_cells;
    for (std::size_t cell = 0; cell < grid.cell_count(); ++cell)
        if (grid.labels()[cell] == SemanticClass::Sidewalk) sidewalk_cells.push_back(cell);
    if (sidewalk_cells.empty())
        throw std::runtime_error("synth_generate: map has no Sidewalk cell to start from");

    const SolveContext context(grid, theta_star.num_actions, options.speed, theta_star.delta_t,
                               theta_star.features);
    const std::vector<QTable> tables = solve_all(context, theta_star, goals);
    for (const auto& t : tables)
        if (!t.converged)
            throw std::runtime_error("synth_generate: solve_q did not converge for goal '" +
                                     t.goal_id + "'");

    std::vector<Trajectory> trajectories;
    std::vector<std::string> labels;
    trajectories.reserve(count);
    labels.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const std::size_t start_cell = sidewalk_cells[rng.uniform_index(sidewalk_cells.size())];
        const std::size_t goal_idx = rng.uniform_index(goals.size());
        RolloutOptions ro;
        ro.horizon = options.horizon;
        Trajectory traj = sample_rollout_with(rng, grid.cell_center(start_cell), std::nullopt,
                                              tables[goal_idx], grid, theta_star, ro);
        if (options.noise_sigma > 0.0) {
            std::vector<TrajectorySample> noisy = traj.samples();
            for (auto& s : noisy) {
                s.p.x += options.noise_sigma * rng.gaussian();
                s.p.y += options.noise_sigma * rng.gaussian();
                s.p = grid.clamp(s.p);
            }
            traj = Trajectory(std::move(noisy));
        }
        trajectories.push_back(std::move(traj));
        labels.push_back(goals[goal_idx].id);
    }

    SynthResult result{TrainingSet{grid, goals, std::move(trajectories), options.speed},
                       std::move(labels)};
    result.set.validate();
    return result;
}

std::vector<TransferRow> transfer_eval(const std::vector<SceneBundle>& train_sets,
                                       const std::vector<SceneBundle>& test_sets,
                                       const EvalProtocol& protocol,
                                       const TransferOptions& options) {
    if (train_sets.empty() || test_sets.empty())
        throw std::invalid_argument("transfer_eval: need at least one train and one test bundle");
    protocol.validate();

    std::vector<TransferRow> rows;
    for (const SceneBundle& train : train_sets) {
        ModelParams theta;
        bool trained = false;
        std::string train_error;
        try {
            TrainingSet data =
                TrainingSet::from_data(train.grid, train.goals, train.trajectories);
            const FitReport fit = em_train(data, options.theta0, options.em);
            theta = fit.theta;
            trained = true;
        } catch (const std::exception& e) {
            train_error = e.what();
        }

        for (const SceneBundle& test : test_sets) {
            TransferRow row;
            row.train_name = train.name;
            row.test_name = test.name;
            if (!trained) {
                row.error = "training failed: " + train_error;
                rows.push_back(row);
                continue;
            }
            try {
                // Planning speed comes from the observed prefixes of the test data.
                const double speed =
                    median_prefix_speed(test.trajectories, protocol.observe_horizon);
                const ModelPredictor predictor(test.grid, test.goals, theta, speed);
                const EvalResult eval = run_protocol(test.trajectories, predictor.as_predictor(),
                                                     protocol, options.seed);
                row.ok = true;
                row.mean_emhd = eval.mean_emhd;
                row.monte_carlo_std_error = eval.monte_carlo_std_error;
                row.mean_predict_seconds = eval.mean_predict_seconds;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace pedirl
