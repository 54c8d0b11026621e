// pedirl: transferable pedestrian motion prediction at intersections.
//
// Subcommands: synth | train | predict | eval | transfer | inspect.
// Every command is deterministic given its inputs and --seed, writes its
// outputs under --out, and echoes a run manifest next to them. Exit codes:
// 0 success, 2 input/parse error, 3 computation failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedirl/eval.hpp"
#include "pedirl/parallel.hpp"
#include "pedirl/scenes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pedirl;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CliError : std::runtime_error {
    int exit_code;
    CliError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(2, path + ": cannot open file");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        throw CliError(2, path + ": " + e.what());
    }
}

/// Common file inputs, resolvable from a manifest file and overridable by
/// explicit flags.
struct Inputs {
    std::string manifest_path;
    std::string map_path;
    std::string goals_path;
    std::string params_path;
    std::string traj_dir;
    std::optional<std::uint64_t> seed;
    EvalProtocol protocol{};

    void add_common(CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "manifest file naming the inputs");
        cmd->add_option("--map", map_path, "semantic map file");
        cmd->add_option("--goals", goals_path, "goals file");
        cmd->add_option("--params", params_path, "model parameter file");
        cmd->add_option("--traj-dir", traj_dir, "directory of trajectory csv files");
    }

    void resolve() {
        if (manifest_path.empty()) return;
        const json m = read_json(manifest_path);
        if (m.value("schema", "") != "manifest v1")
            throw CliError(2, manifest_path + ": expected schema 'manifest v1'");
        const fs::path base = fs::path(manifest_path).parent_path();
        auto pick = [&](std::string& slot, const char* key) {
            if (!slot.empty() || !m.contains(key)) return;
            const fs::path p = m.at(key).get<std::string>();
            slot = p.is_absolute() ? p.string() : (base / p).string();
        };
        pick(map_path, "map");
        pick(goals_path, "goals");
        pick(params_path, "params");
        pick(traj_dir, "trajectory_dir");
        if (!seed && m.contains("seed")) seed = m.at("seed").get<std::uint64_t>();
        if (m.contains("protocol")) {
            const json& p = m.at("protocol");
            protocol.observe_horizon = p.value("observe", protocol.observe_horizon);
            protocol.predict_horizon = p.value("predict", protocol.predict_horizon);
            protocol.truncate_at = p.value("truncate", protocol.truncate_at);
            protocol.samples = p.value("samples", protocol.samples);
        }
    }

    SemanticGrid load_map() const {
        if (map_path.empty()) throw CliError(2, "no map file given (--map or manifest)");
        try {
            return load_grid(map_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }
    GoalSet load_goalset() const {
        if (goals_path.empty()) throw CliError(2, "no goals file given (--goals or manifest)");
        try {
            return load_goals(goals_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }
    ModelParams load_model() const {
        if (params_path.empty())
            throw CliError(2, "no parameter file given (--params or manifest)");
        try {
            return load_params(params_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }
    std::vector<Trajectory> load_trajectories() const {
        if (traj_dir.empty())
            throw CliError(2, "no trajectory directory given (--traj-dir or manifest)");
        if (!fs::is_directory(traj_dir)) throw CliError(2, traj_dir + ": not a directory");
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(traj_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        std::vector<Trajectory> out;
        for (const auto& f : files) {
            try {
                out.push_back(load_trajectory(f.string()));
            } catch (const std::exception& e) {
                throw CliError(2, e.what());
            }
        }
        if (out.empty()) throw CliError(2, traj_dir + ": no trajectory .csv files found");
        return out;
    }
};

fs::path ensure_out_dir(const std::string& out) {
    if (out.empty()) throw CliError(2, "an output directory is required (--out)");
    fs::create_directories(out);
    return out;
}

void write_run_manifest(const fs::path& out_dir, const std::string& command, const json& inputs) {
    json j;
    j["schema"] = "run_manifest v1";
    j["tool"] = "pedirl";
    j["version"] = kVersion;
    j["command"] = command;
    j["inputs"] = inputs;
    j["threads"] = effective_threads();
    std::ofstream f(out_dir / "run_manifest.json");
    f << j.dump(2) << "\n";
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
    if (!seed) throw CliError(2, "--seed is required for sampling commands");
    return *seed;
}

/// Built-in feasible demo parameters used by `synth --scene` when no
/// theta-star file is supplied.
ModelParams demo_theta() {
    ModelParams p = ModelParams::default_init();
    p.num_actions = 8;
    p.w_at(2) = -1.2;
    p.w_at(7) = p.w_at(8) = 0.4;
    p.w_at(11) = p.w_at(12) = 0.25;
    p.w_at(13) = -0.3;
    p.w_at(14) = -0.5;
    p.w_at(17) = -0.15;
    p.w_at(18) = -0.25;
    p.c_phi = 0.8;
    p.beta = 2.0;
    p.alpha = 1.5;
    p.eta = 5.0;
    return p;
}

std::string traj_name(std::size_t i) {
    std::ostringstream os;
    os << "traj_" << std::setw(3) << std::setfill('0') << i << ".csv";
    return os.str();
}

int cmd_synth(const Inputs& in, const std::string& scene_name, int scene_cells, int count,
              double noise, double horizon, double speed, const std::string& out) {
    const fs::path out_dir = ensure_out_dir(out);
    const std::uint64_t seed = require_seed(in.seed);
    if (count < 1) throw CliError(2, "--count must be at least 1");

    std::optional<SemanticGrid> grid;
    GoalSet goals;
    std::string map_path = in.map_path;
    std::string goals_path = in.goals_path;
    if (!scene_name.empty()) {
        SceneSpec spec;
        spec.cells_per_side = scene_cells;
        Scene scene = scene_name == "fourway" ? make_four_way(spec) : make_t_junction(spec);
        grid = std::move(scene.grid);
        goals = std::move(scene.goals);
        map_path = (out_dir / "map.txt").string();
        goals_path = (out_dir / "goals.json").string();
        save_grid(map_path, *grid);
        save_goals(goals_path, goals);
    } else {
        grid = in.load_map();
        goals = in.load_goalset();
    }

    ModelParams theta;
    std::string params_path = in.params_path;
    if (!params_path.empty()) {
        theta = in.load_model();
    } else if (!scene_name.empty()) {
        theta = demo_theta();
        params_path = (out_dir / "theta_star.json").string();
        save_params(params_path, theta);
    } else {
        throw CliError(2, "--params is required unless --scene builds a demo scene");
    }
    if (!check_constraints(theta).empty())
        throw CliError(2, params_path + ": parameters violate the model constraints");

    SynthOptions options;
    options.noise_sigma = noise;
    options.horizon = horizon;
    options.speed = speed;

    std::optional<SynthResult> result;
    try {
        result = synth_generate(*grid, goals, theta, count, seed, options);
    } catch (const std::exception& e) {
        throw CliError(3, std::string("generation failed: ") + e.what());
    }

    const fs::path traj_dir = out_dir / "trajs";
    fs::create_directories(traj_dir);
    std::ofstream labels(out_dir / "labels.csv");
    labels << "file,goal\n";
    for (std::size_t i = 0; i < result->set.trajectories.size(); ++i) {
        const std::string name = traj_name(i);
        save_trajectory((traj_dir / name).string(), result->set.trajectories[i]);
        labels << name << "," << result->goal_labels[i] << "\n";
    }

    write_run_manifest(out_dir, "synth",
                       {{"map", map_path},
                        {"goals", goals_path},
                        {"params", params_path},
                        {"scene", scene_name},
                        {"count", count},
                        {"noise", noise},
                        {"horizon", horizon},
                        {"speed", speed},
                        {"seed", seed}});
    std::cout << "wrote " << count << " trajectories to " << traj_dir.string() << "\n";
    return 0;
}

int cmd_train(const Inputs& in, const std::string& theta0_path, int max_iters, int max_inner,
              const std::string& out) {
    const fs::path out_dir = ensure_out_dir(out);
    const SemanticGrid grid = in.load_map();
    const GoalSet goals = in.load_goalset();
    const std::vector<Trajectory> trajectories = in.load_trajectories();

    ModelParams theta0 = ModelParams::default_init();
    theta0.num_actions = 8;
    if (!theta0_path.empty()) {
        try {
            theta0 = load_params(theta0_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }

    EmOptions options;
    options.max_iters = max_iters;
    options.max_inner_iters = max_inner;

    FitReport report;
    try {
        TrainingSet data = TrainingSet::from_data(grid, goals, trajectories);
        report = em_train(data, theta0, options);
    } catch (const std::exception& e) {
        throw CliError(3, std::string("training failed: ") + e.what());
    }

    save_params((out_dir / "params.json").string(), report.theta);
    save_fit_report((out_dir / "fit_report.json").string(), report);
    write_run_manifest(out_dir, "train",
                       {{"map", in.map_path},
                        {"goals", in.goals_path},
                        {"trajectory_dir", in.traj_dir},
                        {"theta0", theta0_path},
                        {"max_iters", max_iters},
                        {"max_inner_iters", max_inner}});
    std::cout << "trained " << report.iterations << " EM iteration(s); objective "
              << report.objective_trace.back() << (report.converged ? " (converged)" : "")
              << "\n";
    return 0;
}

int cmd_predict(const Inputs& in, const std::string& partial_path, int samples, double horizon,
                double speed_flag, const std::string& out) {
    const fs::path out_dir = ensure_out_dir(out);
    const std::uint64_t seed = require_seed(in.seed);
    const SemanticGrid grid = in.load_map();
    const GoalSet goals = in.load_goalset();
    const ModelParams theta = in.load_model();
    if (samples < 1) throw CliError(2, "--samples must be at least 1");

    Trajectory partial = [&] {
        try {
            return load_trajectory(partial_path);
        } catch (const std::exception& e) {
            throw CliError(2, e.what());
        }
    }();

    const double speed = speed_flag > 0.0 ? speed_flag : partial.median_speed();
    Prediction pred;
    try {
        const ModelPredictor predictor(grid, goals, theta, speed);
        pred = predictor.predict(partial, horizon, samples, seed);
    } catch (const std::exception& e) {
        throw CliError(3, std::string("prediction failed: ") + e.what());
    }

    for (std::size_t i = 0; i < pred.futures.size(); ++i) {
        std::ostringstream name;
        name << "sample_" << std::setw(3) << std::setfill('0') << i << ".csv";
        save_trajectory((out_dir / name.str()).string(), pred.futures[i]);
    }
    json posterior;
    posterior["schema"] = "posterior v1";
    for (std::size_t g = 0; g < goals.size(); ++g)
        posterior["posterior"][goals[g].id] = pred.posterior[g];
    posterior["samples"] = samples;
    posterior["horizon"] = horizon;
    std::ofstream pf(out_dir / "posterior.json");
    pf << posterior.dump(2) << "\n";

    write_run_manifest(out_dir, "predict",
                       {{"map", in.map_path},
                        {"goals", in.goals_path},
                        {"params", in.params_path},
                        {"trajectory", partial_path},
                        {"samples", samples},
                        {"horizon", horizon},
                        {"speed", speed},
                        {"seed", seed}});
    std::cout << "wrote " << samples << " sampled futures to " << out_dir.string() << "\n";
    return 0;
}

void write_eval_outputs(const fs::path& out_dir, const EvalResult& result) {
    std::ofstream csv(out_dir / "eval.csv");
    csv << "index,emhd_m,std_error_m,predict_s\n";
    for (const auto& row : result.per_trajectory) {
        csv << row.index << "," << std::fixed << std::setprecision(2) << row.emhd << ","
            << std::setprecision(4) << row.std_error << "," << std::setprecision(3)
            << row.predict_seconds << "\n";
        csv.unsetf(std::ios_base::floatfield);
    }

    std::ofstream summary(out_dir / "summary.txt");
    summary << "trajectories scored: " << result.scored << " (skipped " << result.skipped
            << ")\n";
    summary << "mean EMHD (m):       " << std::fixed << std::setprecision(2) << result.mean_emhd
            << "\n";
    summary << "MC std error (m):    " << std::setprecision(4)
            << result.monte_carlo_std_error << "\n";
    summary << "mean predict time:   " << std::setprecision(3) << result.mean_predict_seconds
            << " s\n";
    for (const auto& w : result.warnings) summary << "warning: " << w << "\n";
}

void write_plot_data(const fs::path& plot_root, std::size_t index, const Trajectory& observed,
                     std::span<const Point2> truth, const std::vector<Trajectory>& futures) {
    std::ostringstream name;
    name << "traj_" << std::setw(3) << std::setfill('0') << index;
    const fs::path dir = plot_root / name.str();
    fs::create_directories(dir);
    save_trajectory((dir / "observed.csv").string(), observed);
    std::ofstream truth_file(dir / "truth.csv");
    truth_file << "x,y\n" << std::setprecision(17);
    for (const auto& p : truth) truth_file << p.x << "," << p.y << "\n";
    for (std::size_t i = 0; i < futures.size(); ++i) {
        std::ostringstream sample;
        sample << "sample_" << std::setw(3) << std::setfill('0') << i << ".csv";
        save_trajectory((dir / sample.str()).string(), futures[i]);
    }
}

int cmd_eval(const Inputs& in, const std::string& pred_dir, double speed_flag,
             const std::string& plot_dir, const std::string& out) {
    const fs::path out_dir = ensure_out_dir(out);
    const std::vector<Trajectory> testset = in.load_trajectories();
    EvalProtocol protocol = in.protocol;
    try {
        protocol.validate();
    } catch (const std::exception& e) {
        throw CliError(2, e.what());
    }

    EvalResult result;
    if (!pred_dir.empty()) {
        // Score externally supplied predictions: for test file <stem>.csv the
        // sampled futures live in <pred_dir>/<stem>/sample_*.csv.
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(in.traj_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());

        for (std::size_t i = 0; i < testset.size(); ++i) {
            const auto split = protocol_split(testset[i], protocol);
            if (!split) {
                result.warnings.push_back(files[i].string() + ": too short; skipped");
                continue;
            }
            const fs::path dir = fs::path(pred_dir) / files[i].stem();
            if (!fs::is_directory(dir))
                throw CliError(2, dir.string() + ": missing prediction directory");
            std::vector<std::vector<Point2>> sets;
            std::vector<fs::path> sample_files;
            for (const auto& entry : fs::directory_iterator(dir))
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                    sample_files.push_back(entry.path());
            std::sort(sample_files.begin(), sample_files.end());
            for (const auto& f : sample_files) {
                try {
                    sets.push_back(load_trajectory(f.string()).points());
                } catch (const std::exception& e) {
                    throw CliError(2, e.what());
                }
            }
            if (sets.empty()) throw CliError(2, dir.string() + ": no prediction samples");
            const EmhdResult r = emhd(sets, split->future);
            result.per_trajectory.push_back({i, r.mean, r.std_error, 0.0});
        }
        if (result.per_trajectory.empty())
            throw CliError(3, "every test trajectory was skipped");
        result.scored = result.per_trajectory.size();
        result.skipped = result.warnings.size();
        double se_sq = 0.0;
        for (const auto& row : result.per_trajectory) {
            result.mean_emhd += row.emhd;
            se_sq += row.std_error * row.std_error;
        }
        result.mean_emhd /= static_cast<double>(result.scored);
        result.monte_carlo_std_error = std::sqrt(se_sq) / static_cast<double>(result.scored);
    } else {
        const std::uint64_t seed = require_seed(in.seed);
        const SemanticGrid grid = in.load_map();
        const GoalSet goals = in.load_goalset();
        const ModelParams theta = in.load_model();
        const double speed = speed_flag > 0.0
                                 ? speed_flag
                                 : median_prefix_speed(testset, protocol.observe_horizon);
        std::vector<std::pair<Trajectory, std::vector<Trajectory>>> captured;
        try {
            const ModelPredictor predictor(grid, goals, theta, speed);
            Predictor base = predictor.as_predictor();
            const Predictor wrapped = [&](const Trajectory& observed, double horizon,
                                          int num_samples, std::uint64_t s) {
                auto futures = base(observed, horizon, num_samples, s);
                if (!plot_dir.empty()) captured.emplace_back(observed, futures);
                return futures;
            };
            result = run_protocol(testset, wrapped, protocol, seed);
        } catch (const std::exception& e) {
            throw CliError(3, std::string("evaluation failed: ") + e.what());
        }
        if (!plot_dir.empty()) {
            for (std::size_t k = 0; k < result.per_trajectory.size(); ++k) {
                const std::size_t index = result.per_trajectory[k].index;
                const auto split = protocol_split(testset[index], protocol);
                write_plot_data(plot_dir, index, captured[k].first, split->future,
                                captured[k].second);
            }
        }
    }

    write_eval_outputs(out_dir, result);
    write_run_manifest(out_dir, "eval",
                       {{"map", in.map_path},
                        {"goals", in.goals_path},
                        {"params", in.params_path},
                        {"trajectory_dir", in.traj_dir},
                        {"pred_dir", pred_dir},
                        {"samples", protocol.samples},
                        {"seed", in.seed ? json(*in.seed) : json()}});
    std::cout << std::fixed << std::setprecision(2) << "mean EMHD " << result.mean_emhd
              << " m over " << result.scored << " trajectories\n";
    return 0;
}

SceneBundle load_bundle(const std::string& manifest_path) {
    Inputs in;
    in.manifest_path = manifest_path;
    in.resolve();
    return SceneBundle{fs::path(manifest_path).stem().string(), in.load_map(),
                       in.load_goalset(), in.load_trajectories()};
}

int cmd_transfer(const std::vector<std::string>& train_manifests,
                 const std::vector<std::string>& test_manifests, const EvalProtocol& protocol,
                 std::optional<std::uint64_t> seed, int max_iters, int max_inner,
                 const std::string& out) {
    const fs::path out_dir = ensure_out_dir(out);
    std::vector<SceneBundle> train_sets, test_sets;
    for (const auto& m : train_manifests) train_sets.push_back(load_bundle(m));
    for (const auto& m : test_manifests) test_sets.push_back(load_bundle(m));

    TransferOptions options;
    options.seed = require_seed(seed);
    options.em.max_iters = max_iters;
    options.em.max_inner_iters = max_inner;
    options.theta0.num_actions = 8;

    std::vector<TransferRow> rows;
    try {
        rows = transfer_eval(train_sets, test_sets, protocol, options);
    } catch (const std::exception& e) {
        throw CliError(3, std::string("transfer evaluation failed: ") + e.what());
    }

    std::ofstream csv(out_dir / "transfer.csv");
    csv << "train,test,ok,emhd_m,std_error_m,predict_s,error\n";
    std::size_t failures = 0;
    for (const auto& row : rows) {
        csv << row.train_name << "," << row.test_name << "," << (row.ok ? 1 : 0) << ",";
        if (row.ok)
            csv << std::fixed << std::setprecision(2) << row.mean_emhd << ","
                << std::setprecision(4) << row.monte_carlo_std_error << ","
                << std::setprecision(3) << row.mean_predict_seconds << ",";
        else
            csv << ",,,";
        csv << row.error << "\n";
        csv.unsetf(std::ios_base::floatfield);
        failures += row.ok ? 0 : 1;
        std::cout << "trained on " << row.train_name << ", tested on " << row.test_name << ": ";
        if (row.ok)
            std::cout << std::fixed << std::setprecision(2) << row.mean_emhd << " m EMHD\n";
        else
            std::cout << "FAILED (" << row.error << ")\n";
    }

    json inputs;
    inputs["train"] = train_manifests;
    inputs["test"] = test_manifests;
    inputs["seed"] = options.seed;
    write_run_manifest(out_dir, "transfer", inputs);
    if (failures == rows.size()) throw CliError(3, "all transfer pairs failed");
    return 0;
}

int cmd_inspect(const Inputs& in, const std::string& goal_id, double speed,
                const std::string& out) {
    if (in.map_path.empty() && in.goals_path.empty() && in.params_path.empty())
        throw CliError(2, "inspect needs at least one of --map, --goals, --params");
    if (!in.map_path.empty()) {
        const SemanticGrid grid = in.load_map();
        std::array<std::size_t, 4> counts{};
        for (const auto c : grid.labels()) ++counts[static_cast<int>(c)];
        std::cout << "map: " << grid.width() << " x " << grid.height() << " cells at "
                  << grid.cell_size() << " m, origin (" << grid.origin().x << ", "
                  << grid.origin().y << ")\n"
                  << "  obstacle " << counts[0] << ", road " << counts[1] << ", sidewalk "
                  << counts[2] << ", crosswalk " << counts[3] << "\n";
    }
    if (!in.goals_path.empty()) {
        const GoalSet goals = in.load_goalset();
        std::cout << "goals: " << goals.size() << "\n";
        for (const auto& g : goals.goals)
            std::cout << "  " << g.id << " at (" << g.position.x << ", " << g.position.y
                      << ") radius " << g.radius << "\n";
    }
    if (!in.params_path.empty()) {
        const ModelParams theta = in.load_model();
        const auto violations = check_constraints(theta);
        std::cout << "params: N_a=" << theta.num_actions << " delta_t=" << theta.delta_t
                  << " gamma=" << theta.gamma << " eta=" << theta.eta << "\n";
        if (violations.empty()) {
            std::cout << "  constraints: all satisfied\n";
        } else {
            for (const auto& v : violations)
                std::cout << "  constraint violated: " << v.constraint << " (" << v.description
                          << ")\n";
        }
    }

    if (!goal_id.empty()) {
        if (out.empty()) throw CliError(2, "--out is required to dump a Q-table");
        const SemanticGrid grid = in.load_map();
        const GoalSet goals = in.load_goalset();
        const ModelParams theta = in.load_model();
        const Goal& goal = goals.goals[goals.index_of(goal_id)];
        const QTable table = solve_q(grid, theta, goal, speed > 0.0 ? speed : 1.4);
        std::ofstream f(out);
        if (!f) throw CliError(2, out + ": cannot open for writing");
        dump_qtable(f, table, grid);
        write_run_manifest(fs::path(out).parent_path(), "inspect",
                           {{"map", in.map_path},
                            {"goals", in.goals_path},
                            {"params", in.params_path},
                            {"goal", goal_id},
                            {"speed", speed},
                            {"out", out}});
        std::cout << "wrote Q-table for goal " << goal_id << " to " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transferable pedestrian motion prediction at intersections"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

    Inputs in;
    std::string out;
    std::optional<std::uint64_t> seed_flag;

    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    in.add_common(synth);
    std::string scene_name;
    int scene_cells = 30;
    int count = 20;
    double noise = 0.0, synth_horizon = 40.0, synth_speed = 1.4;
    synth->add_option("--scene", scene_name, "built-in scene (fourway | tjunction)")
        ->check(CLI::IsMember({"fourway", "tjunction"}));
    synth->add_option("--scene-cells", scene_cells, "cells per side for built-in scenes");
    synth->add_option("--count", count, "number of trajectories");
    synth->add_option("--noise", noise, "observation noise sigma (m)");
    synth->add_option("--horizon", synth_horizon, "rollout horizon (s)");
    synth->add_option("--speed", synth_speed, "walking speed (m/s)");
    synth->add_option("--seed", seed_flag, "rng seed (required)");
    synth->add_option("--out", out, "output directory")->required();

    auto* train = app.add_subcommand("train", "fit model parameters by EM");
    in.add_common(train);
    std::string theta0_path;
    int max_iters = 15, max_inner = 40;
    train->add_option("--theta0", theta0_path, "initialization parameter file");
    train->add_option("--max-iters", max_iters, "EM iteration cap");
    train->add_option("--max-inner", max_inner, "M-step inner iteration cap");
    train->add_option("--out", out, "output directory")->required();

    auto* predict = app.add_subcommand("predict", "predict futures from a partial trajectory");
    in.add_common(predict);
    std::string partial_path;
    int samples = 100;
    double predict_horizon = 5.0, predict_speed = 0.0;
    predict->add_option("--traj", partial_path, "partial trajectory csv")->required();
    predict->add_option("--samples", samples, "number of sampled futures");
    predict->add_option("--horizon", predict_horizon, "prediction horizon (s)");
    predict->add_option("--speed", predict_speed, "walking speed (default: observed median)");
    predict->add_option("--seed", seed_flag, "rng seed (required)");
    predict->add_option("--out", out, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "run the observe/predict protocol over a test set");
    in.add_common(eval);
    std::string pred_dir;
    double eval_speed = 0.0;
    eval->add_option("--pred-dir", pred_dir, "score externally supplied predictions instead");
    eval->add_option("--samples", in.protocol.samples, "sampled futures per trajectory");
    eval->add_option("--observe", in.protocol.observe_horizon, "observation horizon (s)");
    eval->add_option("--predict-horizon", in.protocol.predict_horizon, "prediction horizon (s)");
    eval->add_option("--truncate", in.protocol.truncate_at, "truncation horizon (s)");
    eval->add_option("--speed", eval_speed, "walking speed (default: observed median)");
    std::string plot_dir;
    eval->add_option("--plot-dir", plot_dir,
                     "write per-trajectory plot data (observed, truth, samples)");
    eval->add_option("--seed", seed_flag, "rng seed (required unless --pred-dir)");
    eval->add_option("--out", out, "output directory")->required();

    auto* transfer = app.add_subcommand("transfer", "train/test across scene bundles");
    std::vector<std::string> train_manifests, test_manifests;
    EvalProtocol transfer_protocol;
    int t_max_iters = 15, t_max_inner = 40;
    transfer->add_option("--train", train_manifests, "training bundle manifests")->required();
    transfer->add_option("--test", test_manifests, "test bundle manifests")->required();
    transfer->add_option("--samples", transfer_protocol.samples,
                         "sampled futures per trajectory");
    transfer->add_option("--max-iters", t_max_iters, "EM iteration cap");
    transfer->add_option("--max-inner", t_max_inner, "M-step inner iteration cap");
    transfer->add_option("--seed", seed_flag, "rng seed (required)");
    transfer->add_option("--out", out, "output directory")->required();

    auto* inspect = app.add_subcommand("inspect", "validate inputs and dump internals");
    in.add_common(inspect);
    std::string inspect_goal;
    double inspect_speed = 1.4;
    inspect->add_option("--goal", inspect_goal, "dump the Q-table for this goal id");
    inspect->add_option("--speed", inspect_speed, "walking speed for the Q-table solve");
    inspect->add_option("--out", out, "Q-table output file");

    CLI11_PARSE(app, argc, argv);
    set_max_threads(threads);

    try {
        in.seed = seed_flag;
        in.resolve();
        if (synth->parsed())
            return cmd_synth(in, scene_name, scene_cells, count, noise, synth_horizon,
                             synth_speed, out);
        if (train->parsed()) return cmd_train(in, theta0_path, max_iters, max_inner, out);
        if (predict->parsed())
            return cmd_predict(in, partial_path, samples, predict_horizon, predict_speed, out);
        if (eval->parsed()) return cmd_eval(in, pred_dir, eval_speed, plot_dir, out);
        if (transfer->parsed())
            return cmd_transfer(train_manifests, test_manifests, transfer_protocol, seed_flag,
                                t_max_iters, t_max_inner, out);
        if (inspect->parsed()) return cmd_inspect(in, inspect_goal, inspect_speed, out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
