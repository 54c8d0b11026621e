#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "pedirl/eval.hpp"
#include "pedirl/scenes.hpp"

using namespace pedirl;

namespace {

ModelParams theta_star() {
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

Trajectory line(double t0, Point2 a, Point2 b, int steps, double dt = 0.5) {
    std::vector<TrajectorySample> s;
    for (int k = 0; k <= steps; ++k) {
        const double f = static_cast<double>(k) / steps;
        s.push_back({t0 + k * dt, {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)}});
    }
    return Trajectory(std::move(s));
}

}  // namespace

TEST_CASE("mhd basics") {
    const std::vector<Point2> a{{0, 0}};
    const std::vector<Point2> b{{3, 4}};
    CHECK(mhd(a, a) == 0.0);
    CHECK(mhd(a, b) == doctest::Approx(5.0));

    const std::vector<Point2> c{{0, 0}, {1, 0}};
    const std::vector<Point2> d{{0, 1}, {1, 1}};
    CHECK(mhd(c, d) == doctest::Approx(1.0));

    CHECK_THROWS_AS(mhd({}, b), std::invalid_argument);
}

TEST_CASE("mhd properties: symmetry, identity, nonnegativity, rigid invariance") {
    Rng rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t na = 1 + rng.uniform_index(8);
        const std::size_t nb = 1 + rng.uniform_index(8);
        std::vector<Point2> a(na), b(nb);
        for (auto& p : a) p = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
        for (auto& p : b) p = {rng.uniform(-10, 10), rng.uniform(-10, 10)};

        const double d1 = mhd(a, b);
        CHECK(d1 >= 0.0);
        CHECK(mhd(b, a) == d1);
        CHECK(mhd(a, a) == 0.0);

        const RigidTransform t{rng.uniform(-M_PI, M_PI), {rng.uniform(-5, 5), rng.uniform(-5, 5)}};
        std::vector<Point2> at(na), bt(nb);
        for (std::size_t i = 0; i < na; ++i) at[i] = transform_point(a[i], t);
        for (std::size_t i = 0; i < nb; ++i) bt[i] = transform_point(b[i], t);
        CHECK(std::abs(mhd(at, bt) - d1) <= 1e-9);
    }
}

TEST_CASE("emhd: identical samples, arithmetic mean, weighted-average oracle") {
    const Trajectory truth = line(0.0, {0, 0}, {5, 0}, 10);
    const std::vector<Trajectory> same{truth, truth, truth};
    const EmhdResult zero = emhd(same, truth);
    CHECK(zero.mean == 0.0);
    CHECK(zero.std_error == 0.0);

    // two samples with MHD 1 and 3 against a single-point truth set
    const std::vector<std::vector<Point2>> two{{{0.0, 1.0}}, {{0.0, 3.0}}};
    const std::vector<Point2> origin{{0.0, 0.0}};
    const EmhdResult pair = emhd(two, origin);
    CHECK(pair.mean == doctest::Approx(2.0));
    // sample std = sqrt(2), SE = sqrt(2)/sqrt(2) = 1
    CHECK(pair.std_error == doctest::Approx(1.0));

    Rng rng(53);
    std::vector<std::vector<Point2>> sets(100);
    for (auto& s : sets) {
        s.resize(5);
        for (auto& p : s) p = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    }
    const std::vector<Point2> tpts = truth.points();
    const EmhdResult r = emhd(sets, tpts);
    long double oracle = 0.0L;
    for (const auto& s : sets) oracle += mhd(s, tpts);
    oracle /= sets.size();
    CHECK(std::abs(r.mean - static_cast<double>(oracle)) <= 1e-12);

    CHECK_THROWS_AS(emhd(std::vector<std::vector<Point2>>{}, tpts), std::invalid_argument);
}

TEST_CASE("protocol validation and defaults") {
    EvalProtocol p;
    CHECK(p.observe_horizon == 2.5);
    CHECK(p.predict_horizon == 5.0);
    CHECK(p.truncate_at == 7.5);
    CHECK(p.samples == 100);
    CHECK_NOTHROW(p.validate());
    p.predict_horizon = 4.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.samples = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("run_protocol with an oracle predictor scores zero") {
    // The predictor replays the exact future of each test trajectory.
    std::vector<Trajectory> testset;
    for (int i = 0; i < 3; ++i)
        testset.push_back(line(0.0, {0.0, static_cast<double>(i)}, {10.0, static_cast<double>(i)},
                               20, 0.5));  // 10 s at 1 m/s

    std::map<double, Trajectory> futures;  // keyed by start y
    for (const auto& t : testset) {
        std::vector<TrajectorySample> fut;
        for (const auto& s : t.samples())
            if (s.t - t.front().t > 2.5 + 1e-9 && s.t - t.front().t <= 7.5 + 1e-9)
                fut.push_back(s);
        futures.emplace(t.front().p.y, Trajectory(std::move(fut)));
    }

    const Predictor oracle = [&](const Trajectory& observed, double, int n, std::uint64_t) {
        return std::vector<Trajectory>(static_cast<std::size_t>(n),
                                       futures.at(observed.front().p.y));
    };

    EvalProtocol protocol;
    protocol.samples = 4;
    const EvalResult result = run_protocol(testset, oracle, protocol, 1);
    CHECK(result.scored == 3);
    CHECK(result.mean_emhd == 0.0);
    CHECK(result.monte_carlo_std_error == 0.0);
}

TEST_CASE("run_protocol skips short trajectories with warnings") {
    std::vector<Trajectory> testset;
    testset.push_back(line(0.0, {0, 0}, {10, 0}, 20, 0.5));  // long enough
    testset.push_back(line(0.0, {0, 1}, {2, 1}, 3, 0.5));    // 1.5 s: too short

    const Predictor echo = [&](const Trajectory& observed, double, int n, std::uint64_t) {
        std::vector<TrajectorySample> fut;
        const double t0 = observed.back().t;
        fut.push_back({t0 + 0.5, observed.back().p});
        fut.push_back({t0 + 1.0, observed.back().p});
        return std::vector<Trajectory>(static_cast<std::size_t>(n), Trajectory(std::move(fut)));
    };
    EvalProtocol protocol;
    protocol.samples = 2;
    const EvalResult result = run_protocol(testset, echo, protocol, 1);
    CHECK(result.scored == 1);
    CHECK(result.skipped == 1);
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("trajectory 1") != std::string::npos);

    // all skipped is an error
    const std::vector<Trajectory> all_short{line(0.0, {0, 1}, {2, 1}, 3, 0.5)};
    CHECK_THROWS_AS(run_protocol(all_short, echo, protocol, 1), std::runtime_error);
}

TEST_CASE("run_protocol with N = 1 equals the single-rollout MHD") {
    const Scene scene = make_four_way({.cells_per_side = 30});
    const ModelParams star = theta_star();
    SynthOptions so;
    so.horizon = 25.0;
    const SynthResult synth = synth_generate(scene.grid, scene.goals, star, 12, 61, so);

    std::vector<Trajectory> testset;
    for (const auto& t : synth.set.trajectories)
        if (t.duration() >= 6.0) testset.push_back(t);
    REQUIRE(testset.size() >= 2);
    testset.erase(testset.begin() + 2, testset.end());

    const ModelPredictor predictor(scene.grid, scene.goals, star, 1.4);
    EvalProtocol protocol;
    protocol.samples = 1;
    const EvalResult result = run_protocol(testset, predictor.as_predictor(), protocol, 77);

    for (const auto& row : result.per_trajectory) {
        const Trajectory& traj = testset[row.index];
        const Trajectory cut = traj.truncated(7.5);
        std::vector<TrajectorySample> obs, fut;
        for (const auto& s : cut.samples())
            (s.t - cut.front().t <= 2.5 + 1e-9 ? obs : fut).push_back(s);
        const Prediction pred = predictor.predict(Trajectory(obs), 5.0, 1, derive_seed(77, row.index));
        std::vector<Point2> truth(fut.size());
        for (std::size_t i = 0; i < fut.size(); ++i) truth[i] = fut[i].p;
        CHECK(row.emhd == doctest::Approx(mhd(pred.futures[0].points(), truth)).epsilon(1e-12));
        CHECK(row.std_error == 0.0);
    }
}

TEST_CASE("run_protocol aggregates the per-trajectory rows") {
    const Scene scene = make_four_way({.cells_per_side = 30});
    const ModelParams star = theta_star();
    SynthOptions so;
    so.horizon = 20.0;
    const SynthResult synth = synth_generate(scene.grid, scene.goals, star, 20, 63, so);

    const ModelPredictor predictor(scene.grid, scene.goals, star, 1.4);
    EvalProtocol protocol;
    protocol.samples = 5;
    const EvalResult result =
        run_protocol(synth.set.trajectories, predictor.as_predictor(), protocol, 64);

    long double mean = 0.0L, time_mean = 0.0L, se_sq = 0.0L;
    for (const auto& row : result.per_trajectory) {
        mean += row.emhd;
        time_mean += row.predict_seconds;
        se_sq += row.std_error * row.std_error;
    }
    const double n = static_cast<double>(result.per_trajectory.size());
    CHECK(result.scored + result.skipped == synth.set.trajectories.size());
    CHECK(result.mean_emhd == doctest::Approx(static_cast<double>(mean) / n).epsilon(1e-12));
    CHECK(result.mean_predict_seconds ==
          doctest::Approx(static_cast<double>(time_mean) / n).epsilon(1e-12));
    CHECK(result.monte_carlo_std_error ==
          doctest::Approx(std::sqrt(static_cast<double>(se_sq)) / n).epsilon(1e-12));
}

TEST_CASE("synth_generate: count, labels, determinism, sidewalk starts") {
    const Scene scene = make_four_way({.cells_per_side = 24});
    const ModelParams star = theta_star();
    SynthOptions so;
    so.horizon = 15.0;

    const SynthResult one = synth_generate(scene.grid, scene.goals, star, 1, 71, so);
    CHECK(one.set.trajectories.size() == 1);
    CHECK(one.goal_labels.size() == 1);

    const SynthResult a = synth_generate(scene.grid, scene.goals, star, 10, 72, so);
    const SynthResult b = synth_generate(scene.grid, scene.goals, star, 10, 72, so);
    for (std::size_t i = 0; i < a.set.trajectories.size(); ++i) {
        CHECK(a.goal_labels[i] == b.goal_labels[i]);
        REQUIRE(a.set.trajectories[i].size() == b.set.trajectories[i].size());
        for (std::size_t k = 0; k < a.set.trajectories[i].size(); ++k) {
            CHECK(a.set.trajectories[i][k].p.x == b.set.trajectories[i][k].p.x);
            CHECK(a.set.trajectories[i][k].p.y == b.set.trajectories[i][k].p.y);
        }
    }

    for (const auto& t : a.set.trajectories)
        CHECK(label_at(scene.grid, t.front().p) == SemanticClass::Sidewalk);

    // no sidewalk to start from
    SemanticGrid roads({0, 0}, 0.5, 10, 10,
                       std::vector<SemanticClass>(100, SemanticClass::Road));
    GoalSet g;
    g.goals.push_back({"G", {2.0, 2.0}, 1.0});
    CHECK_THROWS_AS(synth_generate(roads, g, star, 1, 1, so), std::runtime_error);
}

TEST_CASE("synth_generate label distribution is uniform over goals") {
    const Scene scene = make_four_way({.cells_per_side = 24});
    ModelParams star = theta_star();
    star.eta = 2.0;  // cheap rollouts; labels are what matters here
    SynthOptions so;
    so.horizon = 4.0;
    const int n = 1000;
    const SynthResult synth = synth_generate(scene.grid, scene.goals, star, n, 73, so);
    std::map<std::string, int> counts;
    for (const auto& label : synth.goal_labels) ++counts[label];
    const double expect = n / 4.0;
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    for (const auto& [id, c] : counts) {
        INFO("goal ", id, " count ", c);
        CHECK(std::abs(c - expect) <= 3.0 * sigma);
    }
}

TEST_CASE("greedy synthetic walkers reach their goals") {
    const Scene scene = make_four_way({.cells_per_side = 30});
    ModelParams star = theta_star();
    star.eta = 100.0;
    SynthOptions so;
    so.horizon = 60.0;
    const SynthResult synth = synth_generate(scene.grid, scene.goals, star, 20, 79, so);
    int reached = 0;
    for (std::size_t i = 0; i < synth.set.trajectories.size(); ++i) {
        const Goal& g = scene.goals.goals[scene.goals.index_of(synth.goal_labels[i])];
        if (distance(synth.set.trajectories[i].back().p, g.position) <= g.radius) ++reached;
    }
    CHECK(reached == 20);
}

TEST_CASE("transfer_eval emits the cartesian product of bundles") {
    const Scene a = make_four_way({.cells_per_side = 24});
    const ModelParams star = theta_star();
    SynthOptions so;
    so.horizon = 20.0;
    const SynthResult train = synth_generate(a.grid, a.goals, star, 6, 81, so);
    const SynthResult test = synth_generate(a.grid, a.goals, star, 6, 82, so);

    std::vector<Trajectory> usable;
    for (const auto& t : test.set.trajectories)
        if (t.duration() >= 4.0) usable.push_back(t);
    REQUIRE(!usable.empty());

    const SceneBundle train_bundle{"A", a.grid, a.goals, train.set.trajectories};
    const SceneBundle test_bundle{"A", a.grid, a.goals, usable};

    TransferOptions opts;
    opts.em.max_iters = 1;
    opts.em.max_inner_iters = 2;
    EvalProtocol protocol;
    protocol.samples = 8;

    const auto rows = transfer_eval({train_bundle}, {test_bundle}, protocol, opts);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].train_name == "A");
    CHECK(rows[0].test_name == "A");
    CHECK(rows[0].ok);
    CHECK(rows[0].mean_emhd >= 0.0);

    // 2 x 2 bundles emit 4 rows, ordered train-major
    const SceneBundle b2{"B", a.grid, a.goals, train.set.trajectories};
    const auto grid_rows = transfer_eval({train_bundle, b2}, {test_bundle, b2}, protocol, opts);
    REQUIRE(grid_rows.size() == 4);
    CHECK(grid_rows[0].train_name == "A");
    CHECK(grid_rows[1].train_name == "A");
    CHECK(grid_rows[2].train_name == "B");
    CHECK(grid_rows[3].test_name == "B");
}
