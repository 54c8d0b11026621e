#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pedirl/trajectory.hpp"

using namespace pedirl;

TEST_CASE("trajectory invariants") {
    using Samples = std::vector<TrajectorySample>;
    CHECK_THROWS_AS(Trajectory(Samples{{0.0, {0, 0}}}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(Samples{{0.0, {0, 0}}, {0.0, {1, 0}}}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(Samples{{1.0, {0, 0}}, {0.5, {1, 0}}}), std::invalid_argument);
    CHECK_NOTHROW(Trajectory(Samples{{0.0, {0, 0}}, {0.5, {1, 0}}}));
}

TEST_CASE("derived headings and speeds") {
    const Trajectory t({{0.0, {0, 0}}, {0.5, {0.7, 0}}, {1.0, {0.7, 0.7}}, {1.5, {0.0, 0.7}}});
    CHECK(t.step_count() == 3);
    CHECK(t.heading(0) == doctest::Approx(0.0));
    CHECK(t.heading(1) == doctest::Approx(M_PI / 2));
    CHECK(t.heading(2) == doctest::Approx(M_PI));  // wrapped into (-pi, pi]
    CHECK(t.speed(0) == doctest::Approx(1.4));
    CHECK(t.median_speed() == doctest::Approx(1.4));
    CHECK(t.duration() == doctest::Approx(1.5));
}

TEST_CASE("truncation keeps the leading samples") {
    const Trajectory t({{10.0, {0, 0}}, {10.5, {1, 0}}, {11.0, {2, 0}}, {11.5, {3, 0}}});
    const Trajectory cut = t.truncated(1.0);
    CHECK(cut.size() == 3);
    CHECK(cut.back().p.x == 2.0);
    CHECK_THROWS_AS(t.truncated(0.2), std::invalid_argument);
}

TEST_CASE("trajectory file round-trip") {
    const Trajectory t({{0.0, {1.25, -0.5}}, {0.5, {1.95, -0.5}}, {1.0, {2.65, -0.4}}});
    std::ostringstream out;
    write_trajectory(out, t);
    std::istringstream in(out.str());
    const Trajectory back = read_trajectory(in);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back[i].t == t[i].t);
        CHECK(back[i].p.x == t[i].p.x);
        CHECK(back[i].p.y == t[i].p.y);
    }
}

TEST_CASE("trajectory parse errors name the source and line") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        std::istringstream in(text);
        try {
            read_trajectory(in, "walk.csv");
            FAIL("expected parse failure");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("walk.csv") != std::string::npos);
            CHECK(msg.find(needle) != std::string::npos);
        }
    };
    expect_error("x,y,t\n0,0,0\n", "expected header");
    expect_error("t,x,y\n0.0,1.0\n", "walk.csv:2");
    expect_error("t,x,y\n0.0,1.0,2.0\n", "at least 2 samples");
}
