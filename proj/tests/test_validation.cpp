#include <catch_amalgamated.hpp>

#include <random>

#include "fso/validation.hpp"

using namespace fso;
using namespace fso::validation;
using Catch::Approx;

TEST_CASE("slope fit and relative error") {
    std::vector<double> xs, ys;
    for (double x : {1.0, 2.0, 5.0, 9.0}) {
        xs.push_back(std::log(x));
        ys.push_back(std::log(3.0 * std::pow(x, -2.0)));
    }
    CHECK(validation::detail::fit_slope(xs, ys) == Approx(-2.0).margin(1e-12));
    CHECK_THROWS_AS(validation::detail::fit_slope({1.0}, {2.0}), Error);
    CHECK(validation::detail::rel_err(1.1, 1.0) == Approx(0.1));
}

TEST_CASE("staircase planes sit on folds") {
    for (double x0 : {60.5, 250.0, 1000.0, 1234.75}) {
        for (int Y : {1, -1}) {
            const double v = staircase_plane(x0, 0.3 * x0, Y);
            CHECK(-std::sin(pi * (x0 + 0.5 * v)) == Approx(static_cast<double>(Y)).margin(1e-9));
            CHECK(std::abs(v - 0.3 * x0) <= 2.0);
        }
    }
    CHECK_THROWS_AS(staircase_plane(10.0, 1.0, 0), Error);
}

TEST_CASE("attracting starts lie on the attracting branch below the y = -1 fold") {
    // a small phase needs large x0 to clear the non-hyperbolic band
    for (auto [x0, phi] : {std::pair{50.0, 0.3}, {250.0, 0.3}, {2000.0, 0.3}, {2000.0, 0.05}}) {
        {
            const auto st = attracting_start(x0, 20.8, phi, 0.05);
            const double ph = pi * (x0 + 0.5 * st[1]);
            CHECK(std::cos(ph) > 0.0);
            CHECK(-std::sin(ph) == Approx(-std::cos(phi)).margin(1e-9));
            SystemParams p;
            p.epsilon = 0.05;
            CHECK(st[0] == slow_manifold_y(p, x0, st[1]));
        }
    }
    CHECK_THROWS_AS(attracting_start(50.0, 4.0, 2.0, 0.05), Error);
}

TEST_CASE("Oracle step estimate and reach are inverse") {
    const double s = oracle_step_estimate(10000.0, 12000.0, 0.05);
    CHECK(s == Approx(5.0 * (12000.0 * 12000.0 - 1e8) / 0.05));
    CHECK(oracle_reach(10000.0, s, 0.05) == Approx(12000.0).epsilon(1e-12));
}

TEST_CASE("predicted peaks and their fitted ratio") {
    const auto pk = predicted_peaks(10000.0, 0.1, 0.05, 10);
    REQUIRE(pk.size() == 10);
    CHECK(pk[0].dy == Approx(0.25 * 0.05 * 10000.0 * 0.01));
    for (std::size_t i = 1; i < pk.size(); ++i) {
        CHECK(pk[i].dy < pk[i - 1].dy);
        CHECK(pk[i].x > pk[i - 1].x);
    }
    std::vector<Peak> geo;
    for (int k = 1; k <= 6; ++k) geo.push_back({k, 0.0, 0.0, 2.0 * std::pow(0.8, k)});
    CHECK(fitted_ratio(geo) == Approx(0.8).epsilon(1e-12));
}

TEST_CASE("the shrinker preflight refuses runs beyond the budget") {
    try {
        shrinker_study(10000.0, 0.1, 0.05, 10, 1e6);
        FAIL("expected an infeasible run");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
        CHECK(std::string(e.what()).find("reachable x range [10000, ") != std::string::npos);
    }
}

TEST_CASE("curve drift tells a closed curve from a scattered cloud") {
    std::vector<PlanarState> circle, cloud;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ut(0.0, 2 * pi), ur(0.5, 1.5);
    for (int i = 0; i < 200; ++i) {
        // a quasi-periodic rotation, like the crossing iterates
        const double t = i * pi * (3.0 - std::sqrt(5.0));
        circle.push_back({0.3 + 1.2 * std::cos(t), -0.1 + 0.7 * std::sin(t)});
        const double r = ur(rng);
        cloud.push_back({r * std::cos(ut(rng)), r * std::sin(ut(rng))});
    }
    CHECK(curve_drift(circle) < 1e-4);
    CHECK(curve_drift(cloud) > 0.1);
}

TEST_CASE("undamped crossing iterates lie on a closed invariant curve") {
    SystemParams p;
    const auto st = torus_study(p, 0.0, {0.02, 1.3});
    CHECK(st.iterates.size() == 50);
    CHECK(st.drift < 1e-4);
    CHECK(st.extent > 1e-3);
}

TEST_CASE("damped crossing orbit and its twin") {
    SystemParams p;
    p.a = 0.01;
    const auto st = crossing_orbit_study(p, 0.0, {0.02, 1.3});
    CHECK(st.orbit.period == Approx(8.0).margin(0.01));
    CHECK(st.orbit.attracting);
    CHECK(st.orbit.residual < 1e-8);
    CHECK(st.twin_distance > 1e-3);
    CHECK(st.twin_trace_diff < 1e-6);
}

TEST_CASE("invariance study slopes") {
    const auto st = invariance_study(0.05, 0.5, {50.0, 100.0, 200.0, 400.0});
    CHECK(st.rows.size() == 4);
    CHECK(st.defect_slope == Approx(-2.0).margin(0.2));
    CHECK(st.residual_slope == Approx(-1.0).margin(0.2));
}

TEST_CASE("brute-force sliding scan matches the classification") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uy(-0.98, 0.98);
    for (Rule rule : {Rule::Nonlinear, Rule::Linear}) {
        SystemParams p;
        p.rule = rule;
        for (double x : {10.0, 10.37, 11.6}) {
            for (int i = 0; i < 20; ++i) CHECK(sliding_agrees(p, x, uy(rng)));
        }
    }
}

TEST_CASE("canard half orbits close at the symmetric point") {
    const auto c = autonomous_canard_system(9.5, 1.0, 1e-12);
    for (double ys : {-0.1, -0.6, -1.3, -2.2}) CHECK(std::abs(canard_closure_defect(c, ys)) < 1e-8);
    const auto d = autonomous_canard_system(9.500004, 1.0, 1e-12);
    double worst = 0.0;
    for (double ys : {-0.6, -1.3, -2.2}) worst = std::max(worst, std::abs(canard_closure_defect(d, ys)));
    CHECK(worst > 1e-8);
}

TEST_CASE("canard gallery just off the symmetric point") {
    for (double x0 : {9.500004, 9.499996}) {
        const auto g = canard_gallery(x0, 1.0);
        CHECK_FALSE(g.symmetric);
        CHECK(g.alternating);
        CHECK(static_cast<double>(g.in_layer.size()) >= x0 / 2 - 1);
        CHECK(static_cast<double>(g.in_layer.size()) <= x0 / 2 + 1);
        for (std::size_t i = 1; i < g.cycles.size(); ++i) CHECK(g.cycles[i].u_max > g.cycles[i - 1].u_max);
    }
    const auto s = canard_gallery(9.5, 1.0);
    CHECK(s.symmetric);
    CHECK(s.closure_max < 1e-8);
}
