#include <catch_amalgamated.hpp>

#include <random>

#include "fso/exact_crossing.hpp"
#include "fso/ode.hpp"

using namespace fso;
using Catch::Approx;

TEST_CASE("crossing coefficients") {
    SystemParams p;
    p.a = 0.3;
    const auto c = crossing_coefficients(p, 0.0, 0.1, 0.2, +1);
    const double w = pi * 1.5;
    CHECK(c.omega == 1.5);
    CHECK(c.gamma == Approx(w * w - 1.0).epsilon(1e-15));
    CHECK(c.beta == Approx(c.gamma * c.gamma + 0.09 * w * w).epsilon(1e-15));
    CHECK(c.mu == Approx(std::sqrt(4.0 - 0.09)).epsilon(1e-15));
    CHECK(crossing_coefficients(p, 0.0, 0.1, -0.2, -1).omega == 0.5);
    p.a = 2.0;
    CHECK_THROWS_AS(crossing_coefficients(p, 0.0, 0.1, 0.2, +1), Error);
}

TEST_CASE("crossing solution recovers its initial condition") {
    SystemParams p;
    p.a = 0.01;
    const auto s = crossing_solution(p, 0.7, 0.02, 1.3, +1, 0.0);
    CHECK(s.y == Approx(0.02).margin(1e-14));
    CHECK(s.z == Approx(1.3).margin(1e-14));
}

TEST_CASE("starting on the forced response leaves only the forced oscillation") {
    SystemParams p;
    const double x0 = 0.4;
    auto c0 = crossing_coefficients(p, x0, 0.0, 0.0, +1);
    const double y0 = detail::forced_R(0.0, c0, x0) / c0.beta;
    const double z0 = detail::forced_dR(0.0, c0, x0) / c0.beta;
    const auto c = crossing_coefficients(p, x0, y0, z0, +1);
    CHECK(std::abs(c.Q) < 1e-12);
    CHECK(std::abs(c.P) < 1e-12);
    for (double t : {0.1, 0.5, 1.3}) {
        const auto s = crossing_solution(p, x0, y0, z0, +1, t);
        CHECK(s.y == Approx(detail::forced_R(0.0, c, x0 + t) / c.beta).margin(1e-13));
        // with a = 0 the forced response of y'' + y = -sin(pi w x) is sin(pi w x) / ((pi w)^2 - 1)
        CHECK(s.y == Approx(std::sin(pi * 1.5 * (x0 + t)) / (std::pow(pi * 1.5, 2) - 1.0)).margin(1e-13));
    }
}

TEST_CASE("crossing solution matches an integration of the smooth upper field") {
    SystemParams p;
    p.a = 0.01;
    auto f = [&](double t, const ode::Vec<2>& s, ode::Vec<2>& d) {
        d = {s[1], -p.a * s[1] - s[0] - std::sin(pi * 1.5 * t)};
    };
    ode::Settings st;
    st.rel_tol = 1e-13;
    st.abs_tol = 1e-15;
    const std::vector<ode::Event<2>> none;
    const double tmax = 0.5;
    const auto r = ode::solve<2>(f, ode::Vec<2>{0.02, 1.3}, 0.0, tmax, none, st);
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        const auto s = crossing_solution(p, 0.0, 0.02, 1.3, +1, r.t[i]);
        CHECK(std::abs(s.y - r.y[i][0]) < 1e-9);
        CHECK(std::abs(s.z - r.y[i][1]) < 1e-9);
    }
}

TEST_CASE("crossing solution satisfies the equations of motion") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.0, 1.5), ux(-5, 5), uy(-2, 2), ut(0.0, 6.0);
    const double h = 1e-3;
    for (int i = 0; i < 300; ++i) {
        SystemParams p;
        p.a = ua(rng);
        const int side = i % 2 ? 1 : -1;
        const double x0 = ux(rng), y0 = uy(rng), z0 = uy(rng), t = ut(rng) + 2 * h;
        auto at = [&](double s) { return crossing_solution(p, x0, y0, z0, side, s); };
        // fourth-order central differences
        auto d = [&](auto get) {
            return (-get(at(t + 2 * h)) + 8 * get(at(t + h)) - 8 * get(at(t - h)) + get(at(t - 2 * h))) / (12 * h);
        };
        const auto s = at(t);
        const double dy = d([](PlanarState q) { return q.y; });
        const double dz = d([](PlanarState q) { return q.z; });
        const double om = side > 0 ? 1.5 : 0.5;
        CHECK(std::abs(dy - s.z) < 1e-10);
        CHECK(std::abs(dz + p.a * s.z + s.y + std::sin(pi * om * (x0 + t))) < 1e-10);
    }
}

TEST_CASE("next crossing time") {
    SystemParams p;
    p.a = 0.01;
    const auto hit = next_crossing_time(p, 0.0, 0.02, 1.3, +1);
    CHECK(hit.t > 0.0);
    CHECK(std::abs(hit.z) < 1e-12);
    // no earlier sign change in between
    for (int i = 1; i < 200; ++i) CHECK(crossing_solution(p, 0.0, 0.02, 1.3, +1, hit.t * i / 200.0).z > 0.0);

    // z0 -> 0+ above an attracting sliding point: the crossing is immediate.
    double prev = 1.0;
    for (double z0 : {1e-2, 1e-4, 1e-6}) {
        const auto h = next_crossing_time(p, 0.25, 0.0, z0, +1);
        CHECK(h.t < prev);
        prev = h.t;
    }
    CHECK(prev < 1e-5);

    // a climbing orbit far above the forcing never comes back within a short horizon
    CHECK_THROWS_AS(next_crossing_time(p, 0.0, 0.0, 50.0, +1, 1.0), Error);
}

TEST_CASE("concatenated crossing orbits are continuous and move forward in time") {
    SystemParams p;
    p.a = 0.01;
    const auto o = crossing_orbit(p, 0.0, 0.02, 1.3, 60.0);
    REQUIRE(o.crossings.size() > 5);
    CHECK_FALSE(o.stopped_early);
    double x = 0.0, y = 0.02, z = 1.3, t = 0.0;
    int side = 1;
    for (const auto& c : o.crossings) {
        CHECK(c.t > t);
        const auto before = crossing_solution(p, x, y, z, side, c.t - t);
        CHECK(before.y == Approx(c.y).margin(1e-12));
        CHECK(std::abs(before.z) < 1e-10);
        CHECK(c.from_side == side);
        t = c.t;
        x = c.x;
        y = c.y;
        z = 0.0;
        side = -side;
    }
}

TEST_CASE("on the damped periodic orbit, crossing times repeat with period 8") {
    SystemParams p;
    p.a = 0.01;
    const PlanarState s = find_periodic_orbit(p, 0.0, {0.02, 1.3}).state;
    const auto o = crossing_orbit(p, 0.0, s.y, s.z, 24.0);
    std::vector<double> in_first;
    for (const auto& c : o.crossings)
        if (c.t < 8.0) in_first.push_back(c.t);
    const std::size_t n = in_first.size();
    REQUIRE(n >= 2);
    REQUIRE(o.crossings.size() >= 2 * n);
    for (std::size_t i = 0; i + n < o.crossings.size(); ++i)
        CHECK(o.crossings[i + n].t - o.crossings[i].t == Approx(8.0).margin(1e-4));
}

TEST_CASE("without damping the crossing iterates do not close up") {
    SystemParams p;
    PlanarState s{0.02, 1.3};
    double nearest = 1e9;
    for (int k = 0; k < 50; ++k) {
        s = crossing_flow(p, 0.0, s.y, s.z, 8.0);
        nearest = std::min(nearest, std::hypot(s.y - 0.02, s.z - 1.3));
    }
    CHECK(nearest > 1e-4);
}

TEST_CASE("sliding flow") {
    const auto s = sliding_flow(5.0, 0.3, 2.0);
    CHECK(s.x == 7.0);
    CHECK(s.y == 0.3);
    CHECK(s.w == 0.0);
    CHECK(sliding_flow(1.0, 1.0, 3.0).y == 1.0);
    CHECK(sliding_flow(1.0, -1.0, 3.0).y == -1.0);
    try {
        sliding_flow(1.0, 1.5, 1.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutsideSliding);
    }
}

TEST_CASE("tangency sets") {
    const auto t0 = tangency_at(0.0);
    CHECK(t0.y_plus == 0.0);
    CHECK(t0.y_minus == 0.0);
    const auto t1 = tangency_at(1.0);
    CHECK(t1.y_plus == Approx(1.0).margin(1e-15));
    CHECK(t1.y_minus == Approx(-1.0).margin(1e-15));
    for (int n = 0; n < 20; ++n) {
        const auto t = tangency_at(0.5 + n);
        CHECK(t.y_plus == Approx(t.y_minus).margin(1e-12));
    }
    const auto set = tangency_sets(0.0, 2.0, 5);
    REQUIRE(set.size() == 5);
    CHECK(set[2].x == 1.0);
    CHECK_THROWS_AS(tangency_sets(0.0, 1.0, 1), Error);
}

TEST_CASE("linear sliding at x = 0.25 is a single attracting branch") {
    const auto t = tangency_at(0.25);
    const double y = 0.5 * (t.y_plus + t.y_minus);
    const auto c = classify_sliding(Rule::Linear, 0.25, y);
    REQUIRE(c.branches.size() == 1);
    CHECK(c.branches[0].stability == Stability::Attracting);
    CHECK(linear_sliding_stability(0.25) == Stability::Attracting);
    CHECK(linear_sliding_stability(1.25) == Stability::Repelling);
}

TEST_CASE("linear sliding exists exactly between the tangency curves") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 40.0), uy(-1.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const double x = ux(rng), y = uy(rng);
        const auto t = tangency_at(x);
        const double lo = std::min(t.y_plus, t.y_minus), hi = std::max(t.y_plus, t.y_minus);
        if (std::abs(y - lo) < 1e-9 || std::abs(y - hi) < 1e-9) continue;
        const auto c = classify_sliding(Rule::Linear, x, y);
        CHECK((c.branches.size() == 1) == (y > lo && y < hi));
        for (const auto& b : c.branches) {
            CHECK(b.lambda >= -1.0);
            CHECK(b.lambda <= 1.0);
        }
    }
}

TEST_CASE("nonlinear sliding at x = 100, y = 0") {
    const auto c = classify_sliding(Rule::Nonlinear, 100.0, 0.0);
    // phases 50 pi .. 150 pi in steps of pi
    CHECK(c.branches.size() == 101);
    for (std::size_t i = 1; i < c.branches.size(); ++i) {
        CHECK(c.branches[i].stability != c.branches[i - 1].stability);
        CHECK(c.branches[i].lambda - c.branches[i - 1].lambda == Approx(0.02).margin(1e-12));
    }
    for (std::size_t i = 2; i < c.branches.size(); ++i)
        CHECK(c.branches[i].lambda - c.branches[i - 2].lambda == Approx(0.04).margin(1e-12));
}

TEST_CASE("sliding at the fold heights is marginal and |y| > 1 has none") {
    for (double y : {1.0, -1.0}) {
        const auto c = classify_sliding(Rule::Nonlinear, 100.0, y);
        REQUIRE_FALSE(c.branches.empty());
        for (const auto& b : c.branches) CHECK(b.stability == Stability::Marginal);
    }
    CHECK(classify_sliding(Rule::Nonlinear, 10.0, 1.2).branches.empty());
    CHECK(classify_sliding(Rule::Linear, 10.0, -1.2).branches.empty());
}

TEST_CASE("nonlinear stability intervals have fold endpoints and the right sign") {
    for (double x : {10.0, 100.0, 1000.0}) {
        const auto iv = sliding_intervals(x);
        REQUIRE_FALSE(iv.empty());
        CHECK(iv.front().lo == -1.0);
        CHECK(iv.back().hi == 1.0);
        for (std::size_t i = 0; i < iv.size(); ++i) {
            if (i) CHECK(iv[i].lo == Approx(iv[i - 1].hi).margin(1e-12));
            for (double e : {iv[i].lo, iv[i].hi})
                if (std::abs(e) < 1.0) CHECK(std::abs(std::cos(pi * x * (1.0 + 0.5 * e))) < 1e-9);
            const double mid = 0.5 * (iv[i].lo + iv[i].hi);
            const double y = -std::sin(pi * x * (1.0 + 0.5 * mid));
            const auto c = classify_sliding(Rule::Nonlinear, x, y);
            const auto it = std::find_if(c.branches.begin(), c.branches.end(),
                                         [&](const SlidingBranch& b) { return std::abs(b.lambda - mid) < 1e-9; });
            REQUIRE(it != c.branches.end());
            CHECK(it->stability == iv[i].stability);
        }
    }
}

TEST_CASE("Filippov contact outcomes") {
    SystemParams p;
    // x = 0.25: upper field pushes down, lower pushes up for y in between the tangencies
    const auto t = tangency_at(0.25);
    CHECK(crossing_outcome(p, 0.25, 0.5 * (t.y_plus + t.y_minus), +1) == CrossingOutcome::SlidingAttracting);
    // y far above both tangencies: both fields push down, a crossing from above
    CHECK(crossing_outcome(p, 0.25, 0.9, +1) == CrossingOutcome::Crossed);
    const auto r = tangency_at(1.25);
    CHECK(crossing_outcome(p, 1.25, 0.5 * (r.y_plus + r.y_minus), -1) == CrossingOutcome::SlidingRepelling);
}
