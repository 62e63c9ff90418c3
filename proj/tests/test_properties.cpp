// Property suites over seeded random inputs.

#include <catch_amalgamated.hpp>

#include <random>

#include "fso/fso.hpp"

using namespace fso;

namespace {

std::mt19937_64& rng() {
    static std::mt19937_64 r(20261014);
    return r;
}

double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("chart conversions round-trip") {
    const Chart charts[] = {Chart::Outer, Chart::LayerU, Chart::LayerV};
    for (int i = 0; i < 2000; ++i) {
        const double eps = std::pow(10.0, uniform(-4.0, 0.0));
        const double x = uniform(-2000.0, 2000.0);
        const double u = uniform(-1.0, 1.0);
        const PhaseState base = PhaseState::layer_u(x, uniform(-3.0, 3.0), u);
        for (Chart from : charts) {
            const PhaseState s = to_chart(base, from, eps);
            CHECK(close_rel(velocity(s, eps), eps * u, 1e-14));
            for (Chart to : charts) {
                const PhaseState back = to_chart(to_chart(s, to, eps), from, eps);
                CHECK(back.chart == from);
                CHECK(back.x == s.x);
                CHECK(back.y == s.y);
                CHECK(close_rel(back.w, s.w, 1e-14));
            }
        }
    }
}

TEST_CASE("outer states beyond the layer cannot enter a layer chart") {
    for (int i = 0; i < 200; ++i) {
        const double eps = uniform(0.01, 1.0);
        const double z = (1.0 + uniform(1e-6, 5.0)) * eps * (i % 2 ? 1.0 : -1.0);
        const PhaseState s = PhaseState::outer(uniform(1.0, 100.0), 0.0, z);
        CHECK_THROWS_AS(to_chart(s, Chart::LayerU, eps), Error);
        CHECK_THROWS_AS(to_chart(s, Chart::LayerV, eps), Error);
    }
}

TEST_CASE("both forcing rules hit the pure sines at lambda = +-1") {
    for (int i = 0; i < 5000; ++i) {
        const double x = uniform(-1e4, 1e4);
        const double wp = uniform(0.1, 3.0), wm = uniform(0.1, 3.0);
        for (Rule r : {Rule::Nonlinear, Rule::Linear}) {
            CHECK(std::abs(forcing(r, x, 1.0, wp, wm) - std::sin(pi * wp * x)) < 1e-9);
            CHECK(std::abs(forcing(r, x, -1.0, wp, wm) - std::sin(pi * wm * x)) < 1e-9);
        }
    }
}

TEST_CASE("staircase planes step by exact multiples of four") {
    for (int i = 0; i < 300; ++i) {
        const double x0 = uniform(50.0, 5000.0);
        const double eps = uniform(0.01, 0.2);
        const int Y = i % 2 ? 1 : -1;
        // dyadic anchors keep every subtraction exact
        const double v0 = std::ldexp(std::round(uniform(-1e3, 1e3) * 64.0), -6);
        StaircaseState s{0, x0, Y * uniform(1.01, 1.5), v0, 0.0};
        for (int k = 1; k <= 20 && std::abs(s.y) > 1.0; ++k) {
            s = staircase_step(x0, v0, s, Y, 0.0, eps);
            CHECK(s.k == k);
            CHECK(v0 - s.v == 4.0 * Y * k);
        }
    }
    for (int i = 0; i < 50; ++i) {
        const double x0 = uniform(50.0, 100.0);
        const double v0 = 4.0 * std::round(uniform(3.0, 10.0)) + 2.0;
        const auto st = full_staircase(x0, uniform(1.05, 1.3), v0, 0.0, 0.1);
        for (const auto& step : st.steps) CHECK(std::fmod(v0 - step.v, 4.0) == 0.0);
    }
}

TEST_CASE("the small and large arc maps partition the entries") {
    for (int i = 0; i < 3000; ++i) {
        const double x0 = uniform(50.0, 1e5);
        const double eps = uniform(0.01, 0.5);
        const double crit = std::sqrt(critical_amplitude_sq(x0, -1.0, eps));
        const double f = uniform(0.01, 10.0);
        if (std::abs(f - 1.0) < 1e-6) continue;
        const double u0 = f * crit;
        if (u0 >= 1.0) continue;
        if (f < 1.0) {
            CHECK(is_small_arc(x0, -1.0, u0, eps));
            CHECK_NOTHROW(small_arc_map(x0, -1.0, u0, eps));
            CHECK_THROWS_MATCHES(large_arc_map(x0, u0, 1, eps), Error,
                                 Catch::Matchers::Predicate<const Error&>(
                                     [](const Error& e) { return e.kind() == ErrorKind::SmallArcRegime; }));
        } else {
            CHECK_FALSE(is_small_arc(x0, -1.0, u0, eps));
            CHECK_NOTHROW(large_arc_map(x0, u0, 1, eps));
            CHECK_THROWS_MATCHES(small_arc_map(x0, -1.0, u0, eps), Error,
                                 Catch::Matchers::Predicate<const Error&>(
                                     [](const Error& e) { return e.kind() == ErrorKind::LargeArcRegime; }));
        }
    }
}

TEST_CASE("turning points and slow-manifold branches alternate") {
    for (int i = 0; i < 300; ++i) {
        const double x = uniform(5.0, 3000.0);
        const auto tp = turning_points(x);
        REQUIRE(tp.size() >= 2);
        for (std::size_t j = 1; j < tp.size(); ++j) {
            CHECK(tp[j].sign != tp[j - 1].sign);
            CHECK(*tp[j].u - *tp[j - 1].u == Catch::Approx(2.0 / x).epsilon(1e-9));
        }
        const long m = static_cast<long>(uniform(0.0, 1e4));
        CHECK(branch_stability(m) != branch_stability(m + 1));
    }
    for (int i = 0; i < 2000; ++i) {
        const double x = uniform(1.0, 1000.0), y = uniform(-0.999, 0.999);
        const auto br = classify_sliding(SystemParams{}, x, y).branches;
        for (std::size_t j = 1; j < br.size(); ++j) {
            CHECK(br[j].stability != br[j - 1].stability);
            CHECK(br[j].stability != Stability::Marginal);
        }
    }
}

TEST_CASE("sliding classification matches a brute-force lambda scan") {
    for (Rule rule : {Rule::Nonlinear, Rule::Linear}) {
        SystemParams p;
        p.rule = rule;
        for (double x0 : {10.0, 100.0, 1000.0}) {
            for (int i = 0; i < 60; ++i) {
                const double x = x0 + uniform(0.0, 1.0), y = uniform(-0.999, 0.999);
                INFO("rule " << to_string(rule) << " x " << x << " y " << y);
                CHECK(validation::sliding_agrees(p, x, y));
            }
        }
    }
}
