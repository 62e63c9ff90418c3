#include <catch_amalgamated.hpp>

#include <random>

#include "fso/model.hpp"

using namespace fso;
using Catch::Approx;

TEST_CASE("lambda ramp examples") {
    CHECK(lambda_of_z(0.2, 0.1) == 1.0);
    CHECK(lambda_of_z(0.5, 2.0) == 0.25);
    CHECK(lambda_of_z(-3.0, 0.0) == -1.0);
    CHECK(lambda_of_z(-0.1, 0.1) == -1.0);
}

TEST_CASE("lambda at z = 0 without a layer is set-valued") {
    try {
        lambda_of_z(0.0, 0.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SetValuedSwitch);
    }
    CHECK_THROWS_AS(lambda_of_z(1.0, -0.1), Error);
}

TEST_CASE("lambda is continuous and non-decreasing for epsilon > 0") {
    const double eps = 0.3;
    double prev = lambda_of_z(-1.0, eps);
    for (int i = 1; i <= 20000; ++i) {
        const double z = -1.0 + 2.0 * i / 20000;
        const double l = lambda_of_z(z, eps);
        CHECK(l >= prev);
        CHECK(l - prev <= (2.0 / 20000) / eps + 1e-15);
        prev = l;
    }
}

TEST_CASE("forcing endpoint examples") {
    CHECK(forcing(Rule::Nonlinear, 1.0, 1.0) == Approx(-1.0).margin(1e-15));
    CHECK(forcing(Rule::Linear, 1.0, -1.0) == Approx(1.0).margin(1e-15));
}

TEST_CASE("the two rules differ inside the layer along z(t) = t - 20, eps = 2") {
    const double eps = 2.0;
    double max_diff = 0.0, outside_diff = 0.0;
    for (int i = 0; i <= 800; ++i) {
        const double t = 16.0 + 8.0 * i / 800;
        const double lam = lambda_of_z(t - 20.0, eps);
        const double d = std::abs(forcing(Rule::Nonlinear, t, lam) - forcing(Rule::Linear, t, lam));
        if (std::abs(t - 20.0) < eps) {
            max_diff = std::max(max_diff, d);
        } else {
            outside_diff = std::max(outside_diff, d);
        }
    }
    CHECK(max_diff > 0.5);
    CHECK(outside_diff < 1e-12);
}

TEST_CASE("parameter validation") {
    SystemParams p;
    CHECK(p.omega_plus == 1.5);
    CHECK(p.omega_minus == 0.5);
    CHECK_NOTHROW(p.validate());
    p.epsilon = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.epsilon = 0.1;
    p.omega_minus = p.omega_plus;
    CHECK_THROWS_AS(p.validate(), Error);
    p.omega_minus = 0.5;
    p.a = -0.1;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("vector field examples") {
    SystemParams p;
    p.epsilon = 0.1;
    const auto r1 = vector_field(p, PhaseState::layer_u(2.0, 0.0, 0.0));
    CHECK(std::abs(r1.dw) < 1e-12);

    SystemParams q;
    q.a = 0.01;
    const auto r2 = vector_field(q, PhaseState::outer(0.0, 0.02, 1.3));
    CHECK(r2.dx == 1.0);
    CHECK(r2.dy == 1.3);
    CHECK(r2.dw == Approx(-0.033).margin(1e-15));

    SystemParams s;
    s.epsilon = 0.05;
    const auto r3 = vector_field(s, PhaseState::layer_v(100.0, 0.0, 0.0));
    // -(x/eps) sin(100 pi) is rounding-level
    CHECK(std::abs(r3.dw) < 1e-9);
}

TEST_CASE("layer charts need epsilon > 0") {
    SystemParams p;
    CHECK_THROWS_AS(vector_field(p, PhaseState::layer_u(1.0, 0.0, 0.0)), Error);
    CHECK_THROWS_AS(to_chart(PhaseState::outer(1.0, 0.0, 0.0), Chart::LayerU, 0.0), Error);
    CHECK_THROWS_AS(to_chart(PhaseState::outer(1.0, 0.0, 1.0), Chart::LayerU, 0.1), Error);
}

TEST_CASE("rule and chart names round-trip") {
    for (Rule r : {Rule::Linear, Rule::Nonlinear}) CHECK(parse_rule(to_string(r)) == r);
    for (Chart c : {Chart::Outer, Chart::LayerU, Chart::LayerV}) CHECK(parse_chart(to_string(c)) == c);
    CHECK_THROWS_AS(parse_rule("cubic"), Error);
}

TEST_CASE("pushing the u field through v = x u gives the v field") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(1.0, 500.0), uy(-1.5, 1.5), uu(-0.999, 0.999), ue(0.01, 0.5),
        ua(0.0, 0.3);
    for (int i = 0; i < 2000; ++i) {
        SystemParams p;
        p.epsilon = ue(rng);
        p.a = ua(rng);
        const double x = ux(rng), y = uy(rng), u = uu(rng);
        const auto fu = vector_field(p, PhaseState::layer_u(x, y, u));
        const auto fv = vector_field(p, PhaseState::layer_v(x, y, x * u));
        // v' = x u' + u x'
        const double pushed = x * fu.dw + u * fu.dx;
        CHECK(fv.dy == Approx(fu.dy).epsilon(1e-12).margin(1e-14));
        CHECK(fv.dw == Approx(pushed).epsilon(1e-9).margin(1e-9 * std::abs(x * fu.dw)));
        // and the Outer field agrees with the u field inside the layer
        const auto fo = vector_field(p, PhaseState::outer(x, y, p.epsilon * u));
        CHECK(fo.dw == Approx(p.epsilon * fu.dw).epsilon(1e-11).margin(1e-12));
    }
}
