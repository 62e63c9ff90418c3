#pragma once

// Forced oscillator with a frequency-switching drive:
//
//     x' = 1,  y' = z,  z' = -a z - y - f(x, lambda(z))
//
// lambda ramps linearly from -1 to +1 across the layer |z| <= epsilon. Inside
// the layer the blown-up coordinate u = z / epsilon (or v = x u) is used.

#include "fso/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace fso {

inline constexpr double pi = std::numbers::pi;

/// How the drive interpolates between the two frequencies inside the layer.
enum class Rule {
    Linear,     // additive mix of the two waveforms
    Nonlinear,  // frequency modulation
};

enum class Chart {
    Outer,   // (x, y, z)
    LayerU,  // (x, y, u), z = epsilon u
    LayerV,  // (x, y, v), v = x u
};

struct SystemParams {
    double a = 0.0;
    double epsilon = 0.0;
    double omega_plus = 1.5;
    double omega_minus = 0.5;
    Rule rule = Rule::Nonlinear;

    void validate() const {
        require(std::isfinite(a) && a >= 0.0, ErrorKind::InvalidArgument, "damping a must be >= 0");
        require(std::isfinite(epsilon) && epsilon >= 0.0, ErrorKind::InvalidArgument,
                "layer half-width epsilon must be >= 0");
        require(std::isfinite(omega_plus) && std::isfinite(omega_minus) && omega_plus != omega_minus,
                ErrorKind::InvalidArgument, "omega_plus and omega_minus must differ");
    }

    [[nodiscard]] bool default_frequencies() const noexcept {
        return omega_plus == 1.5 && omega_minus == 0.5;
    }
};

/// Membership slack on |u| <= 1 for states produced by the integrator.
inline constexpr double chart_tolerance = 1e-9;

/// A point in one of the three coordinate charts. `w` is z, u or v depending on `chart`.
struct PhaseState {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    Chart chart = Chart::Outer;

    static PhaseState outer(double x, double y, double z) { return {x, y, z, Chart::Outer}; }
    static PhaseState layer_u(double x, double y, double u) { return {x, y, u, Chart::LayerU}; }
    static PhaseState layer_v(double x, double y, double v) { return {x, y, v, Chart::LayerV}; }

    friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

struct StateRate {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
};

inline std::string_view to_string(Rule r) { return r == Rule::Linear ? "linear" : "nonlinear"; }

inline std::string_view to_string(Chart c) {
    switch (c) {
        case Chart::Outer: return "outer";
        case Chart::LayerU: return "layer_u";
        case Chart::LayerV: return "layer_v";
    }
    return "?";
}

inline Rule parse_rule(std::string_view s) {
    if (s == "linear" || s == "Linear") return Rule::Linear;
    if (s == "nonlinear" || s == "Nonlinear") return Rule::Nonlinear;
    fail(ErrorKind::InvalidArgument, "unknown switching rule '" + std::string(s) + "'");
}

inline Chart parse_chart(std::string_view s) {
    if (s == "outer" || s == "Outer") return Chart::Outer;
    if (s == "layer_u" || s == "LayerU") return Chart::LayerU;
    if (s == "layer_v" || s == "LayerV") return Chart::LayerV;
    fail(ErrorKind::InvalidArgument, "unknown chart '" + std::string(s) + "'");
}

/// Ramp switching multiplier. With epsilon = 0 this is sign(z), undefined at z = 0.
inline double lambda_of_z(double z, double epsilon) {
    require(epsilon >= 0.0, ErrorKind::InvalidArgument, "epsilon must be >= 0");
    if (epsilon == 0.0) {
        require(z != 0.0, ErrorKind::SetValuedSwitch,
                "set-valued switch: lambda in [-1, 1] at z = 0 with epsilon = 0");
        return z > 0.0 ? 1.0 : -1.0;
    }
    if (z > epsilon) return 1.0;
    if (z < -epsilon) return -1.0;
    return z / epsilon;
}

/// Drive f(x, lambda) for arbitrary frequencies; f(x, +-1) = sin(pi omega_+- x) for both rules.
inline double forcing(Rule rule, double x, double lambda, double omega_plus, double omega_minus) {
    if (rule == Rule::Nonlinear) {
        const double omega = 0.5 * (omega_plus + omega_minus) + 0.5 * lambda * (omega_plus - omega_minus);
        return std::sin(pi * omega * x);
    }
    return 0.5 * (1.0 + lambda) * std::sin(pi * omega_plus * x) + 0.5 * (1.0 - lambda) * std::sin(pi * omega_minus * x);
}

inline double forcing(Rule rule, double x, double lambda) { return forcing(rule, x, lambda, 1.5, 0.5); }

inline double forcing(const SystemParams& p, double x, double lambda) {
    return forcing(p.rule, x, lambda, p.omega_plus, p.omega_minus);
}

/// Convert between charts. Layer charts need epsilon > 0; LayerV also needs x != 0.
inline PhaseState to_chart(const PhaseState& s, Chart target, double epsilon) {
    if (s.chart == target) return s;
    if (target != Chart::Outer || s.chart != Chart::Outer) {
        require(epsilon > 0.0, ErrorKind::ChartError, "layer chart requires epsilon > 0");
    }
    if ((target == Chart::LayerV || s.chart == Chart::LayerV)) {
        require(s.x != 0.0, ErrorKind::ChartError, "v = x u is singular at x = 0");
    }

    double u = 0.0;
    switch (s.chart) {
        case Chart::Outer: u = s.w / epsilon; break;
        case Chart::LayerU: u = s.w; break;
        case Chart::LayerV: u = s.w / s.x; break;
    }
    if (target != Chart::Outer) {
        require(std::abs(u) <= 1.0 + chart_tolerance, ErrorKind::ChartError,
                "state lies outside the switching layer |u| <= 1");
    }
    switch (target) {
        case Chart::Outer: return PhaseState::outer(s.x, s.y, s.chart == Chart::LayerU ? epsilon * s.w : epsilon * u);
        case Chart::LayerU: return PhaseState::layer_u(s.x, s.y, u);
        case Chart::LayerV: return PhaseState::layer_v(s.x, s.y, s.chart == Chart::LayerU ? s.x * s.w : s.x * u);
    }
    return s;
}

/// z = y' of a state in any chart.
inline double velocity(const PhaseState& s, double epsilon) {
    switch (s.chart) {
        case Chart::Outer: return s.w;
        case Chart::LayerU: return epsilon * s.w;
        case Chart::LayerV: return epsilon * s.w / s.x;
    }
    return 0.0;
}

namespace detail {

inline double outer_dz(const SystemParams& p, double x, double y, double z) {
    return -p.a * z - y - forcing(p, x, lambda_of_z(z, p.epsilon));
}

inline double layer_u_du(const SystemParams& p, double x, double y, double u) {
    return (-p.epsilon * p.a * u - y - forcing(p, x, u)) / p.epsilon;
}

inline double layer_v_dv(const SystemParams& p, double x, double y, double v) {
    const double r = p.epsilon / x;
    return ((r * (1.0 / x - p.a) * v) - y - forcing(p, x, v / x)) / r;
}

}  // namespace detail

/// Right-hand side in the chart carried by `s`.
inline StateRate vector_field(const SystemParams& p, const PhaseState& s) {
    switch (s.chart) {
        case Chart::Outer:
            return {1.0, s.w, detail::outer_dz(p, s.x, s.y, s.w)};
        case Chart::LayerU:
            require(p.epsilon > 0.0, ErrorKind::ChartError, "layer chart requires epsilon > 0");
            return {1.0, p.epsilon * s.w, detail::layer_u_du(p, s.x, s.y, s.w)};
        case Chart::LayerV:
            require(p.epsilon > 0.0, ErrorKind::ChartError, "layer chart requires epsilon > 0");
            require(s.x != 0.0, ErrorKind::ChartError, "v chart is singular at x = 0");
            return {1.0, p.epsilon / s.x * s.w, detail::layer_v_dv(p, s.x, s.y, s.w)};
    }
    return {};
}

}  // namespace fso
