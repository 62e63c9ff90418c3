#pragma once

// Critical and slow manifolds inside the switching layer, turning points,
// slow-flow solutions and the frozen-x planar approximation.

#include "fso/exact_crossing.hpp"
#include "fso/model.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace fso {

/// y on the critical manifold: y = -f(x, u).
inline double critical_manifold_y(const SystemParams& p, double x, double u) { return -forcing(p, x, u); }

inline double critical_manifold_y(Rule rule, double x, double u) { return -forcing(rule, x, u); }

/// d(udot)/du on the critical manifold, up to the factor 1/epsilon and ignoring damping.
inline double layer_normal_slope(const SystemParams& p, double x, double u) {
    if (p.rule == Rule::Nonlinear) {
        const double dw = 0.5 * (p.omega_plus - p.omega_minus);
        const double om = 0.5 * (p.omega_plus + p.omega_minus) + u * dw;
        return -pi * x * dw * std::cos(pi * om * x);
    }
    return -0.5 * (std::sin(pi * p.omega_plus * x) - std::sin(pi * p.omega_minus * x));
}

/// Default margin around turning points inside which the expansions are refused.
inline double hyperbolicity_margin(double epsilon, double x) { return 3.0 * std::sqrt(epsilon / std::abs(x)); }

/// Distance from the nearest turning point: in v for the nonlinear rule
/// (turning points sit where x + v/2 is a half-integer), in x for the linear rule.
inline double turning_point_distance(const SystemParams& p, double x, double w) {
    if (p.rule == Rule::Nonlinear) {
        const double ph = x + 0.5 * w - 0.5;
        return 2.0 * std::abs(ph - std::round(ph));
    }
    double best = std::numeric_limits<double>::infinity();
    const double c2 = std::round(x / 2.0) * 2.0;
    best = std::min(best, std::abs(x - c2));
    const double ch = std::round(x - 0.5) + 0.5;
    best = std::min(best, std::abs(x - ch));
    return best;
}

struct ManifoldOptions {
    int order = 1;
    double margin = -1.0;  // < 0: use hyperbolicity_margin(eps, x)
    bool check_hyperbolicity = true;
};

/// Height of the slow manifold. For the nonlinear rule `w` is v = x u and the
/// expansion is in powers of epsilon/x; for the linear rule `w` is u and the
/// expansion is in powers of epsilon. Order 2 of the nonlinear rule is experimental.
inline double slow_manifold_y(const SystemParams& p, double x, double w, const ManifoldOptions& opt = {}) {
    require(opt.order >= 0 && opt.order <= 2, ErrorKind::InvalidArgument, "expansion order must be 0, 1 or 2");
    const double eps = p.epsilon;
    if (opt.order > 0) require(eps > 0.0, ErrorKind::InvalidArgument, "slow manifold correction needs epsilon > 0");
    if (opt.order > 0 && opt.check_hyperbolicity) {
        const double margin = opt.margin >= 0.0 ? opt.margin : hyperbolicity_margin(eps, x);
        require(turning_point_distance(p, x, w) >= margin, ErrorKind::NonHyperbolic,
                "slow manifold evaluated inside the non-hyperbolic band around a turning point");
    }

    if (p.rule == Rule::Nonlinear) {
        require(x != 0.0, ErrorKind::Domain, "v chart is singular at x = 0");
        const double q = eps / x;
        const double phase = pi * (x + 0.5 * w);
        const double y0 = -std::sin(phase);
        if (opt.order == 0) return y0;
        const double k = 1.0 / x - p.a;
        const double y1 = 2.0 + k * w;
        if (opt.order == 1) return y0 + q * y1;
        const double y0v = -0.5 * pi * std::cos(phase);
        require(y0v != 0.0, ErrorKind::NonHyperbolic, "second-order term is singular at a turning point");
        const double y1x = -w / (x * x);
        const double y2 = (y1x - w - y1 / x - 2.0 * k) / y0v;
        return y0 + q * y1 + q * q * y2;
    }

    const double wp = p.omega_plus, wm = p.omega_minus;
    const double sp = std::sin(pi * wp * x), sm = std::sin(pi * wm * x);
    const double cp = std::cos(pi * wp * x), cm = std::cos(pi * wm * x);
    const double u = w;
    const double y0 = -0.5 * (1.0 + u) * sp - 0.5 * (1.0 - u) * sm;
    if (opt.order == 0) return y0;
    const double den = sp - sm;
    require(den != 0.0, ErrorKind::NonHyperbolic, "linear slow manifold is singular on C_mn");
    const double y1 = pi * ((1.0 + u) * wp * cp + (1.0 - u) * wm * cm) / den - p.a * u;
    if (opt.order == 1) return y0 + eps * y1;
    const double y2 = 2.0 * u / den;
    return y0 + eps * y1 + eps * eps * y2;
}

/// d/dt (Y - y) at the point (x, Y(x, w), w) under the layer flow, where Y is
/// slow_manifold_y at `opt.order`. Uses central differences for the gradient of Y.
inline double invariance_residual(const SystemParams& p, double x, double w, const ManifoldOptions& opt = {}) {
    const Chart chart = p.rule == Rule::Nonlinear ? Chart::LayerV : Chart::LayerU;
    const double y = slow_manifold_y(p, x, w, opt);
    ManifoldOptions o = opt;
    o.check_hyperbolicity = false;
    const double hx = 1e-6 * std::max(1.0, std::abs(x) * 1e-2);
    const double hw = 1e-6;
    const double Yx = (slow_manifold_y(p, x + hx, w, o) - slow_manifold_y(p, x - hx, w, o)) / (2 * hx);
    const double Yw = (slow_manifold_y(p, x, w + hw, o) - slow_manifold_y(p, x, w - hw, o)) / (2 * hw);
    const StateRate r = vector_field(p, PhaseState{x, y, w, chart});
    return Yx * r.dx + Yw * r.dw - r.dy;
}

/// The residual divided by the normal contraction rate of the fast flow: an
/// estimate of the height mismatch between the expansion and the invariant manifold.
inline double invariance_defect(const SystemParams& p, double x, double w, const ManifoldOptions& opt = {}) {
    const double res = invariance_residual(p, x, w, opt);
    double rate;
    if (p.rule == Rule::Nonlinear) {
        rate = (x / p.epsilon) * 0.5 * pi * std::abs(std::cos(pi * (x + 0.5 * w)));
    } else {
        rate = std::abs(layer_normal_slope(p, x, w)) / p.epsilon;
    }
    require(rate > 0.0, ErrorKind::NonHyperbolic, "normal rate vanishes at a turning point");
    return res / rate;
}

/// Nonlinear branch angle theta_m(x, y) = -2 {x + (-1)^m (m + asin(y)/pi)}.
inline double branch_theta(double x, double y, long m) {
    require(std::abs(y) <= 1.0, ErrorKind::Domain, "branch angle needs |y| <= 1");
    const double sg = (m % 2 == 0) ? 1.0 : -1.0;
    return -2.0 * (x + sg * (static_cast<double>(m) + std::asin(y) / pi));
}

/// v on branch m of the slow manifold (nonlinear rule, default frequencies).
inline double slow_manifold_v(double x, double y, double epsilon, long m, double a = 0.0) {
    require(std::abs(y) < 1.0, ErrorKind::FoldBand, "branch correction is singular at |y| = 1 (fold)");
    require(x != 0.0, ErrorKind::Domain, "v chart is singular at x = 0");
    const double th = branch_theta(x, y, m);
    const double sg = (m % 2 == 0) ? 1.0 : -1.0;
    return th + sg * (2.0 * epsilon / (pi * x)) * (2.0 - a * th) / std::sqrt(1.0 - y * y);
}

/// Even branches are attracting, odd ones repelling (sign of cos at the branch).
inline Stability branch_stability(long m) { return m % 2 == 0 ? Stability::Attracting : Stability::Repelling; }

enum class FoldSign { Plus, Minus, Zero };

struct TurningPoint {
    Rule rule = Rule::Nonlinear;
    long m = 0;
    FoldSign sign = FoldSign::Plus;  // linear rule: n in {+, 0, -}
    double x = 0.0;
    std::optional<double> u;  // unset for the linear rule: C_mn spans the whole layer
    double y = 0.0;
};

/// Nonlinear turning points at fixed x with |u| <= 1: u_m^+ = (4m-1)/x - 2 at y = +1,
/// u_m^- = (4m+1)/x - 2 at y = -1. Sorted by u.
inline std::vector<TurningPoint> turning_points(double x) {
    require(x > 0.0, ErrorKind::InvalidArgument, "turning points need x > 0");
    std::vector<TurningPoint> out;
    const long lo = static_cast<long>(std::floor(x / 4.0)) - 1;
    const long hi = static_cast<long>(std::ceil(3.0 * x / 4.0)) + 1;
    for (long m = lo; m <= hi; ++m) {
        const double up = (4.0 * m - 1.0) / x - 2.0;
        const double um = (4.0 * m + 1.0) / x - 2.0;
        if (std::abs(up) <= 1.0) out.push_back({Rule::Nonlinear, m, FoldSign::Plus, x, up, 1.0});
        if (std::abs(um) <= 1.0) out.push_back({Rule::Nonlinear, m, FoldSign::Minus, x, um, -1.0});
    }
    std::sort(out.begin(), out.end(), [](const TurningPoint& a, const TurningPoint& b) { return *a.u < *b.u; });
    return out;
}

/// Linear-rule fold lines C_mn at x = 2m - n/2 inside [x_lo, x_hi], sorted by x.
inline std::vector<TurningPoint> linear_turning_points(double x_lo, double x_hi) {
    require(x_hi >= x_lo, ErrorKind::InvalidArgument, "x_hi must be >= x_lo");
    std::vector<TurningPoint> out;
    const long lo = static_cast<long>(std::floor(x_lo / 2.0)) - 1;
    const long hi = static_cast<long>(std::ceil(x_hi / 2.0)) + 1;
    for (long m = lo; m <= hi; ++m) {
        for (int n : {1, 0, -1}) {
            const double x = 2.0 * m - 0.5 * n;
            if (x < x_lo || x > x_hi) continue;
            const FoldSign s = n > 0 ? FoldSign::Plus : (n < 0 ? FoldSign::Minus : FoldSign::Zero);
            out.push_back({Rule::Linear, m, s, x, std::nullopt, -std::sin(0.5 * pi * x)});
        }
    }
    std::sort(out.begin(), out.end(), [](const TurningPoint& a, const TurningPoint& b) { return a.x < b.x; });
    return out;
}

struct SlowPoint {
    double x = 0.0;
    double y = 0.0;
    double u = 0.0;
};

/// Leading-order slow solution of the linear rule from (x0, u0) on the critical manifold.
inline SlowPoint linear_slow_solution(double x0, double u0, double t) {
    const double y0 = critical_manifold_y(Rule::Linear, x0, u0);
    const double x = x0 + t;
    const double sp = std::sin(1.5 * pi * x), sm = std::sin(0.5 * pi * x);
    const double den = sp - sm;
    if (t == 0.0) return {x0, y0, u0};
    require(std::abs(den) > 1e-12, ErrorKind::Singular, "slow solution hits a fold line C_mn at x = " + std::to_string(x));
    const double lo = std::min(x0, x), hi = std::max(x0, x);
    for (const auto& tp : linear_turning_points(lo, hi)) {
        fail(ErrorKind::Singular, "slow solution hits a fold line C_mn at x = " + std::to_string(tp.x));
    }
    return {x, y0, -(2.0 * y0 + sp + sm) / den};
}

/// The canard passing through two-fold lines, for t in (-5/6, 5/6).
inline SlowPoint linear_canard(long m, double t) {
    require(t > -5.0 / 6.0 && t < 5.0 / 6.0, ErrorKind::Domain, "canard parameter must lie in (-5/6, 5/6)");
    const double c3 = std::cos(1.5 * pi * t), c1 = std::cos(0.5 * pi * t);
    const double s2 = std::sqrt(2.0);
    const double sg = (m % 2 == 0) ? 1.0 : -1.0;
    // Even m sits at y = -1/sqrt(2); shifting x by 2 flips both waveforms.
    const double y = -sg / s2;
    double u = (-s2 - c3 + c1) / (c3 + c1);
    if (std::abs(std::cos(pi * t)) < 1e-7) {
        // 0/0 at the fold lines t = -1/2, +1/2: take the ratio of derivatives instead
        const double s3 = 1.5 * pi * std::sin(1.5 * pi * t), s1 = 0.5 * pi * std::sin(0.5 * pi * t);
        u = (s3 - s1) / (-s3 - s1);
    }
    return {2.0 * m + 1.0 + t, y, u};
}

/// Leading-order linear slow flow udot on the critical manifold.
inline double linear_slow_udot(double x, double u) {
    const double sp = std::sin(1.5 * pi * x), sm = std::sin(0.5 * pi * x);
    const double cp = std::cos(1.5 * pi * x), cm = std::cos(0.5 * pi * x);
    return -0.5 * pi * (3.0 * (1.0 + u) * cp + (1.0 - u) * cm) / (sp - sm);
}

// ---------------------------------------------------------------------------
// Frozen-x planar system: y' = eps u, eps u' = -y - sin(pi x0 (1 + u/2)).

struct AutonomousCanard {
    double x0 = 0.0;
    double epsilon = 0.0;
    double y_eq = 0.0;
    bool stable = false;
    bool symmetric = false;

    [[nodiscard]] std::array<double, 2> field(double y, double u) const {
        return {epsilon * u, (-y - std::sin(pi * x0 * (1.0 + 0.5 * u))) / epsilon};
    }
    /// Trace of the equilibrium Jacobian; negative means stable.
    [[nodiscard]] double trace() const { return -(pi * x0 / (2.0 * epsilon)) * std::cos(pi * x0); }
};

/// x0 is symmetric when it is half an odd integer to within `tol` (absolute).
inline AutonomousCanard autonomous_canard_system(double x0, double epsilon, double symmetry_tol = 0.0) {
    require(x0 > 0.0 && epsilon > 0.0, ErrorKind::InvalidArgument, "autonomous system needs x0 > 0 and epsilon > 0");
    AutonomousCanard c;
    c.x0 = x0;
    c.epsilon = epsilon;
    c.y_eq = -std::sin(pi * x0);
    c.symmetric = std::abs((x0 - 0.5) - std::round(x0 - 0.5)) <= symmetry_tol;
    // Stable windows (3/2, 5/2) + 2n, i.e. cos(pi x0) > 0.
    const double r = std::fmod(x0, 2.0);
    c.stable = !c.symmetric && (r < 0.5 || r > 1.5);
    return c;
}

}  // namespace fso
