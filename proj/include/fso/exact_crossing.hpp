#pragma once

// The epsilon = 0 limit: closed-form motion on either side of z = 0,
// Filippov sliding, and crossing orbits concatenated from exact pieces.

#include "fso/model.hpp"

#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace fso {

/// Coefficients of the closed-form solution on one side of z = 0, started at (x0, y0, z0).
struct CrossingCoefficients {
    double omega = 0.0;  // active frequency
    double gamma = 0.0;
    double beta = 0.0;
    double mu = 0.0;
    double P = 0.0;
    double Q = 0.0;
};

struct PlanarState {
    double y = 0.0;
    double z = 0.0;
};

namespace detail {

inline double active_omega(const SystemParams& p, int side) {
    require(side == 1 || side == -1, ErrorKind::InvalidArgument, "side must be +1 or -1");
    return side > 0 ? p.omega_plus : p.omega_minus;
}

/// R(x) = gamma sin(pi omega x) + a pi omega cos(pi omega x); beta times the forced response.
inline double forced_R(double a, const CrossingCoefficients& c, double x) {
    const double w = pi * c.omega;
    return c.gamma * std::sin(w * x) + a * w * std::cos(w * x);
}

inline double forced_dR(double a, const CrossingCoefficients& c, double x) {
    const double w = pi * c.omega;
    return w * (c.gamma * std::cos(w * x) - a * w * std::sin(w * x));
}

inline double forced_ddR(double a, const CrossingCoefficients& c, double x) {
    const double w = pi * c.omega;
    return -w * w * forced_R(a, c, x);
}

}  // namespace detail

inline CrossingCoefficients crossing_coefficients(const SystemParams& p, double x0, double y0, double z0, int side) {
    require(p.a >= 0.0 && p.a < 2.0, ErrorKind::InvalidArgument,
            "closed-form crossing solution requires the underdamped case 0 <= a < 2");
    CrossingCoefficients c;
    c.omega = detail::active_omega(p, side);
    const double w = pi * c.omega;
    c.gamma = w * w - 1.0;
    c.beta = c.gamma * c.gamma + p.a * p.a * w * w;
    c.mu = std::sqrt(4.0 - p.a * p.a);
    c.Q = c.beta * y0 - detail::forced_R(p.a, c, x0);
    c.P = p.a * c.Q + 2.0 * (c.beta * z0 - detail::forced_dR(p.a, c, x0));
    return c;
}

/// (y, z) at time t after (x0, y0, z0) with lambda frozen at `side` (+1 for z > 0).
/// Only meaningful while z keeps that sign.
inline PlanarState crossing_solution(const SystemParams& p, double x0, double y0, double z0, int side, double t) {
    const CrossingCoefficients c = crossing_coefficients(p, x0, y0, z0, side);
    const double a = p.a;
    const double e = std::exp(-0.5 * a * t);
    const double cs = std::cos(0.5 * c.mu * t);
    const double sn = std::sin(0.5 * c.mu * t);
    const double S = c.mu * c.Q * cs + c.P * sn;
    const double dS = 0.5 * c.mu * (c.P * cs - c.mu * c.Q * sn);
    const double x = x0 + t;
    const double bm = c.beta * c.mu;
    const double y = (e * S + c.mu * detail::forced_R(a, c, x)) / bm;
    const double z = (e * (dS - 0.5 * a * S) + c.mu * detail::forced_dR(a, c, x)) / bm;
    return {y, z};
}

inline double crossing_acceleration(const SystemParams& p, double x, double y, double z, int side) {
    return -p.a * z - y - std::sin(pi * detail::active_omega(p, side) * x);
}

struct CrossingHit {
    double t = 0.0;  // time since the start of the piece
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;  // zero up to root tolerance
};

/// First time z returns to 0 on the side given by sign(z0) (or `side` when z0 = 0).
/// Brackets on a grid of spacing `grid` and refines with TOMS 748.
inline CrossingHit next_crossing_time(const SystemParams& p, double x0, double y0, double z0, int side,
                                      double horizon = 8.0, double grid = 0.0) {
    require(horizon > 0.0, ErrorKind::InvalidArgument, "horizon must be > 0");
    if (z0 != 0.0) side = z0 > 0.0 ? 1 : -1;
    const double wmax = std::max(std::abs(p.omega_plus), std::abs(p.omega_minus));
    if (grid <= 0.0) grid = std::min(0.05, 1.0 / (8.0 * std::max(wmax, 1.0)));

    auto zf = [&](double t) { return crossing_solution(p, x0, y0, z0, side, t).z; };
    double t_lo = 0.0;
    double z_lo = z0;
    if (z0 == 0.0) {
        // Leaving the surface: skip the trivial root at t = 0 using the sign of z''.
        t_lo = 1e-9;
        z_lo = zf(t_lo);
    }
    const int n = static_cast<int>(std::ceil(horizon / grid));
    for (int i = 1; i <= n; ++i) {
        const double t_hi = std::min(horizon, i * grid);
        if (t_hi <= t_lo) continue;
        const double z_hi = zf(t_hi);
        if (z_hi == 0.0 || (z_hi > 0.0) != (z_lo > 0.0)) {
            double ts = t_hi;
            if (z_hi != 0.0) {
                std::uintmax_t iters = 200;
                auto tol = [](double l, double h) { return std::abs(h - l) <= 1e-15 * std::max(1.0, std::abs(h)); };
                const auto r = boost::math::tools::toms748_solve(zf, t_lo, t_hi, z_lo, z_hi, tol, iters);
                ts = 0.5 * (r.first + r.second);
            }
            const PlanarState s = crossing_solution(p, x0, y0, z0, side, ts);
            return {ts, x0 + ts, s.y, s.z};
        }
        t_lo = t_hi;
        z_lo = z_hi;
    }
    fail(ErrorKind::NoCrossing, "no crossing of z = 0 found within the search horizon");
}

/// Sliding along z = 0: x advances, y and z stay put.
inline PhaseState sliding_flow(double x0, double y0, double t) {
    require(std::abs(y0) <= 1.0, ErrorKind::OutsideSliding, "sliding needs |y| <= 1");
    return PhaseState::outer(x0 + t, y0, 0.0);
}

/// Heights where the upper (+) and lower (-) fields are tangent to z = 0.
struct TangencyPoint {
    double x = 0.0;
    double y_plus = 0.0;
    double y_minus = 0.0;
};

inline TangencyPoint tangency_at(double x, double omega_plus = 1.5, double omega_minus = 0.5) {
    return {x, -std::sin(pi * omega_plus * x), -std::sin(pi * omega_minus * x)};
}

inline std::vector<TangencyPoint> tangency_sets(double x_lo, double x_hi, std::size_t n, double omega_plus = 1.5,
                                                double omega_minus = 0.5) {
    require(n >= 2 && x_hi >= x_lo, ErrorKind::InvalidArgument, "tangency_sets needs n >= 2 and x_hi >= x_lo");
    std::vector<TangencyPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(tangency_at(x, omega_plus, omega_minus));
    }
    return out;
}

enum class Stability { Attracting, Repelling, Marginal };

inline std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::Attracting: return "attracting";
        case Stability::Repelling: return "repelling";
        case Stability::Marginal: return "marginal";
    }
    return "?";
}

struct SlidingBranch {
    double lambda = 0.0;
    double dzdot_dlambda = 0.0;
    Stability stability = Stability::Marginal;
};

struct SlidingClassification {
    double x = 0.0;
    double y = 0.0;
    Rule rule = Rule::Nonlinear;
    std::vector<SlidingBranch> branches;  // ordered by lambda
};

/// |d zdot / d lambda| below this counts as marginal.
inline constexpr double marginal_tolerance = 1e-12;

inline Stability classify_slope(double slope, double scale) {
    if (std::abs(slope) <= marginal_tolerance * std::max(1.0, scale)) return Stability::Marginal;
    return slope < 0.0 ? Stability::Attracting : Stability::Repelling;
}

/// All sliding solutions (z = zdot = 0) at (x, y), each classified by the sign of d zdot / d lambda.
inline SlidingClassification classify_sliding(const SystemParams& p, double x, double y) {
    SlidingClassification out{x, y, p.rule, {}};
    if (!(std::abs(y) <= 1.0)) return out;
    const double wp = p.omega_plus, wm = p.omega_minus;

    if (p.rule == Rule::Linear) {
        const double sp = std::sin(pi * wp * x), sm = std::sin(pi * wm * x);
        const double slope = 0.5 * (sm - sp);
        if (sp == sm) return out;  // two-fold: zdot independent of lambda
        const double lam = -(2.0 * y + sp + sm) / (sp - sm);
        if (lam < -1.0 || lam > 1.0) return out;
        out.branches.push_back({lam, slope, classify_slope(slope, 1.0)});
        return out;
    }

    // Nonlinear: phase phi = pi x omega(lambda) solves sin(phi) = -y.
    if (x == 0.0) return out;
    const double wbar = 0.5 * (wp + wm), dw = 0.5 * (wp - wm);
    const double k = pi * x * dw;  // d phi / d lambda
    const double phi_a = pi * x * (wbar - dw), phi_b = pi * x * (wbar + dw);
    const double lo = std::min(phi_a, phi_b), hi = std::max(phi_a, phi_b);
    const double alpha = std::asin(-y);
    const double two_pi = 2.0 * pi;
    auto push = [&](double phi) {
        if (phi < lo || phi > hi) return;
        double lam = (phi / (pi * x) - wbar) / dw;
        lam = std::clamp(lam, -1.0, 1.0);
        const double slope = -k * std::cos(phi);
        out.branches.push_back({lam, slope, classify_slope(slope, std::abs(k))});
    };
    const long n_lo = static_cast<long>(std::floor((lo - pi) / two_pi)) - 1;
    const long n_hi = static_cast<long>(std::ceil(hi / two_pi)) + 1;
    for (long n = n_lo; n <= n_hi; ++n) {
        const double base = two_pi * static_cast<double>(n);
        push(base + alpha);
        if (std::abs(y) != 1.0) push(base + pi - alpha);  // avoid the double root at y = +-1
    }
    std::sort(out.branches.begin(), out.branches.end(),
              [](const SlidingBranch& a, const SlidingBranch& b) { return a.lambda < b.lambda; });
    return out;
}

inline SlidingClassification classify_sliding(Rule rule, double x, double y) {
    SystemParams p;
    p.rule = rule;
    return classify_sliding(p, x, y);
}

struct LambdaInterval {
    double lo = 0.0;
    double hi = 0.0;
    Stability stability = Stability::Attracting;
};

/// Nonlinear rule with default frequencies: lambda-intervals of attracting and
/// repelling sliding at time x, clipped to [-1, 1].
inline std::vector<LambdaInterval> sliding_intervals(double x) {
    require(x > 0.0, ErrorKind::InvalidArgument, "x must be > 0");
    std::vector<LambdaInterval> out;
    const long m_lo = static_cast<long>(std::floor((x - 5.0) / 4.0)) - 1;
    const long m_hi = static_cast<long>(std::ceil((3.0 * x - 1.0) / 4.0)) + 1;
    for (long m = m_lo; m <= m_hi; ++m) {
        const double s = 4.0 * static_cast<double>(m) / x;
        const std::array<LambdaInterval, 2> cand{{{1.0 / x - 2.0 + s, 3.0 / x - 2.0 + s, Stability::Repelling},
                                                  {3.0 / x - 2.0 + s, 5.0 / x - 2.0 + s, Stability::Attracting}}};
        for (auto c : cand) {
            if (c.hi <= -1.0 || c.lo >= 1.0) continue;
            c.lo = std::max(c.lo, -1.0);
            c.hi = std::min(c.hi, 1.0);
            out.push_back(c);
        }
    }
    return out;
}

/// Linear rule: whether sliding at x is attracting or repelling (sign of (sin(pi x/2) - sin(3 pi x/2))/2).
inline Stability linear_sliding_stability(double x, double omega_plus = 1.5, double omega_minus = 0.5) {
    const double slope = 0.5 * (std::sin(pi * omega_minus * x) - std::sin(pi * omega_plus * x));
    return classify_slope(slope, 1.0);
}

// ---------------------------------------------------------------------------
// Crossing orbits

enum class CrossingOutcome { Crossed, SlidingAttracting, SlidingRepelling, Grazing };

inline std::string_view to_string(CrossingOutcome c) {
    switch (c) {
        case CrossingOutcome::Crossed: return "crossed";
        case CrossingOutcome::SlidingAttracting: return "sliding_attracting";
        case CrossingOutcome::SlidingRepelling: return "sliding_repelling";
        case CrossingOutcome::Grazing: return "grazing";
    }
    return "?";
}

/// Filippov test at a point on z = 0 reached from `from_side`.
inline CrossingOutcome crossing_outcome(const SystemParams& p, double x, double y, int from_side) {
    const double ap = crossing_acceleration(p, x, y, 0.0, +1);
    const double am = crossing_acceleration(p, x, y, 0.0, -1);
    if (ap == 0.0 || am == 0.0) return CrossingOutcome::Grazing;
    if (ap < 0.0 && am < 0.0) return from_side > 0 ? CrossingOutcome::Crossed : CrossingOutcome::Grazing;
    if (ap > 0.0 && am > 0.0) return from_side < 0 ? CrossingOutcome::Crossed : CrossingOutcome::Grazing;
    return (ap < 0.0 && am > 0.0) ? CrossingOutcome::SlidingAttracting : CrossingOutcome::SlidingRepelling;
}

struct CrossingEvent {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    int from_side = 0;
    CrossingOutcome outcome = CrossingOutcome::Crossed;
};

struct CrossingOrbit {
    double x0 = 0.0;
    PlanarState start;
    std::vector<CrossingEvent> crossings;
    bool stopped_early = false;  // ended on sliding / grazing before t_end
    double t_end = 0.0;
    PlanarState end;
    int end_side = 0;
};

/// Concatenate exact solutions from (x0, y0, z0), z0 != 0, until t_end or a non-crossing contact.
inline CrossingOrbit crossing_orbit(const SystemParams& p, double x0, double y0, double z0, double t_end,
                                    double horizon = 8.0) {
    require(z0 != 0.0, ErrorKind::InvalidArgument, "crossing orbit needs z0 != 0");
    require(t_end > 0.0, ErrorKind::InvalidArgument, "t_end must be > 0");
    CrossingOrbit orb;
    orb.x0 = x0;
    orb.start = {y0, z0};
    double t = 0.0, x = x0, y = y0, z = z0;
    int side = z0 > 0.0 ? 1 : -1;
    while (true) {
        std::optional<CrossingHit> hit;
        try {
            hit = next_crossing_time(p, x, y, z, side, std::min(horizon, t_end - t + 1e-9));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoCrossing) throw;
        }
        if (!hit || t + hit->t >= t_end) {
            const PlanarState s = crossing_solution(p, x, y, z, side, t_end - t);
            orb.t_end = t_end;
            orb.end = s;
            orb.end_side = side;
            return orb;
        }
        t += hit->t;
        x = hit->x;
        y = hit->y;
        const CrossingOutcome out = crossing_outcome(p, x, y, side);
        orb.crossings.push_back({t, x, y, side, out});
        if (out != CrossingOutcome::Crossed) {
            orb.stopped_early = true;
            orb.t_end = t;
            orb.end = {y, 0.0};
            orb.end_side = side;
            return orb;
        }
        side = -side;
        z = 0.0;
    }
}

/// State after time t along the concatenated crossing orbit. Throws OutsideSliding
/// if the orbit reaches the sliding region before t.
inline PlanarState crossing_flow(const SystemParams& p, double x0, double y0, double z0, double t) {
    const CrossingOrbit o = crossing_orbit(p, x0, y0, z0, t);
    require(!o.stopped_early, ErrorKind::OutsideSliding, "crossing orbit reached sliding or grazing contact");
    return o.end;
}

struct PeriodicOrbit {
    double x0 = 0.0;
    PlanarState state;        // on the orbit at x = x0
    double period = 0.0;      // from crossing-time differences
    double residual = 0.0;    // |P(s) - s| of the stroboscopic map
    std::array<double, 4> jacobian{};  // row-major d P / d (y, z)
    bool attracting = false;  // spectral radius of the jacobian < 1
    int newton_iterations = 0;
};

/// Stroboscopic map over time T = `period_guess`, refined to a fixed point by
/// Newton with a central-difference Jacobian.
inline PeriodicOrbit find_periodic_orbit(const SystemParams& p, double x0, PlanarState guess, double period_guess = 8.0,
                                         double tol = 1e-10, int max_iter = 40) {
    auto map = [&](PlanarState s) { return crossing_flow(p, x0, s.y, s.z, period_guess); };
    PeriodicOrbit po;
    po.x0 = x0;
    PlanarState s = guess;
    const double h = 1e-6;
    for (int it = 0; it < max_iter; ++it) {
        const PlanarState f = map(s);
        const double ry = f.y - s.y, rz = f.z - s.z;
        po.residual = std::hypot(ry, rz);
        po.newton_iterations = it;
        const PlanarState fy1 = map({s.y + h, s.z}), fy0 = map({s.y - h, s.z});
        const PlanarState fz1 = map({s.y, s.z + h}), fz0 = map({s.y, s.z - h});
        po.jacobian = {(fy1.y - fy0.y) / (2 * h), (fz1.y - fz0.y) / (2 * h), (fy1.z - fy0.z) / (2 * h),
                       (fz1.z - fz0.z) / (2 * h)};
        if (po.residual < tol) break;
        // Solve (J - I) d = -(r)
        const double a11 = po.jacobian[0] - 1, a12 = po.jacobian[1], a21 = po.jacobian[2], a22 = po.jacobian[3] - 1;
        const double det = a11 * a22 - a12 * a21;
        require(std::abs(det) > 1e-14, ErrorKind::Singular, "periodic-orbit Newton step is singular");
        const double dy = (-ry * a22 + rz * a12) / det;
        const double dz = (-a11 * rz + a21 * ry) / det;
        s.y += dy;
        s.z += dz;
    }
    po.state = s;
    const double tr = po.jacobian[0] + po.jacobian[3];
    const double det = po.jacobian[0] * po.jacobian[3] - po.jacobian[1] * po.jacobian[2];
    const double disc = tr * tr - 4 * det;
    double rho;
    if (disc >= 0) {
        rho = std::max(std::abs(0.5 * (tr + std::sqrt(disc))), std::abs(0.5 * (tr - std::sqrt(disc))));
    } else {
        rho = std::sqrt(std::abs(det));
    }
    po.attracting = rho < 1.0;

    // Period: time between crossing events that repeat on the orbit.
    const CrossingOrbit o = crossing_orbit(p, x0, s.y, s.z, 3.0 * period_guess);
    po.period = period_guess;
    if (o.crossings.size() >= 2) {
        const auto& c0 = o.crossings.front();
        for (std::size_t j = 1; j < o.crossings.size(); ++j) {
            const auto& cj = o.crossings[j];
            if (cj.from_side == c0.from_side && std::abs(cj.y - c0.y) < 1e-7 && cj.t - c0.t > 1.0) {
                po.period = cj.t - c0.t;
                break;
            }
        }
    }
    return po;
}

}  // namespace fso
