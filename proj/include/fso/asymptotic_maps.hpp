#pragma once

// Closed-form skeleton of the nonlinear layer dynamics for large x: slow arcs,
// small and large arcs, the staircase step map and the composed cycle maps.
// Everything here uses the default frequencies 3/2 and 1/2.

#include "fso/error.hpp"
#include "fso/model.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fso {

enum class MapKind { SlowArc, SmallArc, LargeArc, StaircaseStep, Staircase, LargeCycle, SmallCycle };

inline std::string_view to_string(MapKind k) {
    switch (k) {
        case MapKind::SlowArc: return "slow_arc";
        case MapKind::SmallArc: return "small_arc";
        case MapKind::LargeArc: return "large_arc";
        case MapKind::StaircaseStep: return "staircase_step";
        case MapKind::Staircase: return "staircase";
        case MapKind::LargeCycle: return "large_cycle";
        case MapKind::SmallCycle: return "small_cycle";
    }
    return "?";
}

struct LayerPoint {
    double x = 0.0;
    double y = 0.0;
    double u = 0.0;
};

/// One application of an asymptotic map, with the order of the dropped terms.
struct MapEvent {
    MapKind kind = MapKind::SlowArc;
    LayerPoint entry;
    LayerPoint exit;
    std::optional<LayerPoint> apex;
    std::string error_order;
};

struct ArcResult {
    MapKind kind = MapKind::SmallArc;
    LayerPoint entry;
    std::optional<LayerPoint> apex;  // small arcs: the u = 0 crossing
    LayerPoint exit;
    std::string error_order;

    [[nodiscard]] MapEvent event() const { return {kind, entry, exit, apex, error_order}; }
};

struct SlowArcPoint {
    double y = 0.0;
    double v = 0.0;
};

/// Leading-order slow arc through (x0, y0, v0), evaluated at x.
inline SlowArcPoint slow_arc(double x0, double y0, double v0, double epsilon, double x) {
    require(x0 > 0.0 && x > 0.0, ErrorKind::Domain, "slow arcs need x0, x > 0");
    return {y0 + 2.0 * epsilon * (x0 - x) + epsilon * (v0 + 2.0 * x0) * std::log(x / x0), v0 + 2.0 * (x0 - x)};
}

/// The same arc as y(v), with x eliminated.
inline double slow_arc_y_of_v(double x0, double y0, double v0, double epsilon, double v) {
    const double arg = 1.0 + (v0 - v) / (2.0 * x0);
    require(arg > 0.0, ErrorKind::Domain, "arc parameter outside its range");
    return y0 + epsilon * (v - v0) + epsilon * (v0 + 2.0 * x0) * std::log(arg);
}

/// Squared critical amplitude separating small from large arcs.
inline double critical_amplitude_sq(double x0, double y0, double epsilon) {
    return 4.0 * (1.0 - y0) / (epsilon * x0);
}

/// True when (x0, y0, u0) starts a small arc. Ties go to the small arc.
inline bool is_small_arc(double x0, double y0, double u0, double epsilon) {
    return u0 > 0.0 && u0 * u0 <= critical_amplitude_sq(x0, y0, epsilon);
}

inline ArcResult small_arc_map(double x0, double y0, double u0, double epsilon) {
    require(x0 > 0.0 && epsilon > 0.0, ErrorKind::InvalidArgument, "small arcs need x0 > 0 and epsilon > 0");
    require(u0 > 0.0, ErrorKind::InvalidArgument, "small arcs start with u0 > 0");
    require(is_small_arc(x0, y0, u0, epsilon), ErrorKind::LargeArcRegime,
            "u0 exceeds the critical amplitude: use large_arc_map");
    ArcResult r;
    r.kind = MapKind::SmallArc;
    r.entry = {x0, y0, u0};
    r.apex = LayerPoint{x0 * (1.0 + 0.5 * u0), y0 + 0.25 * epsilon * x0 * u0 * u0, 0.0};
    r.exit = {x0 * (1.0 + u0 + u0 * u0 / 6.0), y0, -u0 + 2.0 * u0 * u0 / 3.0};
    r.error_order = "O(eps/x0, eps*x0*u0^3, u0^3)";
    return r;
}

/// Large arc from y = -1 (sign_of_v > 0, u0 > 0) or from y = +1 (sign_of_v < 0, u0 < 0).
inline ArcResult large_arc_map(double x0, double u0, int sign_of_v, double epsilon) {
    require(x0 > 0.0 && epsilon > 0.0, ErrorKind::InvalidArgument, "large arcs need x0 > 0 and epsilon > 0");
    require(sign_of_v == 1 || sign_of_v == -1, ErrorKind::InvalidArgument, "sign_of_v must be +1 or -1");
    require(u0 != 0.0 && (u0 > 0.0) == (sign_of_v > 0), ErrorKind::InvalidArgument, "u0 must carry sign_of_v");
    const double y0 = sign_of_v > 0 ? -1.0 : 1.0;
    if (sign_of_v > 0) {
        require(!is_small_arc(x0, y0, u0, epsilon), ErrorKind::SmallArcRegime,
                "u0 is below the critical amplitude: use small_arc_map");
    }
    const double au = std::abs(u0);
    ArcResult r;
    r.kind = MapKind::LargeArc;
    r.entry = {x0, y0, u0};
    r.exit = {x0 + 2.0 / (au * epsilon), -y0, u0 - 2.0 * (2.0 + u0) / (au * epsilon * x0)};
    r.error_order = "O(1/x0^2)";
    return r;
}

struct StaircaseState {
    long k = 0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double T = 0.0;  // duration of the step that produced this state (0 for k = 0)
};

/// Step time from (y, v) with the staircase anchored at (x0, v0).
inline double staircase_step_time(double x0, double v0, double y, double a, double epsilon) {
    const double s = y + 0.5 * (epsilon / x0) * a * v0;
    require(std::abs(s) > 1.0, ErrorKind::FoldBand, "inside the fold band: no staircase step");
    return 4.0 * epsilon / (x0 * std::sqrt(s * s - 1.0));
}

/// One plane-to-plane step. `Y` is the fold height (+1 or -1), x0 and v0 the anchor.
inline StaircaseState staircase_step(double x0, double v0, const StaircaseState& prev, int Y, double a,
                                     double epsilon) {
    require(Y == 1 || Y == -1, ErrorKind::InvalidArgument, "fold height must be +1 or -1");
    const double T = staircase_step_time(x0, v0, prev.y, a, epsilon);
    StaircaseState n;
    n.k = prev.k + 1;
    n.x = prev.x + T;
    n.y = prev.y + (epsilon / x0) * prev.v * T;
    n.v = prev.v - 4.0 * Y;
    n.T = T;
    return n;
}

struct StaircaseResult {
    std::vector<StaircaseState> steps;  // steps[0] is the entry
    LayerPoint exit;                    // interpolated back to y = y0
    double y_amplitude = 0.0;           // max |y_k| - |y0|
    long outward_steps = 0;
    long inward_steps = 0;
};

/// Iterate staircase_step from (x0, y0, v0), |y0| > 1, until y returns to y0.
/// The exit sits on the plane where that return happens, with x interpolated
/// linearly inside the step.
inline StaircaseResult full_staircase(double x0, double y0, double v0, double a, double epsilon) {
    require(std::abs(y0) > 1.0, ErrorKind::FoldBand, "staircase entry must lie outside |y| <= 1");
    const int Y = y0 > 0.0 ? 1 : -1;
    const long guard = static_cast<long>(10.0 * std::max(std::abs(v0), 1.0));
    StaircaseResult r;
    StaircaseState s{0, x0, y0, v0, 0.0};
    r.steps.push_back(s);
    double peak = std::abs(y0);
    while (true) {
        require(static_cast<long>(r.steps.size()) <= guard, ErrorKind::NonTermination,
                "staircase did not return to its entry level");
        const StaircaseState n = staircase_step(x0, v0, s, Y, a, epsilon);
        r.steps.push_back(n);
        const double d_prev = Y * (s.y - y0), d_new = Y * (n.y - y0);
        if (d_new > d_prev) {
            ++r.outward_steps;
        } else {
            ++r.inward_steps;
        }
        peak = std::max(peak, std::abs(n.y));
        if (d_new < 0.0 || (d_new == 0.0 && n.k > 0 && d_prev > 0.0)) {
            const double th = d_prev / (d_prev - d_new);
            const double x = s.x + th * n.T;
            r.exit = {x, y0, s.v / x};
            break;
        }
        s = n;
    }
    r.y_amplitude = peak - std::abs(y0);
    return r;
}

/// Escape variable of the large-cycle map: w = 4 / (eps x u).
inline double escape_variable(double x, double u, double epsilon) { return 4.0 / (epsilon * x * u); }

struct CycleResult {
    LayerPoint start;
    LayerPoint end;           // composed from the constituent maps
    LayerPoint closed_form;   // direct formula
    std::vector<MapEvent> events;
};

/// Large cycle from (x0, -1, u0): large arc up, staircase (u -> -u), large arc down, staircase.
inline CycleResult large_cycle_return(double x0, double u0, double epsilon) {
    require(u0 > 0.0, ErrorKind::InvalidArgument, "large cycles start with u0 > 0");
    CycleResult c;
    c.start = {x0, -1.0, u0};
    const ArcResult up = large_arc_map(x0, u0, 1, epsilon);
    c.events.push_back(up.event());
    const LayerPoint s1 = {up.exit.x, up.exit.y, -up.exit.u};
    c.events.push_back({MapKind::Staircase, up.exit, s1, std::nullopt, "O(eps/x0)"});
    const ArcResult down = large_arc_map(s1.x, s1.u, -1, epsilon);
    c.events.push_back(down.event());
    const LayerPoint s2 = {down.exit.x, down.exit.y, -down.exit.u};
    c.events.push_back({MapKind::Staircase, down.exit, s2, std::nullopt, "O(eps/x0)"});
    c.end = s2;
    c.closed_form = {x0 + 4.0 / (epsilon * u0), -1.0, u0 - 4.0 / (epsilon * x0)};
    return c;
}

struct SmallCycleResult {
    LayerPoint start;
    LayerPoint next;         // (x3, -1, u3) after the small arc and the staircase
    double peak = 0.0;       // y-amplitude of the starting arc, eps x0 u0^2 / 4
    double next_peak = 0.0;  // y-amplitude of the following arc
    double peak_ratio = 0.0;            // next_peak / peak from the composed maps
    double peak_ratio_leading = 0.0;    // 1 - u0/3
    double peak_spacing = 0.0;          // x0 u0 (1 + u0/6)
    std::vector<MapEvent> events;
};

inline SmallCycleResult small_cycle_return(double x0, double u0, double epsilon) {
    SmallCycleResult c;
    c.start = {x0, -1.0, u0};
    const ArcResult arc = small_arc_map(x0, -1.0, u0, epsilon);
    c.events.push_back(arc.event());
    c.next = {arc.exit.x, -1.0, -arc.exit.u};
    c.events.push_back({MapKind::Staircase, arc.exit, c.next, std::nullopt, "O(eps/x0)"});
    c.peak = 0.25 * epsilon * x0 * u0 * u0;
    c.next_peak = 0.25 * epsilon * c.next.x * c.next.u * c.next.u;
    c.peak_ratio = c.next_peak / c.peak;
    c.peak_ratio_leading = 1.0 - u0 / 3.0;
    c.peak_spacing = x0 * u0 * (1.0 + u0 / 6.0);
    return c;
}

enum class Verdict { Trapped, Escapes, BriefSlideThenEscape };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Trapped: return "trapped";
        case Verdict::Escapes: return "escapes";
        case Verdict::BriefSlideThenEscape: return "brief_slide_then_escape";
    }
    return "?";
}

struct TrapVerdict {
    Verdict verdict = Verdict::Trapped;
    double boundary_estimate = 1.0 / 3.0;
    double correction_scale = 0.0;  // 1/(eps x0)
};

/// Fate of an orbit entering the layer at u = +1 with height y0.
inline TrapVerdict classify_entry(double x0, double y0, double epsilon, double a = 0.0) {
    require(x0 > 0.0 && epsilon > 0.0, ErrorKind::InvalidArgument, "classify_entry needs x0 > 0 and epsilon > 0");
    TrapVerdict t;
    t.correction_scale = 1.0 / (epsilon * x0);
    if (std::abs(y0) > 1.0) {
        t.verdict = Verdict::Escapes;
        return t;
    }
    // epsilon * udot at u = +1; entry needs it negative.
    const double s3 = std::sin(1.5 * pi * x0);
    const double eudot = -epsilon * a - y0 - s3;
    if (std::abs(eudot) <= chart_tolerance) {
        // Tangential up to rounding (e.g. sin(3 pi x0 / 2) at integer x0): the orbit
        // still enters if the second derivative points inward.
        const double second = -epsilon - 1.5 * pi * std::cos(1.5 * pi * x0);
        require(second < 0.0, ErrorKind::NoLayerEntry, "orbit touches u = +1 without entering the layer");
    } else {
        require(eudot < 0.0, ErrorKind::NoLayerEntry, "udot >= 0 at u = +1: the orbit does not enter the layer");
    }
    t.verdict = y0 < t.boundary_estimate ? Verdict::Trapped : Verdict::BriefSlideThenEscape;
    return t;
}

}  // namespace fso
