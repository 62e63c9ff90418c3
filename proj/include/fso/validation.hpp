#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fso/asymptotic_maps.hpp"
#include "fso/error.hpp"
#include "fso/exact_crossing.hpp"
#include "fso/integrator.hpp"
#include "fso/model.hpp"
#include "fso/ode.hpp"
#include "fso/slow_manifold.hpp"

// Map-versus-oracle studies. Each one runs the asymptotic prediction and an
// Oracle-mode integration of the same orbit and reports both side by side.
namespace fso::validation {

namespace detail {

/// Least-squares slope of ys against xs.
inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::InvalidArgument, "fit needs at least two points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double rel_err(double measured, double predicted) { return (measured - predicted) / predicted; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Staircases

/// Plane v nearest to `v_target` on which x0 + v/2 sits on a fold of height Y.
inline double staircase_plane(double x0, double v_target, int Y) {
    require(Y == 1 || Y == -1, ErrorKind::InvalidArgument, "fold height must be +1 or -1");
    const double offset = Y > 0 ? 1.5 : 0.5;
    const double base = 2.0 * (offset - x0);
    return base + 4.0 * std::round((v_target - base) / 4.0);
}

struct StaircaseStepRow {
    long k = 0;
    double v = 0.0;
    double T_oracle = 0.0;
    double T_map = 0.0;
    double dy_oracle = 0.0;
    double dy_map = 0.0;
    double err_T = 0.0;
    double err_dy = 0.0;
};

struct StaircaseStudy {
    double x0 = 0.0;
    double y0 = 0.0;
    double v0 = 0.0;
    double epsilon = 0.0;
    StaircaseResult map;
    std::vector<EventRecord> oracle_midpoints;
    std::vector<StaircaseStepRow> rows;
    bool returned = false;  // the oracle came back to y0 inside the layer
    LayerPoint oracle_exit;
    double err_exit_u = 0.0;  // |u_exit oracle - u_exit map|
    double max_err_T = 0.0;
    double max_err_dy = 0.0;
    double cum_err_T = 0.0;   // relative error of the summed step times
    double cum_err_dy = 0.0;  // relative error of the summed |dy|
    std::uint64_t steps = 0;
};

/// Staircase from (x0, Y(1 + eta), v0) with v0 on a fold plane near `v_target`.
/// Oracle dwell times are measured between midpoints of consecutive planes,
/// where cos(pi (x + v/2)) = 0 and the orbit sits halfway between folds.
inline StaircaseStudy staircase_study(double x0, double eta, double v_target, double epsilon, int Y = 1,
                                      const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    require(eta > 0.0, ErrorKind::InvalidArgument, "staircase entry must lie beyond the fold band");
    StaircaseStudy st;
    st.x0 = x0;
    st.epsilon = epsilon;
    st.y0 = Y * (1.0 + eta);
    st.v0 = staircase_plane(x0, v_target, Y);
    require(std::abs(st.v0 / x0) <= 1.0, ErrorKind::ChartError, "staircase plane lies outside the layer");
    st.map = full_staircase(x0, st.y0, st.v0, 0.0, epsilon);

    SystemParams p;
    p.epsilon = epsilon;
    IntegratorConfig c = cfg;
    c.record_samples = false;
    const double y0 = st.y0;
    const std::vector<EventSpec> ev{
        EventSpec::make_custom([](double, const PhaseState& s) { return std::cos(pi * (s.x + 0.5 * s.w)); }),
        EventSpec::y_level(y0, Y > 0 ? Direction::Down : Direction::Up, true), EventSpec::layer_exit(true)};
    const double span = 2.0 * (st.map.exit.x - x0) + 1.0;
    const Trajectory tr = integrate(p, PhaseState::layer_v(x0, y0, st.v0), span, ev, c);
    st.steps = tr.stats.accepted;
    st.returned = tr.halting_event && tr.events[*tr.halting_event].spec == 1;
    if (st.returned) {
        const PhaseState& q = tr.events[*tr.halting_event].state;
        st.oracle_exit = {q.x, q.y, q.w / q.x};
        st.err_exit_u = std::abs(st.oracle_exit.u - st.map.exit.u);
    }
    for (const auto& e : tr.events) {
        if (e.spec == 0 && Y * std::sin(pi * (e.state.x + 0.5 * e.state.w)) > 0.0) st.oracle_midpoints.push_back(e);
    }

    // Window j -> j+1 brackets the dwell on plane j+1, which map step k = j+1 describes.
    double sum_To = 0, sum_Tm = 0, sum_dyo = 0, sum_dym = 0;
    const auto& mids = st.oracle_midpoints;
    for (std::size_t j = 0; j + 1 < mids.size() && j + 2 < st.map.steps.size(); ++j) {
        const StaircaseState& sk = st.map.steps[j + 1];
        StaircaseStepRow r;
        r.k = sk.k;
        r.v = sk.v;
        r.T_map = st.map.steps[j + 2].T;
        r.dy_map = st.map.steps[j + 2].y - sk.y;
        r.T_oracle = mids[j + 1].t - mids[j].t;
        r.dy_oracle = mids[j + 1].state.y - mids[j].state.y;
        r.err_T = detail::rel_err(r.T_oracle, r.T_map);
        r.err_dy = detail::rel_err(r.dy_oracle, r.dy_map);
        st.max_err_T = std::max(st.max_err_T, std::abs(r.err_T));
        st.max_err_dy = std::max(st.max_err_dy, std::abs(r.err_dy));
        sum_To += r.T_oracle;
        sum_Tm += r.T_map;
        sum_dyo += std::abs(r.dy_oracle);
        sum_dym += std::abs(r.dy_map);
        st.rows.push_back(r);
    }
    if (!st.rows.empty()) {
        st.cum_err_T = detail::rel_err(sum_To, sum_Tm);
        st.cum_err_dy = detail::rel_err(sum_dyo, sum_dym);
    }
    return st;
}

// ---------------------------------------------------------------------------
// Arcs

struct ArcComparison {
    ArcResult map;
    double x0 = 0.0;
    double v0 = 0.0;
    std::optional<LayerPoint> apex;  // oracle u = 0 crossing (small arcs)
    LayerPoint exit;                 // oracle arrival at y = -1 (small) or y = +1 (large)
    double err_apex_x = 0.0;
    double err_apex_y = 0.0;  // relative to the apex height
    double err_exit_x = 0.0;
    double err_exit_v = 0.0;  // x * |u_oracle - u_map|
    double err_exit_u = 0.0;
    double max_slow_arc_dev = 0.0;  // max |y_oracle - y_slow_arc| along the samples
    std::vector<Sample> samples;
    std::uint64_t steps = 0;
};

/// Point on the attracting slow manifold at x0 with v near `v_target`, a phase
/// `phi` in (0, pi/2) below the y = -1 fold: the M0 height there is -cos(phi).
inline std::array<double, 2> attracting_start(double x0, double v_target, double phi, double epsilon) {
    require(phi > 0.0 && phi < pi / 2, ErrorKind::InvalidArgument, "phase must lie in (0, pi/2)");
    const double base = 2.0 * (0.5 - phi / pi - x0);
    const double v0 = base + 4.0 * std::round((v_target - base) / 4.0);
    SystemParams p;
    p.epsilon = epsilon;
    return {slow_manifold_y(p, x0, v0), v0};
}

/// Oracle run of the arc leaving (x0, y0, v0), compared with small_arc_map or
/// large_arc_map according to the regime. Small arcs end when y comes back down
/// to y0, large arcs when y reaches +1.
inline ArcComparison arc_comparison(double x0, double y0, double v0, double epsilon, double sample_interval = 0.0,
                                    const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    require(v0 > 0.0, ErrorKind::InvalidArgument, "arcs leave y = -1 with v0 > 0");
    ArcComparison r;
    r.x0 = x0;
    r.v0 = v0;
    const double u0 = v0 / x0;
    const bool small = is_small_arc(x0, y0, u0, epsilon);
    if (!small) require(y0 == -1.0, ErrorKind::InvalidArgument, "large arcs start on the y = -1 fold");
    r.map = small ? small_arc_map(x0, y0, u0, epsilon) : large_arc_map(x0, u0, 1, epsilon);

    SystemParams p;
    p.epsilon = epsilon;
    IntegratorConfig c = cfg;
    c.record_samples = sample_interval > 0.0;
    c.sample_interval = sample_interval;
    const std::vector<EventSpec> ev{
        EventSpec::u_zero(Direction::Down),
        small ? EventSpec::y_level(y0, Direction::Down, true) : EventSpec::y_level(1.0, Direction::Up, true),
        EventSpec::layer_exit(true)};
    const double horizon = small ? 2.0 * v0 + 10.0 : 4.0 / (u0 * epsilon) + 10.0;
    const Trajectory tr = integrate(p, PhaseState::layer_v(x0, y0, v0), horizon, ev, c);
    r.steps = tr.stats.accepted;
    require(tr.halting_event && tr.events[*tr.halting_event].spec == 1, ErrorKind::NonTermination,
            "oracle arc did not reach its end level");
    auto to_u = [](const PhaseState& s) { return LayerPoint{s.x, s.y, s.w / s.x}; };
    for (const auto& e : tr.events)
        if (e.spec == 0 && !r.apex) r.apex = to_u(e.state);
    r.exit = to_u(tr.events[*tr.halting_event].state);
    if (small && r.apex && r.map.apex) {
        r.err_apex_x = std::abs(r.apex->x - r.map.apex->x);
        r.err_apex_y = std::abs(r.apex->y - r.map.apex->y) / (r.map.apex->y - y0);
    }
    r.err_exit_x = std::abs(r.exit.x - r.map.exit.x);
    r.err_exit_u = std::abs(r.exit.u - r.map.exit.u);
    r.err_exit_v = r.exit.x * r.err_exit_u;
    for (const auto& smp : tr.samples) {
        const SlowArcPoint q = slow_arc(x0, y0, v0, epsilon, smp.state.x);
        r.max_slow_arc_dev = std::max(r.max_slow_arc_dev, std::abs(smp.state.y - q.y));
    }
    r.samples = tr.samples;
    return r;
}

// ---------------------------------------------------------------------------
// Small cycles

/// Accepted steps an Oracle run needs from x0 to x_end inside the layer, from
/// the step cap eps / (10 x): the integral of 10 x / eps.
inline double oracle_step_estimate(double x0, double x_end, double epsilon) {
    return 5.0 * (x_end * x_end - x0 * x0) / epsilon;
}

/// Largest x an Oracle run from x0 reaches within `steps` accepted steps.
inline double oracle_reach(double x0, double steps, double epsilon) {
    return std::sqrt(x0 * x0 + steps * epsilon / 5.0);
}

struct Peak {
    int k = 0;
    double x = 0.0;
    double y = 0.0;
    double dy = 0.0;  // height above y = -1
};

struct ShrinkerStudy {
    double x0 = 0.0;
    double u0 = 0.0;
    double epsilon = 0.0;
    std::vector<Peak> peaks;
    std::vector<Peak> map_peaks;
    double fitted_ratio = 0.0;
    double map_fitted_ratio = 0.0;
    double leading_ratio = 0.0;  // 1 - u0/3
    double rel_error = 0.0;      // fitted vs leading
    double estimated_steps = 0.0;
    std::uint64_t steps = 0;
};

/// Peak sequence predicted by iterating small_cycle_return from (x0, -1, u0).
inline std::vector<Peak> predicted_peaks(double x0, double u0, double epsilon, int n) {
    std::vector<Peak> out;
    double x = x0, u = u0;
    for (int k = 1; k <= n; ++k) {
        const SmallCycleResult c = small_cycle_return(x, u, epsilon);
        Peak pk;
        pk.k = k;
        pk.x = c.events.front().apex ? c.events.front().apex->x : x;
        pk.dy = c.peak;
        pk.y = -1.0 + pk.dy;
        out.push_back(pk);
        x = c.next.x;
        u = c.next.u;
    }
    return out;
}

inline double fitted_ratio(const std::vector<Peak>& peaks) {
    std::vector<double> ks, ls;
    for (const auto& p : peaks) {
        ks.push_back(p.k);
        ls.push_back(std::log(p.dy));
    }
    return std::exp(detail::fit_slope(ks, ls));
}

/// Shrinking small cycles from (x0, -1, u0). A preflight estimate of the Oracle
/// cost throws Infeasible, naming the reachable x range, if it exceeds `max_steps`.
inline ShrinkerStudy shrinker_study(double x0, double u0, double epsilon, int n_peaks, double max_steps,
                                    const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    require(n_peaks >= 2, ErrorKind::InvalidArgument, "need at least two peaks for a ratio");
    ShrinkerStudy st;
    st.x0 = x0;
    st.u0 = u0;
    st.epsilon = epsilon;
    st.leading_ratio = 1.0 - u0 / 3.0;
    st.map_peaks = predicted_peaks(x0, u0, epsilon, n_peaks);
    st.map_fitted_ratio = fitted_ratio(st.map_peaks);
    const double x_end = st.map_peaks.back().x;
    st.estimated_steps = oracle_step_estimate(x0, x_end, epsilon);
    if (max_steps > 0 && st.estimated_steps > max_steps) {
        std::ostringstream os;
        os.precision(8);
        os << "oracle run needs about " << st.estimated_steps << " steps to reach x = " << x_end
           << "; budget " << max_steps << " covers the reachable x range [" << x0 << ", "
           << oracle_reach(x0, max_steps, epsilon) << "]";
        throw Error(ErrorKind::Infeasible, os.str());
    }

    SystemParams p;
    p.epsilon = epsilon;
    IntegratorConfig c = cfg;
    c.record_samples = false;
    const std::vector<EventSpec> ev{EventSpec::u_zero(Direction::Down, true), EventSpec::layer_exit(true)};
    PhaseState s = PhaseState::layer_u(x0, -1.0, u0);
    for (int k = 1; k <= n_peaks; ++k) {
        // u = 0 at a peak; the amplitude comes back from the height, dy = eps x u^2 / 4.
        const double amp = k == 1 ? u0 : std::sqrt(4.0 * std::max(1.0 + s.y, 0.0) / (epsilon * s.x));
        const double horizon = 3.0 * std::max(s.x * amp, 1.0) + 10.0;
        const Trajectory tr = integrate(p, s, horizon, ev, c);
        st.steps += tr.stats.accepted;
        require(tr.halting_event.has_value(), ErrorKind::NonTermination, "no peak within the search horizon");
        const EventRecord& e = tr.events[*tr.halting_event];
        require(e.spec == 0, ErrorKind::NoLayerEntry, "orbit left the layer before the next peak");
        s = e.state;
        st.peaks.push_back({k, s.x, s.y, 1.0 + s.y});
    }
    st.fitted_ratio = fitted_ratio(st.peaks);
    st.rel_error = detail::rel_err(st.fitted_ratio, st.leading_ratio);
    return st;
}

// ---------------------------------------------------------------------------
// Trapping boundary

struct EntryRun {
    double y0 = 0.0;
    Verdict verdict = Verdict::Trapped;
    double exit_x = 0.0;
    double exit_y = 0.0;
    double exit_u = 0.0;
    std::uint64_t steps = 0;
};

/// Oracle fate of the orbit entering at (x0, y0, u = +1): leaving through
/// u = -1 is an escape, reaching y = -1 first starts dissipating cycles.
inline EntryRun entry_outcome(double x0, double y0, double epsilon, double a = 0.0, double t_end = 400.0,
                              const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    SystemParams p;
    p.epsilon = epsilon;
    p.a = a;
    IntegratorConfig c = cfg;
    c.record_samples = false;
    const std::vector<EventSpec> ev{EventSpec::layer_exit(true), EventSpec::y_level(-1.0, Direction::Down, true)};
    const Trajectory tr = integrate(p, PhaseState::layer_u(x0, y0, 1.0), t_end, ev, c);
    require(tr.halting_event.has_value(), ErrorKind::NonTermination,
            "orbit neither escaped nor reached y = -1 within the horizon");
    const EventRecord& e = tr.events[*tr.halting_event];
    EntryRun r;
    r.y0 = y0;
    r.verdict = e.spec == 0 ? Verdict::Escapes : Verdict::Trapped;
    r.exit_x = e.state.x;
    r.exit_y = e.state.y;
    r.exit_u = e.state.w;
    r.steps = tr.stats.accepted;
    return r;
}

struct BoundaryStudy {
    double x0 = 0.0;
    double epsilon = 0.0;
    std::vector<EntryRun> runs;
    double trapped_y = 0.0;  // largest y0 seen trapped
    double escaped_y = 0.0;  // smallest y0 seen escaping
    double threshold = 0.0;
    double window_lo = 0.0;  // 1/3 -+ 3/(eps x0)
    double window_hi = 0.0;
    std::uint64_t steps = 0;
};

/// Bisection on y0 between a trapped and an escaping entry height, to width `tol`.
inline BoundaryStudy trap_boundary(double x0, double epsilon, double y_trapped, double y_escaped, double tol,
                                   double a = 0.0, const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    BoundaryStudy st;
    st.x0 = x0;
    st.epsilon = epsilon;
    st.window_lo = 1.0 / 3.0 - 3.0 / (epsilon * x0);
    st.window_hi = 1.0 / 3.0 + 3.0 / (epsilon * x0);
    auto run = [&](double y0) {
        EntryRun r = entry_outcome(x0, y0, epsilon, a, 400.0, cfg);
        st.steps += r.steps;
        st.runs.push_back(r);
        return r.verdict;
    };
    require(run(y_trapped) == Verdict::Trapped, ErrorKind::InvalidArgument, "lower bracket does not trap");
    require(run(y_escaped) == Verdict::Escapes, ErrorKind::InvalidArgument, "upper bracket does not escape");
    double lo = y_trapped, hi = y_escaped;
    while (std::abs(hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        (run(mid) == Verdict::Trapped ? lo : hi) = mid;
    }
    st.trapped_y = lo;
    st.escaped_y = hi;
    st.threshold = 0.5 * (lo + hi);
    return st;
}

// ---------------------------------------------------------------------------
// Large cycles

struct CycleRow {
    int k = 0;
    double x = 0.0;
    double u = 0.0;
    double du_oracle = 0.0;     // u_{k-1} - u_k
    double du_map = 0.0;        // one return from the oracle state at k-1
    double rel_err = 0.0;
    double x_iterated = 0.0;    // large_cycle_return iterated from the first section
    double u_iterated = 0.0;
};

struct LargeCycleStudy {
    double x_entry = 0.0;
    double epsilon = 0.0;
    std::vector<CycleRow> rows;  // rows[0] is the first section, no decrement
    double max_abs_rel_err = 0.0;
    double mean_rel_err = 0.0;
    std::uint64_t steps = 0;
};

/// Sections at upward crossings of y = -1 for an orbit entering the layer at
/// (x_entry, y_entry, u = +1) and trapped in large cycles.
inline LargeCycleStudy large_cycle_study(double x_entry, double y_entry, double epsilon, int cycles,
                                         const IntegratorConfig& cfg = IntegratorConfig::oracle()) {
    require(cycles >= 1, ErrorKind::InvalidArgument, "need at least one cycle");
    LargeCycleStudy st;
    st.x_entry = x_entry;
    st.epsilon = epsilon;
    SystemParams p;
    p.epsilon = epsilon;
    IntegratorConfig c = cfg;
    c.record_samples = false;
    const std::vector<EventSpec> ev{EventSpec::y_level(-1.0, Direction::Up, true), EventSpec::layer_exit(true)};
    PhaseState s = PhaseState::layer_u(x_entry, y_entry, 1.0);
    std::vector<PhaseState> sections;
    while (static_cast<int>(sections.size()) < cycles + 1) {
        const double u_now = std::max(std::abs(s.w), 0.05);
        const Trajectory tr = integrate(p, s, 8.0 / (epsilon * u_now) + 20.0, ev, c);
        st.steps += tr.stats.accepted;
        require(tr.halting_event.has_value(), ErrorKind::NonTermination, "no section crossing within the horizon");
        const EventRecord& e = tr.events[*tr.halting_event];
        require(e.spec == 0, ErrorKind::NoLayerEntry, "orbit escaped the layer instead of cycling");
        s = e.state;
        sections.push_back(s);
    }
    double xi = sections[0].x, ui = sections[0].w;
    double sum = 0;
    for (int k = 0; k <= cycles; ++k) {
        CycleRow r;
        r.k = k;
        r.x = sections[k].x;
        r.u = sections[k].w;
        if (k > 0) {
            const CycleResult one = large_cycle_return(sections[k - 1].x, sections[k - 1].w, epsilon);
            r.du_oracle = sections[k - 1].w - sections[k].w;
            r.du_map = sections[k - 1].w - one.closed_form.u;
            r.rel_err = detail::rel_err(r.du_oracle, r.du_map);
            st.max_abs_rel_err = std::max(st.max_abs_rel_err, std::abs(r.rel_err));
            sum += r.rel_err;
            const CycleResult it = large_cycle_return(xi, ui, epsilon);
            xi = it.end.x;
            ui = it.end.u;
        }
        r.x_iterated = xi;
        r.u_iterated = ui;
        st.rows.push_back(r);
    }
    st.mean_rel_err = sum / cycles;
    return st;
}

// ---------------------------------------------------------------------------
// Crossing periodic orbits (epsilon = 0)

struct CrossingOrbitStudy {
    PeriodicOrbit orbit;
    PeriodicOrbit twin;          // fixed point seeded from the orbit shifted by 4 in x
    double twin_distance = 0.0;  // |twin - orbit| at the section: distinct orbits
    double twin_trace_diff = 0.0;
    std::vector<std::array<double, 3>> trace;  // (x, y, z) over one period
};

/// State of the crossing flow from (x0, s) after time t, sampled every `dt`.
inline std::vector<std::array<double, 3>> crossing_trace(const SystemParams& p, double x0, PlanarState s, double t,
                                                         double dt) {
    std::vector<std::array<double, 3>> out;
    out.push_back({x0, s.y, s.z});
    const int n = static_cast<int>(std::round(t / dt));
    for (int i = 1; i <= n; ++i) {
        const PlanarState q = crossing_flow(p, x0, s.y, s.z, i * dt);
        out.push_back({x0 + i * dt, q.y, q.z});
    }
    return out;
}

/// Converge forward from `seed` at x0 for `transient` periods, then refine the
/// period-8 fixed point and its twin shifted by 4.
inline CrossingOrbitStudy crossing_orbit_study(const SystemParams& p, double x0, PlanarState seed, int transient = 20) {
    CrossingOrbitStudy st;
    PlanarState s = seed;
    for (int k = 0; k < transient; ++k) s = crossing_flow(p, x0, s.y, s.z, 8.0);
    st.orbit = find_periodic_orbit(p, x0, s);
    const PlanarState shifted = crossing_flow(p, x0, st.orbit.state.y, st.orbit.state.z, 4.0);
    st.twin = find_periodic_orbit(p, x0, shifted);
    st.twin_distance = std::hypot(st.twin.state.y - st.orbit.state.y, st.twin.state.z - st.orbit.state.z);
    // The twin's trace from x0 should repeat the orbit's trace from x0 + 4.
    const double dt = 0.05;
    st.trace = crossing_trace(p, x0, st.orbit.state, 12.0, dt);
    const auto twin_trace = crossing_trace(p, x0, st.twin.state, 8.0, dt);
    const std::size_t offset = static_cast<std::size_t>(std::round(4.0 / dt));
    for (std::size_t i = 0; i < twin_trace.size(); ++i) {
        const auto& a = twin_trace[i];
        const auto& b = st.trace[i + offset];
        st.twin_trace_diff = std::max({st.twin_trace_diff, std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
    }
    st.trace.resize(static_cast<std::size_t>(std::round(8.0 / dt)) + 1);
    return st;
}

struct TorusStudy {
    std::vector<PlanarState> iterates;
    double drift = 0.0;
    double extent = 0.0;
};

namespace detail {

/// Polar samples (theta, r) of curve points about their centroid, sorted by angle.
inline std::vector<std::array<double, 2>> polar_samples(const std::vector<PlanarState>& pts) {
    double cy = 0, cz = 0;
    for (const auto& q : pts) {
        cy += q.y;
        cz += q.z;
    }
    cy /= static_cast<double>(pts.size());
    cz /= static_cast<double>(pts.size());
    std::vector<std::array<double, 2>> out;
    for (const auto& q : pts) out.push_back({std::atan2(q.z - cz, q.y - cy), std::hypot(q.y - cy, q.z - cz)});
    std::sort(out.begin(), out.end());
    return out;
}

/// Cubic Lagrange interpolation through four (theta, r) nodes.
inline double lagrange4(const std::array<std::array<double, 2>, 4>& n, double th) {
    double r = 0;
    for (int i = 0; i < 4; ++i) {
        double w = 1;
        for (int j = 0; j < 4; ++j)
            if (j != i) w *= (th - n[j][0]) / (n[i][0] - n[j][0]);
        r += w * n[i][1];
    }
    return r;
}

}  // namespace detail

/// Largest leave-one-out distance of a point from the curve r(theta)
/// interpolated through its two neighbours on either side, in polar
/// coordinates about the centroid. Points spread over an annulus instead of a
/// curve give drift of the order of the annulus width.
inline double curve_drift(const std::vector<PlanarState>& pts) {
    require(pts.size() >= 5, ErrorKind::InvalidArgument, "need at least five points");
    const auto pol = detail::polar_samples(pts);
    const int n = static_cast<int>(pol.size());
    auto node = [&](int i) {
        const int k = ((i % n) + n) % n;
        const double wrap = 2.0 * pi * std::floor(static_cast<double>(i) / n);
        return std::array<double, 2>{pol[k][0] + wrap, pol[k][1]};
    };
    double drift = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::array<std::array<double, 2>, 4> nb{node(i - 2), node(i - 1), node(i + 1), node(i + 2)};
        drift = std::max(drift, std::abs(pol[i][1] - detail::lagrange4(nb, pol[i][0])));
    }
    return drift;
}

/// Stroboscopic (period 8) iterates from `seed` and their curve_drift.
inline TorusStudy torus_study(const SystemParams& p, double x0, PlanarState seed, int returns = 50) {
    require(returns >= 5, ErrorKind::InvalidArgument, "need at least five returns");
    TorusStudy st;
    PlanarState s = seed;
    for (int k = 0; k < returns; ++k) {
        s = crossing_flow(p, x0, s.y, s.z, 8.0);
        st.iterates.push_back(s);
    }
    st.drift = curve_drift(st.iterates);
    double ymin = 1e300, ymax = -1e300;
    for (const auto& q : st.iterates) {
        ymin = std::min(ymin, q.y);
        ymax = std::max(ymax, q.y);
    }
    st.extent = ymax - ymin;
    return st;
}

// ---------------------------------------------------------------------------
// Invariance of the slow-manifold expansion

struct InvarianceRow {
    double x = 0.0;
    double defect = 0.0;
    double residual = 0.0;
};

struct InvarianceStudy {
    double v = 0.0;
    double epsilon = 0.0;
    int order = 1;
    std::vector<InvarianceRow> rows;
    double defect_slope = 0.0;    // d log|defect| / d log x
    double residual_slope = 0.0;  // d log|residual| / d log x
};

inline InvarianceStudy invariance_study(double epsilon, double v, const std::vector<double>& xs, int order = 1,
                                        double a = 0.0) {
    InvarianceStudy st;
    st.v = v;
    st.epsilon = epsilon;
    st.order = order;
    SystemParams p;
    p.epsilon = epsilon;
    p.a = a;
    ManifoldOptions o;
    o.order = order;
    std::vector<double> lx, ld, lr;
    for (double x : xs) {
        InvarianceRow r;
        r.x = x;
        r.defect = invariance_defect(p, x, v, o);
        r.residual = invariance_residual(p, x, v, o);
        st.rows.push_back(r);
        lx.push_back(std::log(x));
        ld.push_back(std::log(std::abs(r.defect)));
        lr.push_back(std::log(std::abs(r.residual)));
    }
    st.defect_slope = detail::fit_slope(lx, ld);
    st.residual_slope = detail::fit_slope(lx, lr);
    return st;
}

// ---------------------------------------------------------------------------
// Sliding regions

/// Sliding solutions at (x, y) found by scanning lambda on `n` cells for sign
/// changes of zdot = -y - f(x, lambda) and bisecting each one. Double roots are
/// not seen; callers keep |y| away from 1.
inline std::vector<SlidingBranch> brute_force_sliding(const SystemParams& p, double x, double y, int n = 20000) {
    auto g = [&](double lam) { return -y - forcing(p, x, lam); };
    std::vector<SlidingBranch> out;
    double l0 = -1.0, g0 = g(l0);
    for (int i = 1; i <= n; ++i) {
        const double l1 = -1.0 + 2.0 * i / n, g1 = g(l1);
        if (g0 == 0.0 || (g0 < 0.0) != (g1 < 0.0)) {
            double a = l0, b = l1, ga = g0;
            for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
                const double m = 0.5 * (a + b), gm = g(m);
                if ((gm < 0.0) == (ga < 0.0) && gm != 0.0) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            const double lam = 0.5 * (a + b);
            const double slope = (g1 - g0) / (l1 - l0);
            out.push_back({lam, slope, slope < 0.0 ? Stability::Attracting : Stability::Repelling});
        }
        l0 = l1;
        g0 = g1;
    }
    return out;
}

/// True when classify_sliding and the scan agree on the number, position (to `tol`)
/// and stability of the sliding solutions.
inline bool sliding_agrees(const SystemParams& p, double x, double y, double tol = 1e-6) {
    const auto a = classify_sliding(p, x, y).branches;
    const auto b = brute_force_sliding(p, x, y);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].lambda - b[i].lambda) > tol || a[i].stability != b[i].stability) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Canard gallery (frozen-x planar system)

struct HalfOrbit {
    double y = 0.0;      // where the half orbit meets u = 0 again
    double t = 0.0;
    double u_max = 0.0;
};

/// From (ys, 0) follow the planar flow (time direction `dir`) to its next u = 0 crossing.
inline HalfOrbit canard_half_orbit(const AutonomousCanard& c, double ys, int dir, double t_max = 500.0) {
    auto f = [&c, dir](double, const ode::Vec<2>& s, ode::Vec<2>& d) {
        const auto r = c.field(s[0], s[1]);
        d[0] = dir * r[0];
        d[1] = dir * r[1];
    };
    const std::vector<ode::Event<2>> ev{{[](double, const ode::Vec<2>& s) { return s[1]; }, Direction::Any, true}};
    ode::Settings st;
    st.rel_tol = 1e-13;
    st.abs_tol = 1e-15;
    const auto r = ode::solve<2>(f, ode::Vec<2>{ys, 0.0}, 0.0, t_max, ev, st);
    require(r.halted, ErrorKind::NonTermination, "half orbit did not return to u = 0");
    HalfOrbit h;
    h.y = r.y.back()[0];
    h.t = r.t.back();
    for (const auto& y : r.y) h.u_max = std::max(h.u_max, std::abs(y[1]));
    return h;
}

/// Closure defect at the section point (ys, 0): forward and backward half orbits
/// meet u = 0 at the same height exactly when the orbit through ys is closed.
/// Both halves run along attracting branches in their own time direction, which
/// keeps the computation well conditioned where the full return map is not.
inline double canard_closure_defect(const AutonomousCanard& c, double ys) {
    return canard_half_orbit(c, ys, +1).y - canard_half_orbit(c, ys, -1).y;
}

struct CanardCycle {
    double y_section = 0.0;  // upward u = 0 crossing
    double u_max = 0.0;
    double period = 0.0;
    Stability stability = Stability::Marginal;
};

struct CanardGallery {
    double x0 = 0.0;
    double epsilon = 0.0;
    bool symmetric = false;
    bool equilibrium_stable = false;
    double closure_max = 0.0;  // max |closure defect| over the section grid
    std::vector<CanardCycle> cycles;      // every converged cycle, sorted by amplitude
    std::vector<CanardCycle> in_layer;    // those with u_max <= 1
    bool alternating = false;
};

namespace detail {

/// Run from (ys, 0) in time direction `dir` and report the cycle it settles on, if any.
inline std::optional<CanardCycle> settle(const AutonomousCanard& c, double ys, int dir, double t_run) {
    auto f = [&c, dir](double, const ode::Vec<2>& s, ode::Vec<2>& d) {
        const auto r = c.field(s[0], s[1]);
        d[0] = dir * r[0];
        d[1] = dir * r[1];
    };
    // Upward crossings in forward time are downward ones when time runs backward.
    const std::vector<ode::Event<2>> ev{
        {[](double, const ode::Vec<2>& s) { return s[1]; }, dir > 0 ? Direction::Up : Direction::Down, false}};
    ode::Settings st;
    st.rel_tol = 1e-11;
    st.abs_tol = 1e-13;
    const auto r = ode::solve<2>(f, ode::Vec<2>{ys, 0.0}, 0.0, t_run, ev, st);
    const auto& h = r.hits;
    if (h.size() < 4) return std::nullopt;
    const std::size_t n = h.size();
    const double y1 = h[n - 1].y[0], y2 = h[n - 2].y[0], y3 = h[n - 3].y[0];
    const double scale = 1e-8 * std::max(1.0, std::abs(y1));
    if (std::abs(y1 - y2) > scale || std::abs(y2 - y3) > scale) return std::nullopt;
    CanardCycle cyc;
    cyc.y_section = y1;
    cyc.period = h[n - 1].t - h[n - 2].t;
    for (std::size_t i = 0; i < r.t.size(); ++i)
        if (r.t[i] >= h[n - 2].t) cyc.u_max = std::max(cyc.u_max, std::abs(r.y[i][1]));
    cyc.stability = dir > 0 ? Stability::Attracting : Stability::Repelling;
    return cyc;
}

}  // namespace detail

/// Limit cycles of the frozen-x system: attracting ones by running forward from a
/// grid of section points, repelling ones by running backward. Cycles are told
/// apart by their amplitude max |u|.
inline CanardGallery canard_gallery(double x0, double epsilon, int seeds = 40, double t_run = 400.0,
                                    int closure_points = 120) {
    CanardGallery g;
    g.x0 = x0;
    g.epsilon = epsilon;
    const AutonomousCanard c = autonomous_canard_system(x0, epsilon, 1e-12);
    g.symmetric = c.symmetric;
    g.equilibrium_stable = c.stable;
    // Section points below the equilibrium, where u = 0 is crossed upward.
    const double top = c.y_eq - 1e-3, bottom = c.y_eq - 2.6;
    for (int i = 0; i <= closure_points; ++i) {
        const double ys = top - (top - bottom) * i / closure_points;
        g.closure_max = std::max(g.closure_max, std::abs(canard_closure_defect(c, ys)));
    }
    if (!g.symmetric) {
        for (int dir : {+1, -1}) {
            for (int i = 0; i < seeds; ++i) {
                const double ys = top - (top - bottom) * i / (seeds - 1);
                const auto cyc = detail::settle(c, ys, dir, t_run);
                if (!cyc) continue;
                const bool seen = std::any_of(g.cycles.begin(), g.cycles.end(), [&](const CanardCycle& o) {
                    return o.stability == cyc->stability && std::abs(o.u_max - cyc->u_max) < 1e-4;
                });
                if (!seen) g.cycles.push_back(*cyc);
            }
        }
    }
    std::sort(g.cycles.begin(), g.cycles.end(),
              [](const CanardCycle& a, const CanardCycle& b) { return a.u_max < b.u_max; });
    for (const auto& cyc : g.cycles)
        if (cyc.u_max <= 1.0) g.in_layer.push_back(cyc);
    g.alternating = !g.in_layer.empty();
    for (std::size_t i = 1; i < g.in_layer.size(); ++i)
        if (g.in_layer[i].stability == g.in_layer[i - 1].stability) g.alternating = false;
    return g;
}

}  // namespace fso::validation
