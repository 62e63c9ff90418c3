#pragma once

// Event-driven integration of the oscillator in any chart, and the
// outer/layer stitching driver.

#include "fso/model.hpp"
#include "fso/ode.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace fso {

enum class EventKind {
    LayerEntry,    // |z| = epsilon, moving inward
    LayerExit,     // |z| = epsilon, moving outward
    UZero,         // z = 0
    YLevel,        // y = level
    TurningPoint,  // d(udot)/du = 0 on the current x, u
    XLevel,        // x = level
    Custom,
};

struct EventSpec {
    EventKind kind = EventKind::UZero;
    Direction direction = Direction::Any;
    double level = 0.0;
    bool halting = false;
    std::function<double(double, const PhaseState&)> custom;  // only for Custom

    static EventSpec layer_entry(bool halting = false) { return {EventKind::LayerEntry, Direction::Any, 0, halting, {}}; }
    static EventSpec layer_exit(bool halting = false) { return {EventKind::LayerExit, Direction::Any, 0, halting, {}}; }
    static EventSpec u_zero(Direction d = Direction::Any, bool halting = false) {
        return {EventKind::UZero, d, 0, halting, {}};
    }
    static EventSpec y_level(double c, Direction d = Direction::Any, bool halting = false) {
        return {EventKind::YLevel, d, c, halting, {}};
    }
    static EventSpec x_level(double c, bool halting = false) { return {EventKind::XLevel, Direction::Up, c, halting, {}}; }
    static EventSpec turning_point(Direction d = Direction::Any, bool halting = false) {
        return {EventKind::TurningPoint, d, 0, halting, {}};
    }
    static EventSpec make_custom(std::function<double(double, const PhaseState&)> g, Direction d = Direction::Any,
                                 bool halting = false) {
        return {EventKind::Custom, d, 0, halting, std::move(g)};
    }
};

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::LayerEntry: return "layer_entry";
        case EventKind::LayerExit: return "layer_exit";
        case EventKind::UZero: return "u_zero";
        case EventKind::YLevel: return "y_level";
        case EventKind::TurningPoint: return "turning_point";
        case EventKind::XLevel: return "x_level";
        case EventKind::Custom: return "custom";
    }
    return "?";
}

struct Sample {
    double t = 0.0;
    PhaseState state;
};

struct EventRecord {
    double t = 0.0;
    std::size_t spec = 0;  // index into the event list passed in
    EventKind kind = EventKind::Custom;
    PhaseState state;
};

enum class Mode { Fast, Oracle };

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = std::numeric_limits<double>::infinity();
    double event_tol = 1e-12;
    Mode mode = Mode::Fast;
    std::uint64_t max_steps = 0;   // 0 = unlimited
    double sample_interval = 0.0;  // 0 = every accepted step
    bool record_samples = true;

    static IntegratorConfig oracle() {
        IntegratorConfig c;
        c.mode = Mode::Oracle;
        c.rel_tol = 1e-12;
        c.abs_tol = 1e-13;
        return c;
    }
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<EventRecord> events;
    SystemParams params;
    bool halted = false;
    std::optional<std::size_t> halting_event;  // index into `events`
    ode::Stats stats;

    [[nodiscard]] const Sample& back() const { return samples.back(); }
    [[nodiscard]] double final_time() const { return samples.back().t; }
};

/// Step budget exhausted, step underflow or a chart violation. Carries the
/// last accepted state so callers can report how far the run got.
class IntegrationError : public Error {
public:
    IntegrationError(ErrorKind kind, const std::string& what, double t, PhaseState last, double x_start)
        : Error(kind, what), t_(t), last_(last), x_start_(x_start) {}

    [[nodiscard]] double t() const noexcept { return t_; }
    [[nodiscard]] const PhaseState& last_state() const noexcept { return last_; }
    [[nodiscard]] double x_start() const noexcept { return x_start_; }
    [[nodiscard]] double x_reached() const noexcept { return last_.x; }

private:
    double t_;
    PhaseState last_;
    double x_start_;
};

namespace detail {

inline PhaseState unpack(const ode::Vec<3>& v, Chart c) { return {v[0], v[1], v[2], c}; }

inline double layer_parameter(const SystemParams& p, const PhaseState& s) {
    switch (s.chart) {
        case Chart::LayerU: return s.w;
        case Chart::LayerV: return s.w / s.x;
        case Chart::Outer: return p.epsilon > 0.0 ? lambda_of_z(s.w, p.epsilon) : (s.w >= 0.0 ? 1.0 : -1.0);
    }
    return 0.0;
}

inline double event_value(const SystemParams& p, const EventSpec& e, double t, const PhaseState& s) {
    switch (e.kind) {
        case EventKind::LayerEntry:
        case EventKind::LayerExit: return std::abs(velocity(s, p.epsilon)) - p.epsilon;
        case EventKind::UZero: return s.w;
        case EventKind::YLevel: return s.y - e.level;
        case EventKind::XLevel: return s.x - e.level;
        case EventKind::TurningPoint: {
            const double lam = layer_parameter(p, s);
            if (p.rule == Rule::Nonlinear) {
                const double om = 0.5 * (p.omega_plus + p.omega_minus) + 0.5 * lam * (p.omega_plus - p.omega_minus);
                return std::cos(pi * om * s.x);
            }
            return std::sin(pi * p.omega_plus * s.x) - std::sin(pi * p.omega_minus * s.x);
        }
        case EventKind::Custom: return e.custom ? e.custom(t, s) : 1.0;
    }
    return 1.0;
}

inline Direction effective_direction(const EventSpec& e) {
    if (e.kind == EventKind::LayerEntry) return Direction::Down;
    if (e.kind == EventKind::LayerExit) return Direction::Up;
    return e.direction;
}

}  // namespace detail

/// Largest step Oracle mode allows at `s`: epsilon / (10 x) inside the layer, unbounded outside.
inline double oracle_step_cap(const SystemParams& p, const PhaseState& s) {
    const bool in_layer = s.chart != Chart::Outer || (p.epsilon > 0.0 && std::abs(s.w) <= p.epsilon);
    if (!in_layer || p.epsilon <= 0.0) return std::numeric_limits<double>::infinity();
    return p.epsilon / (10.0 * std::max(std::abs(s.x), 1.0));
}

/// Integrate from `initial` (at t = 0) to `t_end` or the first halting event.
inline Trajectory integrate(const SystemParams& params, const PhaseState& initial, double t_end,
                            std::span<const EventSpec> events, const IntegratorConfig& config = {}) {
    params.validate();
    require(t_end > 0.0, ErrorKind::InvalidArgument, "t_end must be > 0");
    const Chart chart = initial.chart;
    if (chart != Chart::Outer) {
        require(params.epsilon > 0.0, ErrorKind::ChartError, "layer chart requires epsilon > 0");
        const double u = chart == Chart::LayerU ? initial.w : initial.w / initial.x;
        require(std::abs(u) <= 1.0 + chart_tolerance, ErrorKind::ChartError,
                "initial state lies outside the switching layer |u| <= 1");
    }
    if (chart == Chart::LayerV) require(initial.x != 0.0, ErrorKind::ChartError, "v chart is singular at x = 0");

    ode::Settings s;
    s.rel_tol = config.rel_tol;
    s.abs_tol = config.abs_tol;
    s.max_step = config.max_step;
    s.event_tol = config.event_tol;
    s.max_steps = config.max_steps;
    s.sample_interval = config.sample_interval;
    s.record_samples = config.record_samples;
    const bool oracle = config.mode == Mode::Oracle;
    if (oracle) {
        s.rel_tol = std::min(s.rel_tol, 1e-12);
        s.abs_tol = std::min(s.abs_tol, 1e-12);
    }

    std::vector<ode::Event<3>> evs;
    evs.reserve(events.size());
    for (const auto& e : events) {
        evs.push_back({[&params, &e, chart](double t, const ode::Vec<3>& v) {
                           return detail::event_value(params, e, t, detail::unpack(v, chart));
                       },
                       detail::effective_direction(e), e.halting});
    }

    auto rhs = [&params, chart](double, const ode::Vec<3>& v, ode::Vec<3>& dv) {
        const StateRate r = vector_field(params, detail::unpack(v, chart));
        dv = {r.dx, r.dy, r.dw};
    };
    auto cap = [&params, chart, oracle](double, const ode::Vec<3>& v) {
        return oracle ? oracle_step_cap(params, detail::unpack(v, chart)) : std::numeric_limits<double>::infinity();
    };
    auto check = [chart](double t, const ode::Vec<3>& v) {
        if (chart == Chart::Outer) return;
        const double u = chart == Chart::LayerU ? v[2] : v[2] / v[0];
        if (std::abs(u) > 1.0 + chart_tolerance) {
            throw ode::Interrupted<3>{ErrorKind::MissedEvent, t, v};
        }
    };

    ode::Result<3> r;
    try {
        r = ode::solve<3>(rhs, ode::Vec<3>{initial.x, initial.y, initial.w}, 0.0, t_end, evs, s, cap, check);
    } catch (const ode::Interrupted<3>& e) {
        std::ostringstream os;
        os.precision(10);
        switch (e.kind) {
            case ErrorKind::Infeasible:
                os << "step budget of " << config.max_steps << " exhausted; reachable x range [" << initial.x << ", "
                   << e.y[0] << "]";
                break;
            case ErrorKind::StepUnderflow: os << "step size underflow at x = " << e.y[0]; break;
            case ErrorKind::MissedEvent:
                os << "missed event: state left the layer chart at x = " << e.y[0] << " without a halting exit";
                break;
            default: os << "integration interrupted at x = " << e.y[0]; break;
        }
        throw IntegrationError(e.kind, os.str(), e.t, detail::unpack(e.y, chart), initial.x);
    }

    Trajectory tr;
    tr.params = params;
    tr.stats = r.stats;
    tr.samples.reserve(r.t.size());
    for (std::size_t i = 0; i < r.t.size(); ++i) tr.samples.push_back({r.t[i], detail::unpack(r.y[i], chart)});
    tr.events.reserve(r.hits.size());
    for (const auto& h : r.hits) tr.events.push_back({h.t, h.index, events[h.index].kind, detail::unpack(h.y, chart)});
    tr.halted = r.halted;
    if (r.halted) tr.halting_event = r.halting_index;
    return tr;
}

inline Trajectory integrate(const SystemParams& params, const PhaseState& initial, double t_end,
                            const IntegratorConfig& config = {}) {
    return integrate(params, initial, t_end, std::span<const EventSpec>{}, config);
}

/// Integrate from an Outer state, switching to the u chart whenever |z| reaches
/// epsilon from outside and back when |u| reaches 1 from inside. Chart changes
/// are recorded as LayerEntry / LayerExit events with spec index = events.size().
/// Samples are always reported in the Outer chart.
inline Trajectory chart_switch_integrate(const SystemParams& params, const PhaseState& initial, double t_end,
                                         std::span<const EventSpec> events, const IntegratorConfig& config = {}) {
    params.validate();
    require(params.epsilon > 0.0, ErrorKind::InvalidArgument, "chart switching requires epsilon > 0");
    require(initial.chart == Chart::Outer, ErrorKind::InvalidArgument, "chart_switch_integrate starts in the Outer chart");
    require(t_end > 0.0, ErrorKind::InvalidArgument, "t_end must be > 0");

    const double eps = params.epsilon;
    const std::size_t internal = events.size();
    std::vector<EventSpec> evs(events.begin(), events.end());
    evs.push_back({});

    Trajectory out;
    out.params = params;
    PhaseState s = initial;
    if (std::abs(s.w) < eps) s = to_chart(s, Chart::LayerU, eps);
    double t0 = 0.0;
    std::uint64_t budget = config.max_steps;

    auto push_sample = [&](double t, const PhaseState& st) {
        const PhaseState o = to_chart(st, Chart::Outer, eps);
        if (!out.samples.empty() && t <= out.samples.back().t) return;
        out.samples.push_back({t, o});
    };

    while (t0 < t_end) {
        const bool in_layer = s.chart == Chart::LayerU;
        evs.back() = in_layer ? EventSpec::layer_exit(true) : EventSpec::layer_entry(true);
        IntegratorConfig c = config;
        if (config.max_steps != 0) {
            if (budget == 0) {
                throw IntegrationError(ErrorKind::Infeasible,
                                       "step budget exhausted; reachable x range [" + std::to_string(initial.x) +
                                           ", " + std::to_string(s.x) + "]",
                                       t0, s, initial.x);
            }
            c.max_steps = budget;
        }
        Trajectory seg = integrate(params, s, t_end - t0, evs, c);
        if (config.max_steps != 0) budget -= std::min<std::uint64_t>(budget, seg.stats.accepted);
        out.stats.accepted += seg.stats.accepted;
        out.stats.rejected += seg.stats.rejected;
        out.stats.rhs_evals += seg.stats.rhs_evals;

        for (const auto& smp : seg.samples) push_sample(t0 + smp.t, smp.state);
        bool switched = false;
        for (std::size_t i = 0; i < seg.events.size(); ++i) {
            auto ev = seg.events[i];
            ev.t += t0;
            ev.state = to_chart(ev.state, Chart::Outer, eps);
            if (ev.spec == internal) ev.kind = in_layer ? EventKind::LayerExit : EventKind::LayerEntry;
            out.events.push_back(ev);
            if (seg.halting_event && *seg.halting_event == i) {
                if (ev.spec == internal) {
                    switched = true;
                } else {
                    out.halted = true;
                    out.halting_event = out.events.size() - 1;
                }
            }
        }
        if (out.halted) return out;
        const Sample& last = seg.back();
        t0 += last.t;
        if (!switched) break;
        if (in_layer) {
            s = PhaseState::outer(last.state.x, last.state.y, eps * (last.state.w >= 0.0 ? 1.0 : -1.0));
        } else {
            s = PhaseState::layer_u(last.state.x, last.state.y, last.state.w >= 0.0 ? 1.0 : -1.0);
        }
    }
    if (!out.samples.empty()) out.samples.back().t = std::min(out.samples.back().t, t_end);
    return out;
}

inline Trajectory chart_switch_integrate(const SystemParams& params, const PhaseState& initial, double t_end,
                                         const IntegratorConfig& config = {}) {
    return chart_switch_integrate(params, initial, t_end, std::span<const EventSpec>{}, config);
}

}  // namespace fso
