#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fso/asymptotic_maps.hpp"
#include "fso/error.hpp"
#include "fso/exact_crossing.hpp"
#include "fso/integrator.hpp"
#include "fso/model.hpp"
#include "fso/validation.hpp"

namespace fso::experiments {

inline constexpr const char* library_version = "1.0.0";

enum class ScenarioKind { Simulate, Arcs, Staircase, Shrinkers, Boundary, CrossingOrbit, CanardGallery, SlidingRegions, CycleSweep };

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Simulate: return "simulate";
        case ScenarioKind::Arcs: return "arcs";
        case ScenarioKind::Staircase: return "staircase";
        case ScenarioKind::Shrinkers: return "shrinkers";
        case ScenarioKind::Boundary: return "boundary";
        case ScenarioKind::CrossingOrbit: return "crossing_orbit";
        case ScenarioKind::CanardGallery: return "canard_gallery";
        case ScenarioKind::SlidingRegions: return "sliding_regions";
        case ScenarioKind::CycleSweep: return "cycle_sweep";
    }
    return "?";
}

inline ScenarioKind parse_kind(std::string_view s) {
    for (auto k : {ScenarioKind::Simulate, ScenarioKind::Arcs, ScenarioKind::Staircase, ScenarioKind::Shrinkers,
                   ScenarioKind::Boundary, ScenarioKind::CrossingOrbit, ScenarioKind::CanardGallery,
                   ScenarioKind::SlidingRegions, ScenarioKind::CycleSweep})
        if (to_string(k) == s) return k;
    fail(ErrorKind::InvalidArgument, "unknown scenario kind: " + std::string(s));
}

inline bool operator==(const SystemParams& a, const SystemParams& b) {
    return a.a == b.a && a.epsilon == b.epsilon && a.omega_plus == b.omega_plus && a.omega_minus == b.omega_minus &&
           a.rule == b.rule;
}

/// One scenario run. Scenario-specific inputs live in `settings`; each scenario
/// documents the keys it reads and falls back to its defaults for missing ones.
struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::Simulate;
    SystemParams params;
    std::optional<PhaseState> initial;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool oracle = true;
    std::uint64_t max_steps = 0;
    std::map<std::string, double> settings;

    [[nodiscard]] double setting(const std::string& key, double fallback) const {
        const auto it = settings.find(key);
        return it == settings.end() ? fallback : it->second;
    }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["kind"] = std::string(to_string(c.kind));
    j["params"] = {{"a", c.params.a},
                   {"epsilon", c.params.epsilon},
                   {"omega_plus", c.params.omega_plus},
                   {"omega_minus", c.params.omega_minus},
                   {"rule", std::string(to_string(c.params.rule))}};
    if (c.initial) {
        j["initial"] = {{"x", c.initial->x},
                        {"y", c.initial->y},
                        {"w", c.initial->w},
                        {"chart", std::string(to_string(c.initial->chart))}};
    }
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["oracle"] = c.oracle;
    j["max_steps"] = c.max_steps;
    j["settings"] = c.settings;
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    try {
        ScenarioConfig c;
        c.name = j.value("name", std::string{});
        c.kind = parse_kind(j.at("kind").get<std::string>());
        if (j.contains("params")) {
            const auto& p = j["params"];
            c.params.a = p.value("a", c.params.a);
            c.params.epsilon = p.value("epsilon", c.params.epsilon);
            c.params.omega_plus = p.value("omega_plus", c.params.omega_plus);
            c.params.omega_minus = p.value("omega_minus", c.params.omega_minus);
            if (p.contains("rule")) c.params.rule = parse_rule(p["rule"].get<std::string>());
        }
        if (j.contains("initial")) {
            const auto& s = j["initial"];
            PhaseState st;
            st.x = s.at("x").get<double>();
            st.y = s.at("y").get<double>();
            st.w = s.at("w").get<double>();
            st.chart = parse_chart(s.value("chart", std::string("outer")));
            c.initial = st;
        }
        c.out_dir = j.value("out_dir", c.out_dir);
        c.seed = j.value("seed", c.seed);
        c.oracle = j.value("oracle", c.oracle);
        c.max_steps = j.value("max_steps", c.max_steps);
        if (j.contains("settings")) c.settings = j["settings"].get<std::map<std::string, double>>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("bad scenario config: ") + e.what());
    }
}

/// FNV-1a over the canonical JSON text of the config. The output directory is
/// left out: it does not change what is computed.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
    nlohmann::json j = to_json(c);
    j.erase("out_dir");
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Results

using Cell = std::variant<double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        require(row.size() == columns.size(), ErrorKind::InvalidArgument, "row width does not match table " + name);
        rows.push_back(std::move(row));
    }
};

struct Metric {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool pass() const { return value >= lo && value <= hi; }
};

struct Provenance {
    std::string config_hash;
    std::string version = library_version;
};

struct ResultRecord {
    std::string name;
    ScenarioKind kind = ScenarioKind::Simulate;
    std::vector<Table> tables;
    std::vector<Metric> metrics;
    std::map<std::string, double> info;  // unchecked diagnostics
    std::vector<std::string> notes;
    Provenance provenance;
    std::optional<ErrorKind> error;
    std::string error_message;

    [[nodiscard]] bool passed() const {
        if (error) return false;
        for (const auto& m : metrics)
            if (!m.pass()) return false;
        return true;
    }
    [[nodiscard]] const Metric* metric(std::string_view n) const {
        for (const auto& m : metrics)
            if (m.name == n) return &m;
        return nullptr;
    }
    [[nodiscard]] const Table* table(std::string_view n) const {
        for (const auto& t : tables)
            if (t.name == n) return &t;
        return nullptr;
    }
    void check(std::string n, double value, double lo, double hi) { metrics.push_back({std::move(n), value, lo, hi}); }
};

namespace detail {

inline IntegratorConfig integrator_config(const ScenarioConfig& c) {
    IntegratorConfig ic = c.oracle ? IntegratorConfig::oracle() : IntegratorConfig{};
    ic.max_steps = c.max_steps;
    return ic;
}

inline double eps_or(const ScenarioConfig& c, double fallback) {
    return c.params.epsilon > 0.0 ? c.params.epsilon : fallback;
}

inline std::string verdict_name(Verdict v) { return std::string(to_string(v)); }

// Simulate: settings t_end (10), sample_interval (0), switch_charts (1 for Outer starts).
inline void run_simulate(const ScenarioConfig& c, ResultRecord& r) {
    require(c.initial.has_value(), ErrorKind::InvalidArgument, "simulate needs an initial state");
    IntegratorConfig ic = integrator_config(c);
    ic.sample_interval = c.setting("sample_interval", 0.0);
    const double t_end = c.setting("t_end", 10.0);
    const bool switching = c.initial->chart == Chart::Outer && c.params.epsilon > 0.0 && c.setting("switch_charts", 1.0) != 0.0;
    const Trajectory tr = switching ? chart_switch_integrate(c.params, *c.initial, t_end, ic)
                                    : integrate(c.params, *c.initial, t_end, ic);
    Table traj{"trajectory", {"t", "x", "y", "w", "chart"}, {}};
    for (const auto& s : tr.samples)
        traj.add({s.t, s.state.x, s.state.y, s.state.w, std::string(to_string(s.state.chart))});
    Table ev{"events", {"t", "kind", "x", "y", "w", "chart"}, {}};
    for (const auto& e : tr.events)
        ev.add({e.t, std::string(to_string(e.kind)), e.state.x, e.state.y, e.state.w,
                std::string(to_string(e.state.chart))});
    r.tables = {traj, ev};
    r.info["accepted_steps"] = static_cast<double>(tr.stats.accepted);
    r.info["final_time"] = tr.samples.empty() ? 0.0 : tr.final_time();
}

// Arcs: x0 (1000), u0 (0.1) or v0, phi (0.05), sample_interval (0.05), tolerance (5e-3).
// Small arcs start on the attracting slow manifold a phase phi below the y = -1
// fold; large arcs start on the fold plane itself.
inline void run_arcs(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 0.05);
    const double x0 = c.setting("x0", 1000.0);
    const double v_target = c.setting("v0", c.setting("u0", 0.1) * x0);
    const double phi = c.setting("phi", 0.05);
    double y0 = -1.0, v0 = 0.0;
    if (is_small_arc(x0, -1.0, v_target / x0, eps)) {
        const auto st = validation::attracting_start(x0, v_target, phi, eps);
        y0 = st[0];
        v0 = st[1];
    } else {
        v0 = validation::staircase_plane(x0, v_target, -1);
    }
    const auto a = validation::arc_comparison(x0, y0, v0, eps, c.setting("sample_interval", 0.05), integrator_config(c));
    Table traj{"trajectory", {"t", "x", "y", "u", "v", "y_slow", "v_slow"}, {}};
    for (const auto& s : a.samples) {
        const SlowArcPoint q = slow_arc(x0, y0, v0, eps, s.state.x);
        traj.add({s.t, s.state.x, s.state.y, s.state.w / s.state.x, s.state.w, q.y, q.v});
    }
    Table ends{"endpoints", {"point", "x_oracle", "y_oracle", "u_oracle", "x_map", "y_map", "u_map"}, {}};
    if (a.apex && a.map.apex)
        ends.add({std::string("apex"), a.apex->x, a.apex->y, a.apex->u, a.map.apex->x, a.map.apex->y, a.map.apex->u});
    ends.add({std::string("exit"), a.exit.x, a.exit.y, a.exit.u, a.map.exit.x, a.map.exit.y, a.map.exit.u});
    r.tables = {traj, ends};
    const bool small = a.map.kind == MapKind::SmallArc;
    r.info["small_arc"] = small ? 1.0 : 0.0;
    r.info["y0"] = y0;
    r.info["v0"] = v0;
    r.info["err_apex_x"] = a.err_apex_x;
    r.info["err_apex_y"] = a.err_apex_y;
    r.info["err_exit_x"] = a.err_exit_x;
    r.info["err_exit_u"] = a.err_exit_u;
    r.info["accepted_steps"] = static_cast<double>(a.steps);
    if (small) {
        r.check("slow_arc_max_dev", a.max_slow_arc_dev, 0.0, c.setting("tolerance", 5e-3));
    } else {
        r.info["slow_arc_max_dev"] = a.max_slow_arc_dev;
        r.check("exit_u_error", a.err_exit_u, 0.0, c.setting("tolerance", 0.05));
    }
}

// Staircase: x0 (60.5), eta (0.15), v0 (14), Y (+1), step_tolerance (0.10), cum_tolerance (0.05).
inline void run_staircase(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 0.1);
    const double x0 = c.setting("x0", 60.5);
    const int Y = c.setting("Y", 1.0) < 0 ? -1 : 1;
    const auto st = validation::staircase_study(x0, c.setting("eta", 0.15), c.setting("v0", 14.0), eps, Y,
                                                integrator_config(c));
    const std::vector<std::string> cols{"k", "t", "x", "y", "u", "v", "T_k"};
    Table map{"map", cols, {}};
    for (const auto& s : st.map.steps)
        map.add({static_cast<double>(s.k), s.x - x0, s.x, s.y, s.v / s.x, s.v, s.T});
    Table oracle{"oracle", cols, {}};
    for (std::size_t j = 0; j < st.oracle_midpoints.size(); ++j) {
        const auto& e = st.oracle_midpoints[j];
        const double T = j == 0 ? 0.0 : e.t - st.oracle_midpoints[j - 1].t;
        oracle.add({static_cast<double>(j), e.t, e.state.x, e.state.y, e.state.w / e.state.x, e.state.w, T});
    }
    Table errs{"errors", {"k", "v", "T_oracle", "T_map", "dy_oracle", "dy_map", "err_T", "err_dy"}, {}};
    for (const auto& row : st.rows)
        errs.add({static_cast<double>(row.k), row.v, row.T_oracle, row.T_map, row.dy_oracle, row.dy_map, row.err_T,
                  row.err_dy});
    r.tables = {map, oracle, errs};
    const double step_tol = c.setting("step_tolerance", 0.10), cum_tol = c.setting("cum_tolerance", 0.05);
    r.check("returned", st.returned ? 1.0 : 0.0, 1.0, 1.0);
    r.check("compared_steps", static_cast<double>(st.rows.size()), 3.0, 1e9);
    r.check("max_step_err_T", st.max_err_T, 0.0, step_tol);
    r.check("max_step_err_dy", st.max_err_dy, 0.0, step_tol);
    r.check("cum_err_T", std::abs(st.cum_err_T), 0.0, cum_tol);
    r.check("cum_err_dy", std::abs(st.cum_err_dy), 0.0, cum_tol);
    r.info["v0"] = st.v0;
    r.info["y0"] = st.y0;
    r.info["exit_u_oracle"] = st.oracle_exit.u;
    r.info["exit_u_map"] = st.map.exit.u;
    r.info["accepted_steps"] = static_cast<double>(st.steps);
}

// Shrinkers: x0 (10000), u0 (0.1), peaks (10), tolerance (0.05). The step
// budget is max_steps; 0 runs unbounded.
inline void run_shrinkers(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 0.05);
    const int n = static_cast<int>(c.setting("peaks", 10.0));
    IntegratorConfig ic = integrator_config(c);
    ic.max_steps = 0;  // the budget applies to the whole run, checked up front
    const auto st = validation::shrinker_study(c.setting("x0", 10000.0), c.setting("u0", 0.1), eps, n,
                                               static_cast<double>(c.max_steps), ic);
    Table peaks{"peaks", {"k", "x", "y", "dy", "x_map", "dy_map"}, {}};
    for (std::size_t i = 0; i < st.peaks.size(); ++i) {
        const auto& p = st.peaks[i];
        const auto& m = st.map_peaks[i];
        peaks.add({static_cast<double>(p.k), p.x, p.y, p.dy, m.x, m.dy});
    }
    r.tables = {peaks};
    r.check("ratio_rel_error", std::abs(st.rel_error), 0.0, c.setting("tolerance", 0.05));
    r.info["fitted_ratio"] = st.fitted_ratio;
    r.info["map_fitted_ratio"] = st.map_fitted_ratio;
    r.info["leading_ratio"] = st.leading_ratio;
    r.info["estimated_steps"] = st.estimated_steps;
    r.info["accepted_steps"] = static_cast<double>(st.steps);
}

// Boundary: x0 (1000), lo (0), hi (2/3), tol (1e-3). Verdicts come from the oracle.
inline void run_boundary(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 0.05);
    const double x0 = c.setting("x0", 1000.0);
    const auto st = validation::trap_boundary(x0, eps, c.setting("lo", 0.0), c.setting("hi", 2.0 / 3.0),
                                              c.setting("tol", 1e-3), c.params.a, integrator_config(c));
    Table t{"boundary", {"y0", "verdict", "exit_x", "exit_u"}, {}};
    for (const auto& run : st.runs) t.add({run.y0, verdict_name(run.verdict), run.exit_x, run.exit_u});
    r.tables = {t};
    r.check("threshold", st.threshold, st.window_lo, st.window_hi);
    r.info["trapped_y"] = st.trapped_y;
    r.info["escaped_y"] = st.escaped_y;
    r.info["eps_x0"] = eps * x0;
    r.info["classifier_boundary"] = classify_entry(x0, st.threshold, eps, c.params.a).boundary_estimate;
    r.info["accepted_steps"] = static_cast<double>(st.steps);
}

// CrossingOrbit: initial (Outer, default (0, 0.02, 1.3)), transient (20), returns (50).
// With a > 0 the attracting period-8 orbit and its twin are checked; with a = 0
// the stroboscopic iterates are checked for lying on one closed curve.
inline void run_crossing_orbit(const ScenarioConfig& c, ResultRecord& r) {
    require(c.params.epsilon == 0.0, ErrorKind::InvalidArgument, "crossing orbits live in the epsilon = 0 system");
    const PhaseState s0 = c.initial.value_or(PhaseState::outer(0.0, 0.02, 1.3));
    const PlanarState seed{s0.y, s0.w};
    if (c.params.a > 0.0) {
        const auto st = validation::crossing_orbit_study(c.params, s0.x, seed, static_cast<int>(c.setting("transient", 20)));
        Table orbit{"orbit", {"x", "y", "z"}, {}};
        for (const auto& q : st.trace) orbit.add({q[0], q[1], q[2]});
        const auto twin_trace = validation::crossing_trace(c.params, s0.x, st.twin.state, 8.0, 0.05);
        Table twin{"twin", {"x", "y", "z"}, {}};
        for (const auto& q : twin_trace) twin.add({q[0], q[1], q[2]});
        r.tables = {orbit, twin};
        r.check("period", st.orbit.period, 8.0 - c.setting("period_tolerance", 0.01), 8.0 + c.setting("period_tolerance", 0.01));
        r.check("attracting", st.orbit.attracting ? 1.0 : 0.0, 1.0, 1.0);
        r.check("fixed_point_residual", st.orbit.residual, 0.0, 1e-8);
        r.check("twin_distance", st.twin_distance, 1e-3, 1e9);
        r.check("twin_trace_diff", st.twin_trace_diff, 0.0, 1e-6);
        r.info["orbit_y"] = st.orbit.state.y;
        r.info["orbit_z"] = st.orbit.state.z;
        r.info["twin_y"] = st.twin.state.y;
        r.info["twin_z"] = st.twin.state.z;
        r.info["twin_period"] = st.twin.period;
    } else {
        const auto st = validation::torus_study(c.params, s0.x, seed, static_cast<int>(c.setting("returns", 50)));
        Table it{"iterates", {"k", "y", "z"}, {}};
        for (std::size_t k = 0; k < st.iterates.size(); ++k)
            it.add({static_cast<double>(k + 1), st.iterates[k].y, st.iterates[k].z});
        r.tables = {it};
        r.check("torus_drift", st.drift, 0.0, c.setting("drift_tolerance", 1e-4));
        r.info["extent_y"] = st.extent;
    }
}

// CanardGallery: x0 (9.5), seeds (40), t_run (400). Default epsilon 1.
inline void run_canard_gallery(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 1.0);
    const double x0 = c.setting("x0", 9.5);
    const auto g = validation::canard_gallery(x0, eps, static_cast<int>(c.setting("seeds", 40)), c.setting("t_run", 400.0));
    Table cyc{"cycles", {"y_section", "u_max", "period", "stability"}, {}};
    for (const auto& k : g.cycles) cyc.add({k.y_section, k.u_max, k.period, std::string(to_string(k.stability))});
    r.tables = {cyc};
    r.info["closure_max"] = g.closure_max;
    r.info["cycles_in_layer"] = static_cast<double>(g.in_layer.size());
    if (g.symmetric) {
        r.check("closure_max", g.closure_max, 0.0, c.setting("closure_tolerance", 1e-8));
    } else {
        r.check("cycles_in_layer", static_cast<double>(g.in_layer.size()), x0 / 2.0 - 1.0, x0 / 2.0 + 1.0);
        r.check("alternating", g.alternating ? 1.0 : 0.0, 1.0, 1.0);
    }
}

// SlidingRegions: x_lo (10), x_hi (12), nx (41), ny (41), probes (200 random points
// checked against a brute-force lambda scan, drawn with `seed`).
inline void run_sliding_regions(const ScenarioConfig& c, ResultRecord& r) {
    const double x_lo = c.setting("x_lo", 10.0), x_hi = c.setting("x_hi", 12.0);
    const int nx = static_cast<int>(c.setting("nx", 41)), ny = static_cast<int>(c.setting("ny", 41));
    require(nx >= 1 && ny >= 2, ErrorKind::InvalidArgument, "sliding grid needs nx >= 1 and ny >= 2");
    Table t{"regions", {"x", "y", "branches", "attracting", "repelling", "marginal"}, {}};
    for (int i = 0; i < nx; ++i) {
        const double x = nx == 1 ? x_lo : x_lo + (x_hi - x_lo) * i / (nx - 1);
        for (int j = 0; j < ny; ++j) {
            const double y = -1.0 + 2.0 * j / (ny - 1);
            const auto cl = classify_sliding(c.params, x, y);
            double na = 0, nr = 0, nm = 0;
            for (const auto& b : cl.branches)
                (b.stability == Stability::Attracting ? na : b.stability == Stability::Repelling ? nr : nm) += 1.0;
            t.add({x, y, static_cast<double>(cl.branches.size()), na, nr, nm});
        }
    }
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> ux(x_lo, x_hi), uy(-0.999, 0.999);
    const int probes = static_cast<int>(c.setting("probes", 200));
    int agree = 0;
    for (int k = 0; k < probes; ++k) agree += validation::sliding_agrees(c.params, ux(rng), uy(rng)) ? 1 : 0;
    r.tables = {t};
    r.check("brute_force_agreement", probes > 0 ? static_cast<double>(agree) / probes : 1.0, 1.0, 1.0);
}

// CycleSweep: x0 (500), y_entry (0), cycles (5), tolerance (0.15). Default epsilon 0.1.
inline void run_cycle_sweep(const ScenarioConfig& c, ResultRecord& r) {
    const double eps = eps_or(c, 0.1);
    const auto st = validation::large_cycle_study(c.setting("x0", 500.0), c.setting("y_entry", 0.0), eps,
                                                  static_cast<int>(c.setting("cycles", 5)), integrator_config(c));
    Table t{"sections", {"k", "x", "u", "du_oracle", "du_map", "rel_err", "x_map", "u_map"}, {}};
    for (const auto& row : st.rows)
        t.add({static_cast<double>(row.k), row.x, row.u, row.du_oracle, row.du_map, row.rel_err, row.x_iterated,
               row.u_iterated});
    r.tables = {t};
    r.check("max_cycle_rel_error", st.max_abs_rel_err, 0.0, c.setting("tolerance", 0.15));
    r.info["mean_cycle_rel_error"] = st.mean_rel_err;
    r.info["accepted_steps"] = static_cast<double>(st.steps);
}

}  // namespace detail

/// Run one scenario. Invalid or infeasible inputs throw fso::Error.
inline ResultRecord run_scenario(const ScenarioConfig& c) {
    c.params.validate();
    ResultRecord r;
    r.name = c.name.empty() ? std::string(to_string(c.kind)) : c.name;
    r.kind = c.kind;
    r.provenance.config_hash = hex(config_hash(c));
    switch (c.kind) {
        case ScenarioKind::Simulate: detail::run_simulate(c, r); break;
        case ScenarioKind::Arcs: detail::run_arcs(c, r); break;
        case ScenarioKind::Staircase: detail::run_staircase(c, r); break;
        case ScenarioKind::Shrinkers: detail::run_shrinkers(c, r); break;
        case ScenarioKind::Boundary: detail::run_boundary(c, r); break;
        case ScenarioKind::CrossingOrbit: detail::run_crossing_orbit(c, r); break;
        case ScenarioKind::CanardGallery: detail::run_canard_gallery(c, r); break;
        case ScenarioKind::SlidingRegions: detail::run_sliding_regions(c, r); break;
        case ScenarioKind::CycleSweep: detail::run_cycle_sweep(c, r); break;
    }
    return r;
}

/// The named reproductions available from the CLI.
inline ScenarioConfig named_scenario(std::string_view name) {
    ScenarioConfig c;
    c.name = std::string(name);
    if (name == "arcs") {
        c.kind = ScenarioKind::Arcs;
        c.params.epsilon = 0.05;
    } else if (name == "staircase") {
        c.kind = ScenarioKind::Staircase;
        c.params.epsilon = 0.1;
    } else if (name == "shrinkers") {
        c.kind = ScenarioKind::Shrinkers;
        c.params.epsilon = 0.05;
        c.max_steps = 1'500'000'000;
    } else if (name == "boundary") {
        c.kind = ScenarioKind::Boundary;
        c.params.epsilon = 0.05;
    } else if (name == "crossing_orbit") {
        c.kind = ScenarioKind::CrossingOrbit;
        c.params.a = 0.01;
        c.initial = PhaseState::outer(0.0, 0.02, 1.3);
    } else if (name == "torus") {
        c.kind = ScenarioKind::CrossingOrbit;
        c.initial = PhaseState::outer(0.0, 0.02, 1.3);
    } else if (name == "canard_gallery") {
        c.kind = ScenarioKind::CanardGallery;
        c.params.epsilon = 1.0;
        c.settings["x0"] = 9.500004;
    } else if (name == "sliding_regions") {
        c.kind = ScenarioKind::SlidingRegions;
    } else if (name == "cycle_sweep") {
        c.kind = ScenarioKind::CycleSweep;
        c.params.epsilon = 0.1;
    } else {
        fail(ErrorKind::InvalidArgument, "unknown scenario: " + std::string(name));
    }
    return c;
}

inline std::vector<std::string> scenario_names() {
    return {"arcs", "staircase", "shrinkers", "boundary", "crossing_orbit", "torus", "canard_gallery", "sliding_regions",
            "cycle_sweep"};
}

// ---------------------------------------------------------------------------
// Sweeps

struct GridAxis {
    std::string setting;
    std::vector<double> values;
};

struct SweepCell {
    std::vector<double> point;  // one value per axis
    ResultRecord record;
};

/// Cartesian product of the axes in row-major order (last axis fastest).
inline std::vector<std::vector<double>> grid_points(const std::vector<GridAxis>& grid) {
    require(grid.size() <= 3, ErrorKind::InvalidArgument, "sweep grids have at most three dimensions");
    if (grid.empty()) return {};
    std::vector<std::vector<double>> pts{{}};
    for (const auto& ax : grid) {
        std::vector<std::vector<double>> next;
        for (const auto& p : pts)
            for (double v : ax.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        pts = std::move(next);
    }
    return pts;
}

/// Run the template at every grid point. Cells run concurrently, at most
/// `workers` at a time (0 = hardware concurrency); results come back in grid order.
/// A failing cell records its error and the sweep continues.
inline std::vector<SweepCell> sweep(const ScenarioConfig& base, const std::vector<GridAxis>& grid,
                                    std::size_t max_cells = 1000, unsigned workers = 0) {
    const auto pts = grid_points(grid);
    require(pts.size() <= max_cells, ErrorKind::InvalidArgument, "sweep grid exceeds the cell cap");
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepCell> cells(pts.size());
    auto run_cell = [&](std::size_t i) {
        ScenarioConfig c = base;
        for (std::size_t d = 0; d < grid.size(); ++d) c.settings[grid[d].setting] = pts[i][d];
        char suffix[64];
        std::snprintf(suffix, sizeof suffix, "_%05zu", i);
        c.name = (base.name.empty() ? std::string(to_string(base.kind)) : base.name) + suffix;
        cells[i].point = pts[i];
        try {
            cells[i].record = run_scenario(c);
        } catch (const Error& e) {
            cells[i].record.name = c.name;
            cells[i].record.kind = c.kind;
            cells[i].record.provenance.config_hash = hex(config_hash(c));
            cells[i].record.error = e.kind();
            cells[i].record.error_message = e.what();
        }
    };
    for (std::size_t start = 0; start < pts.size(); start += workers) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(pts.size(), start + workers); ++i)
            batch.push_back(std::async(std::launch::async, run_cell, i));
        for (auto& f : batch) f.get();
    }
    return cells;
}

/// One row per cell: axis values, pass flag, error text, then every metric and
/// info value seen in any cell (blank where a cell lacks it).
inline Table aggregate(const std::vector<GridAxis>& grid, const std::vector<SweepCell>& cells) {
    Table t{"sweep", {}, {}};
    for (const auto& ax : grid) t.columns.push_back(ax.setting);
    t.columns.push_back("passed");
    t.columns.push_back("error");
    std::vector<std::string> metric_names, info_names;
    for (const auto& c : cells) {
        for (const auto& m : c.record.metrics)
            if (std::find(metric_names.begin(), metric_names.end(), m.name) == metric_names.end())
                metric_names.push_back(m.name);
        for (const auto& [k, v] : c.record.info)
            if (std::find(info_names.begin(), info_names.end(), k) == info_names.end()) info_names.push_back(k);
    }
    for (const auto& n : metric_names) t.columns.push_back(n);
    for (const auto& n : info_names) t.columns.push_back(n);
    for (const auto& c : cells) {
        std::vector<Cell> row(c.point.begin(), c.point.end());
        row.emplace_back(c.record.passed() ? 1.0 : 0.0);
        row.emplace_back(c.record.error_message);
        for (const auto& n : metric_names) {
            const Metric* m = c.record.metric(n);
            row.push_back(m ? Cell{m->value} : Cell{std::string()});
        }
        for (const auto& n : info_names) {
            const auto it = c.record.info.find(n);
            row.push_back(it != c.record.info.end() ? Cell{it->second} : Cell{std::string()});
        }
        t.add(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_cell(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
        out += '\n';
    }
    return out;
}

inline nlohmann::json to_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row) {
            if (const double* d = std::get_if<double>(&c))
                r.push_back(*d);
            else
                r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    return {{"name", t.name}, {"columns", t.columns}, {"rows", rows}};
}

/// Summary and provenance; `tables` carries the datasets inline or as file names.
inline nlohmann::json summary_json(const ResultRecord& r, bool inline_tables) {
    nlohmann::json j;
    j["scenario"] = r.name;
    j["kind"] = std::string(to_string(r.kind));
    j["passed"] = r.passed();
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : r.metrics)
        ms.push_back({{"name", m.name}, {"value", m.value}, {"lo", m.lo}, {"hi", m.hi}, {"pass", m.pass()}});
    j["metrics"] = ms;
    j["info"] = r.info;
    j["notes"] = r.notes;
    j["provenance"] = {{"config_hash", r.provenance.config_hash}, {"version", r.provenance.version}};
    if (r.error) j["error"] = {{"kind", std::string(to_string(*r.error))}, {"message", r.error_message}};
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : r.tables) ts.push_back(inline_tables ? to_json(t) : nlohmann::json(r.name + "_" + t.name + ".csv"));
    j["tables"] = ts;
    return j;
}

enum class Format { Csv, Json };

inline Format parse_format(std::string_view s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    fail(ErrorKind::InvalidArgument, "format must be csv or json");
}

/// Write the record under `dir`: `<name>_<table>.csv` files and a `<name>.json`
/// sidecar, or one `<name>.json` with the tables inline. Returns the paths written.
inline std::vector<std::filesystem::path> write_result(const ResultRecord& r, const std::filesystem::path& dir,
                                                       Format f) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream os(p, std::ios::binary);
        require(static_cast<bool>(os), ErrorKind::InvalidArgument, "cannot write " + p.string());
        os << text;
        written.push_back(p);
    };
    if (f == Format::Csv)
        for (const auto& t : r.tables) put(dir / (r.name + "_" + t.name + ".csv"), to_csv(t));
    put(dir / (r.name + ".json"), summary_json(r, f == Format::Json).dump(2) + "\n");
    return written;
}

}  // namespace fso::experiments
