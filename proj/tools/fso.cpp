// Command-line front end: single trajectories, named scenarios, sweeps,
// trapping verdicts and sliding-region tables.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fso/fso.hpp"

namespace ex = fso::experiments;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::string out_dir;
    bool oracle = false;
    std::uint64_t max_steps = 0;
    std::string format = "csv";
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON config file");
    app->add_option("--out", c.out_dir, "output directory");
    app->add_flag("--oracle", c.oracle, "force Oracle integration");
    app->add_option("--max-steps", c.max_steps, "step budget (0 = unbounded)");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    fso::require(static_cast<bool>(is), fso::ErrorKind::InvalidArgument, "cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        fso::fail(fso::ErrorKind::InvalidArgument, path + ": " + e.what());
    }
}

void apply_common(const Common& common, ex::ScenarioConfig& c) {
    if (common.oracle) c.oracle = true;
    if (common.max_steps) c.max_steps = common.max_steps;
    if (!common.out_dir.empty()) c.out_dir = common.out_dir;
}

void report(const ex::ResultRecord& r) {
    for (const auto& m : r.metrics)
        std::printf("%s %s = %.10g in [%.6g, %.6g]\n", m.pass() ? "PASS" : "FAIL", m.name.c_str(), m.value, m.lo, m.hi);
    for (const auto& [k, v] : r.info) std::printf("info %s = %.10g\n", k.c_str(), v);
    if (r.error) std::printf("ERROR %s: %s\n", std::string(fso::to_string(*r.error)).c_str(), r.error_message.c_str());
}

int finish(const ex::ResultRecord& r, const ex::ScenarioConfig& c, const Common& common) {
    report(r);
    for (const auto& p : ex::write_result(r, c.out_dir, ex::parse_format(common.format)))
        std::printf("wrote %s\n", p.string().c_str());
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-switching oscillator: simulation and asymptotic-map checks"};
    app.require_subcommand(1);

    Common sim_c;
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    add_common(sim, sim_c);
    double sx = 0, sy = 0, sw = 0, t_end = 10, eps = -1, a = -1, sample = 0;
    std::string chart = "outer", rule;
    sim->add_option("--x", sx);
    sim->add_option("--y", sy);
    sim->add_option("--w", sw, "z, u or v according to --chart");
    sim->add_option("--chart", chart)->check(CLI::IsMember({"outer", "layer_u", "layer_v"}));
    sim->add_option("--t-end", t_end);
    sim->add_option("--epsilon", eps);
    sim->add_option("--a", a);
    sim->add_option("--rule", rule)->check(CLI::IsMember({"linear", "nonlinear"}));
    sim->add_option("--sample-interval", sample);

    Common sc_c;
    std::string scenario_name;
    auto* sc = app.add_subcommand("scenario", "run a named reproduction");
    add_common(sc, sc_c);
    sc->add_option("name", scenario_name, "scenario name")->required();

    Common sw_c;
    auto* swp = app.add_subcommand("sweep", "run a scenario over a parameter grid");
    add_common(swp, sw_c);
    unsigned workers = 0;
    swp->add_option("--workers", workers, "concurrent cells (0 = hardware concurrency)");

    double cx0 = 1000, cy0 = 0, ceps = 0.05, ca = 0;
    bool run_oracle = false;
    auto* cls = app.add_subcommand("classify", "trapping verdict for a layer entry at u = +1");
    cls->add_option("--x0", cx0);
    cls->add_option("--y0", cy0);
    cls->add_option("--epsilon", ceps);
    cls->add_option("--a", ca);
    cls->add_flag("--oracle", run_oracle, "also integrate the entry and report its fate");

    Common sl_c;
    auto* sl = app.add_subcommand("sliding-map", "classify sliding solutions on an (x, y) grid");
    add_common(sl, sl_c);
    double x_lo = 10, x_hi = 12, nx = 41, ny = 41;
    std::string sl_rule = "nonlinear";
    sl->add_option("--x-lo", x_lo);
    sl->add_option("--x-hi", x_hi);
    sl->add_option("--nx", nx);
    sl->add_option("--ny", ny);
    sl->add_option("--rule", sl_rule)->check(CLI::IsMember({"linear", "nonlinear"}));

    sc->footer([] {
        std::string s = "scenarios:";
        for (const auto& n : ex::scenario_names()) s += " " + n;
        return s;
    }());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            ex::ScenarioConfig c;
            c.oracle = false;
            if (!sim_c.config_path.empty()) c = ex::config_from_json(read_json(sim_c.config_path));
            c.kind = ex::ScenarioKind::Simulate;
            if (c.name.empty()) c.name = "simulate";
            if (sim->count("--x") || sim->count("--y") || sim->count("--w") || !c.initial)
                c.initial = fso::PhaseState{sx, sy, sw, fso::parse_chart(chart)};
            if (eps >= 0) c.params.epsilon = eps;
            if (a >= 0) c.params.a = a;
            if (!rule.empty()) c.params.rule = fso::parse_rule(rule);
            if (sim->count("--t-end") || !c.settings.count("t_end")) c.settings["t_end"] = t_end;
            if (sim->count("--sample-interval")) c.settings["sample_interval"] = sample;
            apply_common(sim_c, c);
            return finish(ex::run_scenario(c), c, sim_c);
        }
        if (*sc) {
            ex::ScenarioConfig c = ex::named_scenario(scenario_name);
            if (!sc_c.config_path.empty()) {
                // Config values override the named defaults field by field.
                json base = ex::to_json(c);
                base.merge_patch(read_json(sc_c.config_path));
                c = ex::config_from_json(base);
            }
            apply_common(sc_c, c);
            return finish(ex::run_scenario(c), c, sc_c);
        }
        if (*swp) {
            fso::require(!sw_c.config_path.empty(), fso::ErrorKind::InvalidArgument,
                         "sweep needs --config with {\"template\": ..., \"grid\": [...]}");
            const json j = read_json(sw_c.config_path);
            ex::ScenarioConfig tmpl = j.at("template").contains("kind") ? ex::config_from_json(j.at("template"))
                                                                        : ex::ScenarioConfig{};
            if (j.at("template").contains("scenario")) {
                json base = ex::to_json(ex::named_scenario(j["template"]["scenario"].get<std::string>()));
                json patch = j["template"];
                patch.erase("scenario");
                base.merge_patch(patch);
                tmpl = ex::config_from_json(base);
            }
            apply_common(sw_c, tmpl);
            std::vector<ex::GridAxis> grid;
            for (const auto& ax : j.at("grid"))
                grid.push_back({ax.at("setting").get<std::string>(), ax.at("values").get<std::vector<double>>()});
            const auto cells = ex::sweep(tmpl, grid, j.value("max_cells", std::size_t{1000}), workers);
            ex::ResultRecord agg;
            agg.name = (tmpl.name.empty() ? std::string(ex::to_string(tmpl.kind)) : tmpl.name) + "_sweep";
            agg.kind = tmpl.kind;
            agg.provenance.config_hash = ex::hex(ex::config_hash(tmpl));
            agg.tables.push_back(ex::aggregate(grid, cells));
            bool all = true;
            for (const auto& cell : cells) {
                std::printf("%s %s\n", cell.record.passed() ? "PASS" : "FAIL", cell.record.name.c_str());
                all = all && cell.record.passed();
            }
            agg.check("cells_passed", all ? 1.0 : 0.0, 1.0, 1.0);
            return finish(agg, tmpl, sw_c);
        }
        if (*cls) {
            const fso::TrapVerdict v = fso::classify_entry(cx0, cy0, ceps, ca);
            std::printf("verdict %s\nboundary_estimate %.10g\ncorrection_scale %.10g\n",
                        std::string(fso::to_string(v.verdict)).c_str(), v.boundary_estimate, v.correction_scale);
            if (run_oracle) {
                const auto r = fso::validation::entry_outcome(cx0, cy0, ceps, ca);
                std::printf("oracle %s exit_x %.10g exit_y %.10g exit_u %.10g steps %llu\n",
                            std::string(fso::to_string(r.verdict)).c_str(), r.exit_x, r.exit_y, r.exit_u,
                            static_cast<unsigned long long>(r.steps));
                return (r.verdict == fso::Verdict::Trapped) == (v.verdict == fso::Verdict::Trapped) ? 0 : 1;
            }
            return 0;
        }
        if (*sl) {
            ex::ScenarioConfig c = ex::named_scenario("sliding_regions");
            if (!sl_c.config_path.empty()) {
                json base = ex::to_json(c);
                base.merge_patch(read_json(sl_c.config_path));
                c = ex::config_from_json(base);
            }
            c.params.rule = fso::parse_rule(sl_rule);
            c.settings["x_lo"] = x_lo;
            c.settings["x_hi"] = x_hi;
            c.settings["nx"] = nx;
            c.settings["ny"] = ny;
            apply_common(sl_c, c);
            return finish(ex::run_scenario(c), c, sl_c);
        }
    } catch (const fso::Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", std::string(fso::to_string(e.kind())).c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
