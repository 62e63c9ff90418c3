#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fso/experiments.hpp"

using namespace fso;
using namespace fso::experiments;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("fso_test_" + name);
    std::filesystem::remove_all(d);
    return d;
}

ScenarioConfig small_sliding() {
    ScenarioConfig c = named_scenario("sliding_regions");
    c.seed = 7;
    c.settings = {{"nx", 3}, {"ny", 5}, {"probes", 20}};
    return c;
}

}  // namespace

TEST_CASE("scenario configs round-trip through JSON text bit-exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        ScenarioConfig c;
        c.name = "cfg";
        c.kind = ScenarioKind::Staircase;
        c.params.a = std::abs(u(rng)) / 10.0;
        c.params.epsilon = std::ldexp(std::abs(u(rng)), -20);
        c.params.omega_plus = 1.0 + std::abs(u(rng));
        c.params.rule = i % 2 ? Rule::Linear : Rule::Nonlinear;
        c.initial = PhaseState{u(rng), u(rng), std::nextafter(0.1, 1.0), i % 3 ? Chart::LayerU : Chart::Outer};
        c.seed = rng();
        c.max_steps = rng() >> 1;
        c.settings["x0"] = u(rng) * 1e6;
        c.settings["tiny"] = std::ldexp(u(rng), -1060);
        c.settings["third"] = 1.0 / 3.0;
        const ScenarioConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
        CHECK(back == c);
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("config parsing defaults and errors") {
    const auto c = config_from_json(nlohmann::json::parse(R"({"kind": "arcs"})"));
    CHECK(c.kind == ScenarioKind::Arcs);
    CHECK(c.params == SystemParams{});
    CHECK_FALSE(c.initial.has_value());
    CHECK(c.setting("x0", 5.0) == 5.0);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"name": "x"})")), Error);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"kind": "Nope"})")), Error);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"kind": "arcs", "settings": {"x0": "a"}})")), Error);
}

TEST_CASE("the config hash separates configs that differ in one field") {
    ScenarioConfig a = small_sliding(), b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.settings["nx"] = 4;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.params.epsilon = std::nextafter(0.0, 1.0);
    CHECK(config_hash(a) != config_hash(b));
    CHECK(hex(0x1234).size() == 16);
}

TEST_CASE("every named scenario resolves and unknown names are rejected") {
    for (const auto& n : scenario_names()) {
        const auto c = named_scenario(n);
        CHECK(c.name == n);
        CHECK_NOTHROW(c.params.validate());
    }
    CHECK_THROWS_AS(named_scenario("nothing"), Error);
}

TEST_CASE("rerunning a config reproduces its output bytes") {
    const ScenarioConfig c = small_sliding();
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    for (Format f : {Format::Csv, Format::Json}) {
        const auto w1 = write_result(run_scenario(c), d1, f);
        const auto w2 = write_result(run_scenario(c), d2, f);
        REQUIRE(w1.size() == w2.size());
        for (std::size_t i = 0; i < w1.size(); ++i) {
            CHECK(w1[i].filename() == w2[i].filename());
            CHECK(slurp(w1[i]) == slurp(w2[i]));
        }
    }
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}

TEST_CASE("outputs follow the documented layout") {
    const auto r = run_scenario(small_sliding());
    CHECK(r.passed());
    const auto d = scratch("layout");
    const auto w = write_result(r, d, Format::Csv);
    REQUIRE(w.size() == 2);
    CHECK(w[0].filename() == "sliding_regions_regions.csv");
    CHECK(w[1].filename() == "sliding_regions.json");
    const std::string csv = slurp(w[0]);
    CHECK(csv.substr(0, csv.find('\n')) == "x,y,branches,attracting,repelling,marginal");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 15);
    const auto j = nlohmann::json::parse(slurp(w[1]));
    CHECK(j["passed"] == true);
    CHECK(j["provenance"]["config_hash"] == hex(config_hash(small_sliding())));
    CHECK(j["provenance"]["version"] == library_version);
    CHECK(j["tables"][0] == "sliding_regions_regions.csv");

    const auto wj = write_result(r, d, Format::Json);
    REQUIRE(wj.size() == 1);
    const auto ji = nlohmann::json::parse(slurp(wj[0]));
    CHECK(ji["tables"][0]["columns"].size() == 6);
    CHECK(ji["tables"][0]["rows"].size() == 15);
    std::filesystem::remove_all(d);
}

TEST_CASE("CSV cells keep full precision and quote text safely") {
    CHECK(format_cell(Cell{0.1}) == "0.10000000000000001");
    CHECK(std::stod(format_cell(Cell{1.0 / 3.0})) == 1.0 / 3.0);
    CHECK(format_cell(Cell{std::string("plain")}) == "plain");
    CHECK(format_cell(Cell{std::string("a,\"b\"")}) == "\"a,\"\"b\"\"\"");
    Table t{"t", {"a", "b"}, {}};
    CHECK_THROWS_AS(t.add({1.0}), Error);
}

TEST_CASE("the staircase scenario emits the documented columns and passes") {
    ScenarioConfig c = named_scenario("staircase");
    const auto r = run_scenario(c);
    const std::vector<std::string> cols{"k", "t", "x", "y", "u", "v", "T_k"};
    REQUIRE(r.table("map"));
    REQUIRE(r.table("oracle"));
    CHECK(r.table("map")->columns == cols);
    CHECK(r.table("oracle")->columns == cols);
    CHECK(r.passed());
    for (const auto& m : r.metrics) INFO(m.name << " = " << m.value);
}

TEST_CASE("the crossing orbit scenario finds the period-8 orbit and its twin") {
    const auto r = run_scenario(named_scenario("crossing_orbit"));
    CHECK(r.passed());
    REQUIRE(r.metric("period"));
    CHECK(r.metric("period")->value == Approx(8.0).margin(0.01));
    CHECK(r.metric("twin_trace_diff")->value < 1e-6);
    const auto t = run_scenario(named_scenario("torus"));
    CHECK(t.passed());
    REQUIRE(t.metric("torus_drift"));
}

TEST_CASE("scenario inputs are validated") {
    ScenarioConfig c = named_scenario("crossing_orbit");
    c.params.epsilon = 0.1;
    CHECK_THROWS_AS(run_scenario(c), Error);
    ScenarioConfig s;
    s.kind = ScenarioKind::Simulate;
    CHECK_THROWS_AS(run_scenario(s), Error);
    ScenarioConfig bad = small_sliding();
    bad.params.epsilon = -1.0;
    CHECK_THROWS_AS(run_scenario(bad), Error);
}

TEST_CASE("a simulate run records its samples and events") {
    ScenarioConfig c;
    c.name = "sim";
    c.kind = ScenarioKind::Simulate;
    c.params.epsilon = 0.05;
    c.oracle = false;
    c.initial = PhaseState::outer(3.0, 0.1, 1.0);
    c.settings["t_end"] = 5.0;
    const auto r = run_scenario(c);
    CHECK(r.passed());
    REQUIRE(r.table("trajectory"));
    CHECK(std::get<double>(r.table("trajectory")->rows.back()[0]) == 5.0);
    CHECK(r.info.at("final_time") == 5.0);
}

TEST_CASE("an empty grid gives an empty sweep") {
    CHECK(grid_points({}).empty());
    CHECK(sweep(small_sliding(), {}).empty());
    const Table t = aggregate({}, {});
    CHECK(t.rows.empty());
}

TEST_CASE("grids run in row-major order and respect the caps") {
    const std::vector<GridAxis> g{{"a", {1, 2}}, {"b", {3, 4, 5}}};
    const auto pts = grid_points(g);
    REQUIRE(pts.size() == 6);
    CHECK(pts[0] == std::vector<double>{1, 3});
    CHECK(pts[1] == std::vector<double>{1, 4});
    CHECK(pts[5] == std::vector<double>{2, 5});
    CHECK_THROWS_AS(grid_points({{"a", {1}}, {"b", {1}}, {"c", {1}}, {"d", {1}}}), Error);
    CHECK_THROWS_AS(sweep(small_sliding(), g, 5), Error);
}

TEST_CASE("a failing sweep cell is recorded and the others still run") {
    const std::vector<GridAxis> g{{"ny", {5, 1, 3}}};
    const auto cells = sweep(small_sliding(), g, 10, 2);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].record.passed());
    CHECK(cells[1].record.error == ErrorKind::InvalidArgument);
    CHECK_FALSE(cells[1].record.passed());
    CHECK(cells[2].record.passed());
    CHECK(cells[1].record.name == "sliding_regions_00001");
    const Table t = aggregate(g, cells);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.columns[0] == "ny");
    CHECK(t.columns[1] == "passed");
    CHECK(t.columns[2] == "error");
    CHECK(std::get<double>(t.rows[1][1]) == 0.0);
    CHECK_FALSE(std::get<std::string>(t.rows[1][2]).empty());
    CHECK(std::get<std::string>(t.rows[1][3]).empty());
}

TEST_CASE("sweep results do not depend on the worker count") {
    const std::vector<GridAxis> g{{"x_hi", {11, 13}}, {"probes", {5, 10}}};
    const auto a = sweep(small_sliding(), g, 10, 1), b = sweep(small_sliding(), g, 10, 3);
    CHECK(to_csv(aggregate(g, a)) == to_csv(aggregate(g, b)));
}
