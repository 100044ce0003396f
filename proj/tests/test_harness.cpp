#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "easycache/harness.hpp"

using namespace easycache;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("easycache_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig two_point() {
    RunConfig c;
    c.field = FieldSpec::preset("two-point-1d");
    return c;
}

}  // namespace

TEST_CASE("run config JSON round trip") {
    RunConfig c;
    c.field = FieldSpec::preset("gauss-grid-2d");
    c.steps = 37;
    c.delta_end = 0.05;
    c.seed = 11;
    c.policy.variant = Variant::Probabilistic;
    c.policy.tau = 3.5;
    c.policy.warmup = 4;
    c.policy.k_update = KUpdate::Ema;
    c.policy.probability = 0.3;
    const RunConfig back = run_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));

    RunConfig a;
    a.field = FieldSpec::affine(0.5, {1.0, -2.0});
    CHECK(to_json(run_config_from_json(to_json(a))) == to_json(a));
}

TEST_CASE("sweep spec errors") {
    const nlohmann::json base = to_json(two_point());
    CHECK_THROWS_AS(sweep_spec_from_json(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from_json({{"base", base}, {"axis", "tau"}, {"values", nlohmann::json::array()}}),
                    ConfigError);
    CHECK_THROWS_AS(
        sweep_spec_from_json({{"base", base}, {"axis", "tau"}, {"values", {1}}, {"seeds", nlohmann::json::array()}}),
        ConfigError);
    CHECK_THROWS_AS(sweep_spec_from_json({{"base", base}, {"axis", "speed"}, {"values", {1}}}), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from_json({{"base", base}, {"axis", "tau"}, {"values", {-1}}}), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from_json({{"base", base}, {"axis", "tau"}, {"values", {1}}, {"match_speedup", true}}),
                    ConfigError);
    CHECK_THROWS_AS(sweep_spec_from_json({{"base", base}, {"axis", "tau"}, {"values", {1}}, {"extra", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(load_sweep_spec("/nonexistent/sweep.json"), ConfigError);
}

TEST_CASE("sweep grid shape and determinism") {
    SweepSpec spec;
    spec.base = two_point();
    spec.axis = SweepAxis::Tau;
    spec.values = {1.0, 5.0, 20.0};
    spec.seeds = {0, 1, 2, 3};
    const SweepResult a = run_sweep(spec, 1);
    const SweepResult b = run_sweep(spec, 4);
    CHECK(a.cells.size() == 12);
    CHECK(a.means.size() == 3);
    std::ostringstream ca, cb;
    write_sweep_csv(a, ca);
    write_sweep_csv(b, cb);
    CHECK(ca.str() == cb.str());
    for (const auto& c : a.cells) CHECK(c.ok);
    // Larger tau never needs more evaluations on average.
    CHECK(a.means[0].speedup <= a.means[1].speedup);
    CHECK(a.means[1].speedup <= a.means[2].speedup);
}

TEST_CASE("single-point sweep agrees with run") {
    RunConfig c = two_point();
    c.seed = 5;
    c.policy.tau = 7.0;
    const RunReport r = execute_run(c);

    SweepSpec spec;
    spec.base = c;
    spec.axis = SweepAxis::Tau;
    spec.values = {7.0};
    spec.seeds = {5};
    const SweepResult s = run_sweep(spec);
    REQUIRE(s.cells.size() == 1);
    CHECK(s.cells[0].eval_count == r.eval_count);
    CHECK(s.cells[0].speedup == r.speedup);
    CHECK(s.cells[0].fidelity.psnr_db == r.fidelity.psnr_db);
    CHECK(s.cells[0].fidelity.mae == r.fidelity.mae);
}

TEST_CASE("failing sweep cells are recorded") {
    SweepSpec spec;
    spec.base = two_point();
    spec.base.field = FieldSpec::affine(1e6, {1.0});
    spec.base.steps = 200;
    spec.axis = SweepAxis::Tau;
    spec.values = {0.0};
    spec.seeds = {0, 1};
    const SweepResult s = run_sweep(spec);
    for (const auto& c : s.cells) {
        CHECK(!c.ok);
        CHECK(!c.error.empty());
    }
    CHECK(s.means[0].ok_cells == 0);
}

TEST_CASE("matched speedup for the static baseline") {
    RunConfig ec = two_point();
    ec.policy.tau = 5.0;
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const double target = evaluate_mean(ec, seeds).speedup;
    RunConfig st = ec;
    st.policy.variant = Variant::Static;
    const SweepMean m = match_speedup(st, seeds, target);
    CHECK(m.matched);
    CHECK(std::abs(m.speedup - target) / target <= kMatchTolerance);
}

TEST_CASE("run writes a report and a trace") {
    const fs::path dir = scratch("run");
    RunConfig c = two_point();
    std::ostringstream out;
    const RunReport r = cmd_run(c, dir.string(), out);
    CHECK(fs::exists(dir / (r.id + ".json")));
    CHECK(fs::exists(dir / (r.id + "_trace.csv")));
    CHECK(out.str().find(r.id) != std::string::npos);

    const auto j = nlohmann::json::parse(slurp(dir / (r.id + ".json")));
    CHECK(j["eval_count"].get<std::uint64_t>() == r.eval_count);
    CHECK(j.contains("wall_clock_ms"));

    const std::string first = to_json(r, false).dump();
    const RunReport again = cmd_run(c, dir.string(), out);
    CHECK(to_json(again, false).dump() == first);
}

TEST_CASE("tau zero is lossless") {
    RunConfig c = two_point();
    c.policy.tau = 0.0;
    const RunReport r = execute_run(c);
    CHECK(r.speedup == 1.0);
    CHECK(r.fidelity.psnr_db == 99.0);
    CHECK(r.fidelity.mae == 0.0);
}

TEST_CASE("trace of affine fields") {
    const fs::path dir = scratch("trace");
    std::ostringstream out;
    RunConfig c;
    c.steps = 20;

    c.field = FieldSpec::affine(1.0, {0.5, -0.25, 2.0});
    const TrajectoryTrace one = cmd_trace(c, dir.string(), false, out);
    for (const auto& s : one.steps) {
        if (s.t >= 1) CHECK(s.k == doctest::Approx(1.0).epsilon(1e-9));
    }

    c.field = FieldSpec::affine(0.0, {0.5, -0.25, 2.0});
    const TrajectoryTrace zero = cmd_trace(c, dir.string(), false, out);
    for (const auto& s : zero.steps) CHECK(s.k == 0.0);

    const TrajectoryTrace cached = cmd_trace(c, dir.string(), true, out);
    CHECK(cached.eval_count <= zero.eval_count);
    CHECK(fs::exists(dir / (run_id(c) + "_trace.csv")));
    CHECK(fs::exists(dir / (run_id(c) + "_full_trace.csv")));
}

TEST_CASE("guarded exit codes") {
    std::ostringstream err;
    CHECK(guarded([] {}, err) == kExitOk);
    CHECK(guarded([] { throw ConfigError("bad"); }, err) == kExitConfig);
    CHECK(guarded([] { throw NumericError("nan"); }, err) == kExitNumeric);
    CHECK(guarded([] { throw std::runtime_error("x"); }, err) == kExitFailure);
    CHECK(err.str().find("bad") != std::string::npos);

    RunConfig c = two_point();
    c.policy.tau = -1.0;
    CHECK(guarded([&] { execute_run(c); }, err) == kExitConfig);
    RunConfig blow = two_point();
    blow.field = FieldSpec::affine(1e6, {1.0});
    blow.steps = 200;
    CHECK(guarded([&] { execute_run(blow); }, err) == kExitNumeric);
}

TEST_CASE("round_numbers") {
    const nlohmann::json j{{"a", 0.1 + 0.2}, {"b", {1.0 / 3.0, 7}}, {"c", "text"}};
    const nlohmann::json r = round_numbers(j);
    CHECK(r["a"].get<double>() == 0.3);
    CHECK(r["b"][0].get<double>() == 0.333333333333);
    CHECK(r["b"][1].get<int>() == 7);
    CHECK(r["c"] == "text");
}
