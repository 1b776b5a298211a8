#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "fracburgers/experiment.hpp"

using namespace fracburgers;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("fracburgers_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

json minimal_config(const fs::path& out) {
    json j;
    j["grid"] = {{"dim", 1}, {"n", 64}, {"length", 2.0 * M_PI}};
    j["solver"] = {{"t_end", 0.02}, {"dt", 0.01}};
    j["initial"] = {{"type", "gaussian-bump"}, {"amplitude", 0.5}};
    j["output"] = out.string();
    return j;
}

}  // namespace

TEST_CASE("minimal config picks up the documented defaults") {
    json j;
    j["grid"] = {{"dim", 1}, {"n", 64}, {"length", 1.0}};
    ExperimentConfig c = parse_config_json(j);
    CHECK(c.solver.alpha == 0.5);
    CHECK(c.solver.dt == 1e-3);
    CHECK(c.solver.dealias == true);
    CHECK(std::isinf(c.solver.cutoff));
    CHECK(c.initial.type == "gaussian-bump");
}

TEST_CASE("schema violations carry key paths; unknown keys are fatal") {
    json j;
    j["grid"] = {{"dim", 1}, {"n", 64}, {"length", 1.0}};
    j["solver"] = {{"alpha", 1.5}};
    try {
        parse_config_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("alpha out of (0,1]") != std::string::npos);
    }

    json j2;
    j2["grid"] = {{"dim", 1}, {"n", 64}, {"length", 1.0}};
    j2["solver"] = {{"telos", 1.0}};
    try {
        parse_config_json(j2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("$.solver.telos") != std::string::npos);
        CHECK(msg.find("unknown key") != std::string::npos);
    }

    json j3 = j2;
    j3["solver"] = json::object();
    j3["grid"]["n"] = 63;
    CHECK_THROWS_AS(parse_config_json(j3), ConfigError);
}

TEST_CASE("emitted configs re-parse to an identical document") {
    json j;
    j["grid"] = {{"dim", 2}, {"n", 32}, {"length", 4.0}};
    j["solver"] = {{"alpha", 0.75}, {"cutoff", 2.5}, {"time_order", 2}};
    j["initial"] = {{"type", "sine-sum"},
                    {"terms", json::array({{{"k", {3, 1}}, {"amplitude", 0.5},
                                            {"phase", 0.25}}})}};
    j["diagnostics"] = json::array({{{"type", "scaling"}, {"lambda", 2.0}}});
    ExperimentConfig a = parse_config_json(j);
    ExperimentConfig b = parse_config_json(emit_config(a));
    CHECK(emit_config(a).dump() == emit_config(b).dump());
    CHECK(config_digest(a) == config_digest(b));
}

TEST_CASE("initial generators: named fields behave as documented") {
    json j;
    j["grid"] = {{"dim", 1}, {"n", 128}, {"length", 2.0 * M_PI}};
    j["initial"] = {{"type", "sine-sum"},
                    {"terms", json::array({{{"k", {3}}, {"amplitude", 1.0},
                                            {"phase", M_PI / 2.0}}})}};
    ExperimentConfig c = parse_config_json(j);
    RealField f = build_initial(c);
    // sin(3x + pi/2) = cos(3x)
    RealField expect = sample_field(c.grid(), [](double x) { return std::cos(3 * x); });
    CHECK(max_abs_diff(f, expect) < 1e-12);

    // mean_zero flag removes the average.
    json jb;
    jb["grid"] = {{"dim", 1}, {"n", 128}, {"length", 2.0 * M_PI}};
    jb["initial"] = {{"type", "gaussian-bump"}, {"mean_zero", true}};
    RealField b = build_initial(parse_config_json(jb));
    CHECK(std::abs(mean(b)) < 1e-14);

    // Random fields reproduce bit-identically from a seed and keep the same
    // continuum content when the grid is refined.
    json jr;
    jr["grid"] = {{"dim", 1}, {"n", 128}, {"length", 2.0 * M_PI}};
    jr["initial"] = {{"type", "random-band-limited"}, {"seed", 99}, {"kmax", 6}};
    ExperimentConfig cr = parse_config_json(jr);
    RealField r1 = build_initial(cr);
    RealField r2 = build_initial(cr);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);

    jr["grid"]["n"] = 256;
    RealField fine = build_initial(parse_config_json(jr));
    CHECK(max_abs_diff(resample(r1, 256), fine) < 1e-12);
}

TEST_CASE("snapshot files round-trip bit exactly") {
    fs::path dir = fresh_dir("snap");
    Grid g = make_grid(2, 16, 3.0);
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(0.1 * i) * 1e-3;
    write_snapshot(dir / "snap_000000", f, 0.25, 7);
    double t = 0.0;
    RealField back = read_snapshot(dir / "snap_000000.json", &t);
    CHECK(t == 0.25);
    REQUIRE(back.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
}

TEST_CASE("run_experiment persists a complete, schema-valid record") {
    fs::path out = fresh_dir("run");
    json j = minimal_config(out);
    j["diagnostics"] = json::array({{{"type", "decay"}}, {{"type", "scaling"}}});
    ExperimentConfig config = parse_config_json(j);
    RunRecord record = run_experiment(config);
    CHECK(record.status == "completed");
    CHECK(fs::exists(record.dir / "config.json"));
    CHECK(fs::exists(record.dir / "record.json"));
    CHECK(fs::exists(record.dir / "scalars.csv"));
    CHECK(fs::exists(record.dir / "diagnostics.json"));
    CHECK(fs::exists(record.dir / "summary.txt"));

    const std::string csv = slurp(record.dir / "scalars.csv");
    CHECK(csv.rfind("t,l2,linf,mean,hhalf\n", 0) == 0);

    json diag;
    std::ifstream(record.dir / "diagnostics.json") >> diag;
    CHECK(validate_report_document(diag).empty());

    const std::string summary = slurp(record.dir / "summary.txt");
    CHECK(summary.find("decay-bound") != std::string::npos);
    CHECK((summary.find("[PASS]") != std::string::npos ||
           summary.find("[FAIL]") != std::string::npos));

    // Reload matches the stored dimensions.
    Trajectory traj = load_trajectory(record.dir);
    CHECK(traj.snapshots.size() >= 2);
    CHECK(traj.series.size() == 3);  // steps 0, 1, 2
}

TEST_CASE("identical config and seed reproduce scalars.csv byte for byte") {
    fs::path out1 = fresh_dir("det1");
    fs::path out2 = fresh_dir("det2");
    json j = minimal_config(out1);
    j["initial"] = {{"type", "random-band-limited"}, {"seed", 31}, {"kmax", 8}};
    j["solver"] = {{"t_end", 0.05}, {"dt", 0.005}};
    RunRecord r1 = run_experiment(parse_config_json(j));
    j["output"] = out2.string();
    RunRecord r2 = run_experiment(parse_config_json(j));
    CHECK(r1.id == r2.id);
    CHECK(slurp(r1.dir / "scalars.csv") == slurp(r2.dir / "scalars.csv"));
}

TEST_CASE("blow-up is recorded as an aborted run, not a crash") {
    fs::path out = fresh_dir("abort");
    json j;
    j["grid"] = {{"dim", 1}, {"n", 256}, {"length", 2.0 * M_PI}};
    j["solver"] = {{"alpha", 0.3}, {"t_end", 5.0}, {"dt", 0.005},
                   {"dealias", false}};
    j["initial"] = {{"type", "sine-sum"},
                    {"terms", json::array({{{"k", {1}}, {"amplitude", 4.0}}})}};
    j["output"] = out.string();
    RunRecord record = run_experiment(parse_config_json(j));
    CHECK(record.status.rfind("aborted", 0) == 0);
    CHECK(record.abort_time > 0.0);
    CHECK(fs::exists(record.dir / "scalars.csv"));
}

TEST_CASE("list_runs: empty, populated, and corrupted directories") {
    fs::path out = fresh_dir("list");
    CHECK(list_runs(out).empty());
    CHECK(list_runs(out / "missing").empty());

    json j = minimal_config(out);
    run_experiment(parse_config_json(j));
    j["seed"] = 123;  // different digest, second run directory
    run_experiment(parse_config_json(j));
    auto rows = list_runs(out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].date <= rows[1].date);
    for (const auto& r : rows) CHECK(r.status == "completed");

    // Corrupt one record: flagged, others intact.
    fs::path bad = out / rows[0].id / "record.json";
    std::ofstream(bad) << "{ not json";
    auto rows2 = list_runs(out);
    REQUIRE(rows2.size() == 2);
    int unreadable = 0, completed = 0;
    for (const auto& r : rows2) {
        if (r.status == "unreadable") ++unreadable;
        if (r.status == "completed") ++completed;
    }
    CHECK(unreadable == 1);
    CHECK(completed == 1);
}

TEST_CASE("report document validator flags structural damage") {
    json good;
    good["version"] = 1;
    good["run_id"] = "abc";
    good["reports"] = json::array();
    CHECK(validate_report_document(good).empty());

    json bad = good;
    bad["reports"].push_back({{"name", 7}});
    CHECK(!validate_report_document(bad).empty());
    json bad2;
    CHECK(!validate_report_document(bad2).empty());
}

TEST_CASE("empty diagnostics list yields trajectory artifacts only") {
    fs::path out = fresh_dir("nodiag");
    RunRecord record = run_experiment(parse_config_json(minimal_config(out)));
    CHECK(record.reports.empty());
    CHECK(fs::exists(record.dir / "scalars.csv"));
    json diag;
    std::ifstream(record.dir / "diagnostics.json") >> diag;
    CHECK(diag["reports"].empty());
    CHECK(validate_report_document(diag).empty());
}

TEST_CASE("stored runs accept follow-up diagnostics") {
    fs::path out = fresh_dir("rediag");
    json j = minimal_config(out);
    j["solver"] = {{"t_end", 0.05}, {"dt", 0.005}};
    RunRecord record = run_experiment(parse_config_json(j));
    Trajectory traj = load_trajectory(record.dir);
    DiagnosticSpec spec;
    spec.type = "decay";
    DiagnosticReport rep = run_diagnostic(traj, spec);
    CHECK(rep.name == "decay-bound");
    CHECK(std::isfinite(rep.at("sup_ratio")));
}

TEST_CASE("file-load initial data reads a stored snapshot") {
    fs::path dir = fresh_dir("fileload");
    Grid g = make_grid(1, 64, 2.0 * M_PI);
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::cos(2.0 * i * g.spacing());
    write_snapshot(dir / "seed_field", f, 0.0, 0);

    json j;
    j["grid"] = {{"dim", 1}, {"n", 64}, {"length", 2.0 * M_PI}};
    j["initial"] = {{"type", "file-load"},
                    {"path", (dir / "seed_field.json").string()}};
    RealField loaded = build_initial(parse_config_json(j));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(loaded[i] == f[i]);

    // Grid mismatch is a config error.
    j["grid"]["n"] = 128;
    CHECK_THROWS_AS(build_initial(parse_config_json(j)), ConfigError);
}
