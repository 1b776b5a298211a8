// fracburgers: batch runner for the fractional Burgers solver and its
// diagnostics suite.
//
//   solve <config.json>          run an experiment, persist artifacts
//   diagnose <run-id> <type> [params-json]   run one diagnostic on a stored run
//   barrier <problem.json>       finite-difference barrier solves
//   constants <lambda> <N> <C0> <Phi>        admissible-constants search
//   report <run-id>              regenerate and print the run summary
//   list <dir>                   tabulate stored runs
//
// Exit codes: 0 success, 2 validation error, 3 numerical abort, 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracburgers/barriers.hpp"
#include "fracburgers/degiorgi.hpp"
#include "fracburgers/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracburgers;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::string default_out_root() {
    const char* env = std::getenv("FRACBURGERS_OUT");
    return env && *env ? env : "runs";
}

void print_report(const DiagnosticReport& rep) {
    std::cout << (rep.passed ? "[PASS] " : "[FAIL] ") << rep.name << ":";
    for (const auto& [k, v] : rep.measured) std::cout << ' ' << k << '=' << v;
    if (!rep.flags.empty()) {
        std::cout << "  flags=";
        for (std::size_t i = 0; i < rep.flags.size(); ++i)
            std::cout << (i ? "," : "") << rep.flags[i];
    }
    if (!rep.notes.empty()) std::cout << "  notes=" << rep.notes;
    std::cout << "\n";
}

fs::path find_run_dir(const std::string& out_root, const std::string& run_id) {
    const fs::path direct(run_id);
    if (fs::exists(direct / "record.json")) return direct;
    const fs::path nested = fs::path(out_root) / run_id;
    if (fs::exists(nested / "record.json")) return nested;
    throw IoError("run not found: " + run_id + " (looked in " + out_root + ")");
}

int cmd_solve(const std::string& config_path, const std::string& out_override,
              long seed_override) {
    ExperimentConfig config = parse_config(config_path);
    // Precedence: --out flag, then the config's own value, then env/default.
    if (!out_override.empty()) config.output_dir = out_override;
    else if (config.output_dir.empty()) config.output_dir = default_out_root();
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    RunRecord record = run_experiment(config);
    std::cout << "run " << record.id << "  status=" << record.status << "\n";
    std::cout << "artifacts: " << record.dir.string() << "\n";
    for (const DiagnosticReport& r : record.reports) print_report(r);
    return record.status == "completed" ? 0 : kExitNumerical;
}

int cmd_diagnose(const std::string& out_root, const std::string& run_id,
                 const std::string& type, const std::string& params_json) {
    const fs::path dir = find_run_dir(out_root, run_id);
    Trajectory traj = load_trajectory(dir);
    DiagnosticSpec spec;
    spec.type = type;
    if (!params_json.empty()) {
        try {
            spec.params = json::parse(params_json);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad params JSON: ") + e.what());
        }
    }
    DiagnosticReport rep = run_diagnostic(traj, spec);
    print_report(rep);

    // Append to the stored diagnostics document.
    json doc;
    {
        std::ifstream in(dir / "diagnostics.json");
        if (in) in >> doc;
    }
    if (!doc.is_object()) doc = json::object();
    if (!doc.contains("reports")) {
        doc["version"] = 1;
        doc["run_id"] = run_id;
        doc["reports"] = json::array();
    }
    doc["reports"].push_back(report_to_json(rep));
    std::ofstream out(dir / "diagnostics.json");
    if (!out) throw IoError("cannot write diagnostics.json");
    out << doc.dump(2) << "\n";
    return rep.flags.size() == 1 && rep.flags[0] == "error" ? kExitNumerical : 0;
}

int cmd_barrier(const std::string& problem_path) {
    std::ifstream in(problem_path);
    if (!in) throw IoError("cannot read " + problem_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad problem JSON: ") + e.what());
    }
    const std::string kind = j.value("kind", "gap");
    if (kind == "gap") {
        BarrierResult r = estimate_lambda(j.value("N", 1),
                                          j.value("resolution", 16.0),
                                          j.value("levels", 1));
        std::cout << "lambda=" << r.lambda_estimate
                  << " max_on_subregion=" << r.max_on_subregion
                  << " iterations=" << r.iterations
                  << " max_principle=" << (r.max_principle_ok ? "ok" : "violated")
                  << "\n";
        for (const auto& [res, lam] : r.refinement_history)
            std::cout << "  resolution=" << res << " lambda=" << lam << "\n";
    } else if (kind == "lambda-star") {
        const double ls = lambda_star_estimate(
            j.value("k0", 1), j.value("lambda", 0.25),
            j.value("resolution", 32.0), j.value("N", 1));
        std::cout << "lambda_star=" << ls << "\n";
    } else if (kind == "strip") {
        DiagnosticReport rep =
            strip_bound_check(j.value("X", 8.0), j.value("resolution", 32.0));
        print_report(rep);
    } else {
        throw ConfigError("unknown barrier kind '" + kind + "'");
    }
    return 0;
}

int cmd_constants(double lambda, int N, double c0, double phi) {
    DeGiorgiConstants c = degiorgi_constants(lambda, N, c0, phi);
    std::cout << "lambda=" << c.lambda << " delta=" << c.delta
              << " M=" << c.recurrence_base << " eps0=" << c.smallness_bound
              << " poisson_l2=" << c.poisson_l2 << " verified_k=" << c.verified_k
              << "\n";
    for (const std::string& f : c.flags) std::cout << "  flag: " << f << "\n";
    return 0;
}

int cmd_report(const std::string& out_root, const std::string& run_id) {
    const fs::path dir = find_run_dir(out_root, run_id);
    std::ifstream in(dir / "summary.txt");
    if (!in) throw IoError("cannot read " + (dir / "summary.txt").string());
    std::cout << in.rdbuf();
    return 0;
}

int cmd_list(const std::string& dir) {
    const auto rows = list_runs(dir);
    std::cout << "id                date                  digest            status\n";
    for (const RunListEntry& r : rows)
        std::cout << r.id << "  " << r.date << "  " << r.digest << "  " << r.status
                  << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional Burgers solver and diagnostics runner"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global flags after a subcommand too

    std::string out_root;
    long seed_override = -1;
    int threads = 1;
    app.add_option("--out", out_root, "output root (overrides config/env)");
    app.add_option("--seed", seed_override, "seed override for initial data");
    app.add_option("--threads", threads, "max concurrency for diagnostics");

    std::string config_path, run_id, diag_type, diag_params, problem_path, list_dir;
    double c_lambda = 0.1, c_c0 = 2.0, c_phi = 10.0;
    int c_n = 1;

    auto* solve = app.add_subcommand("solve", "run an experiment config");
    solve->add_option("config", config_path, "experiment config JSON")->required();

    auto* diagnose = app.add_subcommand("diagnose", "run one diagnostic on a run");
    diagnose->add_option("run-id", run_id)->required();
    diagnose->add_option("diagnostic", diag_type)->required();
    diagnose->add_option("params", diag_params, "parameter JSON object");

    auto* barrier = app.add_subcommand("barrier", "barrier Laplace solves");
    barrier->add_option("problem", problem_path, "problem config JSON")->required();

    auto* constants = app.add_subcommand("constants", "admissible constants");
    constants->add_option("lambda", c_lambda)->required();
    constants->add_option("N", c_n)->required();
    constants->add_option("C0", c_c0)->required();
    constants->add_option("Phi", c_phi)->required();

    auto* report = app.add_subcommand("report", "print a run summary");
    report->add_option("run-id", run_id)->required();

    auto* list = app.add_subcommand("list", "tabulate runs in a directory");
    list->add_option("dir", list_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    set_max_threads(threads);
    const std::string root = out_root.empty() ? default_out_root() : out_root;
    try {
        if (*solve) return cmd_solve(config_path, out_root, seed_override);
        if (*diagnose) return cmd_diagnose(root, run_id, diag_type, diag_params);
        if (*barrier) return cmd_barrier(problem_path);
        if (*constants) return cmd_constants(c_lambda, c_n, c_c0, c_phi);
        if (*report) return cmd_report(root, run_id);
        if (*list) return cmd_list(list_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const BlowUpError& e) {
        std::cerr << "numerical abort: " << e.what() << " at t=" << e.time << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
