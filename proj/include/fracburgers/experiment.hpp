// experiment.hpp: batch experiment runner. JSON config ingestion with strict
// schema validation, named deterministic initial-data generators, run
// persistence (CSV scalars, raw-f64 snapshots with JSON sidecars, diagnostics
// JSON, human-readable summary) and reload, plus the run directory listing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracburgers/diagnostics.hpp"
#include "fracburgers/solver.hpp"

namespace fracburgers {

inline constexpr const char* kCodeVersion = "fracburgers-0.1.0";

// Thrown for config/schema violations (CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
// Thrown for unreadable/unwritable artifacts (CLI exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Max concurrency for the diagnostics fan-out (the solver itself is
// sequential in time). Settable from the CLI --threads flag.
void set_max_threads(int n);
int max_threads();

struct SineTerm {
    std::array<int, 2> k = {1, 0};
    double amplitude = 1.0;
    double phase = 0.0;
};

struct InitialSpec {
    std::string type = "gaussian-bump";  // or random-band-limited, sine-sum,
                                         // file-load
    double amplitude = 1.0;
    double center = -1.0;                // < 0 means torus midpoint
    double width = 1.0;
    bool mean_zero = false;
    std::uint64_t seed = 1;
    int kmin = 1, kmax = 8;
    std::vector<SineTerm> terms;
    std::string path;
};

struct DiagnosticSpec {
    std::string type;
    nlohmann::json params;
};

struct ExperimentConfig {
    int version = 1;
    int dim = 1;
    int n = 256;
    double length = 2.0 * M_PI;
    SolverConfig solver;
    InitialSpec initial;
    std::vector<DiagnosticSpec> diagnostics;
    std::string output_dir = "runs";
    std::uint64_t seed = 0;  // overrides initial.seed when nonzero
    bool emit_gnuplot = false;

    Grid grid() const { return make_grid(dim, n, length); }
};

// Strict parse: schema violations carry the offending key path; unknown keys
// are fatal.
ExperimentConfig parse_config(const std::filesystem::path& file);
ExperimentConfig parse_config_json(const nlohmann::json& j);
nlohmann::json emit_config(const ExperimentConfig& config);

// Deterministic initial data for the named generator (counter-based splitmix
// draws, so a seed reproduces bit-identically).
RealField build_initial(const ExperimentConfig& config);

struct RunRecord {
    std::string id;             // content hash of config + code version
    std::string config_digest;  // content hash of config alone
    ExperimentConfig config;
    std::string status;         // "completed" or "aborted: <reason>"
    double abort_time = 0.0;
    std::string date;           // ISO-8601 UTC
    std::vector<DiagnosticReport> reports;
    std::filesystem::path dir;  // run directory on disk
};

std::string config_digest(const ExperimentConfig& config);
std::string run_id(const ExperimentConfig& config);

// Solve, run the requested diagnostics, persist everything under
// output_dir/<run id>/. Solver blow-up yields an aborted record, not a throw.
RunRecord run_experiment(const ExperimentConfig& config);

// (Re)write the derived artifacts for a record whose trajectory is given:
// scalars.csv, snapshots/, diagnostics.json, summary.txt, and the optional
// gnuplot script.
void emit_report(const RunRecord& record, const Trajectory& traj);

struct RunListEntry {
    std::string id;
    std::string date;
    std::string digest;
    std::string status;
};

// One row per run subdirectory, sorted by date; unreadable records are
// flagged, not fatal.
std::vector<RunListEntry> list_runs(const std::filesystem::path& dir);

// Reload a persisted run (config + snapshots + scalar series).
RunRecord load_record(const std::filesystem::path& run_dir);
Trajectory load_trajectory(const std::filesystem::path& run_dir);

// Run one named diagnostic against a trajectory; used by run_experiment and
// by the `diagnose` subcommand.
DiagnosticReport run_diagnostic(const Trajectory& traj,
                                const DiagnosticSpec& spec);

// Structural check of a diagnostics.json document against the published
// report schema (docs/report-schema.json). Returns problems, empty if valid.
std::vector<std::string> validate_report_document(const nlohmann::json& doc);

nlohmann::json report_to_json(const DiagnosticReport& rep);

// Snapshot container format: raw little-endian float64 next to a JSON
// sidecar carrying grid, time and layout.
void write_snapshot(const std::filesystem::path& base_no_ext,
                    const RealField& field, double time, int index);
RealField read_snapshot(const std::filesystem::path& sidecar_json,
                        double* time_out = nullptr);

}  // namespace fracburgers
