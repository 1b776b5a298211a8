// solver.hpp: pseudospectral time integration of the fractional Burgers
// equation on the torus,
//
//     d theta/dt + sum_j sat_R(theta) d_j theta = -(-Lap)^alpha theta
//                                                 + epsilon Lap theta,
//
// where sat_R is a bounded clamp of the advecting value (R = inf recovers
// the plain equation). The dissipation is applied exactly through the
// integrating factor e^(-dt (|k|^(2 alpha) + epsilon |k|^2)); the nonlinear
// term is evaluated pseudospectrally in flux form, which conserves the mean
// to round-off for every R.

#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracburgers/diagnostics.hpp"
#include "fracburgers/fields.hpp"

namespace fracburgers {

// Odd saturation to [-level, level].
double saturate(double value, double level);
// Literal one-sided variant that returns +level on both tails; kept behind a
// flag so the odd clamp stays the default (see SolverConfig::literal_tail).
double saturate_literal(double value, double level);

struct SolverConfig {
    double alpha = 0.5;                // dissipation exponent in (0, 1]
    double epsilon = 0.0;              // artificial viscosity >= 0
    double cutoff = std::numeric_limits<double>::infinity();  // R; inf disables
    double dt = 1e-3;
    double t_end = 1.0;
    bool dealias = true;
    double nonlinearity_scale = 1.0;   // 1 physical, 0 linear equation
    int time_order = 1;                // 1 = integrating-factor Euler, 2 = Heun
    int snapshot_stride = 1;           // record every k-th step
    bool literal_tail = false;         // use saturate_literal for sat_R

    void validate() const;
};

struct Snapshot {
    double t = 0.0;
    int step = 0;
    RealField field;
};

// Per-step scalar series; one entry per step including step 0.
struct ScalarSeries {
    std::vector<double> t, l2, linf, mean, hhalf;
    std::size_t size() const { return t.size(); }
};

struct Trajectory {
    SolverConfig config;
    RealField initial;
    std::vector<Snapshot> snapshots;
    ScalarSeries series;
    bool aborted = false;
    double abort_time = 0.0;
    std::string abort_reason;

    double t_final() const { return snapshots.back().t; }
    const RealField& final_field() const { return snapshots.back().field; }
    // Snapshot with time closest to t (throws if none within half a stride).
    const Snapshot& at_time(double t) const;
    std::size_t index_at_time(double t) const;
    // Same, but t must sit on the ladder up to round-off.
    std::size_t index_at_exact_time(double t) const;
};

struct BlowUpError : std::runtime_error {
    double time;
    BlowUpError(const std::string& what, double t)
        : std::runtime_error(what), time(t) {}
};

// Spectrum of the advection term N(theta) = -sum_j d_j flux(theta), with the
// flux the antiderivative of the saturation (dealiased when the config says
// so). Zero mean by construction. Shared by the stepper and the mild-solution
// reconstruction.
Spectrum advection_term_spectrum(const RealField& field,
                                 const SolverConfig& config);

// One time step. Throws BlowUpError on non-finite output.
RealField step(const RealField& field, const SolverConfig& config);

// Integrate from t = 0 to t_end, recording snapshots and per-step scalars.
// A blow-up mid-run is recorded on the trajectory (aborted flag), not thrown.
Trajectory run(const RealField& initial, const SolverConfig& config);

// Rerun the problem under the rescaling theta_lambda(t, x) = theta(lambda t,
// lambda x) (same mode count, period length/lambda, step dt/lambda) and report
// the sup-difference against the original run. The discretization inherits the
// continuum scaling symmetry exactly at alpha = 1/2, epsilon = 0, R = inf.
DiagnosticReport scaling_check(const Trajectory& traj, double lambda);

}  // namespace fracburgers
