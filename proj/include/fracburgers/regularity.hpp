// regularity.hpp: theorem-level measurements on trajectories. The sup-norm
// decay ratio t^(N/2) ||theta(t)||_inf / ||theta_0||_2, oscillation decay over
// shrinking parabolic cylinders with the fitted Holder exponent, and the
// mild-solution (Duhamel) reconstruction through the Poisson semigroup.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "fracburgers/fields.hpp"
#include "fracburgers/solver.hpp"

namespace fracburgers {

struct DecayReport {
    double t_min = 0.0, t_max = 0.0;
    std::vector<double> times;
    std::vector<double> ratios;  // t^(N/2) linf(t) / l2(0) per recorded step
    double sup_ratio = 0.0;
    std::vector<std::string> flags;
};

// The ratio is a whole-space statement; on the torus it is meaningful only
// before diffusion wraps, so callers should keep t_max <~ length/4 (the CLI
// default window is [10 dt, length/4]).
DecayReport decay_report(const Trajectory& traj, double t_min, double t_max);

struct OscillationReport {
    double center_t = 0.0;
    std::array<double, 2> center_x = {0.0, 0.0};
    double ratio = 0.5;          // cylinder shrink factor r
    std::vector<double> osc;     // sup - inf over Q_(r^k), k = 1..k_used
    int k_used = 0;
    double fitted_alpha = 0.0;
    double r_squared = 0.0;
    bool alpha_defined = false;  // false for constant fields or poor fits
    std::vector<std::string> flags;
};

// osc_k = max - min over samples of the parabolic cylinder [t0 - r^k, t0] x
// B_(r^k)(x0) (sup-norm ball; with use_extension also z in [0, r^k]).
// fitted_alpha is the least-squares slope of log osc_k against k log r; the
// estimator refuses a verdict when R^2 < 0.8. Unresolvable deep cylinders
// reduce k_max with a warning flag.
OscillationReport oscillation_profile(const Trajectory& traj, double center_t,
                                      const std::array<double, 2>& center_x,
                                      double ratio, int k_max,
                                      bool use_extension = false);

struct DuhamelResult {
    RealField field;
    double sup_error = 0.0;
};

// Evaluates theta(t) = P(t) theta_0 - sum_j int_0^t d_j P(t - s) flux(theta(s))
// ds with the torus Poisson multiplier and trapezoid quadrature over
// quad_steps snapshot-aligned nodes, and compares against the stored snapshot.
// Requires the critical linear part (alpha = 1/2, epsilon = 0).
DuhamelResult duhamel_reconstruct(const Trajectory& traj, double t,
                                  int quad_steps);

}  // namespace fracburgers
