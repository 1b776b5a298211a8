// barriers.hpp: finite-difference Dirichlet Laplace solves on boxes and
// strips, used to realize the comparison ("barrier") functions whose maximum
// principle bounds extract the gap constants lambda and lambda*.

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "fracburgers/boxgrid.hpp"
#include "fracburgers/diagnostics.hpp"

namespace fracburgers {

// A face of the box is identified by (axis, side): side 0 is the lo face.
struct BarrierProblem {
    BoxGrid geometry;
    // Constant Dirichlet data per face, face index = 2*axis + side. Where two
    // faces meet, shared lattice points take the face minimum, which keeps the
    // discrete solution a subsolution of either face extension.
    std::array<double, 6> face_values = {0, 0, 0, 0, 0, 0};
    // Optional per-face samples overriding the constant (point -> value).
    std::array<std::function<double(const std::array<double, 3>&)>, 6> face_funcs;
    // Sub-box over which solve_barrier reports the max (empty = whole box).
    std::optional<std::array<double, 6>> subregion;  // lo0,hi0,lo1,hi1,lo2,hi2
    // When set, lambda_estimate = (2 - max_on_subregion) / 4.
    bool lambda_from_gap = false;
};

struct BarrierResult {
    BoxField solution;
    double max_on_subregion = 0.0;
    double lambda_estimate = 0.0;
    double boundary_min = 0.0;
    double boundary_max = 0.0;
    bool max_principle_ok = false;
    long iterations = 0;
    std::vector<std::pair<double, double>> refinement_history;  // (res, estimate)
};

// SOR relaxation of the 2d/3d five/seven-point Laplacian until the max
// stencil update falls below 1e-10 * max |boundary data|. Throws on
// non-convergence within the iteration budget.
BarrierResult solve_barrier(const BarrierProblem& problem);

// Box [-4,4]^N x [0,4]; data 2 on every face except the z = 0 face, which is
// 0. lambda = (2 - max over [-2,2]^N x [0,2]) / 4 lands in (0, 1/2).
BarrierProblem barrier_gap_problem(int N, double resolution);

// Convenience: solve barrier_gap_problem at `levels` dyadic resolutions
// starting from `resolution`, recording the refinement history; returns the
// finest result.
BarrierResult estimate_lambda(int N, double resolution, int levels = 1);

// Shrinking-cube barrier: data 2 on all faces except z = 0, where it is
// 2 - lambda / 2^(k0+1). Returns lambda* = 2 - max over the half-size cube,
// which lies strictly inside (0, 2^-(k0+1) min(1, lambda)). The solve runs on
// the unit cube; harmonic functions with constant face data are
// scale-invariant, so the nominal 1/16-size geometry gives the same value.
double lambda_star_estimate(int k0, double lambda, double resolution, int N = 1);

// Strip [0, X] x [0, 1]: data 2 on the x = 0 edge, 0 on z = 0 and z = 1, far
// edge clamped to 0. Checks the pointwise bound 2 sqrt(2) e^(-x/2) and fits
// the exponential decay rate of max_z b(x, .), which should track the slowest
// strip mode rate -pi.
DiagnosticReport strip_bound_check(double X, double resolution);

}  // namespace fracburgers
