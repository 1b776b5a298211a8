#include "fracburgers/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracburgers {

namespace {

double face_value(const BarrierProblem& p, int face,
                  const std::array<double, 3>& x) {
    if (p.face_funcs[face]) return p.face_funcs[face](x);
    return p.face_values[face];
}

// Dirichlet data at a boundary node: minimum over all faces through it.
double boundary_value(const BarrierProblem& p, int i, int j, int k) {
    const BoxGrid& g = p.geometry;
    const std::array<int, 3> idx = {i, j, k};
    std::array<double, 3> x = {g.coord(0, i),
                               g.dims > 1 ? g.coord(1, j) : 0.0,
                               g.dims > 2 ? g.coord(2, k) : 0.0};
    double v = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dims; ++a) {
        if (idx[a] == 0) v = std::min(v, face_value(p, 2 * a + 0, x));
        if (idx[a] == g.npts[a] - 1) v = std::min(v, face_value(p, 2 * a + 1, x));
    }
    return v;
}

}  // namespace

BarrierResult solve_barrier(const BarrierProblem& problem) {
    const BoxGrid& g = problem.geometry;
    for (int a = 0; a < g.dims; ++a)
        if (g.npts[a] < 17)
            throw std::invalid_argument("solve_barrier: need >= 17 points per axis");
    // The five/seven point stencil below assumes one spacing.
    for (int a = 1; a < g.dims; ++a)
        if (std::abs(g.spacing(a) - g.spacing(0)) > 1e-12 * g.spacing(0))
            throw std::invalid_argument("solve_barrier: spacing must match across axes");

    BarrierResult res;
    res.solution = BoxField(g);
    BoxField& u = res.solution;

    double bmin = std::numeric_limits<double>::infinity();
    double bmax = -bmin;
    for (int i = 0; i < g.npts[0]; ++i)
        for (int j = 0; j < std::max(g.npts[1], 1); ++j)
            for (int k = 0; k < std::max(g.npts[2], 1); ++k) {
                if (!g.on_boundary(i, j, k)) continue;
                const double v = boundary_value(problem, i, j, k);
                u.at(i, j, k) = v;
                bmin = std::min(bmin, v);
                bmax = std::max(bmax, v);
            }
    res.boundary_min = bmin;
    res.boundary_max = bmax;
    const double bscale = std::max(std::abs(bmin), std::abs(bmax));
    const double tol = 1e-10 * std::max(bscale, 1e-300);

    // Interior start at the boundary mean keeps early sweeps well scaled.
    const double start = 0.5 * (bmin + bmax);
    for (int i = 1; i < g.npts[0] - 1; ++i)
        for (int j = (g.dims > 1 ? 1 : 0); j < std::max(g.npts[1] - 1, 1); ++j)
            for (int k = (g.dims > 2 ? 1 : 0); k < std::max(g.npts[2] - 1, 1); ++k)
                if (!g.on_boundary(i, j, k)) u.at(i, j, k) = start;

    // SOR with the model-problem optimal relaxation factor.
    int nmax = 0;
    for (int a = 0; a < g.dims; ++a) nmax = std::max(nmax, g.npts[a]);
    const double rho = std::cos(M_PI / (nmax - 1));
    const double omega = 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
    const double inv2d = 1.0 / (2.0 * g.dims);

    const long budget = 200000;
    long sweeps = 0;
    double shift = 0.0;
    for (; sweeps < budget; ++sweeps) {
        shift = 0.0;
        if (g.dims == 2) {
            for (int i = 1; i < g.npts[0] - 1; ++i)
                for (int j = 1; j < g.npts[1] - 1; ++j) {
                    const double avg = inv2d * (u.at(i - 1, j) + u.at(i + 1, j) +
                                                u.at(i, j - 1) + u.at(i, j + 1));
                    const double d = avg - u.at(i, j);
                    u.at(i, j) += omega * d;
                    shift = std::max(shift, std::abs(d));
                }
        } else if (g.dims == 3) {
            for (int i = 1; i < g.npts[0] - 1; ++i)
                for (int j = 1; j < g.npts[1] - 1; ++j)
                    for (int k = 1; k < g.npts[2] - 1; ++k) {
                        const double avg = inv2d *
                            (u.at(i - 1, j, k) + u.at(i + 1, j, k) +
                             u.at(i, j - 1, k) + u.at(i, j + 1, k) +
                             u.at(i, j, k - 1) + u.at(i, j, k + 1));
                        const double d = avg - u.at(i, j, k);
                        u.at(i, j, k) += omega * d;
                        shift = std::max(shift, std::abs(d));
                    }
        } else {
            throw std::invalid_argument("solve_barrier: dims must be 2 or 3");
        }
        if (shift < tol) break;
    }
    if (shift >= tol)
        throw std::runtime_error("solve_barrier: SOR did not converge in budget");
    res.iterations = sweeps + 1;

    // Discrete maximum principle; small slack for the residual tolerance.
    res.max_principle_ok = true;
    for (double v : u.values)
        if (v < bmin - 1e-8 * bscale || v > bmax + 1e-8 * bscale)
            res.max_principle_ok = false;

    // Max over the requested sub-box (node centers inside it).
    double mx = -std::numeric_limits<double>::infinity();
    const std::array<double, 6> sub = problem.subregion.value_or(std::array<double, 6>{
        g.lo[0], g.hi[0], g.lo[1], g.hi[1], g.lo[2], g.hi[2]});
    for (int i = 0; i < g.npts[0]; ++i)
        for (int j = 0; j < std::max(g.npts[1], 1); ++j)
            for (int k = 0; k < std::max(g.npts[2], 1); ++k) {
                const std::array<double, 3> x = {
                    g.coord(0, i), g.dims > 1 ? g.coord(1, j) : 0.0,
                    g.dims > 2 ? g.coord(2, k) : 0.0};
                bool inside = true;
                for (int a = 0; a < g.dims; ++a)
                    inside = inside && x[a] >= sub[2 * a] - 1e-12 &&
                             x[a] <= sub[2 * a + 1] + 1e-12;
                if (inside) mx = std::max(mx, u.at(i, j, k));
            }
    res.max_on_subregion = mx;
    if (problem.lambda_from_gap) res.lambda_estimate = (2.0 - mx) / 4.0;
    return res;
}

BarrierProblem barrier_gap_problem(int N, double resolution) {
    if (N != 1 && N != 2)
        throw std::invalid_argument("barrier_gap_problem: N must be 1 or 2");
    BarrierProblem p;
    const int nxy = static_cast<int>(std::lround(8.0 * resolution)) + 1;
    const int nz = static_cast<int>(std::lround(4.0 * resolution)) + 1;
    if (N == 1) {
        p.geometry = make_box_grid(2, {-4.0, 0.0, 0.0}, {4.0, 4.0, 0.0},
                                   {nxy, nz, 1});
        p.face_values = {2, 2, 0, 2, 0, 0};  // z is axis 1; lo face is z = 0
        p.subregion = std::array<double, 6>{-2, 2, 0, 2, 0, 0};
    } else {
        p.geometry = make_box_grid(3, {-4.0, -4.0, 0.0}, {4.0, 4.0, 4.0},
                                   {nxy, nxy, nz});
        p.face_values = {2, 2, 2, 2, 0, 2};  // z is axis 2
        p.subregion = std::array<double, 6>{-2, 2, -2, 2, 0, 2};
    }
    p.lambda_from_gap = true;
    return p;
}

BarrierResult estimate_lambda(int N, double resolution, int levels) {
    BarrierResult finest;
    std::vector<std::pair<double, double>> history;
    for (int l = 0; l < levels; ++l) {
        const double res = resolution * std::pow(2.0, l);
        finest = solve_barrier(barrier_gap_problem(N, res));
        history.emplace_back(res, finest.lambda_estimate);
    }
    finest.refinement_history = history;
    return finest;
}

double lambda_star_estimate(int k0, double lambda, double resolution, int N) {
    if (!(lambda >= 0.0 && lambda < 0.5))
        throw std::invalid_argument("lambda_star_estimate: lambda in [0, 1/2)");
    if (k0 < 0) throw std::invalid_argument("lambda_star_estimate: k0 >= 0");
    const double floor_value = 2.0 - lambda / std::pow(2.0, k0 + 1);

    BarrierProblem p;
    const int nxy = static_cast<int>(std::lround(2.0 * resolution)) + 1;
    const int nz = static_cast<int>(std::lround(1.0 * resolution)) + 1;
    if (N == 1) {
        p.geometry = make_box_grid(2, {-1.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, {nxy, nz, 1});
        p.face_values = {2, 2, floor_value, 2, 0, 0};
        p.subregion = std::array<double, 6>{-0.5, 0.5, 0, 0.5, 0, 0};
    } else if (N == 2) {
        p.geometry = make_box_grid(3, {-1.0, -1.0, 0.0}, {1.0, 1.0, 1.0},
                                   {nxy, nxy, nz});
        p.face_values = {2, 2, 2, 2, floor_value, 2};
        p.subregion = std::array<double, 6>{-0.5, 0.5, -0.5, 0.5, 0, 0.5};
    } else {
        throw std::invalid_argument("lambda_star_estimate: N must be 1 or 2");
    }
    BarrierResult r = solve_barrier(p);
    return 2.0 - r.max_on_subregion;
}

DiagnosticReport strip_bound_check(double X, double resolution) {
    if (X < 5.0) throw std::invalid_argument("strip_bound_check: X must be >= 5");
    BarrierProblem p;
    const int nx = static_cast<int>(std::lround(X * resolution)) + 1;
    const int nz = static_cast<int>(std::lround(resolution)) + 1;
    p.geometry = make_box_grid(2, {0.0, 0.0, 0.0}, {X, 1.0, 0.0}, {nx, nz, 1});
    p.face_values = {2, 0, 0, 0, 0, 0};  // inflow x = 0 is 2; everything else 0
    BarrierResult r = solve_barrier(p);
    const BoxGrid& g = r.solution.grid;

    double worst_gap = -std::numeric_limits<double>::infinity();
    std::vector<double> xs, ln_peaks;
    for (int i = 0; i < g.npts[0]; ++i) {
        const double x = g.coord(0, i);
        const double bound = 2.0 * std::sqrt(2.0) * std::exp(-0.5 * x);
        double peak = 0.0;
        for (int j = 0; j < g.npts[1]; ++j) {
            peak = std::max(peak, r.solution.at(i, j));
            worst_gap = std::max(worst_gap, r.solution.at(i, j) - bound);
        }
        // Fit window: clear of the inflow corner singularity and of the
        // clamped far edge, and above the relaxation tolerance.
        if (x >= 0.5 && x <= std::min(0.5 * X, X - 3.0) && peak > 1e-8)
            { xs.push_back(x); ln_peaks.push_back(std::log(peak)); }
    }

    // Least-squares slope of log max_z b(x, .) vs x.
    double rate = 0.0;
    if (xs.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i]; sy += ln_peaks[i];
            sxx += xs[i] * xs[i]; sxy += xs[i] * ln_peaks[i];
        }
        const double nf = static_cast<double>(xs.size());
        rate = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    }

    DiagnosticReport rep;
    rep.name = "strip-barrier-bound";
    rep.measured["X"] = X;
    rep.measured["resolution"] = resolution;
    rep.measured["max_gap_vs_bound"] = worst_gap;
    rep.measured["fitted_decay_rate"] = rate;
    rep.measured["slowest_mode_rate"] = -M_PI;
    rep.passed = worst_gap <= 1e-6 && rate <= -M_PI + 0.05;
    if (!r.max_principle_ok) rep.flags.push_back("max-principle-violated");
    return rep;
}

}  // namespace fracburgers
