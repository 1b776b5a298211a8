#include "fracburgers/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracburgers/fracops.hpp"

namespace fracburgers {

DecayReport decay_report(const Trajectory& traj, double t_min, double t_max) {
    const double l2_0 = traj.series.l2.front();
    if (!(l2_0 > 0.0)) {
        // Identically zero data evolves to zero; any nonzero field with zero
        // initial norm has no meaningful ratio.
        for (double v : traj.series.linf)
            if (v != 0.0)
                throw std::invalid_argument("decay_report: initial L2 norm is zero");
        DecayReport rep;
        rep.t_min = t_min;
        rep.t_max = t_max;
        for (std::size_t i = 0; i < traj.series.size(); ++i)
            if (traj.series.t[i] >= t_min && traj.series.t[i] <= t_max) {
                rep.times.push_back(traj.series.t[i]);
                rep.ratios.push_back(0.0);
            }
        return rep;
    }
    DecayReport rep;
    rep.t_min = t_min;
    rep.t_max = t_max;
    const double half_dim = 0.5 * traj.initial.grid.dim;
    if (std::abs(mean(traj.initial)) >
        1e-12 * std::max(max_abs(traj.initial), 1.0))
        rep.flags.push_back("non-mean-zero-initial");
    for (std::size_t i = 0; i < traj.series.size(); ++i) {
        const double t = traj.series.t[i];
        if (t < t_min || t > t_max) continue;
        rep.times.push_back(t);
        rep.ratios.push_back(std::pow(t, half_dim) * traj.series.linf[i] / l2_0);
    }
    for (double r : rep.ratios) rep.sup_ratio = std::max(rep.sup_ratio, r);
    return rep;
}

namespace {

double torus_axis_dist(double x, double c, double length) {
    double d = std::abs(x - c);
    d = std::fmod(d, length);
    return std::min(d, length - d);
}

// Indices whose coordinate lies within the sup-norm ball of radius rad.
std::vector<std::size_t> ball_indices(const Grid& g,
                                      const std::array<double, 2>& center,
                                      double rad) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.total_points(); ++i) {
        bool inside = true;
        for (int a = 0; a < g.dim; ++a)
            inside = inside &&
                     torus_axis_dist(grid_coord(g, i, a), center[a], g.length) <=
                         rad + 1e-15;
        if (inside) idx.push_back(i);
    }
    return idx;
}

int axis_point_count(const Grid& g, double center, double rad) {
    int count = 0;
    for (int i = 0; i < g.n; ++i)
        if (torus_axis_dist(i * g.spacing(), center, g.length) <= rad + 1e-15)
            ++count;
    return count;
}

}  // namespace

OscillationReport oscillation_profile(const Trajectory& traj, double center_t,
                                      const std::array<double, 2>& center_x,
                                      double ratio, int k_max,
                                      bool use_extension) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("oscillation_profile: ratio must be in (0, 1)");
    const Grid& g = traj.initial.grid;

    OscillationReport rep;
    rep.center_t = center_t;
    rep.center_x = center_x;
    rep.ratio = ratio;

    // Deepest level with >= 3 snapshots in the time window and >= 4 grid
    // points per axis.
    int k_used = k_max;
    for (; k_used >= 1; --k_used) {
        const double rad = std::pow(ratio, k_used);
        int snaps = 0;
        for (const Snapshot& s : traj.snapshots)
            if (s.t >= center_t - rad - 1e-12 && s.t <= center_t + 1e-12) ++snaps;
        bool ok = snaps >= 3;
        for (int a = 0; a < g.dim; ++a)
            ok = ok && axis_point_count(g, center_x[a], rad) >= 4;
        if (ok) break;
    }
    if (k_used < 1)
        throw std::invalid_argument(
            "oscillation_profile: even the widest cylinder is unresolvable");
    if (k_used < k_max) rep.flags.push_back("k-max-reduced");
    rep.k_used = k_used;

    for (int k = 1; k <= k_used; ++k) {
        const double rad = std::pow(ratio, k);
        const std::vector<std::size_t> idx = ball_indices(g, center_x, rad);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Snapshot& s : traj.snapshots) {
            if (s.t < center_t - rad - 1e-12 || s.t > center_t + 1e-12) continue;
            if (!use_extension) {
                for (std::size_t i : idx) {
                    lo = std::min(lo, s.field[i]);
                    hi = std::max(hi, s.field[i]);
                }
            } else {
                // Sample the extension on a few levels of [0, rad] as well.
                for (int zi = 0; zi < 5; ++zi) {
                    RealField slice = poisson_semigroup(s.field, rad * zi / 4.0);
                    for (std::size_t i : idx) {
                        lo = std::min(lo, slice[i]);
                        hi = std::max(hi, slice[i]);
                    }
                }
            }
        }
        rep.osc.push_back(hi - lo);
    }

    // Least-squares slope of log osc_k against k log r over positive levels.
    std::vector<double> xs, ys;
    for (int k = 1; k <= k_used; ++k)
        if (rep.osc[k - 1] > 0.0) {
            xs.push_back(k * std::log(ratio));
            ys.push_back(std::log(rep.osc[k - 1]));
        }
    if (xs.size() < 3) {
        rep.flags.push_back("alpha-undefined");
        return rep;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
    }
    const double nf = static_cast<double>(xs.size());
    const double slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / nf;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = slope * xs[i] + intercept;
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - sy / nf) * (ys[i] - sy / nf);
    }
    rep.fitted_alpha = slope;
    rep.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    rep.alpha_defined = rep.r_squared >= 0.8;
    if (!rep.alpha_defined) rep.flags.push_back("low-fit-quality");
    return rep;
}

DuhamelResult duhamel_reconstruct(const Trajectory& traj, double t,
                                  int quad_steps) {
    const SolverConfig& cfg = traj.config;
    if (cfg.alpha != 0.5 || cfg.epsilon != 0.0)
        throw std::invalid_argument(
            "duhamel_reconstruct: needs the critical linear part "
            "(alpha = 1/2, epsilon = 0)");
    if (quad_steps < 2)
        throw std::invalid_argument("duhamel_reconstruct: quad_steps must be >= 2");
    const Grid& g = traj.initial.grid;
    const std::size_t i_t = traj.index_at_exact_time(t);
    const double t_snap = traj.snapshots[i_t].t;

    Spectrum rec = transform(traj.initial);
    for (std::size_t i = 0; i < rec.size(); ++i)
        rec.coeffs[i] *= std::exp(-t_snap * g.wavenumber_magnitude(i));

    if (cfg.nonlinearity_scale != 0.0 && t_snap > 0.0) {
        // Trapezoid over quad_steps+1 nodes, each of which must land on a
        // stored snapshot.
        for (int q = 0; q <= quad_steps; ++q) {
            const double s = t_snap * q / quad_steps;
            const Snapshot& snap = traj.snapshots[traj.index_at_exact_time(s)];
            Spectrum nl = advection_term_spectrum(snap.field, cfg);
            const double w =
                (q == 0 || q == quad_steps ? 0.5 : 1.0) * t_snap / quad_steps;
            for (std::size_t i = 0; i < rec.size(); ++i)
                rec.coeffs[i] += w * nl.coeffs[i] *
                                 std::exp(-(t_snap - s) * g.wavenumber_magnitude(i));
        }
    }

    DuhamelResult out;
    out.field = inverse(rec);
    out.sup_error = max_abs_diff(out.field, traj.snapshots[i_t].field);
    return out;
}

}  // namespace fracburgers
