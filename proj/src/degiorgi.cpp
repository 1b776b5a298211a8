#include "fracburgers/degiorgi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fracburgers/prng.hpp"

namespace fracburgers {

// ---------------------------------------------------------------------------
// Truncations and energy sequences
// ---------------------------------------------------------------------------

RealField truncate(const RealField& field, double level) {
    RealField out(field.grid);
    for (std::size_t i = 0; i < field.size(); ++i)
        out[i] = std::max(field[i] - level, 0.0);
    return out;
}

void TruncationConfig::validate() const {
    if (!(amplitude > 0.0))
        throw std::invalid_argument("truncation: amplitude must be > 0");
    if (!(target_time > 0.0))
        throw std::invalid_argument("truncation: target_time must be > 0");
    if (k_max < 1) throw std::invalid_argument("truncation: k_max must be >= 1");
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("truncation: sign must be +-1");
}

namespace {

double truncated_mass(const RealField& theta, double level, int sign) {
    double s = 0.0;
    for (double v : theta.values) {
        const double w = std::max(sign * v - level, 0.0);
        s += w * w;
    }
    return s * theta.grid.cell_volume();
}

double truncated_dissipation(const RealField& theta, double level, int sign) {
    RealField cut(theta.grid);
    for (std::size_t i = 0; i < theta.size(); ++i)
        cut[i] = std::max(sign * theta[i] - level, 0.0);
    const double h = norms(cut).hhalf;
    return h * h;  // integral of cut * (-Lap)^(1/2) cut
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
        s += 0.5 * (f[i] + f[i - 1]) * (t[i] - t[i - 1]);
    return s;
}

}  // namespace

EnergySequence truncation_energies(const Trajectory& traj,
                                   const TruncationConfig& config) {
    config.validate();
    if (traj.t_final() < config.target_time)
        throw std::invalid_argument(
            "truncation_energies: trajectory must cover [0, t0]");

    EnergySequence seq;
    seq.config = config;
    seq.energies.assign(config.k_max + 1, 0.0);

    for (int k = 0; k <= config.k_max; ++k) {
        const double level = config.level(k);
        const double gate = config.gate(k);
        std::vector<double> times, diss;
        double sup_mass = 0.0;
        for (const Snapshot& snap : traj.snapshots) {
            if (snap.t + 1e-12 < gate) continue;
            sup_mass = std::max(sup_mass,
                                truncated_mass(snap.field, level, config.sign));
            times.push_back(snap.t);
            diss.push_back(truncated_dissipation(snap.field, level, config.sign));
        }
        if (times.size() < 3)
            throw std::invalid_argument(
                "truncation_energies: fewer than 3 snapshots past the deepest gate");
        seq.energies[k] = sup_mass + 2.0 * trapezoid(times, diss);
    }
    return seq;
}

RecurrenceFit fit_recurrence_values(const std::vector<double>& energies, int N) {
    RecurrenceFit fit;
    // Longest run of strictly positive consecutive levels.
    int best_lo = 0, best_hi = -1;
    for (int lo = 0; lo < static_cast<int>(energies.size());) {
        if (energies[lo] <= 0.0) { ++lo; continue; }
        int hi = lo;
        while (hi + 1 < static_cast<int>(energies.size()) && energies[hi + 1] > 0.0)
            ++hi;
        if (hi - lo > best_hi - best_lo) { best_lo = lo; best_hi = hi; }
        lo = hi + 1;
    }
    if (best_hi - best_lo + 1 < 4) {
        fit.vacuous = true;
        return fit;
    }
    fit.first_k = best_lo + 1;
    fit.last_k = best_hi;

    // log U_k = exponent * log U_(k-1) + k * log c0, least squares in both.
    double sxx = 0, sxz = 0, szz = 0, sxy = 0, szy = 0;
    std::vector<double> xs, zs, ys;
    for (int k = fit.first_k; k <= fit.last_k; ++k) {
        const double x = std::log(energies[k - 1]);
        const double z = static_cast<double>(k);
        const double y = std::log(energies[k]);
        xs.push_back(x); zs.push_back(z); ys.push_back(y);
        sxx += x * x; sxz += x * z; szz += z * z; sxy += x * y; szy += z * y;
    }
    const double det = sxx * szz - sxz * sxz;
    if (std::abs(det) < 1e-12 * std::max(sxx * szz, 1.0)) {
        fit.vacuous = true;
        return fit;
    }
    fit.exponent = (sxy * szz - sxz * szy) / det;
    const double logc0 = (sxx * szy - sxz * sxy) / det;
    fit.c0 = std::exp(logc0);

    double ss_res = 0, ss_tot = 0, ymean = 0;
    for (double y : ys) ymean += y;
    ymean /= ys.size();
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double pred = fit.exponent * xs[i] + logc0 * zs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    // Smallest C making U_k <= 2^(k(1+2/N)) C U_(k-1)^(1+1/N) hold on the
    // fitted pairs.
    const double p = 1.0 + 1.0 / N;
    double c = 0.0;
    for (int k = fit.first_k; k <= fit.last_k; ++k)
        c = std::max(c, energies[k] / (std::pow(2.0, k * (1.0 + 2.0 / N)) *
                                       std::pow(energies[k - 1], p)));
    fit.bounding_constant = c;
    return fit;
}

RecurrenceFit fit_recurrence(const EnergySequence& seq, int N) {
    return fit_recurrence_values(seq.energies, N);
}

// ---------------------------------------------------------------------------
// Cutoffs
// ---------------------------------------------------------------------------

RealField AffineRescale::apply(const RealField& theta) const {
    validate();
    RealField out(theta.grid);
    for (std::size_t i = 0; i < theta.size(); ++i)
        out[i] = beta * (theta[i] - level);
    return out;
}

void AffineRescale::validate() const {
    if (beta == 0.0) throw std::invalid_argument("rescale: beta must be nonzero");
}

namespace {

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double smoothstep_slope(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double v = u * (1.0 - u);
    return 30.0 * v * v;
}

double torus_axis_distance(double x, double c, double length) {
    double d = std::abs(x - c);
    d = std::fmod(d, length);
    return std::min(d, length - d);
}

// Sup-norm distance from the center, so level sets are cubes.
double torus_sup_distance(const Grid& g, std::size_t flat, double center) {
    double d = 0.0;
    for (int a = 0; a < g.dim; ++a)
        d = std::max(d, torus_axis_distance(grid_coord(g, flat, a), center,
                                            g.length));
    return d;
}

}  // namespace

double CutoffMember::inner_radius() const {
    return scale * (1.0 + std::pow(2.0, -(k + 0.5)));
}

double CutoffMember::outer_radius() const {
    return scale * (1.0 + std::pow(2.0, -k));
}

double CutoffMember::profile(double distance) const {
    const double r0 = inner_radius(), r1 = outer_radius();
    return smoothstep((r1 - distance) / (r1 - r0));
}

double CutoffMember::profile_slope(double distance) const {
    const double r0 = inner_radius(), r1 = outer_radius();
    return -smoothstep_slope((r1 - distance) / (r1 - r0)) / (r1 - r0);
}

RealField CutoffMember::field(const Grid& g) const {
    RealField out(g);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = profile(torus_sup_distance(g, i, center));
    return out;
}

double CutoffMember::gradient_bound_ratio(const Grid& g) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.total_points(); ++i)
        worst = std::max(worst,
                         std::abs(profile_slope(torus_sup_distance(g, i, center))));
    return worst / std::pow(2.0, k);
}

DiagnosticReport CutoffMember::verify(const Grid& g) const {
    DiagnosticReport rep;
    rep.name = "cutoff-family-bounds";
    const double r0 = inner_radius(), r1 = outer_radius();
    bool sandwich = true;
    for (std::size_t i = 0; i < g.total_points(); ++i) {
        const double d = torus_sup_distance(g, i, center);
        const double v = profile(d);
        if (v < -1e-15 || v > 1.0 + 1e-15) sandwich = false;
        if (d <= r0 && v != 1.0) sandwich = false;
        if (d >= r1 && v != 0.0) sandwich = false;
    }
    const double ratio = gradient_bound_ratio(g);
    rep.measured["k"] = k;
    rep.measured["grad_over_2k"] = ratio;
    rep.measured["grad_constant_bound"] = 10.0 / scale;
    rep.passed = sandwich && ratio <= 10.0 / scale;
    if (!sandwich) rep.flags.push_back("sandwich-violated");
    return rep;
}

double ExtensionCutoff::value(const Grid& g, std::size_t flat, double z) const {
    const double d = torus_sup_distance(g, flat, center);
    const double px = smoothstep((x_out - d) / (x_out - x_in));
    const double pz = smoothstep((z_out - z) / (z_out - z_in));
    return px * pz;
}

double ExtensionCutoff::grad_sq(const Grid& g, std::size_t flat, double z) const {
    const double d = torus_sup_distance(g, flat, center);
    const double ux = (x_out - d) / (x_out - x_in);
    const double uz = (z_out - z) / (z_out - z_in);
    const double px = smoothstep(ux), pz = smoothstep(uz);
    const double dpx = smoothstep_slope(ux) / (x_out - x_in);
    const double dpz = smoothstep_slope(uz) / (z_out - z_in);
    return dpx * dpx * pz * pz + px * px * dpz * dpz;
}

void ExtensionCutoff::validate(const Grid& g) const {
    if (!(0.0 < x_in && x_in < x_out && x_out <= 4.0))
        throw std::invalid_argument("cutoff: need 0 < x_in < x_out <= 4");
    if (!(0.0 < z_in && z_in < z_out && z_out <= 4.0))
        throw std::invalid_argument("cutoff: need 0 < z_in < z_out <= 4");
    if (g.length < 4.0 * x_out)
        throw std::invalid_argument(
            "cutoff: torus too short, support would wrap (need length >= 4 x_out)");
}

// ---------------------------------------------------------------------------
// Local energy inequality
// ---------------------------------------------------------------------------

namespace {

// Nonuniform 3-point first derivative along a sampled column.
void z_derivative(const std::vector<double>& z, const std::vector<double>& f,
                  std::vector<double>& out) {
    const std::size_t n = z.size();
    out.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == 0) {
            const double h0 = z[1] - z[0], h1 = z[2] - z[1];
            out[0] = (-(2.0 * h0 + h1) / (h0 * (h0 + h1))) * f[0] +
                     ((h0 + h1) / (h0 * h1)) * f[1] -
                     (h0 / (h1 * (h0 + h1))) * f[2];
        } else if (j == n - 1) {
            const double h0 = z[n - 2] - z[n - 3], h1 = z[n - 1] - z[n - 2];
            out[n - 1] = (h1 / (h0 * (h0 + h1))) * f[n - 3] -
                         ((h0 + h1) / (h0 * h1)) * f[n - 2] +
                         ((h0 + 2.0 * h1) / (h1 * (h0 + h1))) * f[n - 1];
        } else {
            const double hm = z[j] - z[j - 1], hp = z[j + 1] - z[j];
            out[j] = (-hp / (hm * (hm + hp))) * f[j - 1] +
                     ((hp - hm) / (hm * hp)) * f[j] +
                     (hm / (hp * (hm + hp))) * f[j + 1];
        }
    }
}

std::vector<double> trapezoid_weights(const std::vector<double>& z) {
    std::vector<double> w(z.size(), 0.0);
    for (std::size_t j = 1; j < z.size(); ++j) {
        const double h = z[j] - z[j - 1];
        w[j - 1] += 0.5 * h;
        w[j] += 0.5 * h;
    }
    return w;
}

}  // namespace

LEIReport local_energy_residual(const Trajectory& traj,
                                const AffineRescale& rescale,
                                const ExtensionCutoff& eta, double sigma,
                                double t, const std::vector<double>& z_levels,
                                double sobolev_constant) {
    rescale.validate();
    const Grid& g = traj.initial.grid;
    eta.validate(g);
    if (!(sigma < t))
        throw std::invalid_argument("local_energy_residual: need sigma < t");
    if (z_levels.size() < 3 || z_levels.front() != 0.0 ||
        z_levels.back() + 1e-12 < eta.z_out)
        throw std::invalid_argument(
            "local_energy_residual: z_levels must start at 0 and cover z_out");
    const std::size_t i_sigma = traj.index_at_time(sigma);
    const std::size_t i_t = traj.index_at_time(t);
    if (i_sigma >= i_t)
        throw std::invalid_argument(
            "local_energy_residual: window collapses onto one snapshot");

    const std::size_t npts = g.total_points();
    const std::size_t nz = z_levels.size();
    const double cellvol = g.cell_volume();
    const std::vector<double> wz = trapezoid_weights(z_levels);

    double sup_theta = 0.0;
    for (double v : traj.series.linf) sup_theta = std::max(sup_theta, v);
    const double phi = 2.0 * g.dim * sobolev_constant *
                       (std::abs(rescale.level) + sup_theta) *
                       (std::abs(rescale.level) + sup_theta);

    // Precompute the cutoff and its gradient on every level.
    std::vector<RealField> eta_xz, eta_gradsq;
    eta_xz.reserve(nz);
    eta_gradsq.reserve(nz);
    for (std::size_t j = 0; j < nz; ++j) {
        RealField e(g), gq(g);
        for (std::size_t i = 0; i < npts; ++i) {
            e[i] = eta.value(g, i, z_levels[j]);
            gq[i] = eta.grad_sq(g, i, z_levels[j]);
        }
        eta_xz.push_back(std::move(e));
        eta_gradsq.push_back(std::move(gq));
    }

    std::vector<double> times, grad_energy, cut_ext, cut_bdry;
    double mass_sigma = 0.0, mass_t = 0.0;

    for (std::size_t is = i_sigma; is <= i_t; ++is) {
        const Snapshot& snap = traj.snapshots[is];
        Spectrum spec = transform(snap.field);

        // Positive part of the rescaled extension on every level.
        std::vector<RealField> upos;
        upos.reserve(nz);
        for (std::size_t j = 0; j < nz; ++j) {
            Spectrum s = spec;
            for (std::size_t i = 0; i < s.size(); ++i)
                s.coeffs[i] *= std::exp(-z_levels[j] * g.wavenumber_magnitude(i));
            RealField slice = inverse(s);
            for (std::size_t i = 0; i < npts; ++i)
                slice[i] = std::max(rescale.beta * (slice[i] - rescale.level), 0.0);
            upos.push_back(std::move(slice));
        }

        // Gradient energy of eta * upos: spectral in x, finite differences
        // across the z levels.
        double ge = 0.0, ce = 0.0;
        std::vector<RealField> prod;
        prod.reserve(nz);
        for (std::size_t j = 0; j < nz; ++j) {
            RealField p(g);
            for (std::size_t i = 0; i < npts; ++i) p[i] = eta_xz[j][i] * upos[j][i];
            prod.push_back(std::move(p));
        }
        for (std::size_t j = 0; j < nz; ++j) {
            double slice_sum = 0.0;
            for (int axis = 0; axis < g.dim; ++axis) {
                RealField dx = derivative(prod[j], axis);
                for (std::size_t i = 0; i < npts; ++i) slice_sum += dx[i] * dx[i];
            }
            ge += wz[j] * slice_sum;
            double cut_sum = 0.0;
            for (std::size_t i = 0; i < npts; ++i)
                cut_sum += eta_gradsq[j][i] * upos[j][i] * upos[j][i];
            ce += wz[j] * cut_sum;
        }
        // z-derivative columns.
        {
            std::vector<double> col(nz), dcol(nz);
            for (std::size_t i = 0; i < npts; ++i) {
                for (std::size_t j = 0; j < nz; ++j) col[j] = prod[j][i];
                z_derivative(z_levels, col, dcol);
                for (std::size_t j = 0; j < nz; ++j)
                    ge += wz[j] * dcol[j] * dcol[j];
            }
        }
        ge *= cellvol;
        ce *= cellvol;

        double cb = 0.0, mass = 0.0;
        const RealField& u0 = upos[0];
        for (std::size_t i = 0; i < npts; ++i) {
            cb += eta_gradsq[0][i] * u0[i] * u0[i];
            const double m = eta_xz[0][i] * u0[i];
            mass += m * m;
        }
        cb *= cellvol;
        mass *= cellvol;

        times.push_back(snap.t);
        grad_energy.push_back(ge);
        cut_ext.push_back(ce);
        cut_bdry.push_back(cb);
        if (is == i_sigma) mass_sigma = mass;
        if (is == i_t) mass_t = mass;
    }

    LEIReport rep;
    rep.rescale = rescale;
    rep.sigma = traj.snapshots[i_sigma].t;
    rep.t = traj.snapshots[i_t].t;
    rep.phi_used = phi;
    rep.lhs = 0.5 * trapezoid(times, grad_energy) + 0.5 * mass_t;
    rep.rhs = 0.5 * mass_sigma + phi * trapezoid(times, cut_bdry) +
              trapezoid(times, cut_ext);
    rep.residual = rep.rhs - rep.lhs;
    rep.scale = std::max(rep.lhs, rep.rhs);
    return rep;
}

double measure_sobolev_constant(const Grid& g, int samples, std::uint64_t seed) {
    CounterRng rng(seed);
    const int band = std::max(2, g.n / 8);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Spectrum spec(g);
        for (std::size_t i = 0; i < spec.size(); ++i) {
            int m0, m1 = 0;
            if (g.dim == 1) {
                m0 = g.mode(static_cast<int>(i));
            } else {
                m0 = g.mode(static_cast<int>(i / static_cast<std::size_t>(g.n)));
                m1 = g.mode(static_cast<int>(i % static_cast<std::size_t>(g.n)));
            }
            if (m0 == 0 && m1 == 0) continue;  // mean-zero
            if (std::abs(m0) > band || std::abs(m1) > band) continue;
            const double amp = rng.next_symmetric();
            const double phase = 2.0 * M_PI * rng.next_unit();
            spec.coeffs[i] = amp * std::complex<double>(std::cos(phase),
                                                        std::sin(phase));
        }
        // Re-symmetrize so the field is real.
        RealField f = inverse(spec);
        FieldNorms nm = norms(f);
        if (nm.hhalf == 0.0) continue;
        double lhs;
        if (g.dim == 1) {
            lhs = nm.linf * nm.linf;
        } else {
            double s4 = 0.0;
            for (double v : f.values) s4 += v * v * v * v;
            lhs = std::sqrt(s4 * g.cell_volume());  // ||f||_4^2
        }
        worst = std::max(worst, lhs / (nm.hhalf * nm.hhalf));
    }
    return 2.0 * worst;  // any finite upper bound preserves the direction
}

// ---------------------------------------------------------------------------
// Vanishing property and isoperimetric ratio
// ---------------------------------------------------------------------------

double vanishing_check(const RealField& field, double R, double L,
                       int refine_to) {
    if (!(R > 0.0)) throw std::invalid_argument("vanishing_check: R must be > 0");
    const Grid& g = field.grid;
    int nf = refine_to;
    if (nf <= 0) {
        if (g.dim == 1) {
            nf = g.n;
            while (nf < 262144) nf *= 2;
        } else {
            nf = std::min(4 * g.n, 1024);
        }
    }
    nf = std::max(nf, g.n);
    if (nf % 2 != 0) ++nf;
    const RealField fine = resample(field, nf);

    double worst = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
        const RealField df = derivative(fine, axis);
        double s = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i)
            s += saturate(fine[i], R) * df[i] * std::max(fine[i] - L, 0.0);
        worst = std::max(worst, std::abs(s * fine.grid.cell_volume()));
    }
    return worst;
}

DiagnosticReport isoperimetric_ratio(const BoxField& omega) {
    const BoxGrid& g = omega.grid;
    double nodevol = 1.0;
    for (int a = 0; a < g.dims; ++a) nodevol *= g.spacing(a);

    std::size_t na = 0, nb = 0, nc = 0;
    for (double v : omega.values) {
        if (v <= 0.0) ++na;
        else if (v >= 1.0) ++nb;
        else ++nc;
    }
    const double ma = na * nodevol, mb = nb * nodevol, mc = nc * nodevol;

    // H^1 seminorm by finite differences (central inside, one-sided at the
    // faces).
    double grad2 = 0.0;
    for (int i = 0; i < g.npts[0]; ++i)
        for (int j = 0; j < std::max(g.npts[1], 1); ++j)
            for (int k = 0; k < std::max(g.npts[2], 1); ++k) {
                const std::array<int, 3> idx = {i, j, k};
                double gs = 0.0;
                for (int a = 0; a < g.dims; ++a) {
                    const double h = g.spacing(a);
                    auto shifted = [&](int d) {
                        std::array<int, 3> s = idx;
                        s[a] += d;
                        return omega.at(s[0], s[1], s[2]);
                    };
                    double dv;
                    if (idx[a] == 0) dv = (shifted(1) - shifted(0)) / h;
                    else if (idx[a] == g.npts[a] - 1)
                        dv = (shifted(0) - shifted(-1)) / h;
                    else dv = (shifted(1) - shifted(-1)) / (2.0 * h);
                    gs += dv * dv;
                }
                grad2 += gs;
            }
    const double h1 = std::sqrt(grad2 * nodevol);

    DiagnosticReport rep;
    rep.name = "isoperimetric-ratio";
    rep.measured["measure_nonpositive"] = ma;
    rep.measured["measure_above_one"] = mb;
    rep.measured["measure_between"] = mc;
    rep.measured["h1_seminorm"] = h1;
    double ratio;
    if (ma * mb == 0.0) {
        ratio = 0.0;
        rep.passed = true;
    } else if (mc == 0.0) {
        ratio = std::numeric_limits<double>::infinity();
        rep.passed = false;
        rep.flags.push_back("discontinuous-sample");
    } else {
        ratio = (ma * mb) / (h1 * std::sqrt(mc));
        rep.passed = std::isfinite(ratio);
    }
    rep.measured["ratio"] = ratio;
    return rep;
}

// ---------------------------------------------------------------------------
// Constants machinery
// ---------------------------------------------------------------------------

double poisson_kernel_l2(int N) {
    if (N != 1 && N != 2)
        throw std::invalid_argument("poisson_kernel_l2: N must be 1 or 2");
    // ||P(1)||_2^2 = c_N^2 integral (1 + |x|^2)^-(N+1) dx with the unit-mass
    // normalization c_N = Gamma((N+1)/2) / pi^((N+1)/2). Radial integral via
    // r = tan(u) on [0, pi/2], Simpson with a dense fixed mesh.
    const double c_n = std::tgamma(0.5 * (N + 1)) / std::pow(M_PI, 0.5 * (N + 1));
    const int m = 20000;  // even
    const double h = 0.5 * M_PI / m;
    auto integrand = [&](double u) {
        const double r = std::tan(u);
        const double sec2 = 1.0 + r * r;          // dr = sec^2 du
        const double w = std::pow(1.0 + r * r, -(N + 1));
        const double surface = N == 1 ? 2.0 : 2.0 * M_PI * r;
        return surface * w * sec2;
    };
    double s = integrand(0.0);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    // tan is singular at the right endpoint but the integrand vanishes there.
    const double integral_val = s * h / 3.0;
    return std::sqrt(c_n * c_n * integral_val);
}

bool check_depth_condition(double delta, double lambda, int N, int k) {
    // log of 2N (2 sqrt2) e^{-1/(4 (sqrt2+1) (2 delta)^k)} <= log(lambda) -
    // (k+2) log 2.
    const double pow_term = std::pow(2.0 * delta, k);
    const double lhs_log = std::log(4.0 * std::sqrt(2.0) * N) -
                           1.0 / (4.0 * (std::sqrt(2.0) + 1.0) * pow_term);
    const double rhs_log = std::log(lambda) - (k + 2) * std::log(2.0);
    return lhs_log <= rhs_log;
}

bool check_tail_condition(double M, double delta, double lambda, int N, int k,
                          double p1_l2) {
    const double lhs_log = -0.5 * k * std::log(M) -
                           0.5 * N * (k + 1) * std::log(delta) + std::log(p1_l2);
    const double rhs_log = std::log(lambda) - (k + 2) * std::log(2.0);
    return lhs_log <= rhs_log;
}

bool check_closure_condition(double M, double c0, int N, int k) {
    // M^-k >= c0^k M^-(k-3)(1+1/N)  <=>  ((k-3)(1+1/N) - k) log M >= k log c0.
    const double coeff = (k - 3.0) * (1.0 + 1.0 / N) - k;
    return coeff * std::log(M) >= k * std::log(c0);
}

DeGiorgiConstants degiorgi_constants(double lambda, int N, double c0,
                                     double phi, const ConstantsOptions& opts) {
    if (!(lambda > 0.0 && lambda < 0.5))
        throw std::invalid_argument("degiorgi_constants: lambda must be in (0, 1/2)");
    if (!(c0 > 1.0)) throw std::invalid_argument("degiorgi_constants: c0 must be > 1");
    if (!(phi > 0.0)) throw std::invalid_argument("degiorgi_constants: phi must be > 0");
    if (N != 1 && N != 2)
        throw std::invalid_argument("degiorgi_constants: N must be 1 or 2");

    DeGiorgiConstants out;
    out.lambda = lambda;
    out.phi = phi;
    out.c0 = c0;
    out.N = N;
    out.poisson_l2 = poisson_kernel_l2(N);
    const int K = opts.k_verify > 0 ? opts.k_verify : std::max(40, 12 * N + 25);
    out.verified_k = K;

    // Largest delta on the dyadic ladder: smaller delta only helps, so the
    // admissible exponents form an upper set and bisection applies.
    auto delta_ok = [&](int j) {
        const double d = std::pow(2.0, -j);
        for (int k = 1; k <= K; ++k)
            if (!check_depth_condition(d, lambda, N, k)) return false;
        return true;
    };
    int lo = 1, hi = 60;
    if (!delta_ok(hi))
        throw std::runtime_error("degiorgi_constants: no admissible delta on ladder");
    if (delta_ok(lo)) {
        hi = lo;
    } else {
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (delta_ok(mid) ? hi : lo) = mid;
        }
    }
    out.delta = std::pow(2.0, -hi);

    // Smallest power-of-two M: larger M only helps both remaining conditions.
    const int k_cc_hi = std::max(K, 12 * N + 25);
    auto m_ok = [&](double M) {
        for (int k = 1; k <= K; ++k)
            if (!check_tail_condition(M, out.delta, lambda, N, k, out.poisson_l2))
                return false;
        for (int k = 12 * N; k <= k_cc_hi; ++k)
            if (!check_closure_condition(M, c0, N, k)) return false;
        return true;
    };
    double M = 2.0;
    while (M < std::pow(2.0, 1000) && !m_ok(M)) M *= 2.0;
    if (!m_ok(M))
        throw std::runtime_error("degiorgi_constants: no admissible M within bounds");
    out.recurrence_base = M;

    // eps0 bound, assembled in log2 space (M^12N overflows doubles easily).
    const double log2_first = -(12.0 * N * std::log2(M) + 24.0 * N +
                                std::log2(opts.c_env * (1.0 + phi)));
    const double first = std::exp2(log2_first);
    const double second = std::pow(2.0 * lambda / (opts.c_tilde * out.poisson_l2), 2);
    out.smallness_bound = std::min(first, second);
    if (first == 0.0) out.flags.push_back("eps0-underflow");
    if (opts.c_tilde == 1.0) out.flags.push_back("eps0-conditional-on-unit-trace-constant");

    // Re-verify everything post hoc rather than trusting the search.
    bool ok = true;
    for (int k = 1; k <= K; ++k) {
        ok = ok && check_depth_condition(out.delta, lambda, N, k);
        ok = ok && check_tail_condition(M, out.delta, lambda, N, k, out.poisson_l2);
    }
    for (int k = 12 * N; k <= k_cc_hi; ++k)
        ok = ok && check_closure_condition(M, c0, N, k);
    if (!ok)
        throw std::runtime_error("degiorgi_constants: post-hoc recheck failed");
    return out;
}

// ---------------------------------------------------------------------------
// Cutoff-localized energy variant
// ---------------------------------------------------------------------------

LocalizedEnergySequence localized_energies(const Trajectory& traj,
                                           const LocalizedEnergyConfig& config) {
    config.rescale.validate();
    if (!(config.lambda > 0.0 && config.lambda < 2.0))
        throw std::invalid_argument("localized_energies: lambda must be in (0, 2)");
    if (!(config.delta > 0.0 && config.delta < 1.0))
        throw std::invalid_argument("localized_energies: delta must be in (0, 1)");
    const Grid& g = traj.initial.grid;
    const double floor_dz =
        config.z_depth_floor > 0.0 ? config.z_depth_floor : g.spacing() / 4.0;

    LocalizedEnergySequence out;
    out.config = config;
    int k_used = config.k_max;
    while (k_used > 1 && std::pow(config.delta, k_used) < 4.0 * floor_dz)
        --k_used;
    if (k_used < config.k_max) out.flags.push_back("k-max-reduced");
    out.k_used = k_used;

    const std::size_t npts = g.total_points();
    const double cellvol = g.cell_volume();

    for (int k = 1; k <= k_used; ++k) {
        const double level = config.level(k);
        const double gate = config.gate(k);
        const double depth = std::pow(config.delta, k);
        CutoffMember eta{k, config.center, 1.0};
        const RealField eta_x = eta.field(g);

        std::vector<double> zg(config.z_points);
        for (int j = 0; j < config.z_points; ++j)
            zg[j] = depth * j / (config.z_points - 1);
        const std::vector<double> wz = trapezoid_weights(zg);

        std::vector<double> times, grad_series;
        double sup_mass = 0.0;
        for (const Snapshot& snap : traj.snapshots) {
            if (snap.t + 1e-12 < gate || snap.t > config.t_ref + 1e-12) continue;
            Spectrum spec = transform(snap.field);

            std::vector<RealField> prod;
            prod.reserve(zg.size());
            for (std::size_t j = 0; j < zg.size(); ++j) {
                Spectrum s = spec;
                for (std::size_t i = 0; i < s.size(); ++i)
                    s.coeffs[i] *= std::exp(-zg[j] * g.wavenumber_magnitude(i));
                RealField slice = inverse(s);
                for (std::size_t i = 0; i < npts; ++i) {
                    const double u = config.rescale.beta *
                                     (slice[i] - config.rescale.level);
                    slice[i] = eta_x[i] * std::max(u - level, 0.0);
                }
                prod.push_back(std::move(slice));
            }

            double ge = 0.0;
            for (std::size_t j = 0; j < zg.size(); ++j) {
                double slice_sum = 0.0;
                for (int axis = 0; axis < g.dim; ++axis) {
                    RealField dx = derivative(prod[j], axis);
                    for (std::size_t i = 0; i < npts; ++i)
                        slice_sum += dx[i] * dx[i];
                }
                ge += wz[j] * slice_sum;
            }
            std::vector<double> col(zg.size()), dcol(zg.size());
            for (std::size_t i = 0; i < npts; ++i) {
                for (std::size_t j = 0; j < zg.size(); ++j) col[j] = prod[j][i];
                z_derivative(zg, col, dcol);
                for (std::size_t j = 0; j < zg.size(); ++j)
                    ge += wz[j] * dcol[j] * dcol[j];
            }
            ge *= cellvol;

            double mass = 0.0;
            for (std::size_t i = 0; i < npts; ++i) {
                const double u = config.rescale.beta *
                                 (snap.field[i] - config.rescale.level);
                const double m = eta_x[i] * std::max(u - level, 0.0);
                mass += m * m;
            }
            mass *= cellvol;

            times.push_back(snap.t);
            grad_series.push_back(ge);
            sup_mass = std::max(sup_mass, mass);
        }
        if (times.size() < 2)
            throw std::invalid_argument(
                "localized_energies: window holds fewer than 2 snapshots");
        out.energies.push_back(trapezoid(times, grad_series) + sup_mass);
    }
    return out;
}

}  // namespace fracburgers
