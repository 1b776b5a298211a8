#include "doctest.h"

#include <cmath>

#include "fracburgers/degiorgi.hpp"
#include "fracburgers/prng.hpp"

using namespace fracburgers;

namespace {

RealField bump(const Grid& g, double amp, double width) {
    const double c = 0.5 * g.length;
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double d = std::abs(grid_coord(g, i, 0) - c);
        d = std::min(d, g.length - d);
        f[i] = amp * std::exp(-d * d / (2.0 * width * width));
    }
    return f;
}

RealField random_band_limited(const Grid& g, int band, std::uint64_t seed) {
    CounterRng rng(seed);
    RealField f(g);
    for (int m = 1; m <= band; ++m) {
        const double a = rng.next_symmetric();
        const double p = 2.0 * M_PI * rng.next_unit();
        const double k = 2.0 * M_PI / g.length * m;
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] += a * std::cos(k * grid_coord(g, i, 0) + p) / std::sqrt(band);
    }
    return f;
}

}  // namespace

TEST_CASE("truncate: positive part of the shifted field") {
    Grid g = make_grid(1, 64, 2.0 * M_PI);
    RealField f = bump(g, 1.0, 0.5);

    RealField above = truncate(f, 2.0);  // level above the max
    CHECK(max_abs(above) == 0.0);

    RealField deep = truncate(f, -100.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(deep[i] == doctest::Approx(f[i] + 100.0).epsilon(1e-14));

    RealField c(g, 3.0);
    RealField tc = truncate(c, 1.25);
    for (double v : tc.values) CHECK(v == doctest::Approx(1.75));

    // Monotone in the level.
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RealField r = random_band_limited(g, 8, seed);
        RealField ta = truncate(r, 0.1), tb = truncate(r, 0.3);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(ta[i] >= tb[i]);
    }
}

TEST_CASE("truncation energies: nonpositive data gives the zero sequence") {
    Grid g = make_grid(1, 128, 2.0 * M_PI);
    RealField f = bump(g, -0.5, 0.6);  // theta <= 0 throughout
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    Trajectory traj = run(f, cfg);
    TruncationConfig tc;
    tc.amplitude = 1.0;
    tc.target_time = 0.5;
    tc.k_max = 8;
    EnergySequence seq = truncation_energies(traj, tc);
    for (int k = 1; k < static_cast<int>(seq.energies.size()); ++k)
        CHECK(seq.energies[k] == 0.0);
}

TEST_CASE("truncation energies: constant-in-time closed form") {
    Grid g = make_grid(1, 64, 2.0 * M_PI);
    const double c = 1.2;
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.t_end = 1.0;
    Trajectory traj = run(RealField(g, c), cfg);
    TruncationConfig tc;
    tc.amplitude = 1.0;  // M < c so every level stays positive
    tc.target_time = 0.5;
    tc.k_max = 6;
    EnergySequence seq = truncation_energies(traj, tc);
    for (int k = 0; k <= tc.k_max; ++k) {
        const double excess = c - tc.level(k);
        // Constant truncations carry no H^1/2 energy.
        CHECK(seq.energies[k] ==
              doctest::Approx(excess * excess * g.volume()).epsilon(1e-12));
    }
}

TEST_CASE("truncation energies: nonincreasing in k on solver runs") {
    Grid g = make_grid(1, 256, 2.0 * M_PI);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.snapshot_stride = 20;
    Trajectory traj = run(bump(g, 0.8, 0.5), cfg);
    TruncationConfig tc;
    tc.amplitude = 0.6;
    tc.target_time = 0.5;
    tc.k_max = 12;
    EnergySequence seq = truncation_energies(traj, tc);
    for (std::size_t k = 1; k < seq.energies.size(); ++k) {
        CHECK(seq.energies[k] >= 0.0);
        CHECK(seq.energies[k] <=
              seq.energies[k - 1] + 1e-12 * std::max(seq.energies[0], 1.0));
    }
}

TEST_CASE("truncation energies: insufficient snapshot coverage is an error") {
    Grid g = make_grid(1, 64, 2.0 * M_PI);
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.t_end = 1.0;
    cfg.snapshot_stride = 10;  // snapshots every 0.5
    Trajectory traj = run(bump(g, 0.5, 0.5), cfg);
    TruncationConfig tc;
    tc.amplitude = 1.0;
    tc.target_time = 0.9;
    tc.k_max = 10;
    CHECK_THROWS_AS(truncation_energies(traj, tc), std::invalid_argument);
}

TEST_CASE("recurrence fit: synthetic doubly-exponential law") {
    // U_k = (1/4)^(2^k) satisfies log U_k = 2 log U_(k-1) exactly, the N = 1
    // recurrence shape with unit prefactor.
    std::vector<double> u;
    for (int k = 0; k <= 7; ++k) u.push_back(std::pow(0.25, std::pow(2.0, k)));
    RecurrenceFit fit = fit_recurrence_values(u, 1);
    CHECK(!fit.vacuous);
    CHECK(std::abs(fit.exponent - 2.0) < 0.05);
    CHECK(fit.c0 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fit.r_squared > 0.999);
}

TEST_CASE("recurrence fit: collapsed sequences report a vacuous pass") {
    std::vector<double> u = {0.1, 0.0, 0.0, 0.0, 0.0};
    CHECK(fit_recurrence_values(u, 1).vacuous);
    std::vector<double> three = {0.1, 0.05, 0.01, 0.0};
    CHECK(fit_recurrence_values(three, 1).vacuous);
}

TEST_CASE("cutoff family: sandwich and gradient bounds on the grid") {
    Grid g = make_grid(1, 1024, 16.0);
    for (int k = 1; k <= 4; ++k) {
        CutoffMember eta{k, 8.0, 1.0};
        DiagnosticReport rep = eta.verify(g);
        CHECK(rep.passed);
        CHECK(rep.at("grad_over_2k") <= 10.0);
    }
    Grid g2 = make_grid(2, 128, 16.0);
    CutoffMember eta2{2, 8.0, 1.0};
    CHECK(eta2.verify(g2).passed);
}

TEST_CASE("extension cutoff validates its geometry") {
    Grid g = make_grid(1, 512, 16.0);
    ExtensionCutoff eta;
    eta.center = 8.0;
    CHECK_NOTHROW(eta.validate(g));
    ExtensionCutoff bad = eta;
    bad.x_out = 5.0;
    CHECK_THROWS_AS(bad.validate(g), std::invalid_argument);
    Grid small = make_grid(1, 64, 2.0 * M_PI);  // too short to host B_4
    CHECK_THROWS_AS(eta.validate(small), std::invalid_argument);
}

TEST_CASE("local energy inequality: empty positive part gives 0 = 0") {
    Grid g = make_grid(1, 256, 16.0);
    SolverConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_end = 0.2;
    cfg.snapshot_stride = 10;
    Trajectory traj = run(bump(g, 0.5, 1.5), cfg);
    AffineRescale rs{1.0, 10.0};  // level far above the field range
    ExtensionCutoff eta;
    eta.center = 8.0;
    std::vector<double> zg;
    for (int i = 0; i <= 16; ++i) zg.push_back(eta.z_out * i / 16.0);
    LEIReport rep = local_energy_residual(traj, rs, eta, 0.0, 0.1, zg, 0.2);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.residual == 0.0);
}

TEST_CASE("local energy inequality: dissipative and critical runs") {
    Grid g = make_grid(1, 512, 16.0);
    RealField f0 = bump(g, 0.5, 1.5);
    const double c_sob = measure_sobolev_constant(g);
    for (double nl : {0.0, 1.0}) {
        SolverConfig cfg;
        cfg.dt = 2e-3;
        cfg.t_end = 0.5;
        cfg.snapshot_stride = 25;
        cfg.nonlinearity_scale = nl;
        Trajectory traj = run(f0, cfg);
        REQUIRE(!traj.aborted);
        double c_theta = 0.0;
        for (double v : traj.series.linf) c_theta = std::max(c_theta, v);

        CounterRng rng(11);
        int nontrivial = 0;
        for (int s = 0; s < 20; ++s) {
            ExtensionCutoff eta;
            eta.center = 8.0;
            eta.x_in = 1.0 + rng.next_unit();
            eta.x_out = eta.x_in + 0.5 + rng.next_unit() * (4.0 - eta.x_in - 0.5);
            eta.z_in = 0.5 + rng.next_unit();
            eta.z_out = eta.z_in + 0.5 + rng.next_unit() * (4.0 - eta.z_in - 0.5);
            std::vector<double> zg(33);
            for (int i = 0; i < 33; ++i) zg[i] = eta.z_out * i / 32.0;
            const std::size_t count = traj.snapshots.size();
            const std::size_t i_sigma = rng.next_u64() % (count - 1);
            const std::size_t i_t =
                i_sigma + 1 + rng.next_u64() % (count - 1 - i_sigma);
            AffineRescale rs;
            rs.beta = (rng.next_unit() < 0.5 ? -1.0 : 1.0) *
                      (1.0 / c_theta) * (1.0 + 3.0 * rng.next_unit());
            // Mix informative levels (inside the field range) with free ones.
            rs.level = s % 2 == 0 ? 0.4 * c_theta * rng.next_symmetric()
                                  : 6.0 * c_theta * rng.next_symmetric();
            LEIReport rep = local_energy_residual(
                traj, rs, eta, traj.snapshots[i_sigma].t,
                traj.snapshots[i_t].t, zg, c_sob);
            CHECK(rep.lhs >= 0.0);
            if (rep.scale > 0.0) {
                ++nontrivial;
                CHECK(rep.residual >= -1e-6 * rep.scale);
            }
        }
        CHECK(nontrivial >= 5);
    }
}

TEST_CASE("vanishing property: exact zero cases") {
    Grid g = make_grid(1, 128, 2.0 * M_PI);
    CHECK(vanishing_check(RealField(g, 2.5), 1.0, 0.5) == 0.0);
    RealField f = random_band_limited(g, 10, 3);
    CHECK(vanishing_check(f, 1.0, max_abs(f) + 0.1) == 0.0);
}

TEST_CASE("vanishing property: quadrature tolerance on random fields") {
    Grid g = make_grid(1, 256, 2.0 * M_PI);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RealField f = random_band_limited(g, 20, seed);
        const double amp = max_abs(f);
        const double scale = amp * amp * amp * g.volume();
        for (double r : {0.4, 1.1})
            for (double l : {-0.3, 0.2})
                CHECK(vanishing_check(f, r * amp, l * amp) <= 1e-8 * scale);
    }
}

TEST_CASE("vanishing property on a 2-d torus") {
    Grid g = make_grid(2, 128, 2.0 * M_PI);
    CounterRng rng(3);
    RealField f(g);
    for (int m0 = 0; m0 <= 5; ++m0)
        for (int m1 = -5; m1 <= 5; ++m1) {
            if (m0 == 0 && m1 <= 0) continue;
            const double a = rng.next_symmetric();
            const double p = 2.0 * M_PI * rng.next_unit();
            for (std::size_t i = 0; i < f.size(); ++i)
                f[i] += 0.2 * a * std::cos(m0 * grid_coord(g, i, 0) +
                                           m1 * grid_coord(g, i, 1) + p);
        }
    const double amp = max_abs(f);
    const double scale = amp * amp * amp * g.volume();
    CHECK(vanishing_check(f, 0.7 * amp, 0.2 * amp) <= 1e-7 * scale);
    CHECK(vanishing_check(f, 0.7 * amp, 0.2 * amp, 1024) <= 1e-8 * scale);
}

TEST_CASE("isoperimetric ratio: trivial, ramp refinement, discontinuity") {
    // omega = 2 everywhere: the nonpositive set is empty, ratio 0.
    BoxGrid bg = make_box_grid(2, {-1, -1, 0}, {1, 1, 0}, {17, 17, 1});
    DiagnosticReport r0 = isoperimetric_ratio(BoxField(bg, 2.0));
    CHECK(r0.at("ratio") == 0.0);
    CHECK(r0.passed);

    // 1-d ramp: both extreme sets shrink to the endpoints as cells refine.
    double prev = 1e300;
    for (int n : {33, 65, 129}) {
        BoxGrid g1 = make_box_grid(1, {-1, 0, 0}, {1, 0, 0}, {n, 1, 1});
        BoxField ramp(g1);
        for (int i = 0; i < n; ++i) ramp.values[i] = 0.5 * (g1.coord(0, i) + 1.0);
        DiagnosticReport r = isoperimetric_ratio(ramp);
        const double ratio = r.at("ratio");
        CHECK(std::isfinite(ratio));
        CHECK(ratio < prev);
        prev = ratio;
    }
    CHECK(prev < 1e-3);

    // A jump with no intermediate values is flagged as discontinuous.
    BoxGrid g1 = make_box_grid(1, {-1, 0, 0}, {1, 0, 0}, {32, 1, 1});
    BoxField stepf(g1);
    for (int i = 0; i < 32; ++i) stepf.values[i] = i < 16 ? -2.0 : 2.0;
    DiagnosticReport rj = isoperimetric_ratio(stepf);
    CHECK(!rj.passed);
    bool flagged = false;
    for (const auto& f : rj.flags) flagged = flagged || f == "discontinuous-sample";
    CHECK(flagged);
}

TEST_CASE("isoperimetric ratio: finite over random smooth fields") {
    CounterRng rng(5);
    for (int s = 0; s < 20; ++s) {
        BoxGrid bg = make_box_grid(2, {-1, -1, 0}, {1, 1, 0}, {33, 33, 1});
        BoxField omega(bg);
        const double a1 = rng.next_symmetric(), a2 = rng.next_symmetric();
        const double p1 = 3 * rng.next_symmetric(), p2 = 3 * rng.next_symmetric();
        for (int i = 0; i < 33; ++i)
            for (int j = 0; j < 33; ++j)
                omega.at(i, j) = 0.5 + a1 * std::sin(p1 * bg.coord(0, i)) +
                                 a2 * std::cos(p2 * bg.coord(1, j));
        DiagnosticReport r = isoperimetric_ratio(omega);
        CHECK(std::isfinite(r.at("ratio")));
    }
}

TEST_CASE("poisson kernel L2 norm matches the closed forms") {
    // N = 1: 1/sqrt(2 pi); N = 2: 1/sqrt(8 pi).
    CHECK(poisson_kernel_l2(1) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-8));
    CHECK(poisson_kernel_l2(2) ==
          doctest::Approx(1.0 / std::sqrt(8.0 * M_PI)).epsilon(1e-8));
}

TEST_CASE("constants machinery: search results re-verify independently") {
    for (int N : {1, 2}) {
        DeGiorgiConstants c = degiorgi_constants(0.15, N, 3.0, 25.0);
        CHECK(c.delta > 0.0);
        CHECK(c.delta < 0.5);
        CHECK(c.recurrence_base > 1.0);
        CHECK(c.smallness_bound > 0.0);
        for (int k = 1; k <= c.verified_k; ++k) {
            CHECK(check_depth_condition(c.delta, c.lambda, N, k));
            CHECK(check_tail_condition(c.recurrence_base, c.delta, c.lambda, N,
                                       k, c.poisson_l2));
        }
        for (int k = 12 * N; k <= c.verified_k; ++k)
            CHECK(check_closure_condition(c.recurrence_base, c.c0, N, k));
    }
}

TEST_CASE("constants machinery: argument validation") {
    CHECK_THROWS_AS(degiorgi_constants(0.6, 1, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(degiorgi_constants(0.1, 1, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(degiorgi_constants(0.1, 3, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("constants machinery: larger lambda admits no smaller delta") {
    DeGiorgiConstants a = degiorgi_constants(0.05, 1, 2.0, 10.0);
    DeGiorgiConstants b = degiorgi_constants(0.25, 1, 2.0, 10.0);
    CHECK(b.delta >= a.delta);
}

TEST_CASE("constants machinery: doubling M strictly helps the closure") {
    const int N = 1;
    const double c0 = 4.0;
    for (int k : {12 * N, 12 * N + 5, 12 * N + 20}) {
        // Margin of the closure inequality in log space grows with M.
        auto margin = [&](double M) {
            const double coeff = (k - 3.0) * (1.0 + 1.0 / N) - k;
            return coeff * std::log(M) - k * std::log(c0);
        };
        CHECK(margin(16.0) < margin(32.0));
        CHECK(margin(32.0) < margin(64.0));
        // And the helper agrees with the margins.
        for (double M : {2.0, 8.0, 64.0, 4096.0})
            CHECK(check_closure_condition(M, c0, N, k) == (margin(M) >= 0.0));
    }
}

TEST_CASE("localized energies: nonnegative, depth cap flagged") {
    Grid g = make_grid(1, 512, 16.0);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_end = 0.5;
    cfg.snapshot_stride = 25;
    Trajectory traj = run(bump(g, 0.5, 1.5), cfg);
    LocalizedEnergyConfig lc;
    lc.rescale = {2.0, 0.0};
    lc.lambda = 0.25;
    lc.delta = 0.25;
    lc.center = 8.0;
    lc.t_ref = 0.5;
    lc.time_unit = 0.1;
    lc.k_max = 6;
    LocalizedEnergySequence seq = localized_energies(traj, lc);
    CHECK(seq.k_used < 6);  // delta^k outruns the resolvable depth
    bool flagged = false;
    for (const auto& f : seq.flags) flagged = flagged || f == "k-max-reduced";
    CHECK(flagged);
    for (double a : seq.energies) CHECK(a >= 0.0);
    CHECK(static_cast<int>(seq.energies.size()) == seq.k_used);
}

TEST_CASE("measured Sobolev-type constant bounds fresh samples") {
    Grid g = make_grid(1, 256, 16.0);
    const double c = measure_sobolev_constant(g, 64, 2026);
    CHECK(c > 0.0);
    CHECK(std::isfinite(c));
    for (std::uint64_t seed = 900; seed < 916; ++seed) {
        RealField f = random_band_limited(g, g.n / 8, seed);
        const double m = mean(f);
        for (double& v : f.values) v -= m;
        FieldNorms nm = norms(f);
        if (nm.hhalf == 0.0) continue;
        CHECK(nm.linf * nm.linf <= c * nm.hhalf * nm.hhalf);
    }
}

TEST_CASE("LEI constant is recomputed per shift level") {
    Grid g = make_grid(1, 256, 16.0);
    SolverConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_end = 0.1;
    Trajectory traj = run(bump(g, 0.5, 1.5), cfg);
    ExtensionCutoff eta;
    eta.center = 8.0;
    std::vector<double> zg;
    for (int i = 0; i <= 16; ++i) zg.push_back(eta.z_out * i / 16.0);
    LEIReport a = local_energy_residual(traj, {1.0, 0.0}, eta, 0.0, 0.1, zg, 0.2);
    LEIReport b = local_energy_residual(traj, {1.0, -2.0}, eta, 0.0, 0.1, zg, 0.2);
    CHECK(b.phi_used > a.phi_used);  // larger |L| inflates the constant
}
