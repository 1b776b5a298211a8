#include "doctest.h"

#include <cmath>

#include "fracburgers/barriers.hpp"

using namespace fracburgers;

TEST_CASE("constant boundary data gives the constant solution") {
    BarrierProblem p;
    p.geometry = make_box_grid(2, {-1, 0, 0}, {1, 1, 0}, {33, 17, 1});
    p.face_values = {2, 2, 2, 2, 0, 0};
    BarrierResult r = solve_barrier(p);
    for (double v : r.solution.values)
        CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.max_principle_ok);
}

TEST_CASE("gap barrier yields lambda in (0, 1/2), stable under refinement") {
    BarrierResult r = estimate_lambda(1, 8.0, 2);
    CHECK(r.lambda_estimate > 0.0);
    CHECK(r.lambda_estimate < 0.5);
    REQUIRE(r.refinement_history.size() == 2);
    const double l0 = r.refinement_history[0].second;
    const double l1 = r.refinement_history[1].second;
    CHECK(std::abs(l1 - l0) / l1 < 0.05);
    CHECK(r.max_principle_ok);
}

TEST_CASE("gap barrier in two space dimensions") {
    BarrierResult r = estimate_lambda(2, 4.0, 1);
    CHECK(r.lambda_estimate > 0.0);
    CHECK(r.lambda_estimate < 0.5);
    CHECK(r.max_principle_ok);
}

TEST_CASE("comparison principle: raising a face never lowers the solution") {
    BarrierProblem p;
    p.geometry = make_box_grid(2, {-1, 0, 0}, {1, 1, 0}, {33, 17, 1});
    p.face_values = {1, 1, 0, 1, 0, 0};
    BarrierResult lo = solve_barrier(p);
    p.face_values[3] = 2.0;  // raise the top face
    BarrierResult hi = solve_barrier(p);
    for (std::size_t i = 0; i < lo.solution.values.size(); ++i)
        CHECK(hi.solution.values[i] >= lo.solution.values[i] - 1e-9);
}

TEST_CASE("shrinking-cube barrier: bracket, degenerate case, monotonicity") {
    // Degenerate lambda = 0: boundary uniformly 2, so the solution is 2.
    CHECK(lambda_star_estimate(1, 0.0, 32.0) == doctest::Approx(0.0).epsilon(1e-8));

    const int k0 = 1;
    const double lambda = 0.25;
    const double ls = lambda_star_estimate(k0, lambda, 32.0);
    CHECK(ls > 0.0);
    CHECK(ls < std::pow(2.0, -(k0 + 1)) * std::min(1.0, lambda));

    // Larger lambda lowers the floor, which lowers the solution and raises
    // the gap.
    const double ls_small = lambda_star_estimate(k0, 0.1, 32.0);
    CHECK(ls > ls_small);
}

TEST_CASE("shrinking-cube barrier refines consistently") {
    const double a = lambda_star_estimate(2, 0.3, 16.0);
    const double b = lambda_star_estimate(2, 0.3, 32.0);
    CHECK(std::abs(a - b) / b < 0.05);
}

TEST_CASE("strip barrier: exponential bound and decay rate") {
    DiagnosticReport rep = strip_bound_check(8.0, 32.0);
    CHECK(rep.passed);
    CHECK(rep.at("max_gap_vs_bound") <= 1e-6);
    CHECK(rep.at("fitted_decay_rate") <= -M_PI + 0.05);
    // The inflow value 2 sits under the bound value 2 sqrt 2 at x = 0.
    CHECK(2.0 * std::sqrt(2.0) >= 2.0);

    CHECK_THROWS_AS(strip_bound_check(3.0, 32.0), std::invalid_argument);
}

TEST_CASE("solver rejects under-resolved geometry and diverging spacings") {
    BarrierProblem p;
    p.geometry = make_box_grid(2, {-1, 0, 0}, {1, 1, 0}, {9, 9, 1});
    CHECK_THROWS_AS(solve_barrier(p), std::invalid_argument);
    p.geometry = make_box_grid(2, {-1, 0, 0}, {1, 1, 0}, {33, 20, 1});
    CHECK_THROWS_AS(solve_barrier(p), std::invalid_argument);
}

TEST_CASE("per-face function samples are honored") {
    BarrierProblem p;
    p.geometry = make_box_grid(2, {0, 0, 0}, {1, 1, 0}, {33, 33, 1});
    p.face_values = {0, 0, 0, 0, 0, 0};
    // Top face carries a sampled profile instead of a constant.
    p.face_funcs[3] = [](const std::array<double, 3>& x) {
        return std::sin(M_PI * x[0]);
    };
    BarrierResult r = solve_barrier(p);
    CHECK(r.boundary_max == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.max_principle_ok);
    // Exact separable solution sin(pi x) sinh(pi z)/sinh(pi) at the center.
    const double exact = std::sin(M_PI * 0.5) * std::sinh(M_PI * 0.5) / std::sinh(M_PI);
    CHECK(r.solution.at(16, 16) == doctest::Approx(exact).epsilon(5e-3));
}
