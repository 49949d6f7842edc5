#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/solver.hpp"
#include "gpv/vortex.hpp"

using namespace gpv;

namespace {

struct Setup {
    PhysicalParams p;
    DerivedParams d;
    ProfileSolution sol;
    TrialState ts;
    MinimizeResult warm;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup k;
        k.p = PhysicalParams::make(0.1, 8.0, 1.0);
        k.d = derive_params(k.p);
        const TrialLayout lay = make_trial_layout(k.p, k.d);
        k.sol = solve_profile(k.p, lay.grid, 1e-9);
        k.ts = build_trial(k.p, k.d, k.sol);
        k.warm = minimize_G(k.p, k.d, k.sol, lay.grid);
        return k;
    }();
    return s;
}

}  // namespace

TEST_CASE("omega = 0: the minimizer is a constant without vortices") {
    const PhysicalParams p = PhysicalParams::make(0.1, 0.0, 1.0);
    const DerivedParams d = derive_params(p);
    const Grid2D g = Grid2D::make(1.5, 64);
    const ProfileSolution sol = solve_profile(p, g, 1e-9);
    const MinimizeResult r = minimize_G(p, d, sol, g);
    CHECK(r.converged);
    CHECK(std::abs(r.energy) < 1e-12);
    const cplx c = r.v.values[g.index(g.n / 2, g.n / 2)];
    double worst = 0.0;
    for (const cplx& z : r.v.values) worst = std::max(worst, std::abs(z - c));
    CHECK(worst < 1e-12);
    CHECK(extract_vortices(r.v).nonzero_count() == 0);
}

TEST_CASE("warm start: ordering, mass and monotone history") {
    const Setup& s = setup();
    const MinimizeResult& r = s.warm;
    CHECK(r.converged);
    CHECK(r.residual <= 1e-5);
    CHECK(r.energy <= energy_G(s.ts.v, s.sol.eta, s.p));
    CHECK(r.mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.energy == doctest::Approx(energy_G(r.v, s.sol.eta, s.p)).epsilon(1e-12));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.energy >= 0.0);
}

TEST_CASE("c0 estimate") {
    const Setup& s = setup();
    const C0Report c = c0_estimate(s.p, s.d, s.sol, s.warm);
    CHECK(c.c0 >= 0.0);
    CHECK(c.c0 == s.warm.energy);
    CHECK(c.gse == doctest::Approx(c.e_eps + c.c0));
    CHECK(c.decomposition_defect <= 1e-4);
    CHECK(c.ratio == doctest::Approx(c.c0 / c.target));

    MinimizeResult bad = s.warm;
    bad.converged = false;
    CHECK_THROWS_AS(c0_estimate(s.p, s.d, s.sol, bad), NotConverged);
}

TEST_CASE("cold start is deterministic in the seed") {
    const Setup& s = setup();
    const ComplexField a = random_phase_field(s.sol.eta, 5), b = random_phase_field(s.sol.eta, 5),
                       c = random_phase_field(s.sol.eta, 6);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(mass(a, &s.sol.eta) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-convergence is reported") {
    const Setup& s = setup();
    MinimizeConfig cfg;
    cfg.max_iters = 3;
    cfg.coarse_points_per_eps = 1e9;
    CHECK_THROWS_AS(minimize_G_from(s.p, s.sol, s.ts.v, cfg), NoConvergence);
    cfg.throw_on_failure = false;
    const MinimizeResult r = minimize_G_from(s.p, s.sol, s.ts.v, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
}

TEST_CASE("minimize_F: multiplier and exterior mass") {
    const PhysicalParams p = PhysicalParams::make(0.1, 4.0, 1.0);
    const Grid2D g = Grid2D::make(1.6, 96);
    const ProfileSolution sol = solve_profile(p, g, 1e-9);
    const MinimizeFResult r = minimize_F(p, ComplexField::from_real(sol.eta));
    CHECK(r.base.converged);
    CHECK(mass(r.base.v) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(r.base.lagrange) <= 10.0 * p.omega / p.epsilon);
    CHECK(r.exterior_quartic <= 10.0 * p.epsilon * p.epsilon * p.omega * p.omega);
    CHECK(r.base.energy <= energy_F(ComplexField::from_real(sol.eta), p));
}

TEST_CASE("square audit") {
    const Setup& s = setup();
    const double delta = audit_delta_max_coverage(s.p, s.d);
    CHECK(delta >= 0.02);
    CHECK(delta < std::sqrt(s.d.alpha_eo));
    const SquareAudit a = square_audit(s.ts.v, s.p, s.d, s.sol, delta);
    REQUIRE_FALSE(a.squares.empty());
    CHECK(a.side == doctest::Approx(1.0 / (s.d.ell * std::sqrt(s.p.omega))));
    double sum = 0.0, ref = 0.0;
    for (const AuditSquare& q : a.squares) {
        sum += q.energy;
        ref += q.reference;
        CHECK(q.weight_min <= q.weight);
        CHECK(q.weight <= q.weight_max);
    }
    CHECK(a.aggregate == doctest::Approx(sum));
    CHECK(a.ref_riemann == doctest::Approx(ref));
    CHECK(a.ref_riemann <= a.ref_riemann_upper);
    CHECK(a.ratio_region == doctest::Approx(a.aggregate / a.ref_region));
    CHECK(a.coverage > 0.0);
    CHECK(a.coverage <= 1.0);

    // v = 1: the audited energy is the rotation term alone
    const ComplexField one(s.ts.v.grid, 1.0);
    const SquareAudit b = square_audit(one, s.p, s.d, s.sol, delta);
    for (const AuditSquare& q : b.squares) {
        const double h = one.grid.spacing(), half = 0.5 * b.side;
        double e = 0.0;
        for (int j = 0; j < one.grid.n; ++j)
            for (int i = 0; i < one.grid.n; ++i) {
                const double x = one.grid.coord(i), y = one.grid.coord(j);
                if (std::abs(x - q.x) <= half && std::abs(y - q.y) <= half) {
                    const double eta = s.sol.eta(i, j);
                    e += 0.25 * s.p.omega * s.p.omega * (x * x + y * y) * eta * eta * h * h;
                }
            }
        CHECK(q.energy == doctest::Approx(e).epsilon(0.05));
    }

    CHECK_THROWS_AS(square_audit(s.ts.v, s.p, s.d, s.sol, 10.0), ConfigError);
    CHECK_THROWS_AS(square_audit(s.ts.v, s.p, s.d, s.sol, std::sqrt(s.d.alpha_eo) - 1e-3), EmptyAudit);
    const PhysicalParams p0 = PhysicalParams::make(0.1, 0.0, 1.0);
    CHECK_THROWS_AS(square_audit(s.ts.v, p0, derive_params(p0), s.sol, delta), RegimeViolation);
}
