#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/trial.hpp"
#include "gpv/vortex.hpp"

using namespace gpv;

namespace {

struct Setup {
    PhysicalParams p;
    DerivedParams d;
    ProfileSolution sol;
    TrialState ts;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup k;
        k.p = PhysicalParams::make(0.05, 10.0, 1.0);
        k.d = derive_params(k.p);
        const TrialLayout lay = make_trial_layout(k.p, k.d);
        k.sol = solve_profile(k.p, lay.grid, 1e-9);
        k.ts = build_trial(k.p, k.d, k.sol);
        return k;
    }();
    return s;
}

}  // namespace

TEST_CASE("layout aligns the grid with the lattice") {
    const Setup& s = setup();
    const TrialLayout& l = s.ts.layout;
    CHECK(l.h_cell == doctest::Approx(2.0 * std::numbers::pi * l.n_lattice * l.n_lattice));
    CHECK(l.scale == doctest::Approx(std::sqrt(s.p.omega / l.h_cell)));
    CHECK(l.grid.spacing() * l.scale * l.n_cell == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l.grid.spacing() <= s.p.epsilon / 4.0 * (1.0 + 1e-12));
    CHECK(l.grid.half_extent >= 2.0 * s.ts.L);
    CHECK(l.eps_cell == doctest::Approx(s.p.epsilon * l.scale));
}

TEST_CASE("trial state: normalization, vortices, mass deficit") {
    const Setup& s = setup();
    CHECK(mass(s.ts.v, &s.sol.eta) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(1.0 - s.ts.raw_mass <= 10.0 * s.p.epsilon * s.p.epsilon * s.p.omega);
    CHECK(s.ts.vortex_count > 0);
    CHECK(std::abs(s.ts.vortex_count - s.ts.expected_vortices) <= 0.25 * s.ts.expected_vortices + 4.0);

    // every vortex of the lattice carries degree +1; cores have radius ~eps
    const BulkRegion U = BulkRegion::inset(s.d, 0.1);
    const std::vector<char> mask = make_mask(s.ts.v.grid, [&](double x, double y) { return U.contains(x, y); });
    const VortexSet vs = extract_vortices(s.ts.v, 0.5, &mask);
    int count = 0;
    for (const Vortex& q : vs.vortices)
        if (q.degree != 0) {
            CHECK(q.degree == 1);
            ++count;
        }
    CHECK(count > 0);
    CHECK(vs.sum_radii <= 4.0 * count * s.p.epsilon);
}

TEST_CASE("upper bound report") {
    const Setup& s = setup();
    const UpperBoundReport r = upper_bound_report(s.ts, s.p, s.d, s.sol);
    CHECK(r.energy == doctest::Approx(energy_G(s.ts.v, s.sol.eta, s.p)).epsilon(1e-12));
    CHECK(r.target == doctest::Approx(s.p.omega * std::log(1.0 / (s.p.epsilon * std::sqrt(s.p.omega)))));
    CHECK(r.ratio_two_omega == doctest::Approx(r.ratio / 2.0));
    CHECK(std::abs(r.C3 + r.C4) <= 0.01 * r.energy);
    CHECK(r.ratio > 0.3);
    CHECK(r.ratio < 3.0);
}

TEST_CASE("trial errors") {
    const Setup& s = setup();
    CHECK_THROWS_AS(build_trial(PhysicalParams::make(0.05, 0.0, 1.0), s.d, s.sol), RegimeViolation);
    // a grid that is not lattice aligned
    ProfileSolution off;
    off.eta = ScalarField(Grid2D::make(s.sol.eta.grid.half_extent * 1.01, s.sol.eta.grid.n));
    off.converged = true;
    CHECK_THROWS_AS(build_trial(s.p, s.d, off), ResolutionError);
}

TEST_CASE("vortex count grows linearly with omega") {
    // at fixed eps the lattice density is omega / 2 pi
    std::vector<double> per;
    for (double om : {10.0, 20.0}) {
        const PhysicalParams p = PhysicalParams::make(0.05, om, 1.0);
        const DerivedParams d = derive_params(p);
        const TrialLayout lay = make_trial_layout(p, d);
        const ProfileSolution sol = solve_profile(p, lay.grid, 1e-9);
        const TrialState ts = build_trial(p, d, sol);
        const double area = std::numbers::pi * ts.L * ts.L / d.lambda_eo;
        CHECK(ts.expected_vortices == doctest::Approx(area * om / (2.0 * std::numbers::pi)));
        per.push_back(ts.vortex_count / om);
    }
    CHECK(per[1] == doctest::Approx(per[0]).epsilon(0.25));
}

TEST_CASE("square classification of the trial state at eps = 0.02") {
    const PhysicalParams p = PhysicalParams::make(0.02, 25.0, 1.0);
    const DerivedParams d = derive_params(p);
    const TrialLayout lay = make_trial_layout(p, d);
    const ProfileSolution sol = solve_profile(p, lay.grid, 1e-9);
    const TrialState ts = build_trial(p, d, sol);
    const SquareClassification c = classify_squares(ts.v, p, d, sol, 0.0, BulkRegion::inset(d, 0.1));
    CHECK(c.n_good + c.n_bad == static_cast<int>(c.squares.size()));
    CHECK(c.n_good > 0);
    CHECK(c.bad_over_good <= 0.3);
    CHECK_FALSE(c.degenerate);
    CHECK(c.delta == doctest::Approx(0.5 / (d.ell * std::sqrt(p.omega))));
}
