#include "gpv/trial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/winding.hpp"

namespace gpv {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

void require_rotation(const PhysicalParams& p) {
    if (!(p.omega > 0.0)) throw RegimeViolation("the trial state needs omega > 0");
}
}  // namespace

TrialLayout make_trial_layout(const PhysicalParams& p, const DerivedParams& d, const TrialOptions& opt,
                              double min_half_extent) {
    require_rotation(p);
    TrialLayout t;
    t.h_ex_cell = std::max(d.h_ex, two_pi);
    t.n_lattice = static_cast<int>(std::floor(std::sqrt(t.h_ex_cell / two_pi) + 1e-12));
    t.h_cell = two_pi * t.n_lattice * t.n_lattice;
    t.scale = std::sqrt(p.omega / t.h_cell);
    t.eps_cell = p.epsilon * t.scale;
    const double dmax = p.epsilon / opt.points_per_eps;
    int m = static_cast<int>(std::ceil(1.0 / (t.scale * dmax * t.n_lattice)));
    if (m % 2) ++m;
    m = std::max(m, 8);
    t.n_cell = m * t.n_lattice;
    const double h = 1.0 / (t.scale * t.n_cell);
    const double R0 = std::max(min_half_extent, 2.0 * opt.L_frac * std::sqrt(d.alpha_eo));
    const int n = 2 * static_cast<int>(std::ceil(R0 / h));
    t.grid = Grid2D::make(0.5 * n * h, n);
    return t;
}

double chi_cutoff(double r, double L) {
    if (r <= L) return 1.0;
    if (r >= 2.0 * L) return 0.0;
    const double t = (r - L) / L;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

TrialState build_trial(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                       const TrialOptions& opt) {
    require_rotation(p);
    const Grid2D& g = sol.eta.grid;
    TrialState ts;
    ts.L = opt.L_frac * std::sqrt(d.alpha_eo);
    ts.delta = opt.delta_frac * std::sqrt(d.alpha_eo);
    ts.chi_width = ts.L;
    // admissibility: L above the largest bulk radius, delta below the smallest
    const double mc = p.m_cap;
    if (!(ts.L > std::sqrt(p.a0 * std::pow(1.0 - mc * mc / 4.0, -0.25))) ||
        !(ts.delta < std::min(std::sqrt(p.a0 * (1.0 - mc * mc / (4.0 * p.lambda * p.lambda))), 0.5 * ts.L)))
        throw RegimeViolation("trial cut-off constants delta/L violate the admissible window");

    TrialLayout lay = make_trial_layout(p, d, opt, 0.0);
    // Accept the profile's grid if it is aligned with the lattice.
    const double h = g.spacing();
    const double nc_real = 1.0 / (lay.scale * h);
    const long nc = std::lround(nc_real);
    if (std::abs(nc_real - nc) > 1e-6 || nc % lay.n_lattice != 0 || (nc / lay.n_lattice) % 2 != 0 ||
        g.n % 2 != 0)
        throw ResolutionError("grid is not aligned with the vortex lattice; build it with make_trial_layout");
    lay.n_cell = static_cast<int>(nc);
    lay.grid = g;
    if (lay.eps_cell * lay.n_cell < 2.0)
        throw ResolutionError("grid resolves the vortex cores with fewer than two points per radius");
    if (g.half_extent < 2.0 * ts.L * (1.0 - 1e-9))
        throw ResolutionError("box half extent is below the cut-off support 2L");
    ts.layout = lay;

    const CellProblem cp = CellProblem::make(lay.h_ex_cell, lay.eps_cell, lay.n_cell / lay.n_lattice);
    ts.cell = build_f(cp);

    ts.v = ComplexField(g);
    const long off = static_cast<long>(lay.n_cell / 2) - g.n / 2;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double chi = chi_cutoff(elliptic_radius(g.coord(i), g.coord(j), d), ts.L);
            ts.v(i, j) = chi > 0.0 ? chi * ts.cell.extended(i + off, j + off) : cplx(0.0);
        }
    ts.raw_mass = mass(ts.v, &sol.eta);
    const double sc = 1.0 / std::sqrt(ts.raw_mass);
    for (cplx& z : ts.v.values) z *= sc;

    // Vortex count over {|x|_eo <= L}: plaquettes whose centre lies inside.
    int count = 0;
    for (int j = 0; j + 1 < g.n; ++j)
        for (int i = 0; i + 1 < g.n; ++i) {
            const double cx = g.coord(i) + 0.5 * h, cy = g.coord(j) + 0.5 * h;
            if (elliptic_radius(cx, cy, d) > ts.L) continue;
            count += static_cast<int>(
                std::lround(plaquette_circulation(ts.v(i, j), ts.v(i + 1, j), ts.v(i + 1, j + 1), ts.v(i, j + 1))));
        }
    ts.vortex_count = count;
    ts.expected_vortices = std::numbers::pi * ts.L * ts.L / d.lambda_eo * p.omega / two_pi;
    return ts;
}

UpperBoundReport upper_bound_report(const TrialState& ts, const PhysicalParams& p, const DerivedParams& d,
                                    const ProfileSolution& sol) {
    require_rotation(p);
    const ScalarField dens = energy_G_density(ts.v, sol.eta, p);
    const Grid2D& g = dens.grid;
    const double h2 = g.spacing() * g.spacing();
    const double ra = std::sqrt(d.alpha_eo);
    UpperBoundReport r;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double rr = elliptic_radius(g.coord(i), g.coord(j), d);
            const double e = dens(i, j) * h2;
            if (rr <= ra - ts.delta) r.C1 += e;
            else if (rr <= ra + ts.delta) r.C2 += e;
            else if (rr <= 2.0 * ts.L) r.C3 += e;
            else r.C4 += e;
        }
    r.energy = r.C1 + r.C2 + r.C3 + r.C4;
    r.target = p.omega * std::log(1.0 / (p.epsilon * std::sqrt(p.omega)));
    r.ratio = r.energy / r.target;
    r.ratio_two_omega = r.energy / (2.0 * r.target);
    r.raw_mass = ts.raw_mass;
    r.mass_deficit = 1.0 - ts.raw_mass;
    r.vortex_count = ts.vortex_count;
    return r;
}

}  // namespace gpv
