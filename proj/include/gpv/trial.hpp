#pragma once

#include "gpv/cell.hpp"
#include "gpv/grid.hpp"
#include "gpv/params.hpp"
#include "gpv/profile.hpp"

namespace gpv {

struct TrialOptions {
    double delta_frac = 0.1;      // delta = delta_frac * sqrt(alpha_eo)
    double L_frac = 1.5;          // L = L_frac * sqrt(alpha_eo)
    double points_per_eps = 4.0;  // spacing <= eps / points_per_eps
};

// The physical grid and vortex lattice of the trial state. The cell field f
// is composed with y = s x, s = sqrt(omega / h_cell), so that the flux per
// rescaled unit cell 2 pi N^2 matches omega exactly; the grid spacing is
// 1/(s n_c) so that every physical grid point lands on a cell grid point.
struct TrialLayout {
    double scale = 0.0;     // s
    int n_lattice = 1;      // N
    double h_cell = 0.0;    // 2 pi N^2
    double h_ex_cell = 0.0; // max(h_ex, 2 pi), fed to the cell problem
    double eps_cell = 0.0;  // eps * s
    int n_cell = 0;         // cell grid points per unit side (N m)
    Grid2D grid;
};

TrialLayout make_trial_layout(const PhysicalParams& p, const DerivedParams& d,
                              const TrialOptions& opt = {}, double min_half_extent = 0.0);

double chi_cutoff(double r, double L);

struct TrialState {
    ComplexField v;         // normalized: integral of eta^2 |v|^2 = 1
    double raw_mass = 0.0;
    double L = 0.0;
    double delta = 0.0;
    double chi_width = 0.0; // chi falls from 1 to 0 over [L, 2L]
    TrialLayout layout;
    CellSolution cell;
    int vortex_count = 0;   // winding sum over {|x|_eo <= L}
    double expected_vortices = 0.0;  // area * omega / 2 pi
};

TrialState build_trial(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                       const TrialOptions& opt = {});

struct UpperBoundReport {
    double energy = 0.0;
    double target = 0.0;         // omega ln(1/(eps sqrt(omega)))
    double ratio = 0.0;
    double ratio_two_omega = 0.0;  // energy / (2 omega ln(...))
    double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
    double raw_mass = 0.0;
    double mass_deficit = 0.0;
    int vortex_count = 0;
};

UpperBoundReport upper_bound_report(const TrialState& ts, const PhysicalParams& p, const DerivedParams& d,
                                    const ProfileSolution& sol);

}  // namespace gpv
