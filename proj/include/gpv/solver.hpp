#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpv/grid.hpp"
#include "gpv/params.hpp"
#include "gpv/profile.hpp"
#include "gpv/trial.hpp"

namespace gpv {

enum class InitMode { warm, cold, file };

struct MinimizeConfig {
    int max_iters = 20000;
    double tol = 1e-5;            // relative Euler-Lagrange residual
    double energy_rtol = 1e-10;   // relative energy decrease over stall_window iterations
    int stall_window = 50;
    double step = 1.0;            // first trial step of the line search
    InitMode init = InitMode::warm;
    std::string init_path;        // field dump for InitMode::file
    std::uint64_t seed = 1;
    double window_floor = 1e-10;  // active points: eta > window_floor * max eta
    int precond_every = 25;
    // Coarse-to-fine: solve first on the 2x coarser grid while that grid
    // still has this many points per eps.
    double coarse_points_per_eps = 0.9;
    double coarse_tol = 1e-4;
    bool throw_on_failure = true;
    // Wall-clock budget in seconds over all levels, 0 for none. Coarse
    // levels get coarse_share of what is left when they start.
    double max_seconds = 0.0;
    double coarse_share = 0.6;
    TrialOptions trial;
};

struct MinimizeResult {
    ComplexField v;
    double energy = 0.0;
    double lagrange = 0.0;   // multiplier of the mass constraint
    double residual = 0.0;   // relative Euler-Lagrange residual
    int iterations = 0;         // on the final grid
    int coarse_iterations = 0;  // spent on coarser grids
    bool converged = false;
    double mass = 0.0;
    std::vector<double> history;           // energy per accepted step, final grid
    std::vector<double> residual_history;
};

// Minimizes energy_G over {sum h^2 eta^2 |v|^2 = 1} on the profile's grid.
// Preconditioned Riemannian nonlinear CG with Armijo backtracking; points
// outside the active window keep their initial values.
MinimizeResult minimize_G(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                          const Grid2D& grid, const MinimizeConfig& cfg = {});
MinimizeResult minimize_G_from(const PhysicalParams& p, const ProfileSolution& sol, ComplexField v0,
                               const MinimizeConfig& cfg = {});

// Random-phase start: a smooth random complex field of unit modulus where
// eta is active, scaled to weighted mass 1. Deterministic in the seed.
ComplexField random_phase_field(const ScalarField& eta, std::uint64_t seed);

// The GP functional directly under sum h^2 |u|^2 = 1. lagrange is the
// multiplier l of -(grad - i omega A)^2 u = eps^-2 (a + eps^2 omega^2 |x|^2/4 + eps^2 l - |u|^2) u.
struct MinimizeFResult {
    MinimizeResult base;
    double exterior_quartic = 0.0;  // integral of |u|^4 over {a <= 0}
};

MinimizeFResult minimize_F(const PhysicalParams& p, ComplexField u0, const MinimizeConfig& cfg = {});

struct C0Report {
    double c0 = 0.0;
    double target = 0.0;     // omega ln(1/(eps sqrt(omega)))
    double ratio = 0.0;
    double e_eps = 0.0;      // energy_E(eta)
    double gse = 0.0;        // e_eps + c0
    double energy_F = 0.0;   // energy_F(eta v)
    double decomposition_defect = 0.0;  // |F - E - G| / F
};

C0Report c0_estimate(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                     const MinimizeResult& res);

struct AuditSquare {
    double x = 0.0, y = 0.0;
    double energy = 0.0;     // energy_G restricted to the square
    double weight = 0.0;     // p_eo at the centre
    double weight_min = 0.0, weight_max = 0.0;  // over the closed square
    double reference = 0.0;  // weight * omega * |K| * ln(1/(eps sqrt(omega)))
    bool meets_reference = false;
};

struct SquareAudit {
    double delta = 0.0;      // U_delta = {|x|_eo <= sqrt(alpha) - delta}
    double side = 0.0;       // 1/(ell sqrt(omega))
    double log_term = 0.0;
    std::vector<AuditSquare> squares;
    double aggregate = 0.0;
    double ref_region = 0.0;    // omega ln(...) * integral of p over U_delta
    double ref_union = 0.0;     // same over the union of audited squares
    double ref_riemann = 0.0;   // sum of the per-square references
    double ref_riemann_upper = 0.0;  // with weight_max
    double ratio_region = 0.0;  // aggregate / ref_region
    double ratio_union = 0.0;
    double coverage = 0.0;      // audited area / |U_delta|
    double weighted_cv = 0.0;   // spread of energy / weight over the squares
};

SquareAudit square_audit(const ComplexField& v, const PhysicalParams& p, const DerivedParams& d,
                         const ProfileSolution& sol, double delta);

// The admissible delta in [delta_min, sqrt(alpha)) whose U_delta is best
// covered by the audit squares it contains.
double audit_delta_max_coverage(const PhysicalParams& p, const DerivedParams& d, double delta_min = 0.02);

}  // namespace gpv
