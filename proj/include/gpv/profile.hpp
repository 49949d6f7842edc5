#pragma once

#include <vector>

#include "gpv/grid.hpp"
#include "gpv/params.hpp"

namespace gpv {

struct ProfileOptions {
    int max_flow_steps = 600;
    int max_newton_steps = 60;
    double flow_switch = 2e-3;  // relative EL residual at which Newton takes over
    double cg_rtol = 1e-11;
    bool throw_on_failure = true;
};

struct ProfileSolution {
    ScalarField eta;
    double k_eps = 0.0;
    double residual = 0.0;
    int iterations = 0;
    int flow_steps = 0;
    int newton_steps = 0;
    bool converged = false;
    double energy = 0.0;
    std::vector<double> energy_history;
    double max_mass_defect = 0.0;  // max |mass - 1| over accepted steps
};

ProfileSolution solve_profile(const PhysicalParams& p, const Grid2D& grid, double tol,
                              const ProfileOptions& opt = {});

// Residual -L eta + (eta^2 - V) eta / eps^2 - k eta in the discrete energy's
// own Laplacian, and the least-squares multiplier over {eta > 0.1 max eta}.
ScalarField profile_residual_field(const ScalarField& eta, const PhysicalParams& p, double k);
double profile_multiplier(const ScalarField& eta, const PhysicalParams& p);
double l2_norm(const ScalarField& f);

struct ProfileBounds {
    double ratio_sup = 0.0;        // sup eta/sqrt(p) on {p >= d0 eps^(1/3)}
    double ratio_inf = 0.0;
    double fitted_c = 0.0;         // (1 - ratio_inf) / eps^(1/3)
    double interface_sup = 0.0;    // sup eta on {|p| <= d0 eps^(1/3)} / eps^(1/3)
    bool rays_monotone = false;
    int ray_violations = 0;
    double decay_slope = 0.0;      // fit of ln eta against p / eps^(2/3) outside the bulk
    double min_eta_interior = 0.0; // min eta on {p >= d0 eps^(1/3)}
    double mass_ratio_measured = 0.0;   // (a0/(a0 + k eps^2))^2
    double mass_ratio_predicted = 0.0;  // closed form of the constrained problem
};

ProfileBounds verify_profile_bounds(const ProfileSolution& sol, const PhysicalParams& p,
                                    const DerivedParams& d, double delta0 = 1.0);

struct RescaledProfile {
    double eps_tilde = 0.0;
    double sigma = 0.0;       // x-scaling sqrt((a0 + k eps^2)/a0)
    double amplitude = 0.0;   // nu = amplitude * eta(sigma x)
    double amplitude_literal = 0.0;  // sqrt(a0/(a0 + k eps^2))
    ScalarField nu;
    double residual = 0.0;          // unconstrained EL residual of nu
    double residual_literal = 0.0;  // same with the literal amplitude
};

RescaledProfile rescale_to_unconstrained(const ProfileSolution& sol, const PhysicalParams& p,
                                         const DerivedParams& d);

struct UniformBound {
    double sup_u = 0.0;
    double ratio = 0.0;  // sup|u| / sup sqrt(p_eo)
    bool pass = false;   // ratio <= 2
};

UniformBound uniform_bound_check(const ComplexField& u, const PhysicalParams& p, const DerivedParams& d);

// Mass of u in the delta-neighbourhood of D = {a > 0}.
double concentration(const ComplexField& u, const PhysicalParams& p, double delta);

}  // namespace gpv
