#pragma once

#include <vector>

#include "gpv/grid.hpp"

namespace gpv {

struct CellProblem {
    double h_ex = 0.0;
    double eps_cell = 0.0;
    int n_lattice = 1;      // N
    int m = 0;              // points per subcell side (even)
    double source_width = 0.0;  // 0: one-cell Kronecker load; >0: Gaussian (h only)
    Grid2D grid;            // f-points on K = (-1/2, 1/2)^2, n = N m

    double h_cell() const;
    double spacing() const { return 1.0 / (n_lattice * m); }

    // N is the largest integer with N <= sqrt(h_ex / 2 pi). When m is 0 it
    // is chosen as the smallest even value resolving eps_cell with 4 points
    // (and at least 8).
    static CellProblem make(double h_ex, double eps_cell, int m = 0);
};

struct CellSolution {
    CellProblem problem;
    ScalarField h_field;              // vertex grid of the subcell K0, boundary included
    ComplexField f;
    std::vector<double> centers_x, centers_y;
    std::vector<int> subcell_winding; // row-major over the N x N subcells
    double mass = 0.0;
    double energy = 0.0;              // E^2D_1 with h_ex
    double energy_gauge = 0.0;        // E^2D_1 with h_cell (gauge-consistent)
    double energy_per_cell = 0.0;     // energy / N^2
    cplx shift1 = 1.0, shift2 = 1.0;  // magnetic translation constants
    double seam_mismatch = 0.0;

    // f at f-grid index (k1, k2) continued to all of Z^2 by the magnetic
    // translations u(y + e1) = shift1 e^{i h y2/2} u(y), u(y + e2) = shift2 e^{-i h y1/2} u(y).
    cplx extended(long k1, long k2) const;
};

struct CellPotential {
    int m = 0;
    double spacing = 0.0;
    std::vector<double> h;  // m x m torus, vertex k at -1/(2N) + k spacing
    int cg_iterations = 0;
    double cg_residual = 0.0;
};

CellPotential solve_cell_potential(const CellProblem& cp);
ScalarField solve_cell_h(const CellProblem& cp);
CellSolution build_f(const CellProblem& cp);

struct CellMetrics {
    double energy = 0.0;
    double target = 0.0;        // h_ex ln(1/(eps sqrt(h_ex)))
    double ratio = 0.0;
    double per_vortex = 0.0;    // energy / N^2
    double per_vortex_ref = 0.0;  // 2 pi ln(1/(eps N))
    double quartic = 0.0;       // quartic part at lambda
    double quartic_double = 0.0;  // quartic part at 2 lambda
    double energy_gauge = 0.0;
    double h_ex = 0.0, h_cell = 0.0;
};

CellMetrics cell_metrics(const CellSolution& cs, double lambda_coef);

}  // namespace gpv
