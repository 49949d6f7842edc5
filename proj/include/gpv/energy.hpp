#pragma once

#include <vector>

#include "gpv/grid.hpp"
#include "gpv/params.hpp"

namespace gpv {

// Index window [i0, i1) x [j0, j1) of grid points.
struct Window {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    static Window full(const Grid2D& g) { return {0, g.n, 0, g.n}; }
    bool contains(int i, int j) const { return i >= i0 && i < i1 && j >= j0 && j < j1; }
};

// Discrete functional
//   sum_p k_p |D_A u|^2_p + c4_p (s_p - |u_p|^2)^2 + c2_p |u_p|^2 + c0_p
// integrated with weight h^2. Differences live on grid edges:
//   D_e u = (u_q - u_p)/h - i B A(mid) (u_p + u_q)/2,  A = (-x2/2, x1/2),
// and the pointwise kinetic density at p averages its incident edges per
// axis (a box-edge point keeps its single edge at full weight).
// Every energy of the model is an instance of this form.
class GLFunctional {
public:
    Grid2D grid;
    double field = 0.0;         // B in front of A
    std::vector<double> kin;    // k_p; empty means 1
    std::vector<double> c4, s, c2, c0;  // empty means 0 (s: 1)

    explicit GLFunctional(const Grid2D& g) : grid(g) {}

    double energy(const ComplexField& u) const;
    double energy(const ComplexField& u, const Window& w) const;
    // Gradient in the real sense: g = dE/dRe u + i dE/dIm u. Only points
    // inside the window receive a gradient; the returned energy covers the
    // window's points and every edge touching it.
    double energy_gradient(const ComplexField& u, std::vector<cplx>& g, const Window& w) const;
    double energy_gradient(const ComplexField& u, std::vector<cplx>& g) const {
        return energy_gradient(u, g, Window::full(grid));
    }
    // Pointwise integrand (kinetic share plus potential); sums to energy()/h^2.
    ScalarField density(const ComplexField& u) const;
    ScalarField kinetic_density(const ComplexField& u) const;
    // Positive diagonal approximation of the Hessian at u (real sense).
    std::vector<double> diagonal(const ComplexField& u) const;

private:
    double kin_at(std::size_t k) const { return kin.empty() ? 1.0 : kin[k]; }
};

GLFunctional make_F_functional(const Grid2D& g, const PhysicalParams& p);
GLFunctional make_E_functional(const Grid2D& g, const PhysicalParams& p);
GLFunctional make_G_functional(const ScalarField& eta, const PhysicalParams& p);
GLFunctional make_gl2d_functional(const Grid2D& g, double lambda_coef, double h_ex, double eps);

ScalarField covariant_kinetic_density(const ComplexField& u, double omega);

double energy_F(const ComplexField& u, const PhysicalParams& p);
double energy_E(const ComplexField& u, const PhysicalParams& p);
double energy_E(const ScalarField& eta, const PhysicalParams& p);
double energy_G(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p);
double energy_gl2d(const ComplexField& u, double lambda_coef, double h_ex, double eps);

// Pointwise integrand of energy_G.
ScalarField energy_G_density(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p);

// Integral of the energy_G integrand over mask (one char per grid point).
double local_energy(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p,
                    const std::vector<char>& mask);

template <class Pred>
std::vector<char> make_mask(const Grid2D& g, Pred&& inside) {
    std::vector<char> m(g.size(), 0);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) m[g.index(i, j)] = inside(g.coord(i), g.coord(j)) ? 1 : 0;
    return m;
}

}  // namespace gpv
