#include "gpv/energy.hpp"

#include <algorithm>
#include <cmath>

#include "gpv/error.hpp"

namespace gpv {

namespace {

inline double end_weight(int i, int n) { return (i == 0 || i == n - 1) ? 1.0 : 0.5; }

struct EdgeCoef {
    double inv_h;
    double beta;  // B * A_tangential at the edge midpoint
};

// D = (b - a)/h - i beta (a + b)/2
inline cplx edge_diff(cplx a, cplx b, const EdgeCoef& c) {
    const cplx sum = a + b;
    return (b - a) * c.inv_h - cplx(0.0, 0.5 * c.beta) * sum;
}

template <class EdgeFn>
void for_edges(const Grid2D& g, double field, const Window& w, EdgeFn&& fn) {
    const int n = g.n;
    const double inv_h = 1.0 / g.spacing();
    // x-edges (i,j)-(i+1,j): A_1 = -x2/2
    for (int j = w.j0; j < w.j1; ++j) {
        const EdgeCoef c{inv_h, -0.5 * field * g.coord(j)};
        const int ib = std::max(w.i0 - 1, 0), ie = std::min(w.i1, n - 1);
        for (int i = ib; i < ie; ++i) fn(g.index(i, j), g.index(i + 1, j), i, i + 1, c);
    }
    // y-edges (i,j)-(i,j+1): A_2 = x1/2
    const int jb = std::max(w.j0 - 1, 0), je = std::min(w.j1, n - 1);
    for (int j = jb; j < je; ++j)
        for (int i = w.i0; i < w.i1; ++i) {
            const EdgeCoef c{inv_h, 0.5 * field * g.coord(i)};
            fn(g.index(i, j), g.index(i, j + 1), j, j + 1, c);
        }
}

}  // namespace

double GLFunctional::energy(const ComplexField& u) const { return energy(u, Window::full(grid)); }

double GLFunctional::energy(const ComplexField& u, const Window& w) const {
    require_same_grid(grid, u.grid, "GLFunctional::energy");
    const int n = grid.n;
    const double h2 = grid.spacing() * grid.spacing();
    const cplx* up = u.values.data();
    double ekin = 0.0;
    for_edges(grid, field, w, [&](std::size_t p, std::size_t q, int ip, int iq, const EdgeCoef& c) {
        const double om = end_weight(ip, n) * kin_at(p) + end_weight(iq, n) * kin_at(q);
        ekin += om * std::norm(edge_diff(up[p], up[q], c));
    });
    double epot = 0.0;
    for (int j = w.j0; j < w.j1; ++j)
        for (int i = w.i0; i < w.i1; ++i) {
            const std::size_t k = grid.index(i, j);
            const double r = std::norm(up[k]);
            double e = 0.0;
            if (!c4.empty()) {
                const double d = (s.empty() ? 1.0 : s[k]) - r;
                e += c4[k] * d * d;
            }
            if (!c2.empty()) e += c2[k] * r;
            if (!c0.empty()) e += c0[k];
            epot += e;
        }
    return (ekin + epot) * h2;
}

double GLFunctional::energy_gradient(const ComplexField& u, std::vector<cplx>& g,
                                     const Window& w) const {
    require_same_grid(grid, u.grid, "GLFunctional::energy_gradient");
    const int n = grid.n;
    const double h2 = grid.spacing() * grid.spacing();
    // Window plus a one-point halo; points beyond it are never written.
    const int hi0 = std::max(w.i0 - 1, 0), hi1 = std::min(w.i1 + 1, n);
    const int hj0 = std::max(w.j0 - 1, 0), hj1 = std::min(w.j1 + 1, n);
    if (g.size() != grid.size()) {
        g.assign(grid.size(), cplx(0.0));
    } else {
        for (int j = hj0; j < hj1; ++j)
            std::fill(g.begin() + grid.index(hi0, j), g.begin() + grid.index(hi0, j) + (hi1 - hi0), cplx(0.0));
    }
    const cplx* up = u.values.data();
    double ekin = 0.0;
    for_edges(grid, field, w, [&](std::size_t p, std::size_t q, int ip, int iq, const EdgeCoef& c) {
        const double om = end_weight(ip, n) * kin_at(p) + end_weight(iq, n) * kin_at(q);
        const cplx d = edge_diff(up[p], up[q], c);
        ekin += om * std::norm(d);
        const double f = 2.0 * om * h2;
        // conj(alpha_a) = -1/h + i beta/2, conj(alpha_b) = 1/h + i beta/2
        g[p] += f * cplx(-c.inv_h, 0.5 * c.beta) * d;
        g[q] += f * cplx(c.inv_h, 0.5 * c.beta) * d;
    });
    double epot = 0.0;
    for (int j = w.j0; j < w.j1; ++j)
        for (int i = w.i0; i < w.i1; ++i) {
            const std::size_t k = grid.index(i, j);
            const double r = std::norm(up[k]);
            double e = 0.0, dr = 0.0;  // dr = d e / d|u|^2
            if (!c4.empty()) {
                const double d = (s.empty() ? 1.0 : s[k]) - r;
                e += c4[k] * d * d;
                dr -= 2.0 * c4[k] * d;
            }
            if (!c2.empty()) {
                e += c2[k] * r;
                dr += c2[k];
            }
            if (!c0.empty()) e += c0[k];
            epot += e;
            g[k] += 2.0 * dr * h2 * up[k];
        }
    // Gradient is defined only on the window; edges reaching outside it
    // deposited onto fixed points, which we drop here.
    for (int j = hj0; j < hj1; ++j)
        for (int i = hi0; i < hi1; ++i)
            if (!w.contains(i, j)) g[grid.index(i, j)] = 0.0;
    return (ekin + epot) * h2;
}

ScalarField GLFunctional::kinetic_density(const ComplexField& u) const {
    require_same_grid(grid, u.grid, "GLFunctional::kinetic_density");
    const int n = grid.n;
    ScalarField out(grid);
    const cplx* up = u.values.data();
    for_edges(grid, field, Window::full(grid),
              [&](std::size_t p, std::size_t q, int ip, int iq, const EdgeCoef& c) {
                  const double e = std::norm(edge_diff(up[p], up[q], c));
                  out.values[p] += end_weight(ip, n) * kin_at(p) * e;
                  out.values[q] += end_weight(iq, n) * kin_at(q) * e;
              });
    return out;
}

ScalarField GLFunctional::density(const ComplexField& u) const {
    ScalarField out = kinetic_density(u);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        const double r = std::norm(u.values[k]);
        double e = 0.0;
        if (!c4.empty()) {
            const double d = (s.empty() ? 1.0 : s[k]) - r;
            e += c4[k] * d * d;
        }
        if (!c2.empty()) e += c2[k] * r;
        if (!c0.empty()) e += c0[k];
        out.values[k] += e;
    }
    return out;
}

std::vector<double> GLFunctional::diagonal(const ComplexField& u) const {
    const int n = grid.n;
    const double h2 = grid.spacing() * grid.spacing();
    std::vector<double> dg(grid.size(), 0.0);
    for_edges(grid, field, Window::full(grid),
              [&](std::size_t p, std::size_t q, int ip, int iq, const EdgeCoef& c) {
                  const double om = end_weight(ip, n) * kin_at(p) + end_weight(iq, n) * kin_at(q);
                  const double a = 2.0 * om * h2 * (c.inv_h * c.inv_h + 0.25 * c.beta * c.beta);
                  dg[p] += a;
                  dg[q] += a;
              });
    for (std::size_t k = 0; k < dg.size(); ++k) {
        const double r = std::norm(u.values[k]);
        double e = 0.0;
        if (!c4.empty()) e += std::abs(c4[k] * (12.0 * r - 4.0 * (s.empty() ? 1.0 : s[k])));
        if (!c2.empty()) e += std::abs(2.0 * c2[k]);
        dg[k] += e * h2;
    }
    return dg;
}

GLFunctional make_F_functional(const Grid2D& g, const PhysicalParams& p) {
    GLFunctional f(g);
    f.field = p.omega;
    const std::size_t N = g.size();
    const double inv2e2 = 0.5 / (p.epsilon * p.epsilon);
    f.c4.assign(N, inv2e2);
    f.s.resize(N);
    f.c2.resize(N);
    f.c0.resize(N);
    const double l2 = p.lambda * p.lambda;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double x1 = g.coord(i), x2 = g.coord(j);
            const double a = p.a0 - x1 * x1 - l2 * x2 * x2;
            const double am = std::max(-a, 0.0);
            const std::size_t k = g.index(i, j);
            f.s[k] = a;
            f.c2[k] = -0.25 * p.omega * p.omega * (x1 * x1 + x2 * x2);
            f.c0[k] = -inv2e2 * am * am;
        }
    return f;
}

GLFunctional make_E_functional(const Grid2D& g, const PhysicalParams& p) {
    GLFunctional f = make_F_functional(g, p);
    f.field = 0.0;
    return f;
}

GLFunctional make_G_functional(const ScalarField& eta, const PhysicalParams& p) {
    GLFunctional f(eta.grid);
    f.field = p.omega;
    const std::size_t N = eta.grid.size();
    f.kin.resize(N);
    f.c4.resize(N);
    const double inv2e2 = 0.5 / (p.epsilon * p.epsilon);
    for (std::size_t k = 0; k < N; ++k) {
        const double e2 = eta.values[k] * eta.values[k];
        f.kin[k] = e2;
        f.c4[k] = inv2e2 * e2 * e2;
    }
    return f;
}

GLFunctional make_gl2d_functional(const Grid2D& g, double lambda_coef, double h_ex, double eps) {
    GLFunctional f(g);
    f.field = h_ex;
    f.c4.assign(g.size(), 0.5 * lambda_coef / (eps * eps));
    return f;
}

ScalarField covariant_kinetic_density(const ComplexField& u, double omega) {
    GLFunctional f(u.grid);
    f.field = omega;
    return f.kinetic_density(u);
}

namespace {
double checked(double e, const char* what) {
    if (!std::isfinite(e)) throw NonFiniteEnergy(std::string(what) + " is not finite");
    return e;
}
}  // namespace

double energy_F(const ComplexField& u, const PhysicalParams& p) {
    return checked(make_F_functional(u.grid, p).energy(u), "energy_F");
}

double energy_E(const ComplexField& u, const PhysicalParams& p) {
    return checked(make_E_functional(u.grid, p).energy(u), "energy_E");
}

double energy_E(const ScalarField& eta, const PhysicalParams& p) {
    return energy_E(ComplexField::from_real(eta), p);
}

double energy_G(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p) {
    require_same_grid(v.grid, eta.grid, "energy_G");
    return checked(make_G_functional(eta, p).energy(v), "energy_G");
}

double energy_gl2d(const ComplexField& u, double lambda_coef, double h_ex, double eps) {
    return checked(make_gl2d_functional(u.grid, lambda_coef, h_ex, eps).energy(u), "energy_gl2d");
}

ScalarField energy_G_density(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p) {
    require_same_grid(v.grid, eta.grid, "energy_G_density");
    return make_G_functional(eta, p).density(v);
}

double local_energy(const ComplexField& v, const ScalarField& eta, const PhysicalParams& p,
                    const std::vector<char>& mask) {
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; }))
        throw EmptyRegion("local_energy: region contains no grid cells");
    return integrate_masked(energy_G_density(v, eta, p), mask);
}

}  // namespace gpv
