#include "gpv/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/linalg.hpp"
#include "gpv/winding.hpp"

namespace gpv {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

double CellProblem::h_cell() const { return two_pi * n_lattice * n_lattice; }

CellProblem CellProblem::make(double h_ex, double eps_cell, int m) {
    if (!(h_ex >= two_pi))
        throw RegimeViolation("cell problem needs h_ex >= 2 pi so that at least one vortex fits");
    if (!(eps_cell > 0.0)) throw ConfigError("eps_cell must be positive");
    CellProblem cp;
    cp.h_ex = h_ex;
    cp.eps_cell = eps_cell;
    cp.n_lattice = static_cast<int>(std::floor(std::sqrt(h_ex / two_pi) + 1e-12));
    if (!(eps_cell < 0.5 / cp.n_lattice))
        throw RegimeViolation("eps_cell must be below half the subcell side");
    if (m <= 0) {
        m = static_cast<int>(std::ceil(4.0 / (eps_cell * cp.n_lattice)));
        m = std::max(m, 8);
        if (m % 2) ++m;
    }
    if (m % 2) throw ConfigError("points per subcell must be even");
    cp.m = m;
    cp.grid = Grid2D::make(0.5, cp.n_lattice * m);
    return cp;
}

CellPotential solve_cell_potential(const CellProblem& cp) {
    const int m = cp.m;
    const double dx = 1.0 / (cp.n_lattice * m);
    const double inv2 = 1.0 / (dx * dx);
    const std::size_t M = static_cast<std::size_t>(m) * m;

    // -Lap h = 2 pi delta - h_cell on the m x m torus of subcell vertices;
    // the periodic solution is even about every subcell edge, i.e. Neumann.
    std::vector<double> b(M, -cp.h_cell());
    if (cp.source_width > 0.0) {
        std::vector<double> g(M);
        double tot = 0.0;
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int pj = -1; pj <= 1; ++pj)
                    for (int pi = -1; pi <= 1; ++pi) {
                        const double x = (i - m / 2 + pi * m) * dx, y = (j - m / 2 + pj * m) * dx;
                        s += std::exp(-(x * x + y * y) / (2.0 * cp.source_width * cp.source_width));
                    }
                g[static_cast<std::size_t>(j) * m + i] = s;
                tot += s;
            }
        for (std::size_t k = 0; k < M; ++k) b[k] += two_pi * g[k] / (tot * dx * dx);
    } else {
        b[static_cast<std::size_t>(m / 2) * m + m / 2] += two_pi * inv2;
    }
    double net = 0.0;
    for (double x : b) net += x;
    if (std::abs(net) * dx * dx > 1e-9 * two_pi)
        throw SingularSystem("cell source is not compatible with the Neumann problem");

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        y.resize(M);
        for (int j = 0; j < m; ++j) {
            const int jn = (j + 1) % m, js = (j + m - 1) % m;
            for (int i = 0; i < m; ++i) {
                const int ie = (i + 1) % m, iw = (i + m - 1) % m;
                const std::size_t k = static_cast<std::size_t>(j) * m + i;
                y[k] = (4.0 * x[k] - x[static_cast<std::size_t>(j) * m + ie] -
                        x[static_cast<std::size_t>(j) * m + iw] - x[static_cast<std::size_t>(jn) * m + i] -
                        x[static_cast<std::size_t>(js) * m + i]) *
                       inv2;
            }
        }
    };
    auto ident = [](const std::vector<double>& r, std::vector<double>& z) { z = r; };
    CellPotential out;
    out.m = m;
    out.spacing = dx;
    out.h.assign(M, 0.0);
    const CGResult r = pcg(apply, ident, b, out.h, 1e-10, 50 * m + 1000, true);
    if (!r.converged)
        throw NoConvergence("cell Poisson solve", r.iterations, r.relative_residual);
    remove_mean(out.h);
    out.cg_iterations = r.iterations;
    out.cg_residual = r.relative_residual;
    return out;
}

ScalarField solve_cell_h(const CellProblem& cp) {
    const CellPotential pot = solve_cell_potential(cp);
    const int m = pot.m;
    // Vertex grid of K0 including both boundaries: n = m + 1 points at
    // -1/(2N) + k dx, which is the cell-centred grid of half extent 1/(2N) + dx/2.
    ScalarField h(Grid2D::make(0.5 / cp.n_lattice + 0.5 * pot.spacing, m + 1));
    for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= m; ++i) h(i, j) = pot.h[static_cast<std::size_t>(j % m) * m + (i % m)];
    return h;
}

CellSolution build_f(const CellProblem& cp) {
    if (cp.source_width > 0.0)
        throw ConfigError("build_f needs the one-cell source: a spread load has no single-valued phase");
    const CellPotential pot = solve_cell_potential(cp);
    const int m = cp.m, N = cp.n_lattice, n = N * m;
    const double dx = pot.spacing;
    const double hc = cp.h_cell();
    const Grid2D& g = cp.grid;

    // h at global vertex (I, J) of K, periodic with period m.
    auto hv = [&](long I, long J) {
        const long i = ((I % m) + m) % m, j = ((J % m) + m) % m;
        return pot.h[static_cast<std::size_t>(j) * m + i];
    };
    // Exact edge increments of phi with grad phi = -perp grad h + h_cell A0.
    auto inc_h = [&](long i, long j) {  // P(i,j) -> P(i+1,j)
        return hv(i + 1, j + 1) - hv(i + 1, j) - 0.5 * hc * g.coord(static_cast<int>(j)) * dx;
    };
    auto inc_v = [&](long i, long j) {  // P(i,j) -> P(i,j+1)
        return -(hv(i + 1, j + 1) - hv(i, j + 1)) + 0.5 * hc * g.coord(static_cast<int>(i)) * dx;
    };

    std::vector<cplx> z(g.size());
    z[0] = 1.0;
    for (int i = 0; i + 1 < n; ++i) z[g.index(i + 1, 0)] = z[g.index(i, 0)] * std::polar(1.0, inc_h(i, 0));
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i < n; ++i)
            z[g.index(i, j + 1)] = z[g.index(i, j)] * std::polar(1.0, inc_v(i, j));
    for (cplx& w : z) w /= std::abs(w);

    CellSolution cs;
    cs.problem = cp;
    // Magnetic translation constants and the seam check.
    const cplx c1 = z[g.index(n - 1, 0)] * std::polar(1.0, inc_h(n - 1, 0)) * std::conj(z[g.index(0, 0)]) *
                    std::polar(1.0, -0.5 * hc * g.coord(0));
    const cplx c2 = z[g.index(0, n - 1)] * std::polar(1.0, inc_v(0, n - 1)) * std::conj(z[g.index(0, 0)]) *
                    std::polar(1.0, 0.5 * hc * g.coord(0));
    cs.shift1 = c1 / std::abs(c1);
    cs.shift2 = c2 / std::abs(c2);
    double seam = 0.0;
    for (int j = 0; j < n; ++j) {
        const cplx across = z[g.index(n - 1, j)] * std::polar(1.0, inc_h(n - 1, j));
        const cplx rule = cs.shift1 * std::polar(1.0, 0.5 * hc * g.coord(j)) * z[g.index(0, j)];
        seam = std::max(seam, std::abs(across - rule));
    }
    for (int i = 0; i < n; ++i) {
        const cplx across = z[g.index(i, n - 1)] * std::polar(1.0, inc_v(i, n - 1));
        const cplx rule = cs.shift2 * std::polar(1.0, -0.5 * hc * g.coord(i)) * z[g.index(i, 0)];
        seam = std::max(seam, std::abs(across - rule));
    }
    cs.seam_mismatch = seam;

    // Cut-off rho = min(1, |x - a|/eps) around the subcell centre.
    cs.f = ComplexField(g);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x1 = g.coord(i), x2 = g.coord(j);
            const double a1 = -0.5 + (i / m + 0.5) / N, a2 = -0.5 + (j / m + 0.5) / N;
            const double rho = std::min(1.0, std::hypot(x1 - a1, x2 - a2) / cp.eps_cell);
            cplx w = rho * z[g.index(i, j)];
            while (std::abs(w) > 1.0) w *= std::nextafter(1.0, 0.0);
            cs.f(i, j) = w;
        }
    for (int t = 0; t < N; ++t)
        for (int s = 0; s < N; ++s) {
            cs.centers_x.push_back(-0.5 + (s + 0.5) / N);
            cs.centers_y.push_back(-0.5 + (t + 0.5) / N);
        }

    // Winding per subcell: plaquette (i,j) is centred on vertex (i+1, j+1);
    // count those strictly inside each subcell.
    cs.subcell_winding.assign(static_cast<std::size_t>(N) * N, 0);
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            const int I = i + 1, J = j + 1;
            if (I % m == 0 || J % m == 0) continue;
            const double w = plaquette_circulation(cs.f(i, j), cs.f(i + 1, j), cs.f(i + 1, j + 1), cs.f(i, j + 1));
            cs.subcell_winding[static_cast<std::size_t>(J / m) * N + I / m] += static_cast<int>(std::lround(w));
        }
    for (std::size_t k = 0; k < cs.subcell_winding.size(); ++k)
        if (cs.subcell_winding[k] != 1) {
            std::ostringstream os;
            os << "subcell " << k << " has winding " << cs.subcell_winding[k] << " instead of +1";
            throw WindingMismatch(os.str());
        }

    cs.h_field = ScalarField(Grid2D::make(0.5 / N + 0.5 * dx, m + 1));
    for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= m; ++i) cs.h_field(i, j) = hv(i, j);

    cs.mass = mass(cs.f);
    cs.energy = energy_gl2d(cs.f, 1.0, cp.h_ex, cp.eps_cell);
    cs.energy_gauge = energy_gl2d(cs.f, 1.0, hc, cp.eps_cell);
    cs.energy_per_cell = cs.energy / (static_cast<double>(N) * N);
    return cs;
}

cplx CellSolution::extended(long k1, long k2) const {
    const long n = problem.grid.n;
    const long p = (k1 >= 0) ? k1 / n : -((-k1 + n - 1) / n);
    const long q = (k2 >= 0) ? k2 / n : -((-k2 + n - 1) / n);
    const int b1 = static_cast<int>(k1 - p * n), b2 = static_cast<int>(k2 - q * n);
    const cplx base = f(b1, b2);
    if (p == 0 && q == 0) return base;
    const double hc = problem.h_cell();
    const double y1 = problem.grid.coord(b1), y2 = problem.grid.coord(b2);
    const double ph = p * std::arg(shift1) + q * std::arg(shift2) +
                      0.5 * hc * (static_cast<double>(p) * y2 - static_cast<double>(q) * (y1 + p));
    return base * std::polar(1.0, ph);
}

CellMetrics cell_metrics(const CellSolution& cs, double lambda_coef) {
    const CellProblem& cp = cs.problem;
    CellMetrics r;
    r.h_ex = cp.h_ex;
    r.h_cell = cp.h_cell();
    r.energy = energy_gl2d(cs.f, lambda_coef, cp.h_ex, cp.eps_cell);
    r.energy_gauge = energy_gl2d(cs.f, lambda_coef, r.h_cell, cp.eps_cell);
    r.target = cp.h_ex * std::log(1.0 / (cp.eps_cell * std::sqrt(cp.h_ex)));
    r.ratio = r.energy / r.target;
    const double N2 = static_cast<double>(cp.n_lattice) * cp.n_lattice;
    r.per_vortex = r.energy / N2;
    r.per_vortex_ref = two_pi * std::log(1.0 / (cp.eps_cell * cp.n_lattice));
    // quartic part alone: the kinetic part does not depend on lambda
    const double kin = energy_gl2d(cs.f, 0.0, cp.h_ex, cp.eps_cell);
    r.quartic = r.energy - kin;
    r.quartic_double = energy_gl2d(cs.f, 2.0 * lambda_coef, cp.h_ex, cp.eps_cell) - kin;
    return r;
}

}  // namespace gpv
