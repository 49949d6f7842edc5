#include "gpv/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/field_io.hpp"
#include "gpv/vortex.hpp"

namespace gpv {

namespace {

using Clock = std::chrono::steady_clock;

double re_dot(const std::vector<cplx>& a, const std::vector<cplx>& b, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t k : idx) s += a[k].real() * b[k].real() + a[k].imag() * b[k].imag();
    return s;
}

// Nonlinear CG for f on {h^2 sum w |v|^2 = 1}, moving only the points of win.
MinimizeResult run_constrained(const GLFunctional& f, const std::vector<double>& w, ComplexField v,
                               const Window& win, const MinimizeConfig& cfg) {
    const auto t_start = Clock::now();
    auto out_of_time = [&]() {
        return cfg.max_seconds > 0.0 &&
               std::chrono::duration<double>(Clock::now() - t_start).count() > cfg.max_seconds;
    };
    const Grid2D& g = v.grid;
    const double h2 = g.spacing() * g.spacing();
    std::vector<std::size_t> idx;
    std::vector<char> in(g.size(), 0);
    for (int j = win.j0; j < win.j1; ++j)
        for (int i = win.i0; i < win.i1; ++i) {
            idx.push_back(g.index(i, j));
            in[g.index(i, j)] = 1;
        }
    double m_out = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (!in[k]) m_out += h2 * w[k] * std::norm(v.values[k]);
    const double m_in_target = 1.0 - m_out;
    if (!(m_in_target > 0.0)) throw ConfigError("initial field carries all its mass outside the active window");

    auto retract = [&](ComplexField& u) {
        double m = 0.0;
        for (std::size_t k : idx) m += w[k] * std::norm(u.values[k]);
        m *= h2;
        if (!(m > 0.0) || !std::isfinite(m)) throw NonFiniteEnergy("iterate lost its mass");
        const double sc = std::sqrt(m_in_target / m);
        for (std::size_t k : idx) u.values[k] *= sc;
    };
    retract(v);

    const double e_full0 = f.energy(v);
    const double e_out = e_full0 - f.energy(v, win);

    MinimizeResult res;
    std::vector<cplx> grad, z(g.size()), z_old(g.size()), grad_old, dir(g.size()), wv(g.size()), pw(g.size());
    std::vector<double> diag;
    double e = f.energy_gradient(v, grad, win);
    if (!std::isfinite(e)) throw NonFiniteEnergy("initial energy is not finite");
    res.history.push_back(e + e_out);

    double mu = 0.0;
    auto analyse = [&]() {
        // least-squares multiplier and the relative residual of g = 2 h^2 mu w v
        for (std::size_t k : idx) wv[k] = 2.0 * h2 * w[k] * v.values[k];
        const double ww = re_dot(wv, wv, idx);
        mu = ww > 0.0 ? re_dot(grad, wv, idx) / ww : 0.0;
        double rr = 0.0, gg = 0.0;
        for (std::size_t k : idx) {
            rr += std::norm(grad[k] - mu * wv[k]);
            gg += std::norm(grad[k]);
        }
        return std::sqrt(rr) / (std::sqrt(gg) + std::sqrt(ww) + 1e-300);
    };
    auto precondition = [&]() {
        for (std::size_t k : idx) pw[k] = wv[k] / diag[k];
        double a = 0.0, b = 0.0;
        for (std::size_t k : idx) {
            const cplx pg = grad[k] / diag[k];
            z[k] = pg;
            a += wv[k].real() * pg.real() + wv[k].imag() * pg.imag();
            b += wv[k].real() * pw[k].real() + wv[k].imag() * pw[k].imag();
        }
        const double c = b > 0.0 ? a / b : 0.0;
        for (std::size_t k : idx) z[k] -= c * pw[k];
    };
    auto refresh_diag = [&]() {
        diag = f.diagonal(v);
        double mx = 0.0;
        for (std::size_t k : idx) mx = std::max(mx, diag[k]);
        for (std::size_t k : idx) diag[k] = std::max(diag[k], 1e-14 * mx);
    };

    double residual = analyse();
    res.residual_history.push_back(residual);
    refresh_diag();
    precondition();
    for (std::size_t k : idx) dir[k] = -z[k];
    double t = cfg.step;
    double slope_prev = 0.0;
    bool restart = true;
    ComplexField trial(g);
    trial.values = v.values;
    int it = 0;
    auto stalled = [&]() {
        const int n = static_cast<int>(res.history.size());
        if (n <= cfg.stall_window) return false;
        const double a = res.history[n - 1 - cfg.stall_window], b = res.history[n - 1];
        return a - b <= cfg.energy_rtol * std::abs(b);
    };
    bool converged = residual <= cfg.tol && stalled();
    for (; it < cfg.max_iters && !converged && !out_of_time(); ++it) {
        double slope = re_dot(grad, dir, idx);
        if (!(slope < 0.0)) {
            for (std::size_t k : idx) dir[k] = -z[k];
            slope = re_dot(grad, dir, idx);
            restart = true;
            if (!(slope < 0.0)) break;
        }
        if (!restart && slope_prev < 0.0) t = std::min(t * slope_prev / slope, 10.0 * t);
        bool accepted = false;
        double e_new = e;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t k : idx) trial.values[k] = v.values[k] + t * dir[k];
            retract(trial);
            e_new = f.energy(trial, win);
            if (std::isfinite(e_new) && e_new <= e + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            double tq = 0.5 * t;
            if (std::isfinite(e_new)) {
                const double den = 2.0 * (e_new - e - slope * t);
                if (den > 0.0) tq = -slope * t * t / den;
            }
            t = std::clamp(tq, 0.1 * t, 0.5 * t);
        }
        if (!accepted) {
            if (restart) break;  // steepest descent cannot decrease: roundoff floor
            restart = true;
            for (std::size_t k : idx) dir[k] = -z[k];
            t = cfg.step;
            continue;
        }
        for (std::size_t k : idx) v.values[k] = trial.values[k];
        grad_old.swap(grad);
        e = f.energy_gradient(v, grad, win);
        res.history.push_back(e + e_out);
        residual = analyse();
        res.residual_history.push_back(residual);
        if ((it + 1) % cfg.precond_every == 0) refresh_diag();
        z_old.swap(z);
        precondition();
        // Polak-Ribiere+ on the preconditioned tangent gradients
        double num = 0.0, den = 0.0;
        for (std::size_t k : idx) {
            const cplx dz = z[k] - z_old[k];
            num += grad[k].real() * dz.real() + grad[k].imag() * dz.imag();
            den += grad_old[k].real() * z_old[k].real() + grad_old[k].imag() * z_old[k].imag();
        }
        const double beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;
        // keep the old direction tangent at the new point
        double a = 0.0, b = 0.0;
        for (std::size_t k : idx) {
            a += wv[k].real() * dir[k].real() + wv[k].imag() * dir[k].imag();
            b += wv[k].real() * pw[k].real() + wv[k].imag() * pw[k].imag();
        }
        const double c = b > 0.0 ? a / b : 0.0;
        for (std::size_t k : idx) dir[k] = -z[k] + beta * (dir[k] - c * pw[k]);
        restart = beta == 0.0;
        slope_prev = slope;
        converged = residual <= cfg.tol && stalled();
        // energy at its roundoff floor and the residual no longer improving
        const int nr = static_cast<int>(res.residual_history.size());
        const int look = 4 * cfg.stall_window;
        if (!converged && nr > look && stalled() && res.residual_history[nr - 1] >= 0.99 * res.residual_history[nr - 1 - look])
            break;
    }
    res.v = std::move(v);
    res.energy = f.energy(res.v);
    if (!std::isfinite(res.energy)) throw NonFiniteEnergy("final energy is not finite");
    res.lagrange = mu;
    res.residual = residual;
    res.iterations = it;
    res.converged = converged || residual <= cfg.tol * 1e-3;
    double m = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) m += w[k] * std::norm(res.v.values[k]);
    res.mass = m * h2;
    if (!res.converged && cfg.throw_on_failure)
        throw NoConvergence("constrained minimization did not converge", it, residual);
    return res;
}

Window active_window(const ScalarField& eta, double floor) {
    const Grid2D& g = eta.grid;
    double mx = 0.0;
    for (double e : eta.values) mx = std::max(mx, e);
    Window w{g.n, 0, g.n, 0};
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            if (eta(i, j) > floor * mx) {
                w.i0 = std::min(w.i0, i);
                w.i1 = std::max(w.i1, i + 1);
                w.j0 = std::min(w.j0, j);
                w.j1 = std::max(w.j1, j + 1);
            }
    if (w.i1 <= w.i0) throw EmptyRegion("profile has no active points");
    return w;
}

ScalarField restrict2(const ScalarField& f) {
    const Grid2D c = Grid2D::make(f.grid.half_extent, f.grid.n / 2);
    ScalarField out(c);
    for (int j = 0; j < c.n; ++j)
        for (int i = 0; i < c.n; ++i)
            out(i, j) = 0.25 * (f(2 * i, 2 * j) + f(2 * i + 1, 2 * j) + f(2 * i, 2 * j + 1) + f(2 * i + 1, 2 * j + 1));
    return out;
}

ComplexField restrict2(const ComplexField& f) {
    const Grid2D c = Grid2D::make(f.grid.half_extent, f.grid.n / 2);
    ComplexField out(c);
    for (int j = 0; j < c.n; ++j)
        for (int i = 0; i < c.n; ++i)
            out(i, j) = 0.25 * (f(2 * i, 2 * j) + f(2 * i + 1, 2 * j) + f(2 * i, 2 * j + 1) + f(2 * i + 1, 2 * j + 1));
    return out;
}

// Bilinear, constant beyond the outermost coarse points.
ComplexField prolong2(const ComplexField& c, const Grid2D& fine) {
    ComplexField out(fine);
    const Grid2D& g = c.grid;
    const double h = g.spacing();
    for (int j = 0; j < fine.n; ++j)
        for (int i = 0; i < fine.n; ++i) {
            const double s = std::clamp((fine.coord(i) - g.coord(0)) / h, 0.0, g.n - 1.0);
            const double t = std::clamp((fine.coord(j) - g.coord(0)) / h, 0.0, g.n - 1.0);
            const int i0 = std::min(static_cast<int>(s), g.n - 2), j0 = std::min(static_cast<int>(t), g.n - 2);
            const double a = s - i0, b = t - j0;
            out(i, j) = (1 - a) * (1 - b) * c(i0, j0) + a * (1 - b) * c(i0 + 1, j0) + (1 - a) * b * c(i0, j0 + 1) +
                        a * b * c(i0 + 1, j0 + 1);
        }
    return out;
}

}  // namespace

ComplexField random_phase_field(const ScalarField& eta, std::uint64_t seed) {
    const Grid2D& g = eta.grid;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 2.0 * std::numbers::pi);
    // superposition of plane waves with wavelengths between 1/4 and 1/16 of the box
    const int modes = 48;
    struct Mode {
        double k1, k2;
        cplx c;
    };
    std::vector<Mode> ms;
    const double L = 2.0 * g.half_extent;
    for (int q = 0; q < modes; ++q) {
        const double kk = 2.0 * std::numbers::pi / L * (4.0 + 12.0 * (q + 0.5) / modes);
        const double th = ud(rng);
        ms.push_back({kk * std::cos(th), kk * std::sin(th), cplx(nd(rng), nd(rng))});
    }
    ComplexField v(g);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            cplx z = 0.0;
            for (const Mode& m : ms) z += m.c * std::polar(1.0, m.k1 * g.coord(i) + m.k2 * g.coord(j));
            const double r = std::abs(z);
            v(i, j) = r > 0.0 ? z / r : cplx(1.0);
        }
    const double m = mass(v, &eta);
    for (cplx& z : v.values) z /= std::sqrt(m);
    return v;
}

MinimizeResult minimize_G_from(const PhysicalParams& p, const ProfileSolution& sol, ComplexField v0,
                               const MinimizeConfig& cfg) {
    p.validate();
    require_same_grid(sol.eta.grid, v0.grid, "minimize_G");
    const Grid2D& g = v0.grid;
    const auto t_start = Clock::now();
    int coarse_its = 0;
    if (g.n % 2 == 0 && g.n >= 64 && 2.0 * g.spacing() * cfg.coarse_points_per_eps <= p.epsilon) {
        ProfileSolution cs;
        cs.eta = restrict2(sol.eta);
        MinimizeConfig ccfg = cfg;
        ccfg.throw_on_failure = false;
        ccfg.tol = std::max(cfg.tol, cfg.coarse_tol);
        ccfg.max_seconds = cfg.coarse_share * cfg.max_seconds;
        const MinimizeResult cr = minimize_G_from(p, cs, restrict2(v0), ccfg);
        coarse_its = cr.iterations + cr.coarse_iterations;
        v0 = prolong2(cr.v, g);
    }
    const GLFunctional f = make_G_functional(sol.eta, p);
    std::vector<double> w(sol.eta.values.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = sol.eta.values[k] * sol.eta.values[k];
    MinimizeConfig fcfg = cfg;
    if (cfg.max_seconds > 0.0)
        fcfg.max_seconds = std::max(1e-3, cfg.max_seconds - std::chrono::duration<double>(Clock::now() - t_start).count());
    MinimizeResult r = run_constrained(f, w, std::move(v0), active_window(sol.eta, cfg.window_floor), fcfg);
    r.coarse_iterations = coarse_its;
    return r;
}

MinimizeResult minimize_G(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                          const Grid2D& grid, const MinimizeConfig& cfg) {
    p.validate();
    require_same_grid(sol.eta.grid, grid, "minimize_G");
    ComplexField v0(grid);
    switch (cfg.init) {
        case InitMode::warm:
            if (p.omega > 0.0) {
                v0 = build_trial(p, d, sol, cfg.trial).v;
            } else {
                v0.values.assign(grid.size(), cplx(1.0 / std::sqrt(mass(sol.eta))));
            }
            break;
        case InitMode::cold:
            v0 = random_phase_field(sol.eta, cfg.seed);
            break;
        case InitMode::file: {
            v0 = read_complex_field(cfg.init_path);
            require_same_grid(grid, v0.grid, "minimize_G initial field");
            break;
        }
    }
    return minimize_G_from(p, sol, std::move(v0), cfg);
}

MinimizeFResult minimize_F(const PhysicalParams& p, ComplexField u0, const MinimizeConfig& cfg) {
    p.validate();
    const Grid2D& g = u0.grid;
    const GLFunctional f = make_F_functional(g, p);
    std::vector<double> w(g.size(), 1.0);
    MinimizeFResult out;
    out.base = run_constrained(f, w, std::move(u0), Window::full(g), cfg);
    const double h2 = g.spacing() * g.spacing();
    const double l2 = p.lambda * p.lambda;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double x1 = g.coord(i), x2 = g.coord(j);
            if (p.a0 - x1 * x1 - l2 * x2 * x2 > 0.0) continue;
            const double r = std::norm(out.base.v(i, j));
            out.exterior_quartic += r * r * h2;
        }
    return out;
}

C0Report c0_estimate(const PhysicalParams& p, const DerivedParams& d, const ProfileSolution& sol,
                     const MinimizeResult& res) {
    (void)d;
    if (!res.converged) throw NotConverged("c0_estimate needs a converged minimizer");
    C0Report r;
    r.c0 = res.energy;
    r.target = p.omega * std::log(1.0 / (p.epsilon * std::sqrt(p.omega)));
    r.ratio = r.target > 0.0 ? r.c0 / r.target : 0.0;
    r.e_eps = energy_E(sol.eta, p);
    r.gse = r.e_eps + r.c0;
    ComplexField u(res.v.grid);
    for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] = sol.eta.values[k] * res.v.values[k];
    r.energy_F = energy_F(u, p);
    r.decomposition_defect = std::abs(r.energy_F - r.e_eps - r.c0) / std::abs(r.energy_F);
    return r;
}

namespace {

double elliptic_disk_integral(double alpha, double lam, double R) {
    // integral of alpha - |x|_eo^2 over {|x|_eo <= R}
    return std::numbers::pi * (alpha * R * R - 0.5 * R * R * R * R) / lam;
}

std::vector<std::pair<double, double>> audit_centres(double side, const BulkRegion& U) {
    std::vector<std::pair<double, double>> out;
    const int k1 = static_cast<int>(std::ceil(U.radius / side)) + 1;
    const int k2 = static_cast<int>(std::ceil(U.radius / (side * U.lambda_eo))) + 1;
    for (int b = -k2; b <= k2; ++b)
        for (int a = -k1; a <= k1; ++a)
            if (U.contains_box(a * side, b * side, 0.5 * side)) out.emplace_back(a * side, b * side);
    return out;
}

}  // namespace

SquareAudit square_audit(const ComplexField& v, const PhysicalParams& p, const DerivedParams& d,
                         const ProfileSolution& sol, double delta) {
    require_same_grid(v.grid, sol.eta.grid, "square_audit");
    const double ra = std::sqrt(d.alpha_eo);
    if (!(delta > 0.0) || !(delta < ra)) throw ConfigError("audit delta must lie in (0, sqrt(alpha))");
    if (!(p.omega > 0.0)) throw RegimeViolation("square audit needs omega > 0");
    SquareAudit a;
    a.delta = delta;
    a.side = 1.0 / (d.ell * std::sqrt(p.omega));
    a.log_term = std::log(1.0 / (p.epsilon * std::sqrt(p.omega)));
    const BulkRegion U{ra - delta, d.lambda_eo};
    const auto centres = audit_centres(a.side, U);
    if (centres.empty()) throw EmptyAudit("no audit square fits in U_delta");

    const Grid2D& g = v.grid;
    const ScalarField dens = energy_G_density(v, sol.eta, p);
    const double h = g.spacing(), h2 = h * h;
    const double half = 0.5 * a.side;
    const double area = a.side * a.side;
    auto pe = [&](double x1, double x2) { return trap_profile(x1, x2, p, d, TrapKind::p_eo); };
    std::vector<char> union_mask(g.size(), 0);
    double s = 0.0, s2 = 0.0;
    for (auto [cx, cy] : centres) {
        AuditSquare q;
        q.x = cx;
        q.y = cy;
        q.weight = pe(cx, cy);
        q.weight_max = pe(std::clamp(0.0, cx - half, cx + half), std::clamp(0.0, cy - half, cy + half));
        q.weight_min = q.weight_max;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2) q.weight_min = std::min(q.weight_min, pe(cx + sx * half, cy + sy * half));
        const int i0 = std::max(0, static_cast<int>(std::ceil((cx - half + g.half_extent) / h - 0.5)));
        const int i1 = std::min(g.n, static_cast<int>(std::ceil((cx + half + g.half_extent) / h - 0.5)));
        const int j0 = std::max(0, static_cast<int>(std::ceil((cy - half + g.half_extent) / h - 0.5)));
        const int j1 = std::min(g.n, static_cast<int>(std::ceil((cy + half + g.half_extent) / h - 0.5)));
        double e = 0.0;
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) {
                e += dens(i, j);
                union_mask[g.index(i, j)] = 1;
            }
        q.energy = e * h2;
        q.reference = q.weight * p.omega * area * a.log_term;
        q.meets_reference = q.energy >= q.reference;
        a.aggregate += q.energy;
        a.ref_riemann += q.reference;
        a.ref_riemann_upper += q.weight_max * p.omega * area * a.log_term;
        const double ratio = q.weight > 0.0 ? q.energy / q.weight : 0.0;
        s += ratio;
        s2 += ratio * ratio;
        a.squares.push_back(q);
    }
    double pu = 0.0;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            if (union_mask[g.index(i, j)]) pu += std::max(pe(g.coord(i), g.coord(j)), 0.0);
    a.ref_union = p.omega * a.log_term * pu * h2;
    a.ref_region = p.omega * a.log_term * elliptic_disk_integral(d.alpha_eo, d.lambda_eo, U.radius);
    a.ratio_region = a.aggregate / a.ref_region;
    a.ratio_union = a.aggregate / a.ref_union;
    a.coverage = centres.size() * area / (std::numbers::pi * U.radius * U.radius / d.lambda_eo);
    const double ns = static_cast<double>(centres.size());
    const double mean = s / ns;
    a.weighted_cv = mean > 0.0 ? std::sqrt(std::max(s2 / ns - mean * mean, 0.0)) / mean : 0.0;
    return a;
}

double audit_delta_max_coverage(const PhysicalParams& p, const DerivedParams& d, double delta_min) {
    if (!(p.omega > 0.0)) throw RegimeViolation("square audit needs omega > 0");
    const double ra = std::sqrt(d.alpha_eo);
    const double side = 1.0 / (d.ell * std::sqrt(p.omega));
    // U_delta changes its square set only when its boundary crosses a square corner
    std::vector<double> radii;
    const int k = static_cast<int>(std::ceil(ra / side)) + 1;
    const int k2 = static_cast<int>(std::ceil(ra / (side * d.lambda_eo))) + 1;
    for (int b = -k2; b <= k2; ++b)
        for (int a = -k; a <= k; ++a) {
            double r = 0.0;
            for (int sx = -1; sx <= 1; sx += 2)
                for (int sy = -1; sy <= 1; sy += 2) {
                    const double x1 = (a + 0.5 * sx) * side, x2 = (b + 0.5 * sy) * side;
                    r = std::max(r, std::sqrt(x1 * x1 + d.lambda_eo * d.lambda_eo * x2 * x2));
                }
            if (r <= ra - delta_min) radii.push_back(r * (1.0 + 1e-12));
        }
    if (radii.empty()) throw EmptyAudit("no audit square fits in U_delta for any admissible delta");
    double best = -1.0, best_delta = delta_min;
    for (double r : radii) {
        const BulkRegion U{r, d.lambda_eo};
        const double cov = audit_centres(side, U).size() * side * side / (std::numbers::pi * r * r / d.lambda_eo);
        if (cov > best) {
            best = cov;
            best_delta = ra - r;
        }
    }
    return best_delta;
}

}  // namespace gpv
