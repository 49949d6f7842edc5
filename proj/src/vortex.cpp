#include "gpv/vortex.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/winding.hpp"

namespace gpv {

namespace {

constexpr double degenerate_modulus = 1e-14;

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

WindingMap winding_map(const ComplexField& v, bool strict) {
    const Grid2D& g = v.grid;
    WindingMap w;
    w.grid = g;
    w.m = std::max(g.n - 1, 0);
    const std::size_t np = static_cast<std::size_t>(w.m) * w.m;
    w.winding.assign(np, 0);
    w.residue.assign(np, 0.0);
    w.flagged.assign(np, 0);
    auto corner = [&](int i, int j, bool& flag) {
        cplx z = v(i, j);
        if (std::abs(z) < degenerate_modulus) {
            flag = true;
            z += degenerate_modulus;
        }
        return z;
    };
    for (int j = 0; j < w.m; ++j)
        for (int i = 0; i < w.m; ++i) {
            bool flag = false;
            const cplx a = corner(i, j, flag), b = corner(i + 1, j, flag), c = corner(i + 1, j + 1, flag),
                       d = corner(i, j + 1, flag);
            const std::size_t k = static_cast<std::size_t>(j) * w.m + i;
            if (flag) {
                if (strict)
                    throw DegenerateModulus("winding undefined: plaquette corner with |v| < 1e-14");
                w.flagged[k] = 1;
                ++w.flagged_count;
            }
            const double c_ = plaquette_circulation(a, b, c, d);
            const double r = std::round(c_);
            w.winding[k] = static_cast<int>(r);
            w.residue[k] = std::abs(c_ - r);
            w.max_residue = std::max(w.max_residue, w.residue[k]);
        }
    return w;
}

int VortexSet::nonzero_count() const {
    return static_cast<int>(std::count_if(vortices.begin(), vortices.end(), [](const Vortex& v) { return v.degree != 0; }));
}

VortexSet extract_vortices(const ComplexField& v, double threshold, const std::vector<char>* mask) {
    const Grid2D& g = v.grid;
    const int n = g.n;
    const double h = g.spacing();
    if (mask && mask->size() != g.size()) throw GridMismatch("extract_vortices: mask size differs from the grid");
    const WindingMap wm = winding_map(v);

    auto inside = [&](std::size_t k) { return !mask || (*mask)[k] != 0; };
    std::vector<char> low(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k) low[k] = inside(k) && std::abs(v.values[k]) < threshold;

    UnionFind uf(g.size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            if (!low[k]) continue;
            if (i + 1 < n && low[k + 1]) uf.unite(static_cast<int>(k), static_cast<int>(k + 1));
            if (j + 1 < n && low[k + n]) uf.unite(static_cast<int>(k), static_cast<int>(k + n));
        }

    // Winding plaquettes glue the low components at their corners.
    struct Acc {
        double wx = 0, wy = 0, wsum = 0;  // degree-weighted plaquette centroid
        double px = 0, py = 0;
        int npts = 0;
        int degree = 0;
        std::vector<std::size_t> pts;
    };
    std::vector<int> orphan;  // winding plaquettes with no low corner
    for (int j = 0; j < wm.m; ++j)
        for (int i = 0; i < wm.m; ++i) {
            const int d = wm.at(i, j);
            if (d == 0) continue;
            const std::size_t cs[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
            if (mask && !std::all_of(cs, cs + 4, inside)) continue;
            int first = -1;
            for (std::size_t c : cs)
                if (low[c]) {
                    if (first < 0) first = static_cast<int>(c);
                    else uf.unite(first, static_cast<int>(c));
                }
            if (first < 0) orphan.push_back(j * wm.m + i);
        }

    std::vector<int> slot(g.size(), -1);
    std::vector<Acc> acc;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            if (!low[k]) continue;
            const int r = uf.find(static_cast<int>(k));
            if (slot[r] < 0) {
                slot[r] = static_cast<int>(acc.size());
                acc.emplace_back();
            }
            Acc& a = acc[slot[r]];
            a.px += g.coord(i);
            a.py += g.coord(j);
            ++a.npts;
            a.pts.push_back(k);
        }
    for (int j = 0; j < wm.m; ++j)
        for (int i = 0; i < wm.m; ++i) {
            const int d = wm.at(i, j);
            if (d == 0) continue;
            const std::size_t cs[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
            if (mask && !std::all_of(cs, cs + 4, inside)) continue;
            for (std::size_t c : cs)
                if (low[c]) {
                    Acc& a = acc[slot[uf.find(static_cast<int>(c))]];
                    a.degree += d;
                    a.wx += std::abs(d) * wm.cx(i);
                    a.wy += std::abs(d) * wm.cy(j);
                    a.wsum += std::abs(d);
                    break;
                }
        }

    VortexSet vs;
    const double half_diag = h / std::sqrt(2.0);
    for (const Acc& a : acc) {
        Vortex vx;
        if (a.wsum > 0) {
            vx.x = a.wx / a.wsum;
            vx.y = a.wy / a.wsum;
        } else {
            vx.x = a.px / a.npts;
            vx.y = a.py / a.npts;
        }
        double r2 = 0.0;
        for (std::size_t k : a.pts) {
            const double dx = g.coord(static_cast<int>(k % n)) - vx.x, dy = g.coord(static_cast<int>(k / n)) - vx.y;
            r2 = std::max(r2, dx * dx + dy * dy);
        }
        vx.radius = std::sqrt(r2) + half_diag;
        vx.degree = a.degree;
        vs.vortices.push_back(vx);
    }
    for (int id : orphan) {
        const int i = id % wm.m, j = id / wm.m;
        vs.vortices.push_back({wm.cx(i), wm.cy(j), half_diag, wm.at(i, j)});
    }
    for (const Vortex& vx : vs.vortices) {
        vs.total_degree += vx.degree;
        vs.total_abs_degree += std::abs(vx.degree);
        vs.sum_radii += vx.radius;
    }
    return vs;
}

bool BulkRegion::contains(double x1, double x2) const {
    return std::sqrt(x1 * x1 + lambda_eo * lambda_eo * x2 * x2) <= radius;
}

bool BulkRegion::contains_box(double cx, double cy, double half) const {
    return contains(cx - half, cy - half) && contains(cx + half, cy - half) && contains(cx - half, cy + half) &&
           contains(cx + half, cy + half);
}

BulkRegion BulkRegion::inset(const DerivedParams& d, double beta) {
    return {std::sqrt(d.alpha_eo) - beta, d.lambda_eo};
}

namespace {

// Lattice squares of half side `half` centred at 2 half (a, b) and contained in U.
std::vector<std::pair<double, double>> squares_in(const BulkRegion& U, double half) {
    std::vector<std::pair<double, double>> out;
    const int kmax = static_cast<int>(std::ceil(U.radius / (2.0 * half))) + 1;
    const int kmax2 = static_cast<int>(std::ceil(U.radius / (2.0 * half * U.lambda_eo))) + 1;
    for (int b = -kmax2; b <= kmax2; ++b)
        for (int a = -kmax; a <= kmax; ++a) {
            const double cx = 2.0 * half * a, cy = 2.0 * half * b;
            if (U.contains_box(cx, cy, half)) out.emplace_back(cx, cy);
        }
    return out;
}

// Grid index range of points with coordinate in [c - half, c + half).
std::pair<int, int> index_range(const Grid2D& g, double c, double half) {
    const double h = g.spacing();
    const int lo = std::max(0, static_cast<int>(std::ceil((c - half + g.half_extent) / h - 0.5)));
    const int hi = std::min(g.n, static_cast<int>(std::ceil((c + half + g.half_extent) / h - 0.5)));
    return {lo, hi};
}

}  // namespace

SquareClassification classify_squares(const ComplexField& v, const PhysicalParams& p, const DerivedParams& /*d*/,
                                      const ProfileSolution& sol, double g_eps, const BulkRegion& U) {
    require_same_grid(v.grid, sol.eta.grid, "classify_squares");
    const Grid2D& g = v.grid;
    SquareClassification out;
    out.delta = 0.5 * std::pow(std::abs(std::log(p.epsilon)) / p.omega, 0.25);
    out.log_term = std::log(1.0 / (p.epsilon * std::sqrt(p.omega)));
    const auto centres = squares_in(U, out.delta);
    if (centres.empty()) throw EmptyRegion("classify_squares: no square fits in the region");

    double vmax = 0.0;
    for (const cplx& z : v.values) vmax = std::max(vmax, std::abs(z));
    out.degenerate = vmax == 0.0;

    const ScalarField kin = covariant_kinetic_density(v, p.omega);
    const WindingMap wm = winding_map(v);
    const double h2 = g.spacing() * g.spacing();
    const double inv2e2 = 0.5 / (p.epsilon * p.epsilon);
    const double area = 4.0 * out.delta * out.delta;
    const double thr = (1.0 + std::sqrt(g_eps)) * p.omega * area * out.log_term;
    const double thr_lit = (1.0 + std::sqrt(g_eps)) * p.omega * out.delta * out.delta * out.log_term;
    for (auto [cx, cy] : centres) {
        SquareClass sq;
        sq.x = cx;
        sq.y = cy;
        const double eta_c = interpolate(sol.eta, cx, cy);
        const double wpot = inv2e2 * eta_c * eta_c;
        const auto [i0, i1] = index_range(g, cx, out.delta);
        const auto [j0, j1] = index_range(g, cy, out.delta);
        double e = 0.0;
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) {
                const double t = 1.0 - std::norm(v(i, j));
                e += kin(i, j) + wpot * t * t;
            }
        sq.energy = e * h2;
        // plaquettes with centre inside the square
        for (int j = j0; j + 1 < j1; ++j)
            for (int i = i0; i + 1 < i1; ++i) sq.degree += wm.at(i, j);
        sq.threshold = thr;
        sq.good = out.degenerate || sq.energy <= thr;
        if (out.degenerate || sq.energy <= thr_lit) ++out.n_good_literal;
        (sq.good ? out.n_good : out.n_bad)++;
        out.squares.push_back(sq);
    }
    out.bad_over_good = out.n_good > 0 ? static_cast<double>(out.n_bad) / out.n_good
                                       : std::numeric_limits<double>::infinity();
    return out;
}

VorticityMeasure vorticity_density_report(const VortexSet& vs, const BulkRegion& U, double omega,
                                          double box_size) {
    if (!(box_size > 0.0)) throw ConfigError("box_size must be positive");
    VorticityMeasure m;
    m.box_size = box_size;
    const double half = 0.5 * box_size;
    for (auto [cx, cy] : squares_in(U, half)) {
        const std::pair<int, int> key{static_cast<int>(std::lround(cx / box_size)),
                                      static_cast<int>(std::lround(cy / box_size))};
        m.box_degrees[key] = 0;
    }
    if (m.box_degrees.empty()) throw EmptyRegion("vorticity_density_report: no box fits in the region");
    for (const Vortex& vx : vs.vortices) {
        if (vx.degree == 0) continue;
        const std::pair<int, int> key{static_cast<int>(std::floor(vx.x / box_size + 0.5)),
                                      static_cast<int>(std::floor(vx.y / box_size + 0.5))};
        auto it = m.box_degrees.find(key);
        if (it == m.box_degrees.end()) continue;
        it->second += vx.degree;
        m.atom_points.emplace_back(vx.x, vx.y);
        m.atom_weights.push_back(vx.degree);
        m.total_weight += vx.degree;
    }
    const double area = box_size * box_size;
    double s = 0.0, s2 = 0.0;
    for (auto [key, deg] : m.box_degrees) {
        const double dens = omega > 0.0 ? deg / (omega * area) : 0.0;
        m.box_densities[key] = dens;
        s += dens;
        s2 += dens * dens;
    }
    const double nb = static_cast<double>(m.box_densities.size());
    m.mean_density = s / nb;
    m.mean_density_2pi = m.mean_density * 2.0 * std::numbers::pi;
    m.mean_count_density = m.total_weight / (nb * area);
    const double var = std::max(s2 / nb - m.mean_density * m.mean_density, 0.0);
    m.cv = m.mean_density > 0.0 ? std::sqrt(var) / m.mean_density : 0.0;
    return m;
}

}  // namespace gpv
