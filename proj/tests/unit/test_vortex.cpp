#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gpv/error.hpp"
#include "gpv/vortex.hpp"
#include "gpv/winding.hpp"

using namespace gpv;

namespace {

struct Site {
    double x, y;
    int d;
};

// Product of core profiles (z - a)/sqrt(|z - a|^2 + c^2), conjugated for negative degree.
ComplexField vortex_field(const Grid2D& g, const std::vector<Site>& sites, double core) {
    return ComplexField::sample(g, [&](double x, double y) {
        cplx v = 1.0;
        for (const Site& s : sites) {
            cplx z(x - s.x, y - s.y);
            if (s.d < 0) z = std::conj(z);
            v *= std::pow(z / std::sqrt(std::norm(z) + core * core), std::abs(s.d));
        }
        return v;
    });
}

double boundary_winding(const ComplexField& v, int i0, int i1, int j0, int j1) {
    double s = 0.0;
    auto step = [&](int ia, int ja, int ib, int jb) { s += std::arg(v(ib, jb) * std::conj(v(ia, ja))); };
    for (int i = i0; i < i1; ++i) step(i, j0, i + 1, j0);
    for (int j = j0; j < j1; ++j) step(i1, j, i1, j + 1);
    for (int i = i1; i > i0; --i) step(i, j1, i - 1, j1);
    for (int j = j1; j > j0; --j) step(i0, j, i0, j - 1);
    return s / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("canonical windings") {
    const Grid2D g = Grid2D::make(1.0, 64);
    const ComplexField v = ComplexField::sample(g, [](double x, double y) { return cplx(x, y) / std::abs(cplx(x, y)); });
    const WindingMap w = winding_map(v);
    const int c = g.n / 2 - 1;  // plaquette centred at the origin
    for (int j = 0; j < w.m; ++j)
        for (int i = 0; i < w.m; ++i) CHECK(w.at(i, j) == ((i == c && j == c) ? 1 : 0));
    CHECK(w.cx(c) == doctest::Approx(0.0));

    ComplexField vc = v;
    for (auto& z : vc.values) z = std::conj(z);
    const WindingMap wc = winding_map(vc);
    CHECK(wc.at(c, c) == -1);
    int total = 0;
    for (int k : wc.winding) total += std::abs(k);
    CHECK(total == 1);

    const WindingMap w1 = winding_map(ComplexField(g, 1.0));
    for (int k : w1.winding) CHECK(k == 0);
    CHECK(w1.max_residue == 0.0);
}

TEST_CASE("degenerate corners are flagged") {
    const Grid2D g = Grid2D::make(1.0, 64);
    ComplexField v(g, 1.0);
    v(10, 10) = 0.0;
    const WindingMap w = winding_map(v);
    CHECK(w.flagged_count == 4);
    CHECK(w.flagged[static_cast<std::size_t>(10) * w.m + 10] == 1);
    CHECK_THROWS_AS(winding_map(v, true), DegenerateModulus);
}

TEST_CASE("winding additivity on random smooth fields") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> pick(0, 15);
    const Grid2D g = Grid2D::make(1.0, 16);
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        cplx c[6];
        for (auto& z : c) z = cplx(nd(rng), nd(rng));
        const ComplexField v = ComplexField::sample(g, [&](double x, double y) {
            return c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * x * x + c[5] * std::sin(3 * y);
        });
        const WindingMap w = winding_map(v);
        int i0 = pick(rng), i1 = pick(rng), j0 = pick(rng), j1 = pick(rng);
        if (i0 > i1) std::swap(i0, i1);
        if (j0 > j1) std::swap(j0, j1);
        if (i0 == i1 || j0 == j1) continue;
        int sum = 0;
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) sum += w.at(i, j);
        worst = std::max(worst, std::abs(sum - boundary_winding(v, i0, i1, j0, j1)));
        worst = std::max(worst, w.max_residue);
    }
    CHECK(worst < 0.25);
}

TEST_CASE("vortex extraction") {
    const Grid2D g = Grid2D::make(1.0, 128);
    CHECK(extract_vortices(ComplexField(g, 1.0)).vortices.empty());

    const double core = 0.04;
    const std::vector<Site> sites{{-0.4, 0.1, 1}, {0.35, 0.3, 1}, {0.2, -0.45, -1}};
    const ComplexField v = vortex_field(g, sites, core);
    const VortexSet vs = extract_vortices(v);
    REQUIRE(vs.vortices.size() == 3);
    CHECK(vs.total_degree == 1);
    CHECK(vs.total_abs_degree == 3);
    for (const Site& s : sites) {
        bool found = false;
        for (const Vortex& q : vs.vortices)
            if (std::hypot(q.x - s.x, q.y - s.y) < g.spacing() && q.degree == s.d) found = true;
        CHECK(found);
    }
    // {|v| < 1/2} is covered by the balls up to one cell
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            if (std::abs(v(i, j)) >= 0.5) continue;
            bool covered = false;
            for (const Vortex& q : vs.vortices)
                if (std::hypot(g.coord(i) - q.x, g.coord(j) - q.y) <= q.radius + g.spacing()) covered = true;
            CHECK(covered);
        }
    CHECK(vs.sum_radii <= 4.0 * 3 * core);

    // the mask restricts the search
    const auto left = std::vector<char>([&] {
        std::vector<char> m(g.size(), 0);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n / 2; ++i) m[g.index(i, j)] = 1;
        return m;
    }());
    const VortexSet vl = extract_vortices(v, 0.5, &left);
    CHECK(vl.nonzero_count() == 1);
    CHECK(vl.total_degree == 1);
}

TEST_CASE("degree is stable under small noise") {
    const Grid2D g = Grid2D::make(1.0, 128);
    std::vector<Site> sites;
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) sites.push_back({0.3 * a + 0.01, 0.3 * b - 0.02, 1});
    ComplexField v = vortex_field(g, sites, 0.03);
    const int d0 = extract_vortices(v).total_degree;
    CHECK(d0 == 25);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1e-3);
    for (auto& z : v.values) z += cplx(nd(rng), nd(rng));
    CHECK(extract_vortices(v).total_degree == d0);
}

TEST_CASE("vorticity density on a lattice") {
    // square lattice of spacing b has degree density 1/b^2 = omega/(2 pi) for omega = 2 pi / b^2
    const double b = 0.25, omega = 2.0 * std::numbers::pi / (b * b);
    const Grid2D g = Grid2D::make(1.2, 240);
    std::vector<Site> sites;
    for (int a = -5; a <= 5; ++a)
        for (int c = -5; c <= 5; ++c) sites.push_back({a * b, c * b, 1});
    const ComplexField v = vortex_field(g, sites, 0.02);
    const BulkRegion U{1.0, 1.0};
    const VorticityMeasure m = vorticity_density_report(extract_vortices(v), U, omega, b);
    CHECK(m.box_densities.size() > 10);
    CHECK(m.mean_count_density == doctest::Approx(omega / (2 * std::numbers::pi)).epsilon(1e-12));
    CHECK(m.mean_density == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-12));
    CHECK(m.mean_density_2pi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.cv == doctest::Approx(0.0));
    int tw = 0;
    for (int w : m.atom_weights) tw += w;
    CHECK(tw == m.total_weight);
    CHECK(m.total_weight == static_cast<int>(m.box_densities.size()));

    const VorticityMeasure e = vorticity_density_report(extract_vortices(ComplexField(g, 1.0)), U, omega, b);
    CHECK(e.total_weight == 0);
    CHECK(e.atom_points.empty());
    CHECK_THROWS_AS(vorticity_density_report(extract_vortices(v), BulkRegion{0.05, 1.0}, omega, b), EmptyRegion);
}
