#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/field_io.hpp"
#include "gpv/grid.hpp"
#include "gpv/params.hpp"

using namespace gpv;
namespace fs = std::filesystem;

namespace {

ComplexField smooth_field(const Grid2D& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c1 = u(rng), c2 = u(rng), k1 = 2 * u(rng), k2 = 2 * u(rng), x0 = 0.3 * u(rng);
    return ComplexField::sample(g, [&](double x, double y) {
        const double r2 = (x - x0) * (x - x0) + y * y;
        return std::exp(-r2) * cplx(1.0 + c1 * x, c2 * y) * std::polar(1.0, k1 * x + k2 * y);
    });
}

}  // namespace

TEST_CASE("quadrature") {
    const Grid2D g = Grid2D::make(1.0, 64);
    CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(integrate(ScalarField(g, 0.0)) == 0.0);
    const Grid2D G = Grid2D::make(8.0, 256);
    const ScalarField gauss = ScalarField::sample(G, [](double x, double y) { return std::exp(-x * x - y * y); });
    CHECK(std::abs(integrate(gauss) - std::numbers::pi) < 1e-8);
}

TEST_CASE("covariant kinetic density") {
    const Grid2D g = Grid2D::make(1.5, 96);
    const ComplexField one(g, 1.0);
    const ScalarField k0 = covariant_kinetic_density(one, 0.0);
    for (double v : k0.values) CHECK(v == 0.0);
    const ScalarField k2 = covariant_kinetic_density(one, 2.0);
    double err = 0.0;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double r2 = g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j);
            err = std::max(err, std::abs(k2(i, j) - r2));
        }
    CHECK(err < 1e-12);

    // gauge-shifted plane wave: |(grad - i omega A) u|^2 = (omega x2 + k1)^2 + k2^2
    const double om = 3.0, q1 = 1.3, q2 = -0.7;
    auto check_order = [&](int n) {
        const Grid2D gg = Grid2D::make(1.0, n);
        const ComplexField u = ComplexField::sample(
            gg, [&](double x, double y) { return std::polar(1.0, 0.5 * om * x * y + q1 * x + q2 * y); });
        const ScalarField k = covariant_kinetic_density(u, om);
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> pick(1, n - 2);
        double e = 0.0;
        for (int s = 0; s < 20; ++s) {
            const int i = pick(rng), j = pick(rng);
            const double ex = std::pow(om * gg.coord(j) + q1, 2) + q2 * q2;
            e = std::max(e, std::abs(k(i, j) - ex) / ex);
        }
        return e;
    };
    const double e1 = check_order(64), e2 = check_order(128);
    CHECK(e1 < 1e-2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("energy_F remainders and gauge invariance") {
    const auto p = PhysicalParams::make(0.1, 4.0, 1.0);
    const Grid2D g = Grid2D::make(1.6, 512);
    const double e0 = energy_F(ComplexField(g, 0.0), p);
    // (1/2 eps^2) integral over {a > 0} of a^2 = (1/2 eps^2) pi a0^3 / 3 at lambda = 1
    const double ref = 0.5 / (p.epsilon * p.epsilon) * std::numbers::pi * std::pow(p.a0, 3) / 3.0;
    CHECK(e0 == doctest::Approx(ref).epsilon(1e-4));
    CHECK(energy_E(ComplexField(g, 0.0), p) == doctest::Approx(e0).epsilon(1e-14));

    const ComplexField u = smooth_field(g, 5);
    ComplexField ur = u;
    for (auto& z : ur.values) z *= std::polar(1.0, 0.731);
    CHECK(energy_F(ur, p) == doctest::Approx(energy_F(u, p)).epsilon(1e-12));
    CHECK(energy_E(ur, p) == doctest::Approx(energy_E(u, p)).epsilon(1e-12));
    ScalarField eta = ScalarField::sample(g, [](double x, double y) { return std::exp(-x * x - 2 * y * y); });
    CHECK(energy_G(ur, eta, p) == doctest::Approx(energy_G(u, eta, p)).epsilon(1e-12));
}

TEST_CASE("energy_F - energy_E for real fields is the centrifugal compensation") {
    const auto p = PhysicalParams::make(0.1, 5.0, 0.8);
    const Grid2D g = Grid2D::make(3.0, 512);
    const ComplexField u = ComplexField::sample(g, [](double x, double y) { return cplx(std::exp(-x * x - y * y) * (1 + x), 0); });
    ScalarField w(g);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double x = g.coord(i), y = g.coord(j);
            w(i, j) = 0.25 * p.omega * p.omega * (x * x + y * y) * std::norm(u(i, j));
        }
    CHECK(energy_F(u, p) - energy_E(u, p) == doctest::Approx(integrate(w)).epsilon(1e-4));
}

TEST_CASE("energy_E at omega = 0 on u = 1") {
    const auto p = PhysicalParams::make(0.2, 0.0, 1.0);
    const Grid2D g = Grid2D::make(2.0, 256);
    ScalarField ref(g);
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            const double a = p.a0 - g.coord(i) * g.coord(i) - g.coord(j) * g.coord(j);
            const double am = std::max(-a, 0.0);
            ref(i, j) = 0.5 / (p.epsilon * p.epsilon) * ((a - 1) * (a - 1) - am * am);
        }
    CHECK(energy_E(ComplexField(g, 1.0), p) == doctest::Approx(integrate(ref)).epsilon(1e-13));
}

TEST_CASE("energy_G closed forms") {
    const auto p0 = PhysicalParams::make(0.1, 0.0, 1.0);
    const auto p = PhysicalParams::make(0.1, 6.0, 1.0);
    const Grid2D g = Grid2D::make(3.0, 256);
    const ScalarField eta = ScalarField::sample(g, [](double x, double y) { return std::exp(-x * x - y * y); });
    CHECK(energy_G(ComplexField(g, 1.0), eta, p0) == 0.0);
    ScalarField q(g), a2(g);
    for (std::size_t k = 0; k < q.values.size(); ++k) q.values[k] = std::pow(eta.values[k], 4) * 0.5 / (p.epsilon * p.epsilon);
    CHECK(energy_G(ComplexField(g, 0.0), eta, p) == doctest::Approx(integrate(q)).epsilon(1e-13));
    // v = 1: omega^2 integral of eta^2 |A0|^2 = omega^2 pi / 16 for eta = exp(-|x|^2)
    CHECK(energy_G(ComplexField(g, 1.0), eta, p) == doctest::Approx(p.omega * p.omega * std::numbers::pi / 16.0).epsilon(1e-3));
    CHECK_THROWS_AS(energy_G(ComplexField(Grid2D::make(3.0, 128), 1.0), eta, p), GridMismatch);
}

TEST_CASE("energy_gl2d on the unit cell") {
    const Grid2D g = Grid2D::make(0.5, 1024);
    CHECK(energy_gl2d(ComplexField(g, 1.0), 1.0, 0.0, 0.1) == 0.0);
    CHECK(std::abs(energy_gl2d(ComplexField(g, 1.0), 1.0, 4.0, 0.1) - 16.0 / 24.0) < 1e-6);
    CHECK(energy_gl2d(ComplexField(g, 0.0), 0.7, 4.0, 0.1) == doctest::Approx(0.7 / (2 * 0.01)).epsilon(1e-13));
}

TEST_CASE("mass") {
    const Grid2D g = Grid2D::make(1.0, 64);
    CHECK(mass(ComplexField(g, 1.0)) == doctest::Approx(4.0).epsilon(1e-13));
    const Grid2D G = Grid2D::make(6.0, 256);
    ScalarField eta = ScalarField::sample(G, [](double x, double y) { return std::exp(-0.5 * (x * x + y * y)); });
    const double m = mass(eta);
    for (double& e : eta.values) e /= std::sqrt(m);
    CHECK(mass(ComplexField(G, 1.0), &eta) == doctest::Approx(1.0).epsilon(1e-13));
    const ComplexField u = smooth_field(G, 9);
    ComplexField u3 = u;
    for (auto& z : u3.values) z *= 3.0;
    CHECK(mass(u3) == doctest::Approx(9.0 * mass(u)).epsilon(1e-14));
}

TEST_CASE("local energy") {
    const auto p = PhysicalParams::make(0.1, 3.0, 1.0);
    const Grid2D g = Grid2D::make(2.5, 128);
    const ScalarField eta = ScalarField::sample(g, [](double x, double y) { return std::exp(-x * x - y * y); });
    const ComplexField v = smooth_field(g, 2);
    const auto all = make_mask(g, [](double, double) { return true; });
    CHECK(local_energy(v, eta, p, all) == doctest::Approx(energy_G(v, eta, p)).epsilon(1e-12));
    std::vector<char> one(g.size(), 0);
    one[g.index(40, 70)] = 1;
    CHECK(local_energy(ComplexField(g, 1.0), eta, PhysicalParams::make(0.1, 0.0), one) == 0.0);
    CHECK_THROWS_AS(local_energy(v, eta, p, std::vector<char>(g.size(), 0)), EmptyRegion);
}

TEST_CASE("zero padding leaves energies unchanged") {
    const auto p = PhysicalParams::make(0.1, 4.0, 1.0);
    const double h = 3.0 / 96;
    const Grid2D a = Grid2D::make(1.5, 96), b = Grid2D::make(3.0, 192);
    auto f = [](double x, double y) { return std::exp(-12 * (x * x + y * y)) * cplx(1, x); };
    const ComplexField ua = ComplexField::sample(a, f), ub = ComplexField::sample(b, f);
    CHECK(b.spacing() == doctest::Approx(h));
    CHECK(edge_max(ua) < 1e-8);
    CHECK(energy_F(ub, p) == doctest::Approx(energy_F(ua, p)).epsilon(1e-10));
    const ScalarField ea = ScalarField::sample(a, [](double x, double y) { return std::exp(-x * x - y * y); });
    const ScalarField eb = ScalarField::sample(b, [](double x, double y) { return std::exp(-x * x - y * y); });
    CHECK(energy_G(ub, eb, p) >= energy_G(ua, ea, p) * (1 - 1e-10));
}

TEST_CASE("interpolation") {
    const Grid2D g = Grid2D::make(1.0, 64);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return 2 * x - 3 * y + 1; });
    CHECK(interpolate(f, 0.123, -0.456) == doctest::Approx(2 * 0.123 + 3 * 0.456 + 1).epsilon(1e-13));
    CHECK_THROWS_AS(interpolate(f, 0.999, 0.0), InterpolationOutOfRange);
}

TEST_CASE("field dump round trip") {
    const fs::path dir = fs::temp_directory_path() / "gpv_test_field_io";
    fs::create_directories(dir);
    const auto p = PhysicalParams::make(0.05, 10.0, 0.9);
    const Grid2D g = Grid2D::make(1.25, 64);
    const ComplexField u = smooth_field(g, 4);
    write_field(dir / "u.bin", u, make_meta(g, p, "v"));
    FieldMeta m;
    const ComplexField r = read_complex_field(dir / "u.bin", &m);
    CHECK(std::memcmp(r.values.data(), u.values.data(), u.values.size() * sizeof(cplx)) == 0);
    CHECK(m.n == 64);
    CHECK(m.half_extent == 1.25);
    CHECK(m.epsilon == 0.05);
    CHECK(m.lambda == 0.9);
    CHECK(m.kind == "v");
    CHECK(fs::file_size(dir / "u.bin") == 2 * g.size() * sizeof(double));
    std::ifstream js(dir / "u.bin.json");
    const auto j = nlohmann::json::parse(js);
    CHECK(j.at("omega").get<double>() == 10.0);

    const ScalarField eta = ScalarField::sample(g, [](double x, double y) { return x * y; });
    write_field(dir / "eta.bin", eta, make_meta(g, p, "eta"));
    const ScalarField er = read_scalar_field(dir / "eta.bin");
    CHECK(std::memcmp(er.values.data(), eta.values.data(), eta.values.size() * sizeof(double)) == 0);
    CHECK_THROWS_AS(read_complex_field(dir / "missing.bin"), MissingInput);
    fs::remove_all(dir);
}
