#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace gpv {

using cplx = std::complex<double>;

// Cell-centred grid on [-R, R]^2: x_i = -R + (i + 1/2) h with h = 2R/n.
// Storage is row-major with i along x1 and j along x2.
struct Grid2D {
    double half_extent = 1.0;
    int n = 64;

    static Grid2D make(double half_extent, int n);

    double spacing() const { return 2.0 * half_extent / n; }
    double coord(int i) const { return -half_extent + (i + 0.5) * spacing(); }
    std::size_t size() const { return static_cast<std::size_t>(n) * n; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
    bool same_as(const Grid2D& o) const { return n == o.n && half_extent == o.half_extent; }
};

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what);

struct ScalarField {
    Grid2D grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double& operator()(int i, int j) { return values[grid.index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.index(i, j)]; }

    template <class F>
    static ScalarField sample(const Grid2D& g, F&& f) {
        ScalarField s(g);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) s(i, j) = f(g.coord(i), g.coord(j));
        return s;
    }
};

struct ComplexField {
    Grid2D grid;
    std::vector<cplx> values;

    ComplexField() = default;
    explicit ComplexField(const Grid2D& g, cplx fill = 0.0) : grid(g), values(g.size(), fill) {}

    cplx& operator()(int i, int j) { return values[grid.index(i, j)]; }
    cplx operator()(int i, int j) const { return values[grid.index(i, j)]; }

    template <class F>
    static ComplexField sample(const Grid2D& g, F&& f) {
        ComplexField s(g);
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) s(i, j) = f(g.coord(i), g.coord(j));
        return s;
    }

    static ComplexField from_real(const ScalarField& s);
};

ScalarField modulus(const ComplexField& u);

// Midpoint quadrature; exact for the piecewise-constant cell reading of the samples.
double integrate(const ScalarField& f);
double integrate_masked(const ScalarField& f, const std::vector<char>& mask);

// Integral of |u|^2, or of weight^2 |u|^2 when a weight is supplied.
double mass(const ComplexField& u, const ScalarField* weight = nullptr);
double mass(const ScalarField& u);

bool all_finite(const ScalarField& f);
bool all_finite(const ComplexField& f);

// Largest |u| over the outermost `rows` rows/columns of the box.
double edge_max(const ComplexField& u, int rows = 3);
double edge_max(const ScalarField& u, int rows = 3);

// Bilinear interpolation at (x1, x2); InterpolationOutOfRange outside the
// hull of the sample points.
double interpolate(const ScalarField& f, double x1, double x2);

}  // namespace gpv
