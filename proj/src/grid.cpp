#include "gpv/grid.hpp"

#include <cmath>
#include <sstream>

#include "gpv/error.hpp"

namespace gpv {

Grid2D Grid2D::make(double half_extent, int n) {
    if (!(half_extent > 0.0) || !std::isfinite(half_extent))
        throw ConfigError("grid half_extent must be positive");
    if (n < 4) throw ConfigError("grid needs at least 4 points per axis");
    return Grid2D{half_extent, n};
}

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
    if (!a.same_as(b)) {
        std::ostringstream os;
        os << what << ": fields live on different grids (n=" << a.n << ", R=" << a.half_extent
           << " vs n=" << b.n << ", R=" << b.half_extent << ")";
        throw GridMismatch(os.str());
    }
}

ComplexField ComplexField::from_real(const ScalarField& s) {
    ComplexField u(s.grid);
    for (std::size_t k = 0; k < s.values.size(); ++k) u.values[k] = s.values[k];
    return u;
}

ScalarField modulus(const ComplexField& u) {
    ScalarField m(u.grid);
    for (std::size_t k = 0; k < u.values.size(); ++k) m.values[k] = std::abs(u.values[k]);
    return m;
}

double integrate(const ScalarField& f) {
    const double h = f.grid.spacing();
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * h * h;
}

double integrate_masked(const ScalarField& f, const std::vector<char>& mask) {
    const double h = f.grid.spacing();
    double s = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (mask[k]) s += f.values[k];
    return s * h * h;
}

double mass(const ComplexField& u, const ScalarField* weight) {
    const double h = u.grid.spacing();
    double s = 0.0;
    if (weight) {
        require_same_grid(u.grid, weight->grid, "mass");
        for (std::size_t k = 0; k < u.values.size(); ++k) {
            const double w = weight->values[k];
            s += w * w * std::norm(u.values[k]);
        }
    } else {
        for (const cplx& z : u.values) s += std::norm(z);
    }
    return s * h * h;
}

double mass(const ScalarField& u) {
    const double h = u.grid.spacing();
    double s = 0.0;
    for (double v : u.values) s += v * v;
    return s * h * h;
}

bool all_finite(const ScalarField& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const ComplexField& f) {
    for (const cplx& z : f.values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

namespace {
template <class Field, class Abs>
double edge_max_impl(const Field& u, int rows, Abs abs) {
    const int n = u.grid.n;
    rows = std::min(rows, n / 2);
    double m = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const bool edge = i < rows || j < rows || i >= n - rows || j >= n - rows;
            if (edge) m = std::max(m, abs(u(i, j)));
        }
    return m;
}
}  // namespace

double edge_max(const ComplexField& u, int rows) {
    return edge_max_impl(u, rows, [](cplx z) { return std::abs(z); });
}

double edge_max(const ScalarField& u, int rows) {
    return edge_max_impl(u, rows, [](double v) { return std::abs(v); });
}

double interpolate(const ScalarField& f, double x1, double x2) {
    const Grid2D& g = f.grid;
    const double h = g.spacing();
    const double s = (x1 - g.coord(0)) / h;
    const double t = (x2 - g.coord(0)) / h;
    const double tol = 1e-9;
    if (s < -tol || t < -tol || s > g.n - 1 + tol || t > g.n - 1 + tol)
        throw InterpolationOutOfRange("interpolation point outside the sampled hull");
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.n - 2);
    int j = std::clamp(static_cast<int>(std::floor(t)), 0, g.n - 2);
    const double a = s - i, b = t - j;
    return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) + (1 - a) * b * f(i, j + 1) +
           a * b * f(i + 1, j + 1);
}

}  // namespace gpv
