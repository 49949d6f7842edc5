#pragma once

#include <cmath>
#include <vector>

namespace gpv {

struct CGResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool indefinite = false;  // hit p^T A p <= 0
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline void remove_mean(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

// Preconditioned conjugate gradients for A x = b with A symmetric positive
// (semi)definite. apply(x, y) sets y = A x; precond(r, z) sets z = M^{-1} r.
// With project_mean the iteration is kept in the mean-zero subspace, which
// is how the singular periodic/Neumann Laplacian is handled.
template <class Apply, class Precond>
CGResult pcg(Apply&& apply, Precond&& precond, const std::vector<double>& b, std::vector<double>& x,
             double rtol, int max_iter, bool project_mean = false) {
    const std::size_t n = b.size();
    CGResult res;
    std::vector<double> r(n), z(n), p(n), Ap(n);
    apply(x, Ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
    if (project_mean) remove_mean(r);
    const double bnorm = std::sqrt(dot(b, b));
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    double rnorm = std::sqrt(dot(r, r));
    if (rnorm / scale <= rtol) {
        res.converged = true;
        res.relative_residual = rnorm / scale;
        return res;
    }
    precond(r, z);
    if (project_mean) remove_mean(z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) {
            res.indefinite = true;
            res.iterations = it;
            res.relative_residual = rnorm / scale;
            return res;
        }
        const double a = rz / pAp;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += a * p[k];
            r[k] -= a * Ap[k];
        }
        if (project_mean) remove_mean(r);
        rnorm = std::sqrt(dot(r, r));
        res.iterations = it;
        res.relative_residual = rnorm / scale;
        if (res.relative_residual <= rtol) {
            res.converged = true;
            break;
        }
        precond(r, z);
        if (project_mean) remove_mean(z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    if (project_mean) remove_mean(x);
    return res;
}

}  // namespace gpv
