#include "gpv/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gpv/error.hpp"

namespace gpv {

double default_a0(double lambda) { return std::sqrt(2.0 * lambda / std::numbers::pi); }

PhysicalParams PhysicalParams::make(double epsilon, double omega, double lambda,
                                    std::optional<double> m_cap, std::optional<double> a0) {
    PhysicalParams p;
    p.epsilon = epsilon;
    p.omega = omega;
    p.lambda = lambda;
    p.m_cap = m_cap ? *m_cap : std::min(1.0, lambda);
    p.default_a0 = !a0.has_value();
    p.a0 = a0 ? *a0 : gpv::default_a0(lambda);
    p.validate();
    return p;
}

void PhysicalParams::validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(epsilon > 0.0 && epsilon < 1.0)) bad("epsilon must lie in (0, 1)");
    if (!(omega >= 0.0) || !std::isfinite(omega)) bad("omega must be finite and >= 0");
    if (!(lambda > 0.0 && lambda <= 1.0)) bad("lambda must lie in (0, 1]");
    if (!(m_cap > 0.0 && m_cap < 2.0 * lambda)) bad("m_cap must lie in (0, 2*lambda)");
    if (!(a0 > 0.0) || !std::isfinite(a0)) bad("a0 must be positive");
    if (epsilon * omega >= 2.0 * lambda) {
        std::ostringstream os;
        os << "epsilon*omega = " << epsilon * omega << " >= 2*lambda = " << 2.0 * lambda
           << ": the energy is unbounded below";
        throw RegimeViolation(os.str());
    }
}

DerivedParams derive_params(const PhysicalParams& p) {
    p.validate();
    const double eo2 = p.epsilon * p.epsilon * p.omega * p.omega;
    const double l2 = p.lambda * p.lambda;
    const double q = (1.0 - eo2 / (4.0 * l2)) / (1.0 - eo2 / 4.0);

    DerivedParams d;
    d.alpha_eo = p.a0 * std::pow(q, 0.25);
    d.lambda_eo = p.lambda * std::sqrt(q);
    d.a0_tilde = p.a0 / (1.0 - eo2 / 4.0);
    d.lambda_tilde_sq = (l2 - eo2 / 4.0) / (1.0 - eo2 / 4.0);
    d.log_eps = std::abs(std::log(p.epsilon));
    if (p.omega > 0.0) {
        d.ell = std::pow(p.omega / d.log_eps, 0.25) / std::sqrt(p.omega);
        d.h_ex = 1.0 / (d.ell * d.ell);
    } else {
        d.ell = std::numeric_limits<double>::infinity();
        d.h_ex = 0.0;
    }
    return d;
}

double trap_profile(double x1, double x2, const PhysicalParams& p, const DerivedParams& d,
                    TrapKind kind) {
    const double r2 = x1 * x1 + x2 * x2;
    switch (kind) {
        case TrapKind::a:
            return p.a0 - x1 * x1 - p.lambda * p.lambda * x2 * x2;
        case TrapKind::p_eo:
            return d.alpha_eo - x1 * x1 - d.lambda_eo * d.lambda_eo * x2 * x2;
        case TrapKind::V_eo:
            return p.a0 - x1 * x1 - p.lambda * p.lambda * x2 * x2 +
                   0.25 * p.epsilon * p.epsilon * p.omega * p.omega * r2;
    }
    return 0.0;
}

double elliptic_radius(double x1, double x2, const DerivedParams& d) {
    return std::sqrt(x1 * x1 + d.lambda_eo * d.lambda_eo * x2 * x2);
}

BulkAxes bulk_axes(const PhysicalParams& p) {
    const DerivedParams d = derive_params(p);
    BulkAxes b;
    b.eo = p.epsilon * p.omega;
    b.diameter_x1 = 2.0 * std::sqrt(d.alpha_eo);
    b.diameter_x2 = b.diameter_x1 / d.lambda_eo;
    b.conjugate = std::min(b.diameter_x1, b.diameter_x2);
    b.transverse = std::max(b.diameter_x1, b.diameter_x2);
    return b;
}

RegimeReport check_regime(const PhysicalParams& p, double b_factor) {
    RegimeReport r;
    const double le = std::abs(std::log(p.epsilon));
    r.lower_bound = b_factor * le;
    r.upper_bound = p.m_cap / p.epsilon;
    r.lower_ok = p.omega >= r.lower_bound;
    r.upper_ok = p.omega <= r.upper_bound;
    r.lower_margin = p.omega - r.lower_bound;
    r.upper_margin = r.upper_bound - p.omega;
    r.ultra_ratio = p.omega / le;
    return r;
}

}  // namespace gpv
