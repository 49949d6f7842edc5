#pragma once

#include <optional>

namespace gpv {

struct PhysicalParams {
    double epsilon = 0.0;
    double omega = 0.0;
    double lambda = 1.0;
    double m_cap = 1.0;
    double a0 = 0.0;
    bool default_a0 = true;

    // Validates ranges (ConfigError) and the existence threshold
    // epsilon*omega < 2*lambda (RegimeViolation). When a0 is absent it is
    // tied to lambda through sqrt(2*lambda/pi). m_cap defaults to min(1, lambda).
    static PhysicalParams make(double epsilon, double omega, double lambda = 1.0,
                               std::optional<double> m_cap = std::nullopt,
                               std::optional<double> a0 = std::nullopt);
    void validate() const;
};

double default_a0(double lambda);

struct DerivedParams {
    double alpha_eo = 0.0;         // bulk depth of p_eo
    double lambda_eo = 0.0;        // deformed anisotropy
    double a0_tilde = 0.0;
    double lambda_tilde_sq = 0.0;
    double ell = 0.0;              // infinite when omega == 0
    double h_ex = 0.0;             // 1/ell^2
    double log_eps = 0.0;          // |ln eps|
};

DerivedParams derive_params(const PhysicalParams& p);

enum class TrapKind { a, p_eo, V_eo };

double trap_profile(double x1, double x2, const PhysicalParams& p,
                    const DerivedParams& d, TrapKind kind);

// |x|_{lambda_eo}, the radius whose level sets are the bulk ellipses.
double elliptic_radius(double x1, double x2, const DerivedParams& d);

// Diameters of the bulk ellipse {p_eo > 0}: 2 sqrt(alpha) along x1 and
// 2 sqrt(alpha)/lambda_eo along x2. conjugate is the shorter, transverse the longer.
struct BulkAxes {
    double eo = 0.0;  // eps * omega
    double diameter_x1 = 0.0, diameter_x2 = 0.0;
    double conjugate = 0.0, transverse = 0.0;
};
BulkAxes bulk_axes(const PhysicalParams& p);

struct RegimeReport {
    double lower_bound = 0.0;   // b * |ln eps|
    double upper_bound = 0.0;   // M / eps
    bool lower_ok = false;
    bool upper_ok = false;
    double lower_margin = 0.0;  // omega - lower_bound
    double upper_margin = 0.0;  // upper_bound - omega
    double ultra_ratio = 0.0;   // omega / |ln eps|, wants to be >> 1
    bool ok() const { return lower_ok && upper_ok; }
};

RegimeReport check_regime(const PhysicalParams& p, double b_factor = 2.0);

}  // namespace gpv
