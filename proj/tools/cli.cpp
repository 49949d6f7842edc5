#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gpv/cell.hpp"
#include "gpv/energy.hpp"
#include "gpv/error.hpp"
#include "gpv/field_io.hpp"
#include "gpv/params.hpp"
#include "gpv/profile.hpp"
#include "gpv/solver.hpp"
#include "gpv/trial.hpp"
#include "gpv/vortex.hpp"

extern char** environ;

namespace gpv::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "gpv 0.1";

struct Context {
    std::string command;
    json cfg;
    fs::path out;
    int threads = 1;
    std::uint64_t seed = 1;

    json provenance() const {
        return {{"tool", kVersion}, {"command", command}, {"seed", seed}, {"config", cfg}};
    }
};

// ---------------------------------------------------------------- config

double num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return j[key].get<double>();
}

const json& section(const json& cfg, const char* name) {
    static const json empty = json::object();
    if (!cfg.contains(name)) return empty;
    if (!cfg[name].is_object()) throw ConfigError(std::string("config key '") + name + "' must be an object");
    return cfg[name];
}

std::string str(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return j[key].get<std::string>();
}

std::vector<double> num_list(const json& j, const char* key) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) throw ConfigError(std::string("config key '") + key + "' must be a list");
    for (const json& x : j[key]) {
        if (!x.is_number()) throw ConfigError(std::string("config list '") + key + "' must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

PhysicalParams params_from(const json& cfg) {
    if (!cfg.contains("epsilon")) throw ConfigError("config needs 'epsilon'");
    std::optional<double> m_cap, a0;
    if (cfg.contains("m_cap")) m_cap = num(cfg, "m_cap", 1.0);
    if (cfg.contains("a0")) a0 = num(cfg, "a0", 0.0);
    return PhysicalParams::make(num(cfg, "epsilon", 0.0), num(cfg, "omega", 0.0), num(cfg, "lambda", 1.0), m_cap, a0);
}

json params_json(const PhysicalParams& p) {
    return {{"epsilon", p.epsilon}, {"omega", p.omega}, {"lambda", p.lambda}, {"m_cap", p.m_cap}, {"a0", p.a0}};
}

json derived_json(const DerivedParams& d) {
    return {{"alpha_eo", d.alpha_eo},
            {"lambda_eo", d.lambda_eo},
            {"a0_tilde", d.a0_tilde},
            {"lambda_tilde_sq", d.lambda_tilde_sq},
            {"ell", std::isfinite(d.ell) ? json(d.ell) : json(nullptr)},
            {"h_ex", d.h_ex},
            {"log_eps", d.log_eps}};
}

// Explicit "grid": {"n", "half_extent"}; otherwise the trial lattice grid
// for omega > 0 and a box of 1.5 bulk radii at eps/4 spacing for omega = 0.
Grid2D grid_for(const PhysicalParams& p, const DerivedParams& d, const json& cfg) {
    const json& g = section(cfg, "grid");
    if (g.contains("n") || g.contains("half_extent")) {
        const double R = num(g, "half_extent", 0.0);
        const double n = num(g, "n", 0.0);
        if (!(R > 0.0) || n < 4 || n != std::floor(n) || static_cast<long>(n) % 2 != 0)
            throw ConfigError("grid needs half_extent > 0 and an even n >= 4");
        return Grid2D::make(R, static_cast<int>(n));
    }
    if (p.omega > 0.0) return make_trial_layout(p, d).grid;
    const double R = 1.5 * std::sqrt(p.a0) / std::min(p.lambda, 1.0);
    int n = static_cast<int>(std::ceil(2.0 * R / (p.epsilon / 4.0)));
    n = std::max(64, n + (n % 2));
    return Grid2D::make(R, n);
}

MinimizeConfig minimize_config(const json& cfg, std::uint64_t seed) {
    const json& m = section(cfg, "minimize");
    MinimizeConfig c;
    c.tol = num(m, "tol", c.tol);
    c.max_iters = static_cast<int>(num(m, "max_iters", c.max_iters));
    c.max_seconds = num(m, "max_seconds", c.max_seconds);
    c.window_floor = num(m, "window_floor", c.window_floor);
    const std::string init = str(m, "init", "warm");
    if (init == "warm") {
        c.init = InitMode::warm;
    } else if (init == "cold") {
        c.init = InitMode::cold;
    } else if (init == "file") {
        c.init = InitMode::file;
        c.init_path = str(m, "init_path", "");
        if (c.init_path.empty()) throw ConfigError("minimize.init = file needs minimize.init_path");
    } else {
        throw ConfigError("minimize.init must be warm, cold or file");
    }
    c.seed = seed;
    if (c.tol <= 0.0 || c.max_iters <= 0) throw ConfigError("minimize.tol and minimize.max_iters must be positive");
    return c;
}

// ---------------------------------------------------------------- output

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    write_atomic(path, text);
}

void write_json(const Context& cx, const fs::path& name, json report) {
    report["provenance"] = cx.provenance();
    write_text(cx.out / name, report.dump(2) + "\n");
}

// CSVs keep one header line; provenance goes to a sidecar.
void write_csv(const Context& cx, const fs::path& name, const std::string& text) {
    write_text(cx.out / name, text);
    fs::path side = cx.out / name;
    side += ".prov.json";
    write_text(side, cx.provenance().dump(2) + "\n");
}

void dump_field(const Context& cx, const fs::path& name, const ComplexField& u, const PhysicalParams& p,
                const std::string& kind) {
    std::error_code ec;
    fs::create_directories(cx.out, ec);
    write_field(cx.out / name, u, make_meta(u.grid, p, kind));
}

void dump_field(const Context& cx, const fs::path& name, const ScalarField& u, const PhysicalParams& p,
                const std::string& kind) {
    std::error_code ec;
    fs::create_directories(cx.out, ec);
    write_field(cx.out / name, u, make_meta(u.grid, p, kind));
}

std::string fmt(double x) {
    if (!std::isfinite(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// ---------------------------------------------------------------- pipelines

json profile_json(const ProfileSolution& s, const ProfileBounds& b) {
    return {{"k_eps", s.k_eps},
            {"residual", s.residual},
            {"converged", s.converged},
            {"flow_steps", s.flow_steps},
            {"newton_steps", s.newton_steps},
            {"energy_E", s.energy},
            {"bounds",
             {{"ratio_sup", b.ratio_sup},
              {"ratio_inf", b.ratio_inf},
              {"interface_sup_over_eps13", b.interface_sup},
              {"rays_monotone", b.rays_monotone},
              {"decay_slope", b.decay_slope},
              {"mass_ratio_measured", b.mass_ratio_measured},
              {"mass_ratio_predicted", b.mass_ratio_predicted}}}};
}

struct StateSummary {
    int vortex_count = 0;
    double density = std::nan("");
    double density_over_2pi = std::nan("");
    VorticityMeasure measure;
    bool has_measure = false;
};

// Vortices of v inside the inset bulk, and their density in lattice-cell boxes.
StateSummary summarize(const ComplexField& v, const PhysicalParams& p, const DerivedParams& d, double beta,
                       double threshold) {
    StateSummary s;
    const BulkRegion U = BulkRegion::inset(d, beta);
    const std::vector<char> mask = make_mask(v.grid, [&](double x, double y) { return U.contains(x, y); });
    const VortexSet vs = extract_vortices(v, threshold, &mask);
    s.vortex_count = vs.nonzero_count();
    if (p.omega > 0.0 && U.radius > 0.0) {
        try {
            const double box = 1.0 / make_trial_layout(p, d).scale;
            s.measure = vorticity_density_report(vs, U, p.omega, box);
            s.density = s.measure.mean_density;
            s.density_over_2pi = s.measure.mean_density_2pi;
            s.has_measure = true;
        } catch (const EmptyRegion&) {
        }
    }
    return s;
}

json measure_json(const StateSummary& s) {
    json j = {{"vortex_count", s.vortex_count}};
    if (!s.has_measure) {
        j["density"] = nullptr;
        return j;
    }
    const VorticityMeasure& m = s.measure;
    json boxes = json::array();
    for (const auto& [key, dens] : m.box_densities)
        boxes.push_back({{"i", key.first},
                         {"j", key.second},
                         {"degree", m.box_degrees.at(key)},
                         {"density", dens},
                         {"density_over_2pi", dens * 2.0 * std::numbers::pi}});
    j["density"] = {{"box_size", m.box_size},         {"mean_density", m.mean_density},
                    {"mean_density_2pi", m.mean_density_2pi}, {"mean_count_density", m.mean_count_density},
                    {"cv", m.cv},                     {"total_weight", m.total_weight},
                    {"boxes", boxes}};
    return j;
}

json ub_json(const UpperBoundReport& r) {
    return {{"energy", r.energy}, {"target", r.target}, {"ratio", r.ratio}, {"ratio_two_omega", r.ratio_two_omega},
            {"C1", r.C1},         {"C2", r.C2},         {"C3", r.C3},       {"C4", r.C4},
            {"raw_mass", r.raw_mass}, {"mass_deficit", r.mass_deficit}, {"vortex_count", r.vortex_count}};
}

int cmd_derive(const Context& cx) {
    const PhysicalParams p = params_from(cx.cfg);
    const DerivedParams d = derive_params(p);
    const RegimeReport rr = check_regime(p, num(cx.cfg, "b_factor", 2.0));
    const BulkAxes ax = bulk_axes(p);
    json j = {{"kind", "derive"},
              {"params", params_json(p)},
              {"derived", derived_json(d)},
              {"ell", std::isfinite(d.ell) ? json(d.ell) : json(nullptr)},
              {"h_ex", d.h_ex},
              {"regime",
               {{"ok", rr.ok()}, {"lower_bound", rr.lower_bound}, {"upper_bound", rr.upper_bound},
                {"lower_margin", rr.lower_margin}, {"upper_margin", rr.upper_margin}, {"ultra_ratio", rr.ultra_ratio}}},
              {"bulk_axes",
               {{"eo", ax.eo}, {"diameter_x1", ax.diameter_x1}, {"diameter_x2", ax.diameter_x2},
                {"conjugate", ax.conjugate}, {"transverse", ax.transverse}}}};
    write_json(cx, "derive.json", j);

    std::vector<double> eos = num_list(cx.cfg, "axes_eo");
    if (eos.empty()) eos = {0.0, 0.5, 1.0, 1.3};
    std::ostringstream csv;
    csv << "lambda,eo,diameter_x1,diameter_x2,conjugate,transverse\n";
    for (double eo : eos) {
        if (eo < 0.0 || eo >= 2.0 * p.lambda) continue;
        const BulkAxes b = bulk_axes(PhysicalParams::make(p.epsilon, eo / p.epsilon, p.lambda));
        csv << fmt(p.lambda) << ',' << fmt(eo) << ',' << fmt(b.diameter_x1) << ',' << fmt(b.diameter_x2) << ','
            << fmt(b.conjugate) << ',' << fmt(b.transverse) << '\n';
    }
    write_csv(cx, "bulk_axes.csv", csv.str());
    return Exit::ok;
}

int cmd_profile(const Context& cx) {
    const PhysicalParams p = params_from(cx.cfg);
    const DerivedParams d = derive_params(p);
    const Grid2D g = grid_for(p, d, cx.cfg);
    const ProfileSolution s = solve_profile(p, g, num(cx.cfg, "profile_tol", 1e-9));
    const ProfileBounds b = verify_profile_bounds(s, p, d);
    json j = profile_json(s, b);
    j["kind"] = "profile";
    j["params"] = params_json(p);
    j["grid"] = {{"n", g.n}, {"half_extent", g.half_extent}};
    j["edge_max"] = edge_max(s.eta);
    write_json(cx, "profile.json", j);
    dump_field(cx, "eta.bin", s.eta, p, "eta");
    return Exit::ok;
}

int cmd_cell(const Context& cx) {
    const json& c = section(cx.cfg, "cell");
    const double h_ex = num(c, "h_ex", 0.0);
    const double eps_cell = num(c, "eps_cell", 0.0);
    if (!(h_ex > 0.0) || !(eps_cell > 0.0)) throw ConfigError("cell needs h_ex > 0 and eps_cell > 0");
    const CellSolution cs = build_f(CellProblem::make(h_ex, eps_cell, static_cast<int>(num(c, "m", 0))));
    const double lam = num(c, "lambda", 1.0);
    const CellMetrics m = cell_metrics(cs, lam);
    double fmax = 0.0;
    for (const cplx& z : cs.f.values) fmax = std::max(fmax, std::abs(z));
    json j = {{"kind", "cell"},
              {"h_ex", cs.problem.h_ex},
              {"h_cell", cs.problem.h_cell()},
              {"N", cs.problem.n_lattice},
              {"eps_cell", cs.problem.eps_cell},
              {"m", cs.problem.m},
              {"mass", cs.mass},
              {"max_modulus", fmax},
              {"subcell_winding", cs.subcell_winding},
              {"seam_mismatch", cs.seam_mismatch},
              {"energy", m.energy},
              {"energy_gauge", m.energy_gauge},
              {"target", m.target},
              {"ratio", m.ratio},
              {"per_vortex", m.per_vortex},
              {"per_vortex_ref", m.per_vortex_ref},
              {"quartic", m.quartic},
              {"quartic_double", m.quartic_double}};
    write_json(cx, "cell.json", j);
    PhysicalParams pc;
    pc.epsilon = eps_cell;
    pc.omega = h_ex;
    dump_field(cx, "cell_f.bin", cs.f, pc, "cell_f");
    return Exit::ok;
}

struct Prepared {
    PhysicalParams p;
    DerivedParams d;
    ProfileSolution sol;
    TrialState ts;
};

Prepared prepare_trial(const PhysicalParams& p) {
    Prepared r;
    r.p = p;
    r.d = derive_params(p);
    const TrialLayout lay = make_trial_layout(p, r.d);
    r.sol = solve_profile(p, lay.grid, 1e-9);
    r.ts = build_trial(p, r.d, r.sol);
    return r;
}

int cmd_trial(const Context& cx) {
    const PhysicalParams p = params_from(cx.cfg);
    if (!(p.omega > 0.0)) throw RegimeViolation("trial needs omega > 0");
    const Prepared pr = prepare_trial(p);
    const UpperBoundReport r = upper_bound_report(pr.ts, p, pr.d, pr.sol);
    const StateSummary sm = summarize(pr.ts.v, p, pr.d, num(cx.cfg, "beta", 0.1), 0.5);
    json j = ub_json(r);
    j["kind"] = "trial";
    j["params"] = params_json(p);
    j["epsilon"] = p.epsilon;
    j["omega"] = p.omega;
    j["grid"] = {{"n", pr.ts.v.grid.n}, {"half_extent", pr.ts.v.grid.half_extent}};
    j["lattice"] = {{"scale", pr.ts.layout.scale}, {"N", pr.ts.layout.n_lattice}, {"h_cell", pr.ts.layout.h_cell},
                    {"eps_cell", pr.ts.layout.eps_cell}, {"L", pr.ts.L}, {"expected_vortices", pr.ts.expected_vortices}};
    j["bulk"] = measure_json(sm);
    write_json(cx, "trial.json", j);
    dump_field(cx, "trial_v.bin", pr.ts.v, p, "trial_v");
    return Exit::ok;
}

int cmd_minimize(const Context& cx) {
    const PhysicalParams p = params_from(cx.cfg);
    const DerivedParams d = derive_params(p);
    const Grid2D g = grid_for(p, d, cx.cfg);
    const ProfileSolution sol = solve_profile(p, g, num(cx.cfg, "profile_tol", 1e-9));
    MinimizeConfig mc = minimize_config(cx.cfg, cx.seed);
    mc.throw_on_failure = false;
    const MinimizeResult r = minimize_G(p, d, sol, g, mc);
    json j = {{"kind", "minimize"},
              {"params", params_json(p)},
              {"epsilon", p.epsilon},
              {"omega", p.omega},
              {"grid", {{"n", g.n}, {"half_extent", g.half_extent}}},
              {"energy", r.energy},
              {"lagrange", r.lagrange},
              {"residual", r.residual},
              {"iterations", r.iterations},
              {"coarse_iterations", r.coarse_iterations},
              {"converged", r.converged},
              {"mass", r.mass}};
    if (p.omega > 0.0 && mc.init == InitMode::warm) j["trial_energy"] = energy_G(build_trial(p, d, sol).v, sol.eta, p);
    const double target = p.omega > 0.0 ? p.omega * std::log(1.0 / (p.epsilon * std::sqrt(p.omega))) : 0.0;
    j["target"] = target;
    j["ratio"] = target > 0.0 ? r.energy / target : 0.0;
    if (r.converged) {
        const C0Report c0 = c0_estimate(p, d, sol, r);
        j["c0"] = {{"c0", c0.c0}, {"e_eps", c0.e_eps}, {"gse", c0.gse}, {"energy_F", c0.energy_F},
                   {"decomposition_defect", c0.decomposition_defect}};
    }
    j["bulk"] = measure_json(summarize(r.v, p, d, num(cx.cfg, "beta", 0.1), 0.5));
    write_json(cx, "minimize.json", j);
    dump_field(cx, "minimizer_v.bin", r.v, p, "minimizer_v");
    if (!r.converged) throw NoConvergence("minimize_G did not converge", r.iterations, r.residual);
    return Exit::ok;
}

int cmd_vortices(const Context& cx) {
    const json& c = section(cx.cfg, "vortices");
    const std::string path = str(c, "field", "");
    if (path.empty()) throw ConfigError("vortices needs vortices.field (a field dump)");
    FieldMeta meta;
    const ComplexField v = read_complex_field(path, &meta);
    const double thr = num(c, "threshold", 0.5);
    const VortexSet vs = extract_vortices(v, thr);
    std::ostringstream csv;
    csv << "x,y,radius,degree\n";
    for (const Vortex& q : vs.vortices)
        if (q.degree != 0) csv << fmt(q.x) << ',' << fmt(q.y) << ',' << fmt(q.radius) << ',' << q.degree << '\n';
    write_csv(cx, "vortices.csv", csv.str());
    json j = {{"kind", "vortices"},
              {"field", path},
              {"threshold", thr},
              {"count", vs.nonzero_count()},
              {"total_degree", vs.total_degree},
              {"total_abs_degree", vs.total_abs_degree},
              {"sum_radii", vs.sum_radii}};
    if (meta.epsilon > 0.0 && meta.omega > 0.0) {
        const PhysicalParams p = PhysicalParams::make(meta.epsilon, meta.omega, meta.lambda);
        j["bulk"] = measure_json(summarize(v, p, derive_params(p), num(c, "beta", 0.1), thr));
    }
    write_json(cx, "vortices.json", j);
    return Exit::ok;
}

int cmd_audit(const Context& cx) {
    const json& c = section(cx.cfg, "audit");
    const std::string path = str(c, "field", "");
    if (path.empty()) throw ConfigError("audit needs audit.field (a field dump)");
    const PhysicalParams p = params_from(cx.cfg);
    const DerivedParams d = derive_params(p);
    const ComplexField v = read_complex_field(path);
    const ProfileSolution sol = solve_profile(p, v.grid, num(cx.cfg, "profile_tol", 1e-9));
    const double delta = c.contains("delta") ? num(c, "delta", 0.0) : audit_delta_max_coverage(p, d);
    const SquareAudit a = square_audit(v, p, d, sol, delta);
    const SquareClassification cl = classify_squares(v, p, d, sol, num(c, "g", 0.0),
                                                     BulkRegion::inset(d, num(cx.cfg, "beta", 0.1)));
    json sq = json::array();
    for (const AuditSquare& s : a.squares)
        sq.push_back({{"x", s.x}, {"y", s.y}, {"energy", s.energy}, {"weight", s.weight}, {"weight_min", s.weight_min},
                      {"weight_max", s.weight_max}, {"reference", s.reference}, {"meets_reference", s.meets_reference}});
    json j = {{"kind", "audit"},
              {"params", params_json(p)},
              {"field", path},
              {"delta", a.delta},
              {"side", a.side},
              {"aggregate", a.aggregate},
              {"ref_region", a.ref_region},
              {"ref_union", a.ref_union},
              {"ref_riemann", a.ref_riemann},
              {"ref_riemann_upper", a.ref_riemann_upper},
              {"ratio_region", a.ratio_region},
              {"ratio_union", a.ratio_union},
              {"coverage", a.coverage},
              {"weighted_cv", a.weighted_cv},
              {"squares", sq},
              {"classification",
               {{"n_good", cl.n_good}, {"n_bad", cl.n_bad}, {"bad_over_good", cl.bad_over_good},
                {"n_good_literal", cl.n_good_literal}, {"degenerate", cl.degenerate}}}};
    write_json(cx, "audit.json", j);
    return Exit::ok;
}

struct SweepRow {
    double epsilon = 0.0, omega = 0.0, energy = 0.0, target = 0.0, ratio = 0.0;
    int vortex_count = 0;
    double density = 0.0, density_over_2pi = 0.0;
    json report;
};

SweepRow sweep_point(const Context& cx, double eps, double omega, bool minimize) {
    const PhysicalParams p = PhysicalParams::make(eps, omega, num(cx.cfg, "lambda", 1.0));
    const Prepared pr = prepare_trial(p);
    const UpperBoundReport ub = upper_bound_report(pr.ts, p, pr.d, pr.sol);
    SweepRow row;
    row.epsilon = eps;
    row.omega = omega;
    row.target = ub.target;
    row.report = ub_json(ub);
    row.report["kind"] = "sweep";
    row.report["epsilon"] = eps;
    row.report["omega"] = omega;
    const ComplexField* state = &pr.ts.v;
    MinimizeResult mr;
    if (minimize) {
        MinimizeConfig mc = minimize_config(cx.cfg, cx.seed);
        mc.throw_on_failure = false;
        mr = minimize_G_from(p, pr.sol, pr.ts.v, mc);
        state = &mr.v;
        row.energy = mr.energy;
        row.report["trial_energy"] = ub.energy;
        row.report["energy"] = mr.energy;
        row.report["converged"] = mr.converged;
        row.report["residual"] = mr.residual;
    } else {
        row.energy = ub.energy;
    }
    row.ratio = row.target > 0.0 ? row.energy / row.target : 0.0;
    row.report["ratio"] = row.ratio;
    const StateSummary sm = summarize(*state, p, pr.d, num(cx.cfg, "beta", 0.1), 0.5);
    row.vortex_count = sm.vortex_count;
    row.density = sm.density;
    row.density_over_2pi = sm.density_over_2pi;
    row.report["bulk"] = measure_json(sm);
    return row;
}

int cmd_sweep(const Context& cx) {
    const json& s = section(cx.cfg, "sweep");
    const std::vector<double> eps = num_list(s, "epsilons");
    std::vector<double> omegas = num_list(s, "omegas");
    const bool scaled = s.contains("omega_times_eps");
    if (eps.empty()) throw ConfigError("sweep.epsilons must be a nonempty list");
    if (!std::is_sorted(eps.begin(), eps.end()) && !std::is_sorted(eps.rbegin(), eps.rend()))
        throw ConfigError("sweep.epsilons must be sorted");
    if (!std::is_sorted(omegas.begin(), omegas.end())) throw ConfigError("sweep.omegas must be sorted");
    if (scaled == !omegas.empty()) throw ConfigError("sweep needs exactly one of omegas, omega_times_eps");
    const double c = scaled ? num(s, "omega_times_eps", 0.0) : 0.0;
    const bool minimize = s.value("minimize", false);

    std::vector<std::pair<double, double>> points;
    for (double e : eps) {
        if (scaled) {
            points.emplace_back(e, c / e);
        } else {
            for (double o : omegas) points.emplace_back(e, o);
        }
    }
    // validate every point before any work starts
    for (const auto& [e, o] : points) PhysicalParams::make(e, o, num(cx.cfg, "lambda", 1.0));

    std::vector<SweepRow> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k; (k = next++) < points.size();) {
            try {
                rows[k] = sweep_point(cx, points[k].first, points[k].second, minimize);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(cx.threads, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::ostringstream csv;
    csv << "epsilon,omega,energy,target,ratio,vortex_count,density,density_over_2pi\n";
    json all = json::array();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const SweepRow& r = rows[k];
        csv << fmt(r.epsilon) << ',' << fmt(r.omega) << ',' << fmt(r.energy) << ',' << fmt(r.target) << ','
            << fmt(r.ratio) << ',' << r.vortex_count << ',' << fmt(r.density) << ',' << fmt(r.density_over_2pi) << '\n';
        char name[64];
        std::snprintf(name, sizeof name, "sweep_%03zu.json", k);
        write_json(cx, name, r.report);
        all.push_back(name);
    }
    write_csv(cx, "sweep.csv", csv.str());
    write_json(cx, "sweep.json", {{"kind", "sweep_index"}, {"points", all}});
    return Exit::ok;
}

int cmd_plot(const Context& cx, const std::vector<std::string>& reports) {
    std::vector<fs::path> paths(reports.begin(), reports.end());
    emit_plot_data(paths, cx.out);
    return Exit::ok;
}

int exit_code(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const RegimeViolation& x) {
        std::cerr << "regime violation: " << x.what() << '\n';
        return Exit::regime;
    } catch (const NoConvergence& x) {
        std::cerr << "no convergence: " << x.what() << '\n';
        return Exit::convergence;
    } catch (const NotConverged& x) {
        std::cerr << "no convergence: " << x.what() << '\n';
        return Exit::convergence;
    } catch (const NonFiniteEnergy& x) {
        std::cerr << "no convergence: " << x.what() << '\n';
        return Exit::convergence;
    } catch (const IoError& x) {
        std::cerr << "i/o error: " << x.what() << '\n';
        return Exit::io;
    } catch (const json::exception& x) {
        std::cerr << "config error: " << x.what() << '\n';
        return Exit::config;
    } catch (const Error& x) {
        // ConfigError, ResolutionError, EmptyRegion, GridMismatch and the rest
        // are all consequences of the configuration.
        std::cerr << "config error: " << x.what() << '\n';
        return Exit::config;
    } catch (const fs::filesystem_error& x) {
        std::cerr << "i/o error: " << x.what() << '\n';
        return Exit::io;
    } catch (const std::exception& x) {
        std::cerr << "error: " << x.what() << '\n';
        return Exit::other;
    }
}

std::string csv_join(std::initializer_list<std::string> xs) {
    std::string s;
    for (const std::string& x : xs) {
        if (!s.empty()) s += ',';
        s += x;
    }
    return s + '\n';
}

}  // namespace

void apply_env_overrides(json& cfg, const std::vector<std::string>& env) {
    for (const std::string& kv : env) {
        if (kv.rfind("GPV_", 0) != 0) continue;
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 4) continue;
        std::string name = kv.substr(4, eq - 4);
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
        const std::string raw = kv.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        json* node = &cfg;
        std::size_t pos = 0;
        for (std::size_t cut; (cut = name.find("__", pos)) != std::string::npos; pos = cut + 2) {
            json& child = (*node)[name.substr(pos, cut - pos)];
            if (!child.is_object()) child = json::object();
            node = &child;
        }
        (*node)[name.substr(pos)] = value;
    }
}

std::vector<fs::path> emit_plot_data(const std::vector<fs::path>& reports, const fs::path& out_dir) {
    if (reports.empty()) throw MissingInput("emit_plot_data: no reports given");
    std::string ratio = "source,kind,epsilon,omega,energy,target,ratio\n";
    std::string axes = "source,lambda,epsilon,omega,eo,diameter_x1,diameter_x2,conjugate,transverse\n";
    std::string boxes = "source,epsilon,omega,box_i,box_j,degree,density,density_over_2pi\n";
    std::string squares = "source,x,y,energy,weight,weight_min,weight_max,reference,meets_reference\n";
    for (const fs::path& r : reports) {
        std::ifstream in(r);
        if (!in) throw MissingInput("report not found: " + r.string());
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw IoError("report is not JSON: " + r.string());
        const std::string src = r.filename().string();
        const std::string kind = j.value("kind", "");
        const json prm = j.value("params", json::object());
        const double eps = j.value("epsilon", prm.value("epsilon", std::nan("")));
        const double om = j.value("omega", prm.value("omega", std::nan("")));
        if (kind == "trial" || kind == "minimize" || kind == "sweep")
            ratio += csv_join({src, kind, fmt(eps), fmt(om), fmt(j.value("energy", std::nan(""))),
                               fmt(j.value("target", std::nan(""))), fmt(j.value("ratio", std::nan("")))});
        if (kind == "derive") {
            const json& b = j.at("bulk_axes");
            axes += csv_join({src, fmt(prm.value("lambda", 1.0)), fmt(eps), fmt(om), fmt(b.value("eo", 0.0)),
                              fmt(b.value("diameter_x1", 0.0)), fmt(b.value("diameter_x2", 0.0)),
                              fmt(b.value("conjugate", 0.0)), fmt(b.value("transverse", 0.0))});
        }
        if (j.contains("bulk") && j["bulk"].contains("density") && j["bulk"]["density"].is_object())
            for (const json& b : j["bulk"]["density"]["boxes"])
                boxes += csv_join({src, fmt(eps), fmt(om), std::to_string(b.value("i", 0)),
                                   std::to_string(b.value("j", 0)), std::to_string(b.value("degree", 0)),
                                   fmt(b.value("density", 0.0)), fmt(b.value("density_over_2pi", 0.0))});
        if (kind == "audit")
            for (const json& s : j["squares"])
                squares += csv_join({src, fmt(s.value("x", 0.0)), fmt(s.value("y", 0.0)), fmt(s.value("energy", 0.0)),
                                     fmt(s.value("weight", 0.0)), fmt(s.value("weight_min", 0.0)),
                                     fmt(s.value("weight_max", 0.0)), fmt(s.value("reference", 0.0)),
                                     s.value("meets_reference", false) ? "1" : "0"});
    }
    std::vector<fs::path> out;
    for (const auto& [name, text] : std::vector<std::pair<std::string, std::string>>{
             {"energy_ratio.csv", ratio}, {"bulk_axes.csv", axes}, {"box_histogram.csv", boxes},
             {"square_audit.csv", squares}}) {
        write_text(out_dir / name, text);
        out.push_back(out_dir / name);
    }
    return out;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Numerical lab for rotating-condensate Gross-Pitaevskii energies"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    std::string config_path, out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "RNG seed");
    std::map<std::string, double> direct;
    auto* eps_opt = app.add_option("--epsilon", direct["epsilon"], "overrides config epsilon");
    auto* om_opt = app.add_option("--omega", direct["omega"], "overrides config omega");
    auto* lam_opt = app.add_option("--lambda", direct["lambda"], "overrides config lambda");
    for (const char* c : {"derive", "profile", "cell", "trial", "minimize", "vortices", "audit", "sweep"})
        app.add_subcommand(c);
    std::vector<std::string> reports;
    app.add_subcommand("plot", "tidy CSVs from report files")->add_option("reports", reports, "report JSON files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Error& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::config;
    }

    try {
        Context cx;
        cx.command = app.get_subcommands().front()->get_name();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw MissingInput("config not found: " + config_path);
            cx.cfg = json::parse(in, nullptr, false);
            if (cx.cfg.is_discarded() || !cx.cfg.is_object()) throw ConfigError("config is not a JSON object: " + config_path);
        } else {
            cx.cfg = json::object();
        }
        std::vector<std::string> env;
        for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
        apply_env_overrides(cx.cfg, env);
        if (*eps_opt) cx.cfg["epsilon"] = direct["epsilon"];
        if (*om_opt) cx.cfg["omega"] = direct["omega"];
        if (*lam_opt) cx.cfg["lambda"] = direct["lambda"];
        if (!out_dir.empty()) cx.cfg["out"] = out_dir;
        if (threads > 0) cx.cfg["threads"] = threads;
        if (seed_given) cx.cfg["seed"] = seed;
        cx.out = str(cx.cfg, "out", "out");
        cx.threads = static_cast<int>(num(cx.cfg, "threads", 1));
        if (cx.threads < 1) throw ConfigError("threads must be >= 1");
        if (cx.cfg.contains("seed")) {
            if (!cx.cfg["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
            cx.seed = cx.cfg["seed"].get<std::uint64_t>();
        }
        std::error_code ec;
        fs::create_directories(cx.out, ec);
        if (ec || !fs::is_directory(cx.out)) throw IoError("cannot create output directory " + cx.out.string());

        if (cx.command == "derive") return cmd_derive(cx);
        if (cx.command == "profile") return cmd_profile(cx);
        if (cx.command == "cell") return cmd_cell(cx);
        if (cx.command == "trial") return cmd_trial(cx);
        if (cx.command == "minimize") return cmd_minimize(cx);
        if (cx.command == "vortices") return cmd_vortices(cx);
        if (cx.command == "audit") return cmd_audit(cx);
        if (cx.command == "sweep") return cmd_sweep(cx);
        if (cx.command == "plot") return cmd_plot(cx, reports);
        throw ConfigError("unknown command " + cx.command);
    } catch (...) {
        return exit_code(std::current_exception());
    }
}

}  // namespace gpv::cli
