#pragma once

#include <map>
#include <utility>
#include <vector>

#include "gpv/grid.hpp"
#include "gpv/params.hpp"
#include "gpv/profile.hpp"

namespace gpv {

// Plaquette (i, j) has corners (i..i+1, j..j+1); its centre is a dual vertex.
struct WindingMap {
    Grid2D grid;
    int m = 0;                     // plaquettes per side (n - 1)
    std::vector<int> winding;
    std::vector<double> residue;   // |circulation - nearest integer|
    std::vector<char> flagged;     // a corner had |v| < 1e-14
    double max_residue = 0.0;
    int flagged_count = 0;

    int at(int i, int j) const { return winding[static_cast<std::size_t>(j) * m + i]; }
    double cx(int i) const { return grid.coord(i) + 0.5 * grid.spacing(); }
    double cy(int j) const { return grid.coord(j) + 0.5 * grid.spacing(); }
};

// Degenerate corners are regularized by an infinitesimal real shift and the
// plaquette flagged; with strict set they raise DegenerateModulus instead.
WindingMap winding_map(const ComplexField& v, bool strict = false);

struct Vortex {
    double x = 0.0, y = 0.0;
    double radius = 0.0;
    int degree = 0;
};

struct VortexSet {
    std::vector<Vortex> vortices;   // includes degree-0 balls of {|v| < threshold}
    int total_degree = 0;
    int total_abs_degree = 0;
    double sum_radii = 0.0;
    int nonzero_count() const;
};

// Connected components of {|v| < threshold} (restricted to mask when given)
// become balls; their degree is the winding sum of the plaquettes touching
// them. Winding plaquettes without a low-modulus corner become balls of half
// a diagonal.
VortexSet extract_vortices(const ComplexField& v, double threshold = 0.5,
                           const std::vector<char>* mask = nullptr);

// Elliptic region {|x|_eo <= sqrt(alpha_eo) - beta}, at distance ~beta from the bulk boundary.
struct BulkRegion {
    double radius = 0.0;  // in the |x|_eo metric
    double lambda_eo = 1.0;
    bool contains(double x1, double x2) const;
    bool contains_box(double cx, double cy, double half) const;
    static BulkRegion inset(const DerivedParams& d, double beta);
};

struct SquareClass {
    double x = 0.0, y = 0.0;
    double energy = 0.0;
    double threshold = 0.0;
    bool good = false;
    int degree = 0;
};

struct SquareClassification {
    double delta = 0.0;                 // squares are (-delta, delta)^2 + lattice
    double log_term = 0.0;              // ln(1/(eps sqrt(omega)))
    std::vector<SquareClass> squares;
    int n_good = 0, n_bad = 0;
    double bad_over_good = 0.0;
    int n_good_literal = 0;             // with the threshold omega delta^2 ln(...)
    bool degenerate = false;
};

SquareClassification classify_squares(const ComplexField& v, const PhysicalParams& p, const DerivedParams& d,
                                      const ProfileSolution& sol, double g_eps, const BulkRegion& U);

struct VorticityMeasure {
    std::vector<std::pair<double, double>> atom_points;
    std::vector<int> atom_weights;
    double box_size = 0.0;
    std::map<std::pair<int, int>, double> box_densities;  // degree sum / (omega * area)
    std::map<std::pair<int, int>, int> box_degrees;
    double mean_density = 0.0;          // normalization by omega
    double mean_density_2pi = 0.0;      // mean_density / (1/(2 pi))
    double mean_count_density = 0.0;    // degree sum / area, compare with omega/(2 pi)
    double cv = 0.0;
    int total_weight = 0;
};

VorticityMeasure vorticity_density_report(const VortexSet& vs, const BulkRegion& U, double omega,
                                          double box_size);

}  // namespace gpv
