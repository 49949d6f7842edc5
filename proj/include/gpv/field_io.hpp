#pragma once

#include <filesystem>
#include <string>

#include "gpv/grid.hpp"
#include "gpv/params.hpp"

namespace gpv {

// Raw little-endian float64 planes (real, then imaginary), row-major, with a
// JSON sidecar "<path>.json" holding {n, half_extent, epsilon, omega, lambda, kind}.
struct FieldMeta {
    int n = 0;
    double half_extent = 0.0;
    double epsilon = 0.0;
    double omega = 0.0;
    double lambda = 1.0;
    std::string kind;
};

void write_field(const std::filesystem::path& path, const ComplexField& u, const FieldMeta& meta);
void write_field(const std::filesystem::path& path, const ScalarField& u, const FieldMeta& meta);
ComplexField read_complex_field(const std::filesystem::path& path, FieldMeta* meta = nullptr);
ScalarField read_scalar_field(const std::filesystem::path& path, FieldMeta* meta = nullptr);

FieldMeta make_meta(const Grid2D& g, const PhysicalParams& p, const std::string& kind);

// Writes bytes to a sibling temporary and renames it over path.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace gpv
