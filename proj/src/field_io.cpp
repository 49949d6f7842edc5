#include "gpv/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gpv/error.hpp"

namespace gpv {

static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p) {
    auto s = p;
    s += ".json";
    return s;
}

void write_planes(const std::filesystem::path& path, const std::vector<double>& re,
                  const std::vector<double>& im, const FieldMeta& meta) {
    std::string bytes(sizeof(double) * (re.size() + im.size()), '\0');
    std::memcpy(bytes.data(), re.data(), sizeof(double) * re.size());
    std::memcpy(bytes.data() + sizeof(double) * re.size(), im.data(), sizeof(double) * im.size());
    write_atomic(path, bytes);
    nlohmann::json j = {{"n", meta.n},          {"half_extent", meta.half_extent},
                        {"epsilon", meta.epsilon}, {"omega", meta.omega},
                        {"lambda", meta.lambda},   {"kind", meta.kind}};
    write_atomic(sidecar(path), j.dump(2) + "\n");
}

void read_planes(const std::filesystem::path& path, std::vector<double>& re, std::vector<double>& im,
                 FieldMeta& meta) {
    std::ifstream js(sidecar(path));
    if (!js) throw MissingInput("missing sidecar " + sidecar(path).string());
    nlohmann::json j;
    try {
        js >> j;
        meta.n = j.at("n").get<int>();
        meta.half_extent = j.at("half_extent").get<double>();
        meta.epsilon = j.value("epsilon", 0.0);
        meta.omega = j.value("omega", 0.0);
        meta.lambda = j.value("lambda", 1.0);
        meta.kind = j.value("kind", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar " + sidecar(path).string() + ": " + e.what());
    }
    const std::size_t N = static_cast<std::size_t>(meta.n) * meta.n;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingInput("missing field dump " + path.string());
    re.resize(N);
    im.resize(N);
    is.read(reinterpret_cast<char*>(re.data()), static_cast<std::streamsize>(N * sizeof(double)));
    is.read(reinterpret_cast<char*>(im.data()), static_cast<std::streamsize>(N * sizeof(double)));
    if (!is) throw IoError("field dump " + path.string() + " is shorter than its sidecar says");
}

}  // namespace

FieldMeta make_meta(const Grid2D& g, const PhysicalParams& p, const std::string& kind) {
    return FieldMeta{g.n, g.half_extent, p.epsilon, p.omega, p.lambda, kind};
}

void write_field(const std::filesystem::path& path, const ComplexField& u, const FieldMeta& meta) {
    std::vector<double> re(u.values.size()), im(u.values.size());
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        re[k] = u.values[k].real();
        im[k] = u.values[k].imag();
    }
    FieldMeta m = meta;
    m.n = u.grid.n;
    m.half_extent = u.grid.half_extent;
    write_planes(path, re, im, m);
}

void write_field(const std::filesystem::path& path, const ScalarField& u, const FieldMeta& meta) {
    std::vector<double> im(u.values.size(), 0.0);
    FieldMeta m = meta;
    m.n = u.grid.n;
    m.half_extent = u.grid.half_extent;
    write_planes(path, u.values, im, m);
}

ComplexField read_complex_field(const std::filesystem::path& path, FieldMeta* meta) {
    FieldMeta m;
    std::vector<double> re, im;
    read_planes(path, re, im, m);
    ComplexField u(Grid2D::make(m.half_extent, m.n));
    for (std::size_t k = 0; k < re.size(); ++k) u.values[k] = cplx(re[k], im[k]);
    if (meta) *meta = m;
    return u;
}

ScalarField read_scalar_field(const std::filesystem::path& path, FieldMeta* meta) {
    FieldMeta m;
    std::vector<double> re, im;
    read_planes(path, re, im, m);
    ScalarField u(Grid2D::make(m.half_extent, m.n));
    u.values = std::move(re);
    if (meta) *meta = m;
    return u;
}

}  // namespace gpv
