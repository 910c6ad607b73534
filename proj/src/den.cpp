#include "cbct/den.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

static_assert(std::endian::native == std::endian::little,
              "DEN I/O assumes a little-endian host");

namespace cbct {

namespace {

constexpr std::size_t kDimCap = 65535;

void check_dims(std::size_t y, std::size_t x, std::size_t z, const std::string& what) {
    if (y == 0 || x == 0 || z == 0)
        throw std::runtime_error(what + ": DEN dimensions must be at least 1");
    if (y > kDimCap || x > kDimCap || z > kDimCap)
        throw std::runtime_error(what + ": dimension exceeds the DEN 16-bit limit of 65535");
}

} // namespace

DenFile den_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::uint16_t header[3];
    if (!in.read(reinterpret_cast<char*>(header), 6))
        throw std::runtime_error(path.string() + ": truncated DEN header");

    DenFile den;
    den.dim_y = header[0];
    den.dim_x = header[1];
    den.dim_z = header[2];
    check_dims(den.dim_y, den.dim_x, den.dim_z, path.string());

    std::error_code ec;
    std::uintmax_t fsize = std::filesystem::file_size(path, ec);
    std::uintmax_t expected = 6 + 4 * std::uintmax_t(den.value_count());
    if (!ec && fsize != expected)
        throw std::runtime_error(path.string() + ": file size " + std::to_string(fsize) +
                                 " does not match header (expected " + std::to_string(expected) +
                                 " bytes)");

    den.values.resize(den.value_count());
    if (!in.read(reinterpret_cast<char*>(den.values.data()),
                 std::streamsize(den.values.size() * 4)))
        throw std::runtime_error(path.string() + ": truncated DEN payload");
    return den;
}

void den_write(const std::filesystem::path& path, const DenFile& den) {
    check_dims(den.dim_y, den.dim_x, den.dim_z, path.string());
    if (den.values.size() != den.value_count())
        throw std::runtime_error(path.string() + ": DEN payload size does not match dimensions");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::uint16_t header[3] = {den.dim_y, den.dim_x, den.dim_z};
    out.write(reinterpret_cast<const char*>(header), 6);
    out.write(reinterpret_cast<const char*>(den.values.data()),
              std::streamsize(den.values.size() * 4));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

DenFile to_den(const AttenuationVolume& vol) {
    const auto& g = vol.geom;
    check_dims(g.counts[1], g.counts[0], g.counts[2], "volume");
    DenFile den;
    den.dim_y = std::uint16_t(g.counts[1]);
    den.dim_x = std::uint16_t(g.counts[0]);
    den.dim_z = std::uint16_t(g.counts[2]);
    den.values.assign(vol.values.begin(), vol.values.end());
    return den;
}

DenFile to_den(const ProjectionStack& proj) {
    check_dims(proj.det.rows, proj.det.cols, proj.n_views, "projection stack");
    DenFile den;
    den.dim_y = std::uint16_t(proj.det.rows);
    den.dim_x = std::uint16_t(proj.det.cols);
    den.dim_z = std::uint16_t(proj.n_views);
    den.values.assign(proj.values.begin(), proj.values.end());
    return den;
}

AttenuationVolume volume_from_den(const DenFile& den, const Vec3d& voxel_size) {
    VolumeGeometry g = VolumeGeometry::make({den.dim_x, den.dim_y, den.dim_z}, voxel_size);
    AttenuationVolume vol{g, std::vector<double>(den.values.begin(), den.values.end())};
    return vol;
}

ProjectionStack stack_from_den(const DenFile& den, double pixel_width, double pixel_height) {
    DetectorGeometry det = DetectorGeometry::make(den.dim_y, den.dim_x, pixel_width, pixel_height);
    return {det, den.dim_z, std::vector<double>(den.values.begin(), den.values.end())};
}

} // namespace cbct
