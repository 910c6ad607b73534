#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cbct/volume.hpp"

namespace cbct {

/// Minimal DEN dialect: header of three little-endian uint16 (dim_y, dim_x,
/// dim_z) followed by dim_z frames of row-major (y, x) float32 planes.
/// Dimensions are capped at 65535 by the format.
struct DenFile {
    std::uint16_t dim_y = 0;
    std::uint16_t dim_x = 0;
    std::uint16_t dim_z = 0;
    std::vector<float> values;

    std::size_t value_count() const {
        return std::size_t(dim_y) * std::size_t(dim_x) * std::size_t(dim_z);
    }
};

DenFile den_read(const std::filesystem::path& path);
void den_write(const std::filesystem::path& path, const DenFile& den);

/// Volume maps to (y, x, z) = (N2, N1, N3); the in-memory layouts coincide.
DenFile to_den(const AttenuationVolume& vol);
DenFile to_den(const ProjectionStack& proj);

AttenuationVolume volume_from_den(const DenFile& den, const Vec3d& voxel_size);
ProjectionStack stack_from_den(const DenFile& den, double pixel_width, double pixel_height);

} // namespace cbct
