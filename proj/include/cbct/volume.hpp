#pragma once

#include <span>
#include <vector>

#include "cbct/geometry.hpp"

namespace cbct {

/// Per-voxel attenuation values on a VolumeGeometry lattice (the x vector).
struct AttenuationVolume {
    VolumeGeometry geom;
    std::vector<double> values;

    static AttenuationVolume zeros(const VolumeGeometry& g) {
        return {g, std::vector<double>(g.voxel_count(), 0.0)};
    }

    double& at(int i, int j, int k) { return values[geom.linear_index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[geom.linear_index(i, j, k)]; }
};

/// Stack of per-view extinction images (the b vector). View-major storage,
/// rows within a view stored top to bottom, columns left to right.
struct ProjectionStack {
    DetectorGeometry det;
    int n_views = 0;
    std::vector<double> values;

    static ProjectionStack zeros(const DetectorGeometry& d, int n_views) {
        return {d, n_views, std::vector<double>(d.pixel_count() * std::size_t(n_views), 0.0)};
    }

    std::size_t view_size() const { return det.pixel_count(); }

    std::span<double> view(int v) { return {values.data() + view_size() * v, view_size()}; }
    std::span<const double> view(int v) const {
        return {values.data() + view_size() * v, view_size()};
    }

    double& at(int v, int m, int n) {
        return values[view_size() * v + std::size_t(m) * det.cols + std::size_t(n)];
    }
    double at(int v, int m, int n) const {
        return values[view_size() * v + std::size_t(m) * det.cols + std::size_t(n)];
    }
};

} // namespace cbct
