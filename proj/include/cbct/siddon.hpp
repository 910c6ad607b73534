#pragma once

#include <span>
#include <vector>

#include "cbct/exec.hpp"
#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

struct RayIntersection {
    int i, j, k;
    double length;  // chord through the voxel [mm]
};

/// Ordered along the ray; chords are positive and sum to the box crossing.
using RayIntersectionList = std::vector<RayIntersection>;

/// Exact parametric traversal of the half-line from source through target.
/// The source must lie outside the volume box. Voxel intervals are half-open
/// [low, high) along each axis, so a ray grazing a shared face contributes to
/// exactly one voxel.
RayIntersectionList trace_ray(const VolumeGeometry& vol, const Vec3d& source, const Vec3d& target);

/// Half-open pixel index ranges; end < 0 means the full detector extent.
struct PixelRoi {
    int row_begin = 0;
    int row_end = -1;
    int col_begin = 0;
    int col_end = -1;
};

/// Siddon-K projector: averages K x K rays per pixel, aimed at the centers of
/// a uniform K x K subdivision of the pixel. K >= 128 requires
/// ExecPolicy::allow_expensive (Siddon512 ground-truth runs are deliberate).
ProjectionStack project_siddon_k(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                                 const DetectorGeometry& det, int k_per_edge,
                                 const ExecPolicy& exec = {});

void project_siddon_k_into(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                           const DetectorGeometry& det, int k_per_edge, const ExecPolicy& exec,
                           ProjectionStack& out, const PixelRoi& roi = {},
                           std::vector<double>* view_seconds = nullptr);

/// Exact transpose of project_siddon_k.
AttenuationVolume backproject_siddon_k(const ProjectionStack& proj,
                                       std::span<const ViewGeometry> views,
                                       const VolumeGeometry& vol_geom, int k_per_edge,
                                       const ExecPolicy& exec = {});

void backproject_siddon_k_into(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                               const VolumeGeometry& vol_geom, int k_per_edge,
                               const ExecPolicy& exec, AttenuationVolume& out,
                               std::vector<double>* view_seconds = nullptr);

} // namespace cbct
