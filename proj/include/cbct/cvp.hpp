#pragma once

#include <span>
#include <vector>

#include "cbct/exec.hpp"
#include "cbct/geometry.hpp"
#include "cbct/polygon.hpp"
#include "cbct/volume.hpp"

namespace cbct {

enum class PixelScaling { Cos, Exact };
enum class CvpPrecision { Double, Single };
enum class RadiusEstimate { VoxelCenter, CutCentroid };

struct CvpOptions {
    PixelScaling scaling = PixelScaling::Exact;
    bool elevation_correction = true;
    CvpPrecision precision = CvpPrecision::Double;
    RadiusEstimate r_estimate = RadiusEstimate::CutCentroid;
};

/// Cut of a voxel base by the pre-images of one detector column's boundaries.
struct ColumnCut {
    int column = 0;    // n
    Polygon2D polygon;
    double area = 0.0;  // mm^2
    Vec2d centroid{};   // mm, in the x1x2 plane
};

struct RowSegment {
    int row = 0;
    double length = 0.0;  // mm of x3 extent attributed to this row
};

struct CutVolumeRecord {
    int row = 0;
    int column = 0;
    double volume = 0.0;  // mm^3
    double inv_r2 = 0.0;  // 1/mm^2
};

/// Cuts the voxel base square into per-column polygons between the pre-image
/// lines of chi1 = n -/+ 0.5. Returns one entry per column with a positive cut
/// area, including columns outside the physical detector; areas sum to the
/// base area.
std::vector<ColumnCut> column_cuts(const ViewGeometry& view, const DetectorGeometry& det,
                                   const Polygon2D& voxel_base);

/// Partitions [z_lo, z_hi] on the vertical line through the given base-plane
/// point by the z values projecting onto detector row boundaries chi2 = m -/+ 0.5.
/// Returns an empty list when the line misses the detector entirely; otherwise
/// segment lengths sum to z_hi - z_lo.
std::vector<RowSegment> row_breakpoints(const ViewGeometry& view, const DetectorGeometry& det,
                                        const Vec2d& centroid, double z_lo, double z_hi);

inline double cut_volume(const ColumnCut& cut, double d) { return cut.area * d; }

/// Elevation-corrected version of row_breakpoints for one column cut: the cut
/// is modeled as a rectangle of half-width w in the vertical plane through the
/// source and the cut centroid, and each row receives the average z overlap
/// across the rectangle. Total length is preserved exactly; for e = 0 (or
/// w = 0) the result equals the uncorrected split.
std::vector<RowSegment> elevation_corrected_split(const ViewGeometry& view,
                                                  const DetectorGeometry& det,
                                                  const ColumnCut& cut, double z_lo, double z_hi,
                                                  double elevation);

/// f^2 / (b1 b2 cos^3(theta)) with theta evaluated at the pixel center.
double pixel_scale_cos(const ViewGeometry& view, const DetectorGeometry& det, int m, int n);

/// Solid angle of the spherical quadrilateral spanned by four unit vectors:
/// 2*pi minus the sum of arccos of normalized scalar products of consecutive
/// edge-plane normals.
double spherical_quad_area(const Vec3d& t0, const Vec3d& t1, const Vec3d& t2, const Vec3d& t3);

/// 1 / (solid angle of the pixel as seen from the source).
double pixel_scale_exact(const ViewGeometry& view, const DetectorGeometry& det, int m, int n);

/// Cutting voxel projector. Phase one accumulates S = sum of mu * |Vcut| / r^2
/// per pixel; phase two rescales each pixel by the scaling-mode factor.
ProjectionStack project_cvp(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                            const DetectorGeometry& det, const CvpOptions& opts = {},
                            const ExecPolicy& exec = {});

void project_cvp_into(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                      const DetectorGeometry& det, const CvpOptions& opts, const ExecPolicy& exec,
                      ProjectionStack& out, std::vector<double>* view_seconds = nullptr);

/// Exact transpose of project_cvp.
AttenuationVolume backproject_cvp(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                                  const VolumeGeometry& vol_geom, const CvpOptions& opts = {},
                                  const ExecPolicy& exec = {});

void backproject_cvp_into(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                          const VolumeGeometry& vol_geom, const CvpOptions& opts,
                          const ExecPolicy& exec, AttenuationVolume& out,
                          std::vector<double>* view_seconds = nullptr);

/// All pixel cuts of one voxel under one view, without detector clamping;
/// the bookkeeping view of what the projector would accumulate.
std::vector<CutVolumeRecord> collect_cut_records(const VolumeGeometry& vol_geom,
                                                 const ViewGeometry& view,
                                                 const DetectorGeometry& det,
                                                 const CvpOptions& opts, int i, int j, int k);

} // namespace cbct
