#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cbct/vec.hpp"

namespace cbct {

/// Voxel lattice of N1 x N2 x N3 cells with edge lengths (a1, a2, a3) in mm.
/// The bounding box is always centered at the world origin.
struct VolumeGeometry {
    std::array<int, 3> counts{};  // N1, N2, N3
    Vec3d voxel_size{};           // a1, a2, a3 [mm]

    static VolumeGeometry make(std::array<int, 3> counts, Vec3d voxel_size);

    Vec3d extent() const {
        return {counts[0] * voxel_size.x, counts[1] * voxel_size.y, counts[2] * voxel_size.z};
    }
    Vec3d min_corner() const { return extent() * -0.5; }

    /// Center of voxel (i, j, k); voxel (0,0,0) sits at ((-l1+a1)/2, (-l2+a2)/2, (-l3+a3)/2).
    Vec3d voxel_center(int i, int j, int k) const;

    std::size_t voxel_count() const {
        return std::size_t(counts[0]) * std::size_t(counts[1]) * std::size_t(counts[2]);
    }

    /// Linear index with i fastest and k slowest.
    std::size_t linear_index(int i, int j, int k) const {
        return (std::size_t(k) * counts[1] + std::size_t(j)) * counts[0] + std::size_t(i);
    }

    bool operator==(const VolumeGeometry&) const = default;
};

/// Flat-panel detector of rows x cols pixels. Rows run along chi2, columns along chi1;
/// pixel (m, n) has its center at detector coordinates (chi1, chi2) = (n, m) in pixel units.
struct DetectorGeometry {
    int rows = 0;               // M
    int cols = 0;               // N
    double pixel_width = 1.0;   // b1 [mm], pitch along chi1
    double pixel_height = 1.0;  // b2 [mm], pitch along chi2

    static DetectorGeometry make(int rows, int cols, double pixel_width, double pixel_height);

    double pixel_area() const { return pixel_width * pixel_height; }
    Vec2d pixel_size() const { return {pixel_width, pixel_height}; }
    std::size_t pixel_count() const { return std::size_t(rows) * std::size_t(cols); }

    bool operator==(const DetectorGeometry&) const = default;
};

/// Spherical coordinates of a point in the source-local frame: radius r,
/// cone angle theta measured from the detector normal through the principal
/// point, and azimuth phi in [0, 2*pi) with phi = 0 toward the chi1 axis.
struct LocalSpherical {
    double r;
    double theta;
    double phi;
};

/// One source/detector pose. The detector frame rows (e_u, e_v, e_w) are the
/// world directions of chi1, chi2 and the principal ray; e_v is pinned
/// antiparallel to the world x3 axis, so detector rows are world-horizontal.
class ViewGeometry {
  public:
    /// Validates orthonormality of the frame (1e-12), the e_v convention and
    /// positivity of focal length and pixel sizes.
    static ViewGeometry make(const Vec3d& source, const Mat3d& frame, double focal_length,
                             const Vec2d& principal_point, const Vec2d& pixel_size);

    const Vec3d& source() const { return source_; }
    /// Rows are (e_u, e_v, e_w).
    const Mat3d& frame() const { return frame_; }
    double focal_length() const { return f_; }
    /// In pixel units.
    const Vec2d& principal_point() const { return pp_; }
    /// (b1, b2) in mm.
    const Vec2d& pixel_size() const { return b_; }

    /// 3x3 camera matrix C = K * Q mapping world directions to homogeneous
    /// pixel coordinates.
    const Mat3d& camera_matrix() const { return cam_; }

    /// Pixel coordinates (chi1, chi2) of a world point. Throws std::domain_error
    /// for points at or behind the source plane.
    Vec2d project_point(const Vec3d& x) const;

    /// Signed distance of x from the source plane along the principal ray.
    double depth(const Vec3d& x) const { return dot(frame_.row(2), x - source_); }

    LocalSpherical to_local_spherical(const Vec3d& x) const;

    /// Angle between the ray through detector position chi and the ray through
    /// (chi1, principal chi2); zero on the central detector row.
    double elevation_angle(const Vec2d& chi) const;

    /// World position of detector coordinate chi on the physical detector plane.
    Vec3d detector_point(const Vec2d& chi) const;

    /// Row-major 3x4 projection matrix [C | -C*s] with unit third rotation row.
    std::array<double, 12> standard_matrix() const;

    /// Factorizes a 3x4 matrix of arbitrary scale back into a view. The pixel
    /// size cannot be recovered from the matrix and must be supplied.
    static ViewGeometry from_standard_matrix(const std::array<double, 12>& P,
                                             const Vec2d& pixel_size);

  private:
    ViewGeometry() = default;

    Vec3d source_{};
    Mat3d frame_{};
    double f_ = 0.0;
    Vec2d pp_{};
    Vec2d b_{};
    Mat3d cam_{};
};

/// Full circular trajectory around the x3 axis at source-isocenter distance
/// sid, source-detector distance sdd. The source starts on the +x1 axis and
/// advances counter-clockwise. A 360-degree arc spaces views by arc/n (open
/// circle); shorter arcs space by arc/(n-1) (inclusive endpoints). The
/// principal point defaults to the detector center.
std::vector<ViewGeometry> make_circular_trajectory(double sid, double sdd, int n_views,
                                                   double arc_deg, const DetectorGeometry& det);

/// Text format: one view per line, 12 whitespace-separated numbers forming the
/// row-major 3x4 matrix. Lines starting with '#' are skipped.
void write_camera_matrices(const std::filesystem::path& path,
                           std::span<const ViewGeometry> views);
std::vector<ViewGeometry> read_camera_matrices(const std::filesystem::path& path,
                                               const Vec2d& pixel_size);

} // namespace cbct
