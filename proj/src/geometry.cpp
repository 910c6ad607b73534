#include "cbct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cbct {

namespace {

constexpr double kOrthoTol = 1e-12;

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

} // namespace

VolumeGeometry VolumeGeometry::make(std::array<int, 3> counts, Vec3d voxel_size) {
    for (int c : counts)
        if (c <= 0) throw std::invalid_argument("voxel counts must be positive");
    for (double a : {voxel_size.x, voxel_size.y, voxel_size.z}) {
        check_finite(a, "voxel size");
        if (a <= 0.0) throw std::invalid_argument("voxel sizes must be positive");
    }
    return {counts, voxel_size};
}

Vec3d VolumeGeometry::voxel_center(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= counts[0] || j >= counts[1] || k >= counts[2])
        throw std::out_of_range("voxel index outside lattice");
    Vec3d l = extent();
    return {(voxel_size.x - l.x) * 0.5 + i * voxel_size.x,
            (voxel_size.y - l.y) * 0.5 + j * voxel_size.y,
            (voxel_size.z - l.z) * 0.5 + k * voxel_size.z};
}

DetectorGeometry DetectorGeometry::make(int rows, int cols, double pixel_width,
                                        double pixel_height) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("detector counts must be positive");
    for (double b : {pixel_width, pixel_height}) {
        check_finite(b, "pixel size");
        if (b <= 0.0) throw std::invalid_argument("pixel sizes must be positive");
    }
    return {rows, cols, pixel_width, pixel_height};
}

ViewGeometry ViewGeometry::make(const Vec3d& source, const Mat3d& frame, double focal_length,
                                const Vec2d& principal_point, const Vec2d& pixel_size) {
    for (double v : {source.x, source.y, source.z}) check_finite(v, "source");
    check_finite(focal_length, "focal length");
    if (focal_length <= 0.0) throw std::invalid_argument("focal length must be positive");
    if (pixel_size.x <= 0.0 || pixel_size.y <= 0.0)
        throw std::invalid_argument("pixel sizes must be positive");

    for (int r = 0; r < 3; ++r)
        for (int c = r; c < 3; ++c) {
            double want = (r == c) ? 1.0 : 0.0;
            if (std::abs(dot(frame.row(r), frame.row(c)) - want) > kOrthoTol)
                throw std::invalid_argument("detector frame is not orthonormal");
        }
    if (std::abs(frame.det() - 1.0) > 1e-10)
        throw std::invalid_argument("detector frame must be right-handed");
    Vec3d ev = frame.row(1);
    if (std::abs(ev.x) > kOrthoTol || std::abs(ev.y) > kOrthoTol || std::abs(ev.z + 1.0) > kOrthoTol)
        throw std::invalid_argument("chi2 axis must be antiparallel to world x3");

    ViewGeometry g;
    g.source_ = source;
    g.frame_ = frame;
    g.frame_(1, 0) = 0.0;
    g.frame_(1, 1) = 0.0;
    g.frame_(1, 2) = -1.0;
    g.f_ = focal_length;
    g.pp_ = principal_point;
    g.b_ = pixel_size;

    double fu = focal_length / pixel_size.x;
    double fv = focal_length / pixel_size.y;
    Vec3d r0 = fu * g.frame_.row(0) + principal_point.x * g.frame_.row(2);
    Vec3d r1 = fv * g.frame_.row(1) + principal_point.y * g.frame_.row(2);
    g.cam_ = Mat3d::from_rows(r0, r1, g.frame_.row(2));
    return g;
}

Vec2d ViewGeometry::project_point(const Vec3d& x) const {
    Vec3d d = x - source_;
    double w = dot(frame_.row(2), d);
    if (!(w > 0.0))
        throw std::domain_error("point does not lie strictly on the detector side of the source");
    return {dot(cam_.row(0), d) / w, dot(cam_.row(1), d) / w};
}

LocalSpherical ViewGeometry::to_local_spherical(const Vec3d& x) const {
    Vec3d d = x - source_;
    double r = norm(d);
    if (!(r > 0.0)) throw std::domain_error("point coincides with the source");
    Vec3d local = frame_ * d;
    double theta = std::acos(std::clamp(local.z / r, -1.0, 1.0));
    double phi = std::atan2(local.y, local.x);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    return {r, theta, phi};
}

double ViewGeometry::elevation_angle(const Vec2d& chi) const {
    double u = (chi.x - pp_.x) * b_.x;
    double v = (chi.y - pp_.y) * b_.y;
    return std::atan2(std::abs(v), std::hypot(u, f_));
}

Vec3d ViewGeometry::detector_point(const Vec2d& chi) const {
    Vec3d local{(chi.x - pp_.x) * b_.x, (chi.y - pp_.y) * b_.y, f_};
    return source_ + frame_.transposed() * local;
}

std::array<double, 12> ViewGeometry::standard_matrix() const {
    Vec3d t = -(cam_ * source_);
    std::array<double, 12> P{};
    for (int r = 0; r < 3; ++r) {
        Vec3d row = cam_.row(r);
        P[4 * r + 0] = row.x;
        P[4 * r + 1] = row.y;
        P[4 * r + 2] = row.z;
        P[4 * r + 3] = (r == 0) ? t.x : (r == 1) ? t.y : t.z;
    }
    return P;
}

ViewGeometry ViewGeometry::from_standard_matrix(const std::array<double, 12>& P,
                                                const Vec2d& pixel_size) {
    for (double v : P) check_finite(v, "matrix entry");
    Mat3d B;
    Vec3d p4;
    for (int r = 0; r < 3; ++r) {
        B(r, 0) = P[4 * r + 0];
        B(r, 1) = P[4 * r + 1];
        B(r, 2) = P[4 * r + 2];
    }
    p4 = {P[3], P[7], P[11]};

    Vec3d source = -(B.inverse() * p4);

    double sc = norm(B.row(2));
    if (!(sc > 0.0)) throw std::invalid_argument("degenerate projection matrix");
    if (B.det() < 0.0) sc = -sc;
    Mat3d C;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) C(r, c) = B(r, c) / sc;

    Vec3d ew = C.row(2);
    double pp2 = dot(C.row(1), ew);
    Vec3d ev_f = C.row(1) - pp2 * ew;
    double fv = norm(ev_f);
    double pp1 = dot(C.row(0), ew);
    Vec3d eu_f = C.row(0) - pp1 * ew;
    double fu = norm(eu_f);
    if (!(fu > 0.0) || !(fv > 0.0))
        throw std::invalid_argument("degenerate projection matrix");

    double f = fv * pixel_size.y;
    if (std::abs(fu * pixel_size.x - f) > 1e-6 * std::abs(f))
        throw std::invalid_argument(
            "projection matrix focal lengths are inconsistent with the pixel sizes");

    Vec3d ev = ev_f / fv;
    if (std::abs(ev.x) > 1e-6 || std::abs(ev.y) > 1e-6 || std::abs(ev.z + 1.0) > 1e-6)
        throw std::invalid_argument("projection matrix violates the detector row convention");

    // snap the frame back onto the convention and re-orthonormalize
    ev = {0.0, 0.0, -1.0};
    ew.z = 0.0;
    ew = normalized(ew);
    Vec3d eu = cross(ev, ew);

    return make(source, Mat3d::from_rows(eu, ev, ew), f, {pp1, pp2}, pixel_size);
}

std::vector<ViewGeometry> make_circular_trajectory(double sid, double sdd, int n_views,
                                                   double arc_deg, const DetectorGeometry& det) {
    if (n_views <= 0) throw std::invalid_argument("need at least one view");
    if (!(sid > 0.0) || !(sdd > 0.0))
        throw std::invalid_argument("distances must be positive");
    if (!(arc_deg > 0.0) || arc_deg > 360.0)
        throw std::invalid_argument("arc must lie in (0, 360] degrees");

    double step;
    if (std::abs(arc_deg - 360.0) < 1e-9)
        step = 360.0 / n_views;
    else
        step = (n_views > 1) ? arc_deg / (n_views - 1) : 0.0;

    Vec2d pp{(det.cols - 1) * 0.5, (det.rows - 1) * 0.5};
    std::vector<ViewGeometry> views;
    views.reserve(n_views);
    for (int v = 0; v < n_views; ++v) {
        double w = v * step * std::numbers::pi / 180.0;
        double c = std::cos(w), s = std::sin(w);
        Vec3d source{sid * c, sid * s, 0.0};
        Vec3d ew{-c, -s, 0.0};
        Vec3d ev{0.0, 0.0, -1.0};
        Vec3d eu = cross(ev, ew);
        views.push_back(
            ViewGeometry::make(source, Mat3d::from_rows(eu, ev, ew), sdd, pp, det.pixel_size()));
    }
    return views;
}

void write_camera_matrices(const std::filesystem::path& path,
                           std::span<const ViewGeometry> views) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (const ViewGeometry& v : views) {
        std::array<double, 12> P = v.standard_matrix();
        for (int i = 0; i < 12; ++i) out << P[i] << (i == 11 ? '\n' : ' ');
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<ViewGeometry> read_camera_matrices(const std::filesystem::path& path,
                                               const Vec2d& pixel_size) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<ViewGeometry> views;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::array<double, 12> P;
        for (int i = 0; i < 12; ++i)
            if (!(ls >> P[i]))
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": expected 12 numbers per line");
        double extra;
        if (ls >> extra)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 12 numbers per line");
        views.push_back(ViewGeometry::from_standard_matrix(P, pixel_size));
    }
    if (views.empty()) throw std::runtime_error(path.string() + ": no matrices found");
    return views;
}

} // namespace cbct
