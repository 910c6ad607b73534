#include "cbct/siddon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cbct/log.hpp"

namespace cbct {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Active sub-lattice; traversal outside it is skipped.
struct ActiveBox {
    Vec3d lo;            // world corner of voxel (i0, j0, k0)
    Vec3d a;             // voxel size
    int i0 = 0, j0 = 0, k0 = 0;
    int ni = 0, nj = 0, nk = 0;
};

ActiveBox full_box(const VolumeGeometry& g) {
    return {g.min_corner(), g.voxel_size, 0, 0, 0, g.counts[0], g.counts[1], g.counts[2]};
}

/// Incremental parametric traversal of the half-line source + t*dir, t >= 0.
/// Emits (i, j, k, chord length in mm). Boundary ties advance every tying
/// axis at once so no zero-length steps appear; intervals are half-open
/// [low, high) per axis.
template <class F>
void traverse(const ActiveBox& box, const Vec3d& source, const Vec3d& dir, double dir_len,
              F&& emit) {
    const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
    const double a[3] = {box.a.x, box.a.y, box.a.z};
    const int n[3] = {box.ni, box.nj, box.nk};
    const double s[3] = {source.x, source.y, source.z};
    const double d[3] = {dir.x, dir.y, dir.z};

    double t0 = 0.0, t1 = kInf;
    for (int ax = 0; ax < 3; ++ax) {
        double hi = lo[ax] + a[ax] * n[ax];
        if (d[ax] == 0.0) {
            if (s[ax] < lo[ax] || s[ax] >= hi) return;
        } else {
            double ta = (lo[ax] - s[ax]) / d[ax];
            double tb = (hi - s[ax]) / d[ax];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
    }
    if (!(t0 < t1)) return;

    int idx[3], step[3];
    double tnext[3], tdelta[3];
    for (int ax = 0; ax < 3; ++ax) {
        double pos = s[ax] + t0 * d[ax];
        idx[ax] = std::clamp(int(std::floor((pos - lo[ax]) / a[ax])), 0, n[ax] - 1);
        if (d[ax] > 0.0) {
            step[ax] = 1;
            tnext[ax] = (lo[ax] + (idx[ax] + 1) * a[ax] - s[ax]) / d[ax];
            tdelta[ax] = a[ax] / d[ax];
        } else if (d[ax] < 0.0) {
            step[ax] = -1;
            tnext[ax] = (lo[ax] + idx[ax] * a[ax] - s[ax]) / d[ax];
            tdelta[ax] = -a[ax] / d[ax];
        } else {
            step[ax] = 0;
            tnext[ax] = kInf;
            tdelta[ax] = kInf;
        }
    }

    double t = t0;
    while (true) {
        double tn = std::min({tnext[0], tnext[1], tnext[2]});
        double len = (std::min(tn, t1) - t) * dir_len;
        if (len > 0.0) emit(box.i0 + idx[0], box.j0 + idx[1], box.k0 + idx[2], len);
        if (tn >= t1) return;
        bool left = false;
        for (int ax = 0; ax < 3; ++ax) {
            if (tnext[ax] == tn) {
                idx[ax] += step[ax];
                if (idx[ax] < 0 || idx[ax] >= n[ax]) left = true;
                tnext[ax] += tdelta[ax];
            }
        }
        if (left) return;
        t = tn;
    }
}

void require_source_outside(const VolumeGeometry& g, const Vec3d& s) {
    Vec3d lo = g.min_corner();
    Vec3d hi = lo + g.extent();
    if (s.x > lo.x && s.x < hi.x && s.y > lo.y && s.y < hi.y && s.z > lo.z && s.z < hi.z)
        throw std::runtime_error("unsupported configuration: source inside the volume box");
}

void check_k(int k_per_edge, const ExecPolicy& exec) {
    if (k_per_edge < 1) throw std::invalid_argument("Siddon K must be at least 1");
    if (k_per_edge >= 128 && !exec.allow_expensive)
        throw std::invalid_argument(
            "Siddon-K with K >= 128 is a deliberately expensive ground-truth configuration; "
            "set ExecPolicy::allow_expensive to confirm");
}

void check_view_pixels(const ViewGeometry& view, const DetectorGeometry& det) {
    if (std::abs(view.pixel_size().x - det.pixel_width) > 1e-9 ||
        std::abs(view.pixel_size().y - det.pixel_height) > 1e-9)
        throw std::invalid_argument("view pixel size does not match the detector geometry");
}

struct RoiRect {
    int r0, r1, c0, c1;
};

RoiRect resolve(const PixelRoi& roi, const DetectorGeometry& det) {
    RoiRect r;
    r.r0 = std::clamp(roi.row_begin, 0, det.rows);
    r.r1 = roi.row_end < 0 ? det.rows : std::clamp(roi.row_end, r.r0, det.rows);
    r.c0 = std::clamp(roi.col_begin, 0, det.cols);
    r.c1 = roi.col_end < 0 ? det.cols : std::clamp(roi.col_end, r.c0, det.cols);
    return r;
}

/// World position of detector coordinate chi is affine: base + chi1*du + chi2*dv.
struct DetectorPlane {
    Vec3d base, du, dv;

    static DetectorPlane of(const ViewGeometry& view) {
        Vec3d eu = view.frame().row(0);
        Vec3d ev = view.frame().row(1);
        Vec3d ew = view.frame().row(2);
        Vec3d du = view.pixel_size().x * eu;
        Vec3d dv = view.pixel_size().y * ev;
        Vec3d base = view.source() + view.focal_length() * ew -
                     view.principal_point().x * du - view.principal_point().y * dv;
        return {base, du, dv};
    }

    Vec3d at(double chi1, double chi2) const { return base + chi1 * du + chi2 * dv; }
};

} // namespace

RayIntersectionList trace_ray(const VolumeGeometry& vol, const Vec3d& source,
                              const Vec3d& target) {
    Vec3d d = target - source;
    double len = norm(d);
    if (!(len > 0.0)) throw std::invalid_argument("ray source and target coincide");
    require_source_outside(vol, source);
    RayIntersectionList list;
    traverse(full_box(vol), source, d, len,
             [&](int i, int j, int k, double chord) { list.push_back({i, j, k, chord}); });
    return list;
}

void project_siddon_k_into(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                           const DetectorGeometry& det, int k_per_edge, const ExecPolicy& exec,
                           ProjectionStack& out, const PixelRoi& roi,
                           std::vector<double>* view_seconds) {
    check_k(k_per_edge, exec);
    if (out.det != det || out.n_views != int(views.size()))
        throw std::invalid_argument("output stack does not match detector/views");
    for (const ViewGeometry& v : views) {
        check_view_pixels(v, det);
        require_source_outside(vol.geom, v.source());
    }
    if (view_seconds) view_seconds->assign(views.size(), 0.0);
    std::fill(out.values.begin(), out.values.end(), 0.0);

    const auto& g = vol.geom;

    // tight sub-box of nonzero voxels; rays outside it contribute nothing
    int blo[3] = {g.counts[0], g.counts[1], g.counts[2]};
    int bhi[3] = {0, 0, 0};
    {
        const double* p = vol.values.data();
        for (int k = 0; k < g.counts[2]; ++k)
            for (int j = 0; j < g.counts[1]; ++j)
                for (int i = 0; i < g.counts[0]; ++i, ++p)
                    if (*p != 0.0) {
                        blo[0] = std::min(blo[0], i);
                        blo[1] = std::min(blo[1], j);
                        blo[2] = std::min(blo[2], k);
                        bhi[0] = std::max(bhi[0], i + 1);
                        bhi[1] = std::max(bhi[1], j + 1);
                        bhi[2] = std::max(bhi[2], k + 1);
                    }
    }
    if (bhi[0] <= blo[0]) return;  // all-zero volume

    ActiveBox box;
    box.a = g.voxel_size;
    box.i0 = blo[0];
    box.j0 = blo[1];
    box.k0 = blo[2];
    box.ni = bhi[0] - blo[0];
    box.nj = bhi[1] - blo[1];
    box.nk = bhi[2] - blo[2];
    Vec3d lo = g.min_corner();
    box.lo = {lo.x + blo[0] * g.voxel_size.x, lo.y + blo[1] * g.voxel_size.y,
              lo.z + blo[2] * g.voxel_size.z};

    const double inv_k2 = 1.0 / (double(k_per_edge) * double(k_per_edge));
    const double* mu = vol.values.data();
    const std::size_t n1 = g.counts[0], n2 = g.counts[1];
    RoiRect rect = resolve(roi, det);

    for (std::size_t v = 0; v < views.size(); ++v) {
        auto tic = std::chrono::steady_clock::now();
        const ViewGeometry& view = views[v];
        const Vec3d src = view.source();
        DetectorPlane plane = DetectorPlane::of(view);
        double* img = out.values.data() + out.view_size() * v;
        const int cols = det.cols;

#pragma omp parallel for schedule(dynamic, 4) if (!exec.serial()) \
    num_threads(exec.threads > 0 ? exec.threads : omp_get_max_threads())
        for (int m = rect.r0; m < rect.r1; ++m) {
            for (int n = rect.c0; n < rect.c1; ++n) {
                double acc = 0.0;
                for (int uu = 0; uu < k_per_edge; ++uu) {
                    double chi1 = n + (uu + 0.5) / k_per_edge - 0.5;
                    for (int ww = 0; ww < k_per_edge; ++ww) {
                        double chi2 = m + (ww + 0.5) / k_per_edge - 0.5;
                        Vec3d dir = plane.at(chi1, chi2) - src;
                        double dlen = norm(dir);
                        traverse(box, src, dir, dlen, [&](int i, int j, int k, double chord) {
                            acc += mu[(std::size_t(k) * n2 + j) * n1 + i] * chord;
                        });
                    }
                }
                img[std::size_t(m) * cols + n] = acc * inv_k2;
            }
        }
        if (view_seconds)
            (*view_seconds)[v] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    }
}

ProjectionStack project_siddon_k(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                                 const DetectorGeometry& det, int k_per_edge,
                                 const ExecPolicy& exec) {
    ProjectionStack out = ProjectionStack::zeros(det, int(views.size()));
    project_siddon_k_into(vol, views, det, k_per_edge, exec, out);
    return out;
}

void backproject_siddon_k_into(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                               const VolumeGeometry& vol_geom, int k_per_edge,
                               const ExecPolicy& exec, AttenuationVolume& out,
                               std::vector<double>* view_seconds) {
    check_k(k_per_edge, exec);
    if (out.geom != vol_geom) throw std::invalid_argument("output volume does not match geometry");
    if (proj.n_views != int(views.size()))
        throw std::invalid_argument("projection stack does not match views");
    for (const ViewGeometry& v : views) {
        check_view_pixels(v, proj.det);
        require_source_outside(vol_geom, v.source());
    }
    if (view_seconds) view_seconds->assign(views.size(), 0.0);
    std::fill(out.values.begin(), out.values.end(), 0.0);

    ActiveBox box = full_box(vol_geom);
    const double inv_k2 = 1.0 / (double(k_per_edge) * double(k_per_edge));
    double* dst = out.values.data();
    const std::size_t n1 = vol_geom.counts[0], n2 = vol_geom.counts[1];
    const DetectorGeometry& det = proj.det;

    for (std::size_t v = 0; v < views.size(); ++v) {
        auto tic = std::chrono::steady_clock::now();
        const ViewGeometry& view = views[v];
        const Vec3d src = view.source();
        DetectorPlane plane = DetectorPlane::of(view);
        const double* img = proj.values.data() + proj.view_size() * v;

#pragma omp parallel for schedule(dynamic, 4) if (!exec.serial()) \
    num_threads(exec.threads > 0 ? exec.threads : omp_get_max_threads())
        for (int m = 0; m < det.rows; ++m) {
            for (int n = 0; n < det.cols; ++n) {
                double w = img[std::size_t(m) * det.cols + n] * inv_k2;
                if (w == 0.0) continue;
                for (int uu = 0; uu < k_per_edge; ++uu) {
                    double chi1 = n + (uu + 0.5) / k_per_edge - 0.5;
                    for (int ww = 0; ww < k_per_edge; ++ww) {
                        double chi2 = m + (ww + 0.5) / k_per_edge - 0.5;
                        Vec3d dir = plane.at(chi1, chi2) - src;
                        double dlen = norm(dir);
                        traverse(box, src, dir, dlen, [&](int i, int j, int k, double chord) {
                            std::size_t idx = (std::size_t(k) * n2 + j) * n1 + i;
                            double add = w * chord;
#pragma omp atomic
                            dst[idx] += add;
                        });
                    }
                }
            }
        }
        if (view_seconds)
            (*view_seconds)[v] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    }
}

AttenuationVolume backproject_siddon_k(const ProjectionStack& proj,
                                       std::span<const ViewGeometry> views,
                                       const VolumeGeometry& vol_geom, int k_per_edge,
                                       const ExecPolicy& exec) {
    AttenuationVolume out = AttenuationVolume::zeros(vol_geom);
    backproject_siddon_k_into(proj, views, vol_geom, k_per_edge, exec, out);
    return out;
}

} // namespace cbct
