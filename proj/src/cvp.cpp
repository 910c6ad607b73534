#include "cbct/cvp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cbct/log.hpp"

namespace cbct {

namespace {

template <typename T> constexpr T kInfT = std::numeric_limits<T>::infinity();

/// Horizontal (x1, x2) reduction of one view's camera. chi1 and the depth are
/// independent of x3, so column cutting happens entirely in the base plane;
/// chi2 depends on x3 linearly at fixed horizontal position.
template <typename T> struct ViewCtx {
    Vec2<T> s_xy{};
    T s3{};
    Vec2<T> w1{};  // horizontal camera row 0 (chi1 numerator)
    Vec2<T> w3{};  // horizontal camera row 2 (depth)
    T pp1{}, pp2{};
    T f_over_b2{}, b2_over_f{};
    int rows = 0, cols = 0;
    // double copies: cut lines are constructed in double even in Single mode,
    // the narrowing happens after normalization
    Vec2d w1_d{}, w3_d{}, s_xy_d{};

    static ViewCtx make(const ViewGeometry& view, const DetectorGeometry& det) {
        ViewCtx c;
        Vec3d r0 = view.camera_matrix().row(0);
        Vec3d r2 = view.camera_matrix().row(2);
        c.w1_d = {r0.x, r0.y};
        c.w3_d = {r2.x, r2.y};
        c.s_xy_d = view.source().xy();
        c.w1 = vec_cast<T>(c.w1_d);
        c.w3 = vec_cast<T>(c.w3_d);
        c.s_xy = vec_cast<T>(c.s_xy_d);
        c.s3 = T(view.source().z);
        c.pp1 = T(view.principal_point().x);
        c.pp2 = T(view.principal_point().y);
        c.f_over_b2 = T(view.focal_length() / view.pixel_size().y);
        c.b2_over_f = T(view.pixel_size().y / view.focal_length());
        c.rows = det.rows;
        c.cols = det.cols;
        return c;
    }

    T depth(Vec2<T> p) const { return dot(w3, p - s_xy); }
    T chi1(Vec2<T> p) const { return dot(w1, p - s_xy) / depth(p); }
    T z_of_chi2(T chi2, T d) const { return s3 + (pp2 - chi2) * b2_over_f * d; }
    T chi2_of_z(T z, T d) const { return pp2 - (z - s3) * f_over_b2 / d; }

    /// Pre-image of chi1 <= c in the base plane (a vertical plane through the
    /// source in 3D).
    BasicHalfPlane2D<T> chi1_le(double c) const {
        Vec2d nrm = w1_d - c * w3_d;
        auto hp = BasicHalfPlane2D<double>::from_line(nrm, dot(nrm, s_xy_d));
        return {vec_cast<T>(hp.normal), T(hp.offset)};
    }
};

/// Splits a convex base polygon into per-column band cuts.
template <typename T> struct BandCutter {
    const ViewCtx<T>* ctx;
    BasicPolygon2D<T> base;
    int n_lo = 0, n_hi = -1;
    bool single = false;

    BandCutter(const ViewCtx<T>& c, const BasicPolygon2D<T>& poly) : ctx(&c), base(poly) {
        T cmin = kInfT<T>, cmax = -kInfT<T>;
        for (int i = 0; i < base.size(); ++i) {
            if (!(ctx->depth(base[i]) > T(0)))
                throw std::runtime_error(
                    "numerical degeneracy: voxel base reaches the source plane");
            T c1 = ctx->chi1(base[i]);
            cmin = std::min(cmin, c1);
            cmax = std::max(cmax, c1);
        }
        n_lo = int(std::ceil(double(cmin) - 0.5));
        n_hi = int(std::floor(double(cmax) + 0.5));
        single = (n_lo == n_hi);
    }

    BasicPolygon2D<T> piece(int n) const {
        if (single && n == n_lo) return base;
        return band_cut(base, ctx->chi1_le(n - 0.5), ctx->chi1_le(n + 0.5));
    }
};

/// One column cut reduced to the quantities the row split needs.
template <typename T> struct CutInfo {
    int n = 0;
    T area{};
    Vec2<T> cm{};
    T d0{};     // depth at the centroid
    T rho2{};   // squared horizontal source distance
    T hw{};     // depth change per mm toward the cut (= d0 / rho)
    T halfw{};  // rectangle half-width for the elevation correction
};

template <typename T>
void fill_cut_info(const ViewCtx<T>& ctx, const BasicPolygon2D<T>& piece, int n, bool need_width,
                   CutInfo<T>& out) {
    out.n = n;
    out.area = area(piece);
    out.cm = centroid(piece);
    Vec2<T> rel = out.cm - ctx.s_xy;
    out.rho2 = dot(rel, rel);
    T rho = std::sqrt(out.rho2);
    out.d0 = dot(ctx.w3, rel);
    out.hw = out.d0 / rho;
    out.halfw = T(0);
    if (need_width) {
        // mean extent of the cut along the horizontal source direction:
        // area / extent perpendicular to it, halved for the +-w rectangle
        Vec2<T> ph = perp(rel) / rho;
        T lo = kInfT<T>, hi = -kInfT<T>;
        for (int i = 0; i < piece.size(); ++i) {
            T v = dot(ph, piece[i]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        T ext = hi - lo;
        if (ext > T(0)) out.halfw = out.area / ext * T(0.5);
    }
}

template <typename T>
bool compute_cuts(const ViewCtx<T>& ctx, const BasicPolygon2D<T>& base, bool clamp_cols,
                  bool need_width, std::vector<CutInfo<T>>& out) {
    out.clear();
    BandCutter<T> cutter(ctx, base);
    int lo = cutter.n_lo, hi = cutter.n_hi;
    if (clamp_cols) {
        lo = std::max(lo, 0);
        hi = std::min(hi, ctx.cols - 1);
    }
    for (int n = lo; n <= hi; ++n) {
        BasicPolygon2D<T> piece = cutter.piece(n);
        if (piece.empty()) continue;
        CutInfo<T> ci;
        fill_cut_info(ctx, piece, n, need_width, ci);
        if (!(ci.area > T(0))) continue;
        out.push_back(ci);
    }
    return !out.empty();
}

/// Mean of clamp(alpha + beta*xi, z_lo, z_hi) over xi in [-halfw, halfw].
/// Exact closed form; degenerates to a plain clamp for a zero spread.
template <typename T> T clamp_mean(T alpha, T beta, T halfw, T z_lo, T z_hi) {
    T spread = std::abs(beta) * halfw;
    if (!(spread > T(0))) return std::clamp(alpha, z_lo, z_hi);
    T glo = alpha - spread;
    T ghi = alpha + spread;
    if (glo >= z_lo && ghi <= z_hi) return alpha;
    if (ghi <= z_lo) return z_lo;
    if (glo >= z_hi) return z_hi;
    T ca = std::clamp(glo, z_lo, z_hi);
    T cb = std::clamp(ghi, z_lo, z_hi);
    T below = std::max(T(0), std::min(ghi, z_lo) - glo);
    T above = std::max(T(0), ghi - std::max(glo, z_hi));
    T integral = z_lo * below + (cb * cb - ca * ca) / T(2) + z_hi * above;
    return integral / (ghi - glo);
}

/// Walks the detector rows covered by one cut over [z_lo, z_hi] and hands
/// (row, column, cut volume, 1/r^2) to the sink. Row shares telescope, so the
/// total volume is conserved exactly in both the plain and the corrected path.
template <typename T, class Sink>
void visit_rows(const ViewCtx<T>& ctx, const CutInfo<T>& cut, T z_lo, T z_hi, bool corrected,
                bool clamp_rows, T inv_r2_fixed, Sink&& sink) {
    T dmin = cut.d0, dmax = cut.d0;
    if (corrected) {
        T dd = std::abs(cut.hw) * cut.halfw;
        dmin -= dd;
        dmax += dd;
    }
    T c00 = ctx.chi2_of_z(z_lo, dmin);
    T c01 = ctx.chi2_of_z(z_lo, dmax);
    T c10 = ctx.chi2_of_z(z_hi, dmin);
    T c11 = ctx.chi2_of_z(z_hi, dmax);
    T cmin = std::min(std::min(c00, c01), std::min(c10, c11));
    T cmax = std::max(std::max(c00, c01), std::max(c10, c11));
    int m_first = int(std::ceil(double(cmin) - 0.5));
    int m_last = int(std::floor(double(cmax) + 0.5));
    if (clamp_rows) {
        m_first = std::max(m_first, 0);
        m_last = std::min(m_last, ctx.rows - 1);
    }
    if (m_first > m_last) return;

    const bool per_row_r = !(inv_r2_fixed > T(0));
    auto alpha_of = [&](T chi_b) { return ctx.z_of_chi2(chi_b, cut.d0); };
    auto beta_of = [&](T chi_b) { return (ctx.pp2 - chi_b) * ctx.b2_over_f * cut.hw; };
    auto t_of = [&](T chi_b, T alpha) {
        return corrected ? clamp_mean(alpha, beta_of(chi_b), cut.halfw, z_lo, z_hi)
                         : std::clamp(alpha, z_lo, z_hi);
    };

    T chi_top = T(m_first) - T(0.5);
    T a_top = alpha_of(chi_top);
    T t_top = t_of(chi_top, a_top);
    T plain_top = std::clamp(a_top, z_lo, z_hi);
    for (int m = m_first; m <= m_last; ++m) {
        T chi_bot = T(m) + T(0.5);
        T a_bot = alpha_of(chi_bot);
        T t_bot = t_of(chi_bot, a_bot);
        T plain_bot = std::clamp(a_bot, z_lo, z_hi);
        T share = t_top - t_bot;
        if (share > T(0)) {
            T inv_r2 = inv_r2_fixed;
            if (per_row_r) {
                // z midpoint of the plain row segment; spill rows collapse to
                // the nearest segment endpoint
                T zc = (plain_top + plain_bot) * T(0.5);
                T dz = zc - ctx.s3;
                inv_r2 = T(1) / (cut.rho2 + dz * dz);
            }
            sink(m, cut.n, cut.area * share, inv_r2);
        }
        t_top = t_bot;
        plain_top = plain_bot;
    }
}

void check_view_consistency(const ViewGeometry& view, const DetectorGeometry& det,
                            const VolumeGeometry& vol) {
    if (std::abs(view.pixel_size().x - det.pixel_width) > 1e-9 ||
        std::abs(view.pixel_size().y - det.pixel_height) > 1e-9)
        throw std::invalid_argument("view pixel size does not match the detector geometry");
    Vec3d lo = vol.min_corner();
    Vec3d hi = lo + vol.extent();
    Vec3d s = view.source();
    if (s.x > lo.x && s.x < hi.x && s.y > lo.y && s.y < hi.y && s.z > lo.z && s.z < hi.z)
        throw std::runtime_error("unsupported configuration: source inside the volume box");
}

// ---------- pixel scaling ----------

double quad_area_of_pixel(const ViewGeometry& view, double m, double n) {
    double b1 = view.pixel_size().x, b2 = view.pixel_size().y, f = view.focal_length();
    double u0 = (n - 0.5 - view.principal_point().x) * b1;
    double u1 = (n + 0.5 - view.principal_point().x) * b1;
    double v0 = (m - 0.5 - view.principal_point().y) * b2;
    double v1 = (m + 0.5 - view.principal_point().y) * b2;
    Vec3d t0 = normalized(Vec3d{u0, v0, f});
    Vec3d t1 = normalized(Vec3d{u1, v0, f});
    Vec3d t2 = normalized(Vec3d{u1, v1, f});
    Vec3d t3 = normalized(Vec3d{u0, v1, f});
    return spherical_quad_area(t0, t1, t2, t3);
}

/// Per-pixel second-phase factors; shared across views with identical camera
/// intrinsics, which a circular trajectory guarantees.
struct ScaleCache {
    bool valid = false;
    double f = 0.0;
    Vec2d pp{}, b{};
    std::vector<double> img;

    const std::vector<double>& get(const ViewGeometry& view, const DetectorGeometry& det,
                                   PixelScaling mode, const ExecPolicy& exec) {
        if (valid && f == view.focal_length() && pp.x == view.principal_point().x &&
            pp.y == view.principal_point().y && b.x == view.pixel_size().x &&
            b.y == view.pixel_size().y)
            return img;
        f = view.focal_length();
        pp = view.principal_point();
        b = view.pixel_size();
        img.assign(det.pixel_count(), 0.0);
        double* dst = img.data();
        const int rows = det.rows, cols = det.cols;
#pragma omp parallel for schedule(static) if (!exec.serial())
        for (int m = 0; m < rows; ++m) {
            for (int n = 0; n < cols; ++n) {
                double s;
                if (mode == PixelScaling::Cos) {
                    double u = (n - pp.x) * b.x;
                    double v = (m - pp.y) * b.y;
                    double c = f / std::sqrt(u * u + v * v + f * f);
                    s = f * f / (b.x * b.y * c * c * c);
                } else {
                    s = 1.0 / quad_area_of_pixel(view, m, n);
                }
                dst[std::size_t(m) * cols + n] = s;
            }
        }
        valid = true;
        return img;
    }
};

// ---------- kernels ----------

std::vector<unsigned char> nonzero_columns(const AttenuationVolume& vol) {
    const auto& g = vol.geom;
    std::vector<unsigned char> flags(std::size_t(g.counts[0]) * g.counts[1], 0);
    const double* p = vol.values.data();
    for (int k = 0; k < g.counts[2]; ++k) {
        unsigned char* f = flags.data();
        for (int j = 0; j < g.counts[1]; ++j)
            for (int i = 0; i < g.counts[0]; ++i, ++p, ++f)
                if (*p != 0.0) *f = 1;
    }
    return flags;
}

template <typename T> struct ColumnScratch {
    std::vector<CutInfo<T>> cuts;
};

/// Shared core of the forward and backward kernels: for one (i, j) column of
/// voxels under one view, computes the cuts once and feeds every voxel's
/// per-pixel volumes to the sink.
template <typename T, class PerVoxel>
void process_column(const ViewCtx<T>& ctx, const VolumeGeometry& g, int i, int j,
                    const CvpOptions& opts, ColumnScratch<T>& scratch, PerVoxel&& per_voxel) {
    Vec3d minc = g.min_corner();
    const double a1 = g.voxel_size.x, a2 = g.voxel_size.y, a3 = g.voxel_size.z;
    Vec2d bc{minc.x + (i + 0.5) * a1, minc.y + (j + 0.5) * a2};

    BasicPolygon2D<T> base = BasicPolygon2D<T>::rectangle(
        {T(bc.x - 0.5 * a1), T(bc.y - 0.5 * a2)}, {T(bc.x + 0.5 * a1), T(bc.y + 0.5 * a2)});
    if (!compute_cuts(ctx, base, true, opts.elevation_correction, scratch.cuts)) return;

    const bool voxel_r = opts.r_estimate == RadiusEstimate::VoxelCenter;
    Vec2<T> rel = vec_cast<T>(bc) - ctx.s_xy;
    const T rho2_center = dot(rel, rel);

    for (int k = 0; k < g.counts[2]; ++k) {
        T zc = T(minc.z + (k + 0.5) * a3);
        T z_lo = zc - T(0.5 * a3);
        T z_hi = zc + T(0.5 * a3);
        T dz = zc - ctx.s3;
        T inv_r2_fixed = voxel_r ? T(1) / (rho2_center + dz * dz) : T(-1);
        per_voxel(k, z_lo, z_hi, dz, inv_r2_fixed, scratch.cuts);
    }
}

/// Elevation gate: the rectangle average only differs from the plain split for
/// nonzero elevation; e = atan(|dz| / rho) > 0 iff dz != 0.
template <typename T> bool elevation_active(T dz, T rho2) {
    return dz * dz > rho2 * T(1e-28);
}

template <typename T>
void forward_view(const AttenuationVolume& vol, const ViewCtx<T>& ctx, const CvpOptions& opts,
                  const ExecPolicy& exec, const std::vector<unsigned char>& col_flags,
                  std::vector<T>& img) {
    const VolumeGeometry& g = vol.geom;
    const double* mu = vol.values.data();
    const std::size_t n1 = g.counts[0], n2 = g.counts[1];
    const std::size_t ncols = n1 * n2;
    const int cols = ctx.cols;
    const bool corr = opts.elevation_correction;
    std::fill(img.begin(), img.end(), T(0));

    auto run_one = [&](std::size_t ij, ColumnScratch<T>& scratch, T* out) {
        if (!col_flags[ij]) return;
        int i = int(ij % n1), j = int(ij / n1);
        process_column(ctx, g, i, j, opts, scratch,
                       [&](int k, T z_lo, T z_hi, T dz, T inv_r2_fixed,
                           const std::vector<CutInfo<T>>& cuts) {
                           T m_ijk = T(mu[(std::size_t(k) * n2 + j) * n1 + i]);
                           if (m_ijk == T(0)) return;
                           for (const CutInfo<T>& cut : cuts) {
                               bool c = corr && cut.halfw > T(0) &&
                                        elevation_active(dz, cut.rho2);
                               visit_rows(ctx, cut, z_lo, z_hi, c, true, inv_r2_fixed,
                                          [&](int m, int n, T volume, T inv_r2) {
                                              out[std::size_t(m) * cols + n] +=
                                                  m_ijk * volume * inv_r2;
                                          });
                           }
                       });
    };

#ifdef _OPENMP
    if (!exec.serial()) {
        int nthreads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
        std::vector<std::vector<T>> partials(nthreads);
#pragma omp parallel num_threads(nthreads)
        {
            int tid = omp_get_thread_num();
            partials[tid].assign(img.size(), T(0));
            ColumnScratch<T> scratch;
#pragma omp for schedule(dynamic, 64)
            for (long long ij = 0; ij < (long long)ncols; ++ij)
                run_one(std::size_t(ij), scratch, partials[tid].data());
        }
        // fixed reduction order keeps parallel results reproducible per thread count
        for (int t = 0; t < nthreads; ++t) {
            if (partials[t].size() != img.size()) continue;
            for (std::size_t p = 0; p < img.size(); ++p) img[p] += partials[t][p];
        }
        return;
    }
#endif
    ColumnScratch<T> scratch;
    for (std::size_t ij = 0; ij < ncols; ++ij) run_one(ij, scratch, img.data());
}

template <typename T>
void backward_view(const std::vector<T>& scaled_img, const ViewCtx<T>& ctx,
                   const VolumeGeometry& g, const CvpOptions& opts, const ExecPolicy& exec,
                   AttenuationVolume& out) {
    const std::size_t n1 = g.counts[0], n2 = g.counts[1];
    const std::size_t ncols = n1 * n2;
    const int cols = ctx.cols;
    const bool corr = opts.elevation_correction;
    const T* img = scaled_img.data();
    double* dst = out.values.data();

    auto run_one = [&](std::size_t ij, ColumnScratch<T>& scratch) {
        int i = int(ij % n1), j = int(ij / n1);
        process_column(ctx, g, i, j, opts, scratch,
                       [&](int k, T z_lo, T z_hi, T dz, T inv_r2_fixed,
                           const std::vector<CutInfo<T>>& cuts) {
                           T acc = T(0);
                           for (const CutInfo<T>& cut : cuts) {
                               bool c = corr && cut.halfw > T(0) &&
                                        elevation_active(dz, cut.rho2);
                               visit_rows(ctx, cut, z_lo, z_hi, c, true, inv_r2_fixed,
                                          [&](int m, int n, T volume, T inv_r2) {
                                              acc += img[std::size_t(m) * cols + n] * volume *
                                                     inv_r2;
                                          });
                           }
                           // each column owns its output cells; no contention
                           dst[(std::size_t(k) * n2 + j) * n1 + i] += double(acc);
                       });
    };

#ifdef _OPENMP
    if (!exec.serial()) {
#pragma omp parallel num_threads(exec.threads > 0 ? exec.threads : omp_get_max_threads())
        {
            ColumnScratch<T> scratch;
#pragma omp for schedule(dynamic, 64)
            for (long long ij = 0; ij < (long long)ncols; ++ij) run_one(std::size_t(ij), scratch);
        }
        return;
    }
#endif
    ColumnScratch<T> scratch;
    for (std::size_t ij = 0; ij < ncols; ++ij) run_one(ij, scratch);
}

template <typename T>
void project_cvp_impl(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                      const DetectorGeometry& det, const CvpOptions& opts, const ExecPolicy& exec,
                      ProjectionStack& out, std::vector<double>* view_seconds) {
    std::vector<unsigned char> col_flags = nonzero_columns(vol);
    std::vector<T> img(det.pixel_count());
    ScaleCache scale;

    for (std::size_t v = 0; v < views.size(); ++v) {
        auto tic = std::chrono::steady_clock::now();
        ViewCtx<T> ctx = ViewCtx<T>::make(views[v], det);
        forward_view(vol, ctx, opts, exec, col_flags, img);
        const std::vector<double>& sc = scale.get(views[v], det, opts.scaling, exec);
        double* dst = out.values.data() + out.view_size() * v;
        for (std::size_t p = 0; p < img.size(); ++p) dst[p] = double(img[p]) * sc[p];
        if (view_seconds)
            (*view_seconds)[v] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    }
}

template <typename T>
void backproject_cvp_impl(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                          const VolumeGeometry& vol_geom, const CvpOptions& opts,
                          const ExecPolicy& exec, AttenuationVolume& out,
                          std::vector<double>* view_seconds) {
    std::vector<T> scaled(proj.view_size());
    ScaleCache scale;

    for (std::size_t v = 0; v < views.size(); ++v) {
        auto tic = std::chrono::steady_clock::now();
        ViewCtx<T> ctx = ViewCtx<T>::make(views[v], proj.det);
        const std::vector<double>& sc = scale.get(views[v], proj.det, opts.scaling, exec);
        const double* src = proj.values.data() + proj.view_size() * v;
        for (std::size_t p = 0; p < scaled.size(); ++p) scaled[p] = T(src[p] * sc[p]);
        backward_view(scaled, ctx, vol_geom, opts, exec, out);
        if (view_seconds)
            (*view_seconds)[v] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    }
}

} // namespace

// ---------- public operations ----------

std::vector<ColumnCut> column_cuts(const ViewGeometry& view, const DetectorGeometry& det,
                                   const Polygon2D& voxel_base) {
    if (voxel_base.size() < 3) throw std::invalid_argument("voxel base polygon is degenerate");
    ViewCtx<double> ctx = ViewCtx<double>::make(view, det);
    BandCutter<double> cutter(ctx, voxel_base);
    std::vector<ColumnCut> cuts;
    for (int n = cutter.n_lo; n <= cutter.n_hi; ++n) {
        Polygon2D piece = cutter.piece(n);
        if (piece.empty()) continue;
        double A = area(piece);
        if (!(A > 0.0)) continue;
        cuts.push_back({n, piece, A, centroid(piece)});
    }
    return cuts;
}

std::vector<RowSegment> row_breakpoints(const ViewGeometry& view, const DetectorGeometry& det,
                                        const Vec2d& centroid, double z_lo, double z_hi) {
    if (!(z_hi > z_lo)) return {};
    ViewCtx<double> ctx = ViewCtx<double>::make(view, det);
    double d0 = ctx.depth(centroid);
    if (!(d0 > 0.0)) return {};
    double c1 = ctx.chi1(centroid);
    if (c1 < -0.5 || c1 > det.cols - 0.5) return {};
    double chi_hi = ctx.chi2_of_z(z_lo, d0);
    double chi_lo = ctx.chi2_of_z(z_hi, d0);
    if (chi_hi < -0.5 || chi_lo > det.rows - 0.5) return {};

    CutInfo<double> cut;
    cut.n = 0;
    cut.area = 1.0;  // shares in length units
    cut.cm = centroid;
    Vec2d rel = centroid - ctx.s_xy;
    cut.rho2 = dot(rel, rel);
    cut.d0 = d0;
    cut.hw = 0.0;
    cut.halfw = 0.0;

    std::vector<RowSegment> segs;
    visit_rows<double>(ctx, cut, z_lo, z_hi, false, false, -1.0,
                       [&](int m, int, double share, double) { segs.push_back({m, share}); });
    return segs;
}

std::vector<RowSegment> elevation_corrected_split(const ViewGeometry& view,
                                                  const DetectorGeometry& det,
                                                  const ColumnCut& cut, double z_lo, double z_hi,
                                                  double elevation) {
    if (!(z_hi > z_lo)) return {};
    if (cut.polygon.size() < 3 || !(cut.area > 0.0))
        throw std::invalid_argument("degenerate column cut");
    ViewCtx<double> ctx = ViewCtx<double>::make(view, det);
    CutInfo<double> ci;
    fill_cut_info(ctx, cut.polygon, cut.column, true, ci);
    if (!(ci.d0 > 0.0)) return {};
    ci.area = 1.0;  // shares in length units

    bool corrected = elevation > 0.0 && ci.halfw > 0.0;
    std::vector<RowSegment> segs;
    visit_rows<double>(ctx, ci, z_lo, z_hi, corrected, false, -1.0,
                       [&](int m, int, double share, double) { segs.push_back({m, share}); });
    return segs;
}

double pixel_scale_cos(const ViewGeometry& view, const DetectorGeometry& det, int m, int n) {
    if (m < 0 || n < 0 || m >= det.rows || n >= det.cols)
        throw std::out_of_range("pixel outside the detector");
    double u = (n - view.principal_point().x) * view.pixel_size().x;
    double v = (m - view.principal_point().y) * view.pixel_size().y;
    double f = view.focal_length();
    double c = f / std::sqrt(u * u + v * v + f * f);
    return f * f / (det.pixel_area() * c * c * c);
}

double spherical_quad_area(const Vec3d& t0, const Vec3d& t1, const Vec3d& t2, const Vec3d& t3) {
    const Vec3d t[4] = {t0, t1, t2, t3};
    for (const Vec3d& v : t)
        if (std::abs(norm(v) - 1.0) > 1e-12)
            throw std::invalid_argument("spherical quad vertices must be unit vectors");
    Vec3d nrm[4];
    for (int i = 0; i < 4; ++i) {
        nrm[i] = cross(t[i], t[(i + 1) % 4]);
        if (squared_norm(nrm[i]) < 1e-30)
            throw std::domain_error("degenerate spherical quad (parallel consecutive vertices)");
        nrm[i] = nrm[i] / norm(nrm[i]);
    }
    double sum = 0.0;
    for (int i = 0; i < 4; ++i)
        sum += std::acos(std::clamp(dot(nrm[i], nrm[(i + 1) % 4]), -1.0, 1.0));
    double area = 2.0 * std::numbers::pi - sum;
    if (!(area > 0.0) || !(area < 4.0 * std::numbers::pi))
        throw std::domain_error("spherical quad area outside (0, 4*pi)");
    return area;
}

double pixel_scale_exact(const ViewGeometry& view, const DetectorGeometry& det, int m, int n) {
    if (m < 0 || n < 0 || m >= det.rows || n >= det.cols)
        throw std::out_of_range("pixel outside the detector");
    return 1.0 / quad_area_of_pixel(view, m, n);
}

ProjectionStack project_cvp(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                            const DetectorGeometry& det, const CvpOptions& opts,
                            const ExecPolicy& exec) {
    ProjectionStack out = ProjectionStack::zeros(det, int(views.size()));
    project_cvp_into(vol, views, det, opts, exec, out);
    return out;
}

void project_cvp_into(const AttenuationVolume& vol, std::span<const ViewGeometry> views,
                      const DetectorGeometry& det, const CvpOptions& opts, const ExecPolicy& exec,
                      ProjectionStack& out, std::vector<double>* view_seconds) {
    if (out.det != det || out.n_views != int(views.size()))
        throw std::invalid_argument("output stack does not match detector/views");
    for (const ViewGeometry& v : views) check_view_consistency(v, det, vol.geom);
    if (view_seconds) view_seconds->assign(views.size(), 0.0);
    if (opts.precision == CvpPrecision::Double)
        project_cvp_impl<double>(vol, views, det, opts, exec, out, view_seconds);
    else
        project_cvp_impl<float>(vol, views, det, opts, exec, out, view_seconds);
}

AttenuationVolume backproject_cvp(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                                  const VolumeGeometry& vol_geom, const CvpOptions& opts,
                                  const ExecPolicy& exec) {
    AttenuationVolume out = AttenuationVolume::zeros(vol_geom);
    backproject_cvp_into(proj, views, vol_geom, opts, exec, out);
    return out;
}

void backproject_cvp_into(const ProjectionStack& proj, std::span<const ViewGeometry> views,
                          const VolumeGeometry& vol_geom, const CvpOptions& opts,
                          const ExecPolicy& exec, AttenuationVolume& out,
                          std::vector<double>* view_seconds) {
    if (out.geom != vol_geom) throw std::invalid_argument("output volume does not match geometry");
    if (proj.n_views != int(views.size()))
        throw std::invalid_argument("projection stack does not match views");
    for (const ViewGeometry& v : views) check_view_consistency(v, proj.det, vol_geom);
    if (view_seconds) view_seconds->assign(views.size(), 0.0);
    std::fill(out.values.begin(), out.values.end(), 0.0);
    if (opts.precision == CvpPrecision::Double)
        backproject_cvp_impl<double>(proj, views, vol_geom, opts, exec, out, view_seconds);
    else
        backproject_cvp_impl<float>(proj, views, vol_geom, opts, exec, out, view_seconds);
}

std::vector<CutVolumeRecord> collect_cut_records(const VolumeGeometry& vol_geom,
                                                 const ViewGeometry& view,
                                                 const DetectorGeometry& det,
                                                 const CvpOptions& opts, int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= vol_geom.counts[0] || j >= vol_geom.counts[1] ||
        k >= vol_geom.counts[2])
        throw std::out_of_range("voxel index outside lattice");
    check_view_consistency(view, det, vol_geom);

    ViewCtx<double> ctx = ViewCtx<double>::make(view, det);
    Vec3d minc = vol_geom.min_corner();
    const Vec3d a = vol_geom.voxel_size;
    Vec2d bc{minc.x + (i + 0.5) * a.x, minc.y + (j + 0.5) * a.y};
    Polygon2D base = Polygon2D::rectangle({bc.x - 0.5 * a.x, bc.y - 0.5 * a.y},
                                          {bc.x + 0.5 * a.x, bc.y + 0.5 * a.y});

    std::vector<CutInfo<double>> cuts;
    std::vector<CutVolumeRecord> records;
    if (!compute_cuts(ctx, base, false, opts.elevation_correction, cuts)) return records;

    double zc = minc.z + (k + 0.5) * a.z;
    double z_lo = zc - 0.5 * a.z, z_hi = zc + 0.5 * a.z;
    double dz = zc - ctx.s3;

    double inv_r2_fixed = -1.0;
    if (opts.r_estimate == RadiusEstimate::VoxelCenter) {
        Vec2d rel = bc - ctx.s_xy;
        inv_r2_fixed = 1.0 / (dot(rel, rel) + dz * dz);
    }
    for (const CutInfo<double>& cut : cuts) {
        bool c = opts.elevation_correction && cut.halfw > 0.0 && elevation_active(dz, cut.rho2);
        visit_rows<double>(ctx, cut, z_lo, z_hi, c, false, inv_r2_fixed,
                           [&](int m, int n, double volume, double inv_r2) {
                               records.push_back({m, n, volume, inv_r2});
                           });
    }
    return records;
}

} // namespace cbct
