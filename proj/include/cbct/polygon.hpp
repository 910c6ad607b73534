#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include "cbct/vec.hpp"

namespace cbct {

/// Closed half-plane {x : dot(normal, x) <= offset} with unit normal.
template <typename T> struct BasicHalfPlane2D {
    Vec2<T> normal{};
    T offset{};

    static BasicHalfPlane2D from_line(Vec2<T> normal, T offset) {
        T n = norm(normal);
        if (!(n > T(0))) throw std::invalid_argument("half-plane normal must be nonzero");
        return {normal / n, offset / n};
    }

    /// The complementary closed half-plane {x : dot(normal, x) >= offset}.
    BasicHalfPlane2D complement() const { return {-normal, -offset}; }

    T signed_distance(Vec2<T> p) const { return dot(normal, p) - offset; }
};

/// Convex polygon with counter-clockwise vertex order. Fixed capacity of 8
/// vertices; a rectangle clipped by two parallel band edges never exceeds 6.
template <typename T> class BasicPolygon2D {
  public:
    static constexpr int capacity = 8;

    BasicPolygon2D() = default;

    BasicPolygon2D(std::initializer_list<Vec2<T>> pts) {
        for (Vec2<T> p : pts) push_back(p);
    }

    /// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
    static BasicPolygon2D rectangle(Vec2<T> lo, Vec2<T> hi) {
        if (!(lo.x < hi.x) || !(lo.y < hi.y))
            throw std::invalid_argument("rectangle corners must be ordered");
        return {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
    }

    int size() const { return n_; }
    bool empty() const { return n_ == 0; }
    Vec2<T> operator[](int i) const { return v_[i]; }

    void push_back(Vec2<T> p) {
        if (n_ == capacity) throw std::length_error("polygon capacity exceeded");
        v_[n_++] = p;
    }

    void clear() { n_ = 0; }

    /// Largest absolute vertex coordinate, the length scale for degeneracy
    /// thresholds.
    T scale() const {
        T s{};
        for (int i = 0; i < n_; ++i)
            s = std::max({s, std::abs(v_[i].x), std::abs(v_[i].y)});
        return s;
    }

  private:
    std::array<Vec2<T>, capacity> v_{};
    int n_ = 0;
};

/// Shoelace area; non-negative for counter-clockwise polygons.
template <typename T> T area(const BasicPolygon2D<T>& poly) {
    T twice{};
    int n = poly.size();
    for (int i = 0; i < n; ++i) twice += cross(poly[i], poly[(i + 1 == n) ? 0 : i + 1]);
    return twice / T(2);
}

/// Area-weighted centroid. Throws std::domain_error for degenerate polygons.
template <typename T> Vec2<T> centroid(const BasicPolygon2D<T>& poly) {
    T twice{};
    Vec2<T> acc{};
    int n = poly.size();
    for (int i = 0; i < n; ++i) {
        Vec2<T> p = poly[i];
        Vec2<T> q = poly[(i + 1 == n) ? 0 : i + 1];
        T c = cross(p, q);
        twice += c;
        acc = acc + (p + q) * c;
    }
    if (!(std::abs(twice) > T(0))) throw std::domain_error("centroid of a degenerate polygon");
    return acc / (T(3) * twice);
}

namespace detail {
// Vertices closer than 1e-12 * scale are merged, polygons with area below
// 1e-14 * scale^2 are dropped as slivers; keeps centroids well conditioned.
template <typename T> constexpr T kVertexMergeRel = T(1e-12);
template <typename T> constexpr T kSliverAreaRel = T(1e-14);
} // namespace detail

/// Sutherland-Hodgman clip of a convex polygon by one closed half-plane.
/// Vertices exactly on the boundary are kept.
template <typename T>
BasicPolygon2D<T> clip(const BasicPolygon2D<T>& poly, const BasicHalfPlane2D<T>& hp) {
    int n = poly.size();
    if (n == 0) return {};

    std::array<T, BasicPolygon2D<T>::capacity> dist;
    for (int i = 0; i < n; ++i) dist[i] = hp.signed_distance(poly[i]);

    std::array<Vec2<T>, BasicPolygon2D<T>::capacity + 1> raw;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1 == n) ? 0 : i + 1;
        T di = dist[i], dj = dist[j];
        if (di <= T(0)) raw[m++] = poly[i];
        // strict sign change; boundary vertices were already emitted exactly
        if ((di < T(0) && dj > T(0)) || (di > T(0) && dj < T(0))) {
            T t = di / (di - dj);
            raw[m++] = poly[i] + (poly[j] - poly[i]) * t;
        }
    }
    if (m < 3) return {};

    T merge_eps = detail::kVertexMergeRel<T>;
    {
        T s{};
        for (int i = 0; i < m; ++i) s = std::max({s, std::abs(raw[i].x), std::abs(raw[i].y)});
        merge_eps *= s;
    }

    BasicPolygon2D<T> out;
    out.push_back(raw[0]);
    for (int i = 1; i < m; ++i) {
        Vec2<T> d = raw[i] - out[out.size() - 1];
        if (std::abs(d.x) > merge_eps || std::abs(d.y) > merge_eps) out.push_back(raw[i]);
    }
    if (out.size() >= 2) {
        Vec2<T> d = out[out.size() - 1] - out[0];
        if (std::abs(d.x) <= merge_eps && std::abs(d.y) <= merge_eps) {
            BasicPolygon2D<T> trimmed;
            for (int i = 0; i + 1 < out.size(); ++i) trimmed.push_back(out[i]);
            out = trimmed;
        }
    }
    if (out.size() < 3) return {};

    T s = out.scale();
    if (area(out) < detail::kSliverAreaRel<T> * s * s) return {};
    return out;
}

/// Region between two parallel boundary lines: keep(upper) minus the interior
/// of keep(lower). Both half-planes must keep the same side, with keep(upper)
/// containing keep(lower).
template <typename T>
BasicPolygon2D<T> band_cut(const BasicPolygon2D<T>& square, const BasicHalfPlane2D<T>& lower,
                           const BasicHalfPlane2D<T>& upper) {
    return clip(clip(square, upper), lower.complement());
}

using HalfPlane2D = BasicHalfPlane2D<double>;
using Polygon2D = BasicPolygon2D<double>;

} // namespace cbct
