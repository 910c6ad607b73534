#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace cbct {

template <typename T> struct Vec2 {
    T x{};
    T y{};

    constexpr bool operator==(const Vec2&) const = default;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(T s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, T s) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator/(Vec2 a, T s) { return {a.x / s, a.y / s}; }
};

template <typename T> constexpr T dot(Vec2<T> a, Vec2<T> b) { return a.x * b.x + a.y * b.y; }
template <typename T> constexpr T cross(Vec2<T> a, Vec2<T> b) { return a.x * b.y - a.y * b.x; }
template <typename T> constexpr T squared_norm(Vec2<T> a) { return dot(a, a); }
template <typename T> T norm(Vec2<T> a) { return std::sqrt(dot(a, a)); }
template <typename T> constexpr Vec2<T> perp(Vec2<T> a) { return {-a.y, a.x}; }

template <typename T> Vec2<T> normalized(Vec2<T> a) {
    T n = norm(a);
    if (!(n > T(0))) throw std::domain_error("cannot normalize zero vector");
    return a / n;
}

template <typename T> struct Vec3 {
    T x{};
    T y{};
    T z{};

    constexpr bool operator==(const Vec3&) const = default;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(T s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, T s) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator/(Vec3 a, T s) { return {a.x / s, a.y / s, a.z / s}; }

    constexpr Vec2<T> xy() const { return {x, y}; }
};

template <typename T> constexpr T dot(Vec3<T> a, Vec3<T> b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T> constexpr Vec3<T> cross(Vec3<T> a, Vec3<T> b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T> constexpr T squared_norm(Vec3<T> a) { return dot(a, a); }
template <typename T> T norm(Vec3<T> a) { return std::sqrt(dot(a, a)); }

template <typename T> Vec3<T> normalized(Vec3<T> a) {
    T n = norm(a);
    if (!(n > T(0))) throw std::domain_error("cannot normalize zero vector");
    return a / n;
}

template <typename U, typename T> constexpr Vec2<U> vec_cast(Vec2<T> a) {
    return {static_cast<U>(a.x), static_cast<U>(a.y)};
}

template <typename U, typename T> constexpr Vec3<U> vec_cast(Vec3<T> a) {
    return {static_cast<U>(a.x), static_cast<U>(a.y), static_cast<U>(a.z)};
}

/// Row-major 3x3 matrix.
template <typename T> struct Mat3 {
    std::array<T, 9> m{};

    constexpr T& operator()(int r, int c) { return m[3 * r + c]; }
    constexpr T operator()(int r, int c) const { return m[3 * r + c]; }

    constexpr Vec3<T> row(int r) const { return {m[3 * r], m[3 * r + 1], m[3 * r + 2]}; }
    constexpr Vec3<T> col(int c) const { return {m[c], m[c + 3], m[c + 6]}; }

    static constexpr Mat3 from_rows(Vec3<T> a, Vec3<T> b, Vec3<T> c) {
        return {{a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z}};
    }

    static constexpr Mat3 identity() {
        return {{T(1), T(0), T(0), T(0), T(1), T(0), T(0), T(0), T(1)}};
    }

    friend constexpr Vec3<T> operator*(const Mat3& A, Vec3<T> v) {
        return {dot(A.row(0), v), dot(A.row(1), v), dot(A.row(2), v)};
    }

    friend constexpr Mat3 operator*(const Mat3& A, const Mat3& B) {
        Mat3 C;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                C(r, c) = A(r, 0) * B(0, c) + A(r, 1) * B(1, c) + A(r, 2) * B(2, c);
        return C;
    }

    constexpr Mat3 transposed() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }

    constexpr T det() const { return dot(row(0), cross(row(1), row(2))); }

    Mat3 inverse() const {
        T d = det();
        if (std::abs(d) < T(1e-300)) throw std::domain_error("matrix is singular");
        // columns of the inverse are the cross products of row pairs over det
        Vec3<T> c0 = cross(row(1), row(2)) / d;
        Vec3<T> c1 = cross(row(2), row(0)) / d;
        Vec3<T> c2 = cross(row(0), row(1)) / d;
        return Mat3{{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
    }
};

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

} // namespace cbct
