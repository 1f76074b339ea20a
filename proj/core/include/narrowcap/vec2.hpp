#pragma once

#include <cmath>

namespace narrowcap {

/// A point or vector in the plane.
struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) {
        x1 += o.x1;
        x2 += o.x2;
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) {
        x1 -= o.x1;
        x2 -= o.x2;
        return *this;
    }
    constexpr Vec2& operator*=(double s) {
        x1 *= s;
        x2 *= s;
        return *this;
    }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point2 = Vec2;

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x1, -a.x2}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x1 * b.x1 + a.x2 * b.x2; }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x1, a.x2); }

/// Counter-clockwise rotation of `v` by angle `t`.
inline Vec2 rotate(const Vec2& v, double t) {
    const double c = std::cos(t), s = std::sin(t);
    return {c * v.x1 - s * v.x2, s * v.x1 + c * v.x2};
}

/// Dense 2x2 matrix, row-major.
struct Mat2 {
    double m11 = 0.0, m12 = 0.0;
    double m21 = 0.0, m22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
    static constexpr Mat2 symmetric(double s11, double s12, double s22) { return {s11, s12, s12, s22}; }

    constexpr double trace() const { return m11 + m22; }
    constexpr Mat2 transpose() const { return {m11, m21, m12, m22}; }

    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
}
constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
}
constexpr Mat2 operator*(double s, const Mat2& a) { return {s * a.m11, s * a.m12, s * a.m21, s * a.m22}; }
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
            a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
}
constexpr Vec2 operator*(const Mat2& a, const Vec2& v) {
    return {a.m11 * v.x1 + a.m12 * v.x2, a.m21 * v.x1 + a.m22 * v.x2};
}

/// Trace(A B) without forming the product.
constexpr double trace_product(const Mat2& a, const Mat2& b) {
    return a.m11 * b.m11 + a.m12 * b.m21 + a.m21 * b.m12 + a.m22 * b.m22;
}

inline Mat2 rotation(double t) {
    const double c = std::cos(t), s = std::sin(t);
    return {c, -s, s, c};
}

}  // namespace narrowcap
