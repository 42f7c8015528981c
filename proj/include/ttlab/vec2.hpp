#pragma once

#include <cmath>
#include <numbers>

namespace ttlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline Vec2 unit_circle(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Wraps an angle into [0, 2π).
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r -= two_pi;
    return r;
}

/// Wraps an angle difference into (-π, π].
inline double wrap_difference(double a) {
    constexpr double pi = std::numbers::pi;
    double r = std::remainder(a, 2.0 * pi);
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

/// Row-major 2x2 matrix. Metric tensors and Jacobians both use this.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 scalar(double s) { return {s, 0.0, 0.0, s}; }

    constexpr double operator()(int i, int j) const {
        return i == 0 ? (j == 0 ? a11 : a12) : (j == 0 ? a21 : a22);
    }
    constexpr double det() const { return a11 * a22 - a12 * a21; }
    constexpr double trace() const { return a11 + a22; }
    constexpr Mat2 transposed() const { return {a11, a21, a12, a22}; }
    constexpr Mat2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
}
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}
constexpr Mat2 operator*(double s, const Mat2& m) { return {s * m.a11, s * m.a12, s * m.a21, s * m.a22}; }
constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
}
constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
}

/// Inner product <u, v>_g.
constexpr double inner(const Mat2& g, Vec2 u, Vec2 v) { return dot(u, g * v); }

/// Smaller eigenvalue of a symmetric 2x2 matrix.
inline double min_eigenvalue(const Mat2& s) {
    const double half_tr = 0.5 * s.trace();
    const double d = 0.5 * (s.a11 - s.a22);
    return half_tr - std::hypot(d, s.a12);
}

}  // namespace ttlab
