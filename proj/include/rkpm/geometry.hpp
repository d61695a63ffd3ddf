#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace rkpm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline double dist2(Vec2 a, Vec2 b) { return (a - b).norm2(); }

// z-component of the 2D cross product
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool valid() const { return x1 > x0 && y1 > y0; }
    bool contains(Vec2 p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    double extent() const { return std::max(width(), height()); }
};

/// Symmetric 2x2 tensor stored as (xx, xy, yy).
struct Sym2 {
    double xx = 0, xy = 0, yy = 0;

    Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }
    double trace() const { return xx + yy; }
    // full contraction treating xy with multiplicity two
    double ddot(const Sym2& o) const { return xx * o.xx + 2.0 * xy * o.xy + yy * o.yy; }
    Vec2 apply(Vec2 n) const { return {xx * n.x + xy * n.y, xy * n.x + yy * n.y}; }
};

/// General 2x2 tensor (row major).
struct Mat2 {
    double a00 = 0, a01 = 0, a10 = 0, a11 = 0;

    double det() const { return a00 * a11 - a01 * a10; }
    Mat2 inverse() const {
        double d = det();
        return {a11 / d, -a01 / d, -a10 / d, a00 / d};
    }
    Vec2 apply(Vec2 v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
    Sym2 sym() const { return {a00, 0.5 * (a01 + a10), a11}; }
};

} // namespace rkpm
