#pragma once

#include <cmath>

#include "rkpm/geometry.hpp"

namespace rkpm {

/// Value and radial derivatives of the cubic B-spline window at normalized
/// distance z = r / a:
///   2/3 - 4z^2 + 4z^3          on [0, 1/2]
///   4/3 - 4z + 4z^2 - 4z^3/3   on [1/2, 1]
///   0                          beyond.
/// C2 in z, zero value and slope at z = 1.
struct KernelEval {
    double value = 0, dz = 0, dzz = 0;
};

inline KernelEval cubic_bspline(double z) {
    KernelEval k;
    if (z < 0.5) {
        k.value = 2.0 / 3.0 - 4.0 * z * z + 4.0 * z * z * z;
        k.dz = -8.0 * z + 12.0 * z * z;
        k.dzz = -8.0 + 24.0 * z;
    } else if (z < 1.0) {
        const double omz = 1.0 - z;
        k.value = 4.0 / 3.0 * omz * omz * omz;
        k.dz = -4.0 * omz * omz;
        k.dzz = 8.0 * omz;
    }
    return k;
}

/// Kernel value and Cartesian derivatives at offset d = x - x_I for support
/// radius a. g1 = phi'(z)/(a r) is evaluated through forms that stay finite
/// as r -> 0 on the inner branch.
struct KernelPoint {
    double w = 0;       // kernel value
    Vec2 grad{};        // d/dx, d/dy
    Sym2 hess{};        // second derivatives
};

inline KernelPoint kernel_cartesian(Vec2 d, double a, int order) {
    KernelPoint out;
    const double r = d.norm();
    const double z = r / a;
    if (z >= 1.0) return out;

    const KernelEval k = cubic_bspline(z);
    out.w = k.value;
    if (order < 1) return out;

    // phi'(z) / (a r); on [0, 1/2] phi'(z)/z = -8 + 12 z removes the 0/0
    double g1;
    if (z < 0.5) {
        g1 = (-8.0 + 12.0 * z) / (a * a);
    } else {
        g1 = k.dz / (a * r);
    }
    out.grad = {g1 * d.x, g1 * d.y};
    if (order < 2) return out;

    // hess = [phi''/a^2 - g1] (d x d)/r^2 + g1 I
    double aniso; // coefficient of (d x d)/r^2
    if (r < 1e-12 * a) {
        aniso = 0.0; // 12 z / a^2 -> 0; direction factor bounded
        out.hess = {g1, 0.0, g1};
        return out;
    }
    aniso = k.dzz / (a * a) - g1;
    const double inv_r2 = 1.0 / (r * r);
    out.hess.xx = aniso * d.x * d.x * inv_r2 + g1;
    out.hess.xy = aniso * d.x * d.y * inv_r2;
    out.hess.yy = aniso * d.y * d.y * inv_r2 + g1;
    return out;
}

} // namespace rkpm
