#include "rkpm/basis.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "rkpm/errors.hpp"
#include "rkpm/kernel.hpp"

namespace rkpm {

RKPMBasis make_basis(NodeSet nodes, int order) {
    if (order < 1 || order > 2)
        throw InvalidArgument("reproducing order must be 1 or 2");
    if (nodes.a.empty())
        throw InvalidArgument("node set has no support radii");

    RKPMBasis b;
    b.order = order;
    b.np = (order + 1) * (order + 2) / 2;
    if (nodes.size() < b.np)
        throw InvalidArgument("fewer nodes than monomials");

    double mean_a = 0;
    for (double a : nodes.a) mean_a += a;
    mean_a /= nodes.size();
    b.mono_scale = mean_a;
    b.index = SpatialIndex(nodes);
    b.nodes = std::move(nodes);
    return b;
}

BasisVector basis_vector(Vec2 p, int order) {
    const int np = (order + 1) * (order + 2) / 2;
    BasisVector bv;
    bv.H.setZero(np);
    bv.dHx.setZero(np);
    bv.dHy.setZero(np);
    bv.dHxx.setZero(np);
    bv.dHxy.setZero(np);
    bv.dHyy.setZero(np);

    bv.H(0) = 1.0;
    bv.H(1) = p.x;
    bv.H(2) = p.y;
    bv.dHx(1) = 1.0;
    bv.dHy(2) = 1.0;
    if (order >= 2) {
        bv.H(3) = p.x * p.x;
        bv.H(4) = p.x * p.y;
        bv.H(5) = p.y * p.y;
        bv.dHx(3) = 2.0 * p.x;
        bv.dHx(4) = p.y;
        bv.dHy(4) = p.x;
        bv.dHy(5) = 2.0 * p.y;
        bv.dHxx(3) = 2.0;
        bv.dHxy(4) = 1.0;
        bv.dHyy(5) = 2.0;
    }
    return bv;
}

MomentMatrices moment_matrix(const RKPMBasis& basis, Vec2 x,
                             const std::vector<int>& covering, int order) {
    const int np = basis.np;
    const double s = basis.mono_scale;
    const double inv_s = 1.0 / s;

    MomentMatrices mm;
    mm.M.setZero(np, np);
    if (order >= 1) {
        mm.dMx.setZero(np, np);
        mm.dMy.setZero(np, np);
    }
    if (order >= 2) {
        mm.dMxx.setZero(np, np);
        mm.dMxy.setZero(np, np);
        mm.dMyy.setZero(np, np);
    }

    for (int id : covering) {
        const Vec2 d = x - basis.nodes.coords[id];
        const KernelPoint k = kernel_cartesian(d, basis.nodes.a[id], order);
        const BasisVector bv = basis_vector(d * inv_s, basis.order);
        const double w = k.w * basis.kernel_scale;

        const MomentMat HH = bv.H * bv.H.transpose();
        mm.M.noalias() += w * HH;
        if (order < 1) continue;

        // scaled monomial derivatives carry 1/s per derivative order
        const MomentVec dHx = bv.dHx * inv_s;
        const MomentVec dHy = bv.dHy * inv_s;
        const MomentMat Ax = dHx * bv.H.transpose() + bv.H * dHx.transpose();
        const MomentMat Ay = dHy * bv.H.transpose() + bv.H * dHy.transpose();
        const Vec2 gw = k.grad * basis.kernel_scale;
        mm.dMx.noalias() += w * Ax + gw.x * HH;
        mm.dMy.noalias() += w * Ay + gw.y * HH;
        if (order < 2) continue;

        const double inv_s2 = inv_s * inv_s;
        const MomentVec dHxx = bv.dHxx * inv_s2;
        const MomentVec dHxy = bv.dHxy * inv_s2;
        const MomentVec dHyy = bv.dHyy * inv_s2;
        const MomentMat Axx =
            dHxx * bv.H.transpose() + bv.H * dHxx.transpose() + 2.0 * (dHx * dHx.transpose());
        const MomentMat Axy = dHxy * bv.H.transpose() + bv.H * dHxy.transpose() +
                              dHx * dHy.transpose() + dHy * dHx.transpose();
        const MomentMat Ayy =
            dHyy * bv.H.transpose() + bv.H * dHyy.transpose() + 2.0 * (dHy * dHy.transpose());
        const Sym2 hw = k.hess * basis.kernel_scale;
        mm.dMxx.noalias() += w * Axx + 2.0 * gw.x * Ax + hw.xx * HH;
        mm.dMxy.noalias() += w * Axy + gw.x * Ay + gw.y * Ax + hw.xy * HH;
        mm.dMyy.noalias() += w * Ayy + 2.0 * gw.y * Ay + hw.yy * HH;
    }
    return mm;
}

ShapeEval shape_functions(const RKPMBasis& basis, Vec2 x, int order) {
    ShapeEval ev;
    ev.point = x;
    ev.ids = basis.index.covering_nodes(x);
    if (ev.ids.empty())
        throw NotCovered("no support covers point (" + std::to_string(x.x) + ", " +
                         std::to_string(x.y) + ")");
    const int ng = static_cast<int>(ev.ids.size());
    if (ng < basis.np)
        throw SingularMoment("covering set smaller than n_p at (" + std::to_string(x.x) +
                             ", " + std::to_string(x.y) + ")");

    const MomentMatrices mm = moment_matrix(basis, x, ev.ids, order);
    Eigen::LLT<MomentMat> llt(mm.M);
    if (llt.info() != Eigen::Success)
        throw SingularMoment("moment matrix Cholesky failed at (" + std::to_string(x.x) +
                             ", " + std::to_string(x.y) + ")");
    const double rcond = llt.rcond();
    ev.moment_condition = (rcond > 0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (ev.moment_condition > basis.cond_cap)
        throw SingularMoment("moment matrix condition exceeds cap at (" +
                             std::to_string(x.x) + ", " + std::to_string(x.y) + ")");

    const int np = basis.np;
    MomentVec e0;
    e0.setZero(np);
    e0(0) = 1.0;

    // b = M^-1 H(0); derivatives via factored solves of the differentiated identity
    const MomentVec b = llt.solve(e0);
    MomentVec bx, by, bxx, bxy, byy;
    if (order >= 1) {
        bx = llt.solve((-(mm.dMx * b)).eval());
        by = llt.solve((-(mm.dMy * b)).eval());
    }
    if (order >= 2) {
        bxx = llt.solve((-(mm.dMxx * b) - 2.0 * (mm.dMx * bx)).eval());
        bxy = llt.solve((-(mm.dMxy * b) - mm.dMx * by - mm.dMy * bx).eval());
        byy = llt.solve((-(mm.dMyy * b) - 2.0 * (mm.dMy * by)).eval());
    }

    const double inv_s = 1.0 / basis.mono_scale;
    ev.values.resize(ng);
    if (order >= 1) ev.grads.resize(ng);
    if (order >= 2) ev.hessians.resize(ng);

    for (int q = 0; q < ng; ++q) {
        const int id = ev.ids[q];
        const Vec2 d = x - basis.nodes.coords[id];
        const KernelPoint k = kernel_cartesian(d, basis.nodes.a[id], order);
        const BasisVector bv = basis_vector(d * inv_s, basis.order);
        const double w = k.w * basis.kernel_scale;

        const double gamma = b.dot(bv.H);
        ev.values[q] = w * gamma;
        if (order < 1) continue;

        const MomentVec dHx = bv.dHx * inv_s;
        const MomentVec dHy = bv.dHy * inv_s;
        const double gx = bx.dot(bv.H) + b.dot(dHx);
        const double gy = by.dot(bv.H) + b.dot(dHy);
        const Vec2 gw = k.grad * basis.kernel_scale;
        ev.grads[q] = {gw.x * gamma + w * gx, gw.y * gamma + w * gy};
        if (order < 2) continue;

        const double inv_s2 = inv_s * inv_s;
        const double gxx = bxx.dot(bv.H) + 2.0 * bx.dot(dHx) + b.dot(bv.dHxx) * inv_s2;
        const double gxy =
            bxy.dot(bv.H) + bx.dot(dHy) + by.dot(dHx) + b.dot(bv.dHxy) * inv_s2;
        const double gyy = byy.dot(bv.H) + 2.0 * by.dot(dHy) + b.dot(bv.dHyy) * inv_s2;
        const Sym2 hw = k.hess * basis.kernel_scale;
        ev.hessians[q] = {hw.xx * gamma + 2.0 * gw.x * gx + w * gxx,
                          hw.xy * gamma + gw.x * gy + gw.y * gx + w * gxy,
                          hw.yy * gamma + 2.0 * gw.y * gy + w * gyy};
    }
    return ev;
}

ReproReport reproduce_check(const RKPMBasis& basis, const std::vector<Vec2>& probes) {
    ReproReport rep;
    rep.n_monomials = basis.np;

    for (const Vec2& x : probes) {
        const ShapeEval ev = shape_functions(basis, x, 1);
        // monomials and their gradients at the probe
        std::array<double, 6> f{1.0, x.x, x.y, x.x * x.x, x.x * x.y, x.y * x.y};
        std::array<Vec2, 6> df{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1},
                               Vec2{2 * x.x, 0}, Vec2{x.y, x.x}, Vec2{0, 2 * x.y}};
        for (int m = 0; m < basis.np; ++m) {
            double sv = 0;
            Vec2 sg{0, 0};
            for (std::size_t q = 0; q < ev.ids.size(); ++q) {
                const Vec2 xi = basis.nodes.coords[ev.ids[q]];
                const std::array<double, 6> fi{1.0,     xi.x,      xi.y,
                                               xi.x * xi.x, xi.x * xi.y, xi.y * xi.y};
                sv += ev.values[q] * fi[m];
                sg += ev.grads[q] * fi[m];
            }
            rep.value_residual[m] = std::max(rep.value_residual[m], std::abs(sv - f[m]));
            rep.grad_residual[m] =
                std::max(rep.grad_residual[m],
                         std::max(std::abs(sg.x - df[m].x), std::abs(sg.y - df[m].y)));
        }
    }
    return rep;
}

} // namespace rkpm
