#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "rkpm/geometry.hpp"
#include "rkpm/pointcloud.hpp"

namespace rkpm {

// monomial block capped at n = 2 (n_p = 6)
using MomentMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using MomentVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

/// Reproducing-kernel basis over a node set: cubic B-spline kernels with
/// circular supports, monomial reproduction of order n (1 or 2).
///
/// Monomials are evaluated in coordinates scaled by `mono_scale` (the mean
/// support radius). The correction function H(0)^T M^-1 H is invariant under
/// that scaling, but the moment matrices it produces are well conditioned
/// independently of the nodal spacing.
struct RKPMBasis {
    NodeSet nodes;
    SpatialIndex index;
    int order = 1;          // reproducing order n
    int np = 3;             // binomial(n + 2, 2)
    double mono_scale = 1;  // monomial scaling length
    double kernel_scale = 1;
    double cond_cap = 1e12; // SingularMoment beyond this estimate
};

RKPMBasis make_basis(NodeSet nodes, int order);

/// Monomial vector H and its coordinate derivatives at offset p (already
/// divided by the basis mono_scale). Layout: [1, x, y] for n = 1 plus
/// [x^2, xy, y^2] for n = 2; H(0) = e_0.
struct BasisVector {
    MomentVec H, dHx, dHy, dHxx, dHxy, dHyy;
};
BasisVector basis_vector(Vec2 p, int order);

/// Moment matrix and its coordinate derivatives at x over the covering set.
/// Derivative blocks are filled up to `order` derivatives.
struct MomentMatrices {
    MomentMat M;
    MomentMat dMx, dMy;
    MomentMat dMxx, dMxy, dMyy;
};
MomentMatrices moment_matrix(const RKPMBasis& basis, Vec2 x,
                             const std::vector<int>& covering, int order);

/// Shape-function evaluation at one point: values, gradients, and Hessians
/// of every covering Psi_I, aligned with `ids`.
struct ShapeEval {
    Vec2 point{};
    std::vector<int> ids;
    std::vector<double> values;
    std::vector<Vec2> grads;
    std::vector<Sym2> hessians;
    double moment_condition = 0; // 1 / rcond estimate of the scaled moment matrix
};

/// order 0: values; 1: + gradients; 2: + Hessians. Throws NotCovered when no
/// support covers x and SingularMoment when the moment matrix is rank
/// deficient or its condition estimate exceeds basis.cond_cap.
ShapeEval shape_functions(const RKPMBasis& basis, Vec2 x, int order);

/// Residuals of the discrete reproducing conditions over a probe set:
/// max |sum_I Psi_I f(x_I) - f(x)| and the gradient analogue, per monomial.
struct ReproReport {
    // indexed like the monomial block of H
    std::array<double, 6> value_residual{};
    std::array<double, 6> grad_residual{};
    int n_monomials = 0;
};
ReproReport reproduce_check(const RKPMBasis& basis, const std::vector<Vec2>& probes);

} // namespace rkpm
