#pragma once

#include <vector>

#include "rkpm/geometry.hpp"

namespace rkpm {

enum class CellKind { Quad, Tri };

/// Reference-cell quadrature rule. Quads use [-1,1]^2 (weights sum to 4),
/// triangles the unit right triangle (weights sum to 1/2), facets the
/// parameter interval [0,1] (weights sum to 1).
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int size() const { return static_cast<int>(points.size()); }
};

/// Smallest shipped rule exact for total polynomial degree <= `degree`.
/// Quads: tensor Gauss-Legendre. Triangles: the classic centroid/3-point
/// symmetric rules at degree <= 2, conical-product Gauss-Jacobi beyond.
/// Throws Unsupported above degree 20.
QuadratureRule quadrature(CellKind kind, int degree);

/// 1D Gauss-Legendre on [0,1], exact to `degree`.
QuadratureRule facet_quadrature(int degree);

/// Gauss nodes/weights on [-1,1] for weight (1-x)^alpha (1+x)^beta via the
/// Golub-Welsch eigenvalue method. alpha = beta = 0 is Gauss-Legendre.
void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& nodes,
                  std::vector<double>& weights);

} // namespace rkpm
