#pragma once

#include <vector>

#include "rkpm/geometry.hpp"
#include "rkpm/mesh.hpp"

namespace rkpm {

enum class Continuity { CG, DG };

/// Lagrange function space of order k on a mesh. CG spaces share dofs at
/// coincident node coordinates (which leaves hanging-node meshes C^-1);
/// DG spaces duplicate every cell-local dof. Kronecker delta N_i(x_j) holds
/// at the equispaced Lagrange nodes.
struct LagrangeSpace {
    Mesh mesh;
    int order = 1;
    Continuity continuity = Continuity::CG;
    int ndofs = 0;
    std::vector<Vec2> dof_coords;
    std::vector<std::vector<int>> cell_dofs; // per cell, local -> global
    double mesh_size = 0; // average cell diameter proxy, sqrt(mean area)

    int dofs_per_cell(int cell) const {
        return static_cast<int>(cell_dofs[cell].size());
    }
};

LagrangeSpace make_space(Mesh mesh, int k, Continuity continuity);

/// Uniform quad mesh + CG/DG space over `domain` with cell size ~ h_fg.
LagrangeSpace build_uniform_quad_space(Rect domain, double h_fg, int k,
                                       Continuity continuity);

/// Basis values and physical-coordinate derivatives at a reference point.
struct SpaceEval {
    std::vector<double> values;
    std::vector<Vec2> grads;
    std::vector<Sym2> hessians;
};
SpaceEval eval_space(const LagrangeSpace& space, int cell, Vec2 ref, int order);

/// Third physical derivatives (xxx, xxy, xyy, yyy) per basis function.
/// Only supported on cells with an affine geometric map (parallelograms and
/// triangles); throws Unsupported otherwise.
std::vector<std::array<double, 4>> eval_space_third(const LagrangeSpace& space,
                                                    int cell, Vec2 ref);

/// Reference-cell dof coordinates for (kind, k), matching cell_dofs order.
std::vector<Vec2> reference_dof_coords(CellKind kind, int k);

Vec2 map_point(const Mesh& mesh, int cell, Vec2 ref);
Mat2 map_jacobian(const Mesh& mesh, int cell, Vec2 ref);
/// Newton inversion of the geometric map; throws SingularJacobian.
Vec2 inverse_map(const Mesh& mesh, int cell, Vec2 x);

/// Geometry of a point on a cell edge, parametrized by t in [0, 1] along
/// the CCW edge direction; `normal` is the outward unit normal and
/// `measure` the length of dx/dt (constant: edges are straight).
struct FacetPoint {
    Vec2 ref;    // reference coords in the adjacent cell
    Vec2 x;      // physical coords
    Vec2 normal;
    double measure = 0;
};
FacetPoint facet_point(const Mesh& mesh, int cell, int local_edge, double t);

/// Locates the cell containing x (ties broken by lowest cell id).
/// Returns -1 if no cell contains it.
class CellLocator {
public:
    explicit CellLocator(const Mesh& mesh);
    int locate(Vec2 x, Vec2* ref_out = nullptr, int skip_cell = -1) const;

private:
    const Mesh& mesh_;
    std::vector<std::vector<int>> bins_;
    Rect box_;
    int nx_ = 0, ny_ = 0;
};

/// DG space on the unrefined base grid of a midground-fitted foreground
/// mesh, plus the cover map (midground cell -> foreground cells).
struct MidgroundSpace {
    LagrangeSpace space;
    std::vector<std::vector<int>> cover; // per midground cell
};
MidgroundSpace build_midground_space(const Mesh& foreground, int k);

} // namespace rkpm
