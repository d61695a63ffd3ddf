#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rkpm/geometry.hpp"
#include "rkpm/quadrature.hpp"

namespace rkpm {

/// Boundary facet tags. Sides of the bounding rectangle are tagged
/// individually so problem forms can map sides to boundary conditions;
/// `kTagInterface` marks internal facets between different materials.
inline constexpr int kTagLeft = 0;
inline constexpr int kTagRight = 1;
inline constexpr int kTagBottom = 2;
inline constexpr int kTagTop = 3;
inline constexpr int kTagInterface = 4;

struct Cell {
    CellKind kind = CellKind::Quad;
    std::array<int, 4> v{-1, -1, -1, -1}; // CCW vertex ids; tri uses v[0..2]
    int material = 0;
    int parent = -1; // base-grid cell id (midground-fitted bookkeeping)

    int nverts() const { return kind == CellKind::Quad ? 4 : 3; }
};

/// Oriented facet. Boundary facets have cell2 == -1; interface facets store
/// both adjacent cells with cell/edge on the lower-material side and the
/// normal pointing from cell to cell2.
struct Facet {
    int cell = -1;
    int local_edge = -1;
    int cell2 = -1;
    int local_edge2 = -1;
    int tag = -1;
};

/// A coarse-cell edge subdivided by refined neighbors; `vertices` are the
/// hanging vertices strictly inside it.
struct HangingEdge {
    int cell = -1;
    int local_edge = -1;
    std::vector<int> vertices;
};

struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<Cell> cells;
    std::vector<Facet> facets;
    std::vector<HangingEdge> hanging_edges;
    std::vector<bool> hanging_vertex;

    Rect domain;             // bounding rectangle of the base grid
    int base_nx = 0, base_ny = 0; // base grid used for midground fitting

    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_vertices() const { return static_cast<int>(vertices.size()); }

    std::array<int, 2> edge_vertices(int cell, int local_edge) const;
    double cell_area(int cell) const;
    double total_area() const;
    Vec2 cell_centroid(int cell) const;
    int n_materials() const;
};

/// Analytic level-set geometry. phi < 0 inside, > 0 outside.
struct LevelSet {
    enum class Kind { Circle, PlaneX };
    Kind kind = Kind::Circle;
    Vec2 center{};
    double radius = 1.0; // circle radius or plane position x = radius

    double operator()(Vec2 p) const;
    /// Roots of phi along segment a->b, as parameters in (0, 1).
    std::vector<double> edge_roots(Vec2 a, Vec2 b) const;
};

LevelSet circle_levelset(Vec2 center, double radius);
LevelSet plane_levelset_x(double x);

/// Structured all-quad mesh on explicit grid lines; boundary facets tagged
/// by side, materials assigned by centroid via `material_of` (default 0),
/// interface facets detected wherever neighboring materials differ.
Mesh build_tensor_quad_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::function<int(Vec2)>& material_of = {});

/// Uniform quad mesh with cell size ~ h_fg over `domain`.
Mesh build_uniform_quad_mesh(Rect domain, double h_fg);

/// Boundary-conforming mesh from an nx-by-ny base grid: base cells cut by
/// the phi = 0 isocontour are quadtree-refined `refine_levels` times, cut
/// subcells are split along the interface chord and fan-triangulated from
/// polygon centroids. Cell materials: 0 where phi < 0 at the centroid,
/// 1 outside. Hanging edges are recorded, never constrained.
Mesh build_levelset_mesh(Rect domain, int nx, int ny, const LevelSet& phi,
                         int refine_levels);

/// Copy of `mesh` keeping only cells with the given material; facets are
/// rebuilt (interface facets of dropped neighbors become boundary facets
/// with kTagInterface).
Mesh filter_cells(const Mesh& mesh, int keep_material);

} // namespace rkpm
