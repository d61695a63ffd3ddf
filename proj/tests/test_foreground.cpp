#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "rkpm/errors.hpp"
#include "rkpm/quadrature.hpp"
#include "rkpm/space.hpp"

using namespace rkpm;

namespace {

double monomial_integral_tri(int a, int b) {
    // int x^a y^b over the unit right triangle = a! b! / (a + b + 2)!
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(a) * fact(b) / fact(a + b + 2);
}

} // namespace

TEST_CASE("uniform quad mesh and dof counts") {
    const LagrangeSpace q1 = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.5, 1,
                                                      Continuity::CG);
    CHECK(q1.mesh.n_cells() == 4);
    CHECK(q1.ndofs == 9);

    const LagrangeSpace q2 = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.5, 2,
                                                      Continuity::CG);
    CHECK(q2.mesh.n_cells() == 4);
    CHECK(q2.ndofs == 25);

    const LagrangeSpace d1 = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.5, 1,
                                                      Continuity::DG);
    CHECK(d1.ndofs == 16);

    CHECK_THROWS_AS(build_uniform_quad_space(Rect{0, 0, 1, 1}, -0.1, 1, Continuity::CG),
                    InvalidArgument);
    CHECK_THROWS_AS(build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.5, 0, Continuity::CG),
                    InvalidArgument);
}

TEST_CASE("boundary facets tagged by side, once each") {
    const LagrangeSpace sp = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.25, 1,
                                                      Continuity::CG);
    int counts[4] = {0, 0, 0, 0};
    std::set<std::pair<int, int>> seen;
    for (const Facet& f : sp.mesh.facets) {
        REQUIRE(f.tag >= 0);
        REQUIRE(f.tag < 4);
        ++counts[f.tag];
        CHECK(seen.insert({f.cell, f.local_edge}).second);
    }
    for (int s = 0; s < 4; ++s) CHECK(counts[s] == 4);
}

TEST_CASE("quadrature rules match closed-form integrals") {
    const QuadratureRule q3 = quadrature(CellKind::Quad, 3);
    CHECK(q3.size() == 4); // 2x2 Gauss
    double wsum = 0;
    for (double w : q3.weights) wsum += w;
    CHECK(wsum == doctest::Approx(4.0).epsilon(1e-15));

    const QuadratureRule q4 = quadrature(CellKind::Quad, 4);
    double x2y2 = 0;
    for (int i = 0; i < q4.size(); ++i)
        x2y2 += q4.weights[i] * q4.points[i].x * q4.points[i].x * q4.points[i].y *
                q4.points[i].y;
    CHECK(std::abs(x2y2 - 4.0 / 9.0) <= 1e-14);

    const QuadratureRule t2 = quadrature(CellKind::Tri, 2);
    CHECK(t2.size() == 3); // symmetric rule
    double tsum = 0;
    for (double w : t2.weights) tsum += w;
    CHECK(tsum == doctest::Approx(0.5).epsilon(1e-15));

    // exactness sweep over shipped degrees
    for (int deg : {1, 2, 3, 4, 5, 6, 8, 12, 20}) {
        const QuadratureRule tr = quadrature(CellKind::Tri, deg);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double s = 0;
                for (int i = 0; i < tr.size(); ++i)
                    s += tr.weights[i] * std::pow(tr.points[i].x, a) *
                         std::pow(tr.points[i].y, b);
                CHECK(std::abs(s - monomial_integral_tri(a, b)) <= 1e-13);
            }
    }
    CHECK_THROWS_AS(quadrature(CellKind::Quad, 21), Unsupported);
}

TEST_CASE("space evaluation: Kronecker rows and partition of unity") {
    for (auto [kind_h, k] : {std::pair<double, int>{0.5, 1}, {0.5, 2}, {0.25, 3}}) {
        const LagrangeSpace sp = build_uniform_quad_space(Rect{0, 0, 1, 1}, kind_h, k,
                                                          Continuity::CG);
        const auto ref = reference_dof_coords(CellKind::Quad, k);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const SpaceEval ev = eval_space(sp, 0, ref[i], 0);
            for (std::size_t j = 0; j < ref.size(); ++j)
                CHECK(std::abs(ev.values[j] - (i == j ? 1.0 : 0.0)) <= 1e-12);
        }
        const SpaceEval ev = eval_space(sp, 0, {0.31, -0.47}, 1);
        double s = 0;
        Vec2 g{0, 0};
        for (std::size_t i = 0; i < ev.values.size(); ++i) {
            s += ev.values[i];
            g += ev.grads[i];
        }
        CHECK(std::abs(s - 1.0) <= 1e-13);
        CHECK(std::abs(g.x) <= 1e-12);
        CHECK(std::abs(g.y) <= 1e-12);
    }
}

TEST_CASE("derivatives on a distorted quad match finite differences") {
    Mesh m;
    m.vertices = {{0, 0}, {1.1, 0.1}, {1.3, 0.9}, {-0.2, 1.0}};
    Cell c;
    c.kind = CellKind::Quad;
    c.v = {0, 1, 2, 3};
    m.cells.push_back(c);
    m.domain = {-0.2, 0, 1.3, 1.0};
    const LagrangeSpace sp = make_space(std::move(m), 2, Continuity::CG);

    const Vec2 ref{0.23, -0.41};
    const Vec2 x0 = map_point(sp.mesh, 0, ref);
    const SpaceEval ev = eval_space(sp, 0, ref, 2);
    const double e = 1e-6, e2 = 1e-4;
    for (std::size_t i = 0; i < ev.values.size(); ++i) {
        auto val = [&](Vec2 p) {
            const Vec2 r = inverse_map(sp.mesh, 0, p);
            return eval_space(sp, 0, r, 0).values[i];
        };
        const double fx = (val({x0.x + e, x0.y}) - val({x0.x - e, x0.y})) / (2 * e);
        const double fy = (val({x0.x, x0.y + e}) - val({x0.x, x0.y - e})) / (2 * e);
        CHECK(ev.grads[i].x == doctest::Approx(fx).epsilon(1e-6));
        CHECK(ev.grads[i].y == doctest::Approx(fy).epsilon(1e-6));
        const double fxy = (val({x0.x + e2, x0.y + e2}) - val({x0.x + e2, x0.y - e2}) -
                            val({x0.x - e2, x0.y + e2}) + val({x0.x - e2, x0.y - e2})) /
                           (4 * e2 * e2);
        CHECK(ev.hessians[i].xy == doctest::Approx(fxy).epsilon(1e-4));
    }
}

TEST_CASE("plane level set splits cells along the exact line") {
    const LevelSet phi = plane_levelset_x(0.3);
    Mesh m = build_levelset_mesh(Rect{0, 0, 1, 1}, 2, 2, phi, 0);
    int interface_facets = 0;
    for (const Facet& f : m.facets)
        if (f.tag == kTagInterface && f.cell2 >= 0) {
            ++interface_facets;
            const auto [a, b] = m.edge_vertices(f.cell, f.local_edge);
            CHECK(std::abs(m.vertices[a].x - 0.3) <= 1e-12);
            CHECK(std::abs(m.vertices[b].x - 0.3) <= 1e-12);
        }
    CHECK(interface_facets >= 2);
    for (int c = 0; c < m.n_cells(); ++c)
        CHECK(m.cells[c].material == (m.cell_centroid(c).x < 0.3 ? 0 : 1));
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conforming plane through grid vertices yields interface facets only") {
    const LevelSet phi = plane_levelset_x(0.5);
    Mesh m = build_levelset_mesh(Rect{0, 0, 1, 1}, 2, 2, phi, 0);
    CHECK(m.n_cells() == 4); // nothing is cut
    int iface = 0;
    for (const Facet& f : m.facets)
        if (f.tag == kTagInterface) {
            ++iface;
            const auto [a, b] = m.edge_vertices(f.cell, f.local_edge);
            CHECK(std::abs(m.vertices[a].x - 0.5) <= 1e-12);
            CHECK(std::abs(m.vertices[b].x - 0.5) <= 1e-12);
        }
    CHECK(iface == 2);
}

TEST_CASE("circle interface vertices sit on the circle") {
    const LevelSet phi = circle_levelset({0, 0}, 1.0);
    Mesh m = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, 0);
    int on_circle = 0;
    for (const Facet& f : m.facets) {
        if (f.tag != kTagInterface || f.cell2 < 0) continue;
        const auto [a, b] = m.edge_vertices(f.cell, f.local_edge);
        for (int v : {a, b}) {
            CHECK(std::abs(m.vertices[v].norm() - 1.0) <= 1e-10);
            ++on_circle;
        }
    }
    CHECK(on_circle > 0);
    CHECK(m.total_area() == doctest::Approx(25.0).epsilon(1e-12));
    // chordal geometric error shrinks with local refinement
    auto inside_area = [&phi](int refine) {
        Mesh mr = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, refine);
        double inside = 0;
        for (int c = 0; c < mr.n_cells(); ++c)
            if (mr.cells[c].material == 0) inside += mr.cell_area(c);
        return inside;
    };
    const double quarter = 3.14159265358979 / 4;
    CHECK(inside_area(0) == doctest::Approx(quarter).epsilon(0.08));
    CHECK(inside_area(2) == doctest::Approx(quarter).epsilon(0.006));
    CHECK(std::abs(inside_area(2) - quarter) < std::abs(inside_area(0) - quarter));
}

TEST_CASE("quadtree refinement: cut base cells subdivide, others stay quads") {
    const LevelSet phi = circle_levelset({0, 0}, 1.0);
    Mesh m0 = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, 0);
    Mesh m2 = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, 2);

    std::set<int> cut_parents;
    for (const Cell& c : m0.cells)
        if (c.kind == CellKind::Tri) cut_parents.insert(c.parent);
    REQUIRE(!cut_parents.empty());

    // each cut base cell spawns 16 subcell regions: count distinct subcell
    // areas (quads count by area h^2/16, triangulated regions sum to it)
    std::map<int, double> area_per_parent;
    for (int c = 0; c < m2.n_cells(); ++c)
        area_per_parent[m2.cells[c].parent] += m2.cell_area(c);
    const double base_area = (5.0 / 8) * (5.0 / 8);
    for (const auto& [p, a] : area_per_parent)
        CHECK(a == doctest::Approx(base_area).epsilon(1e-12));

    std::map<int, int> quads_per_parent;
    for (const Cell& c : m2.cells)
        if (c.kind == CellKind::Quad) quads_per_parent[c.parent]++;
    for (int p : cut_parents) {
        // refined cells contribute more than one subcell
        const int nq = quads_per_parent.count(p) ? quads_per_parent[p] : 0;
        CHECK(nq <= 16);
    }
    for (const Cell& c : m2.cells)
        if (!cut_parents.count(c.parent)) CHECK(c.kind == CellKind::Quad);

    CHECK(m2.total_area() == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(!m2.hanging_edges.empty());
    for (const HangingEdge& he : m2.hanging_edges) {
        const auto [a, b] = m2.edge_vertices(he.cell, he.local_edge);
        for (int v : he.vertices) {
            const Vec2 pa = m2.vertices[a], pb = m2.vertices[b], pv = m2.vertices[v];
            const double t = (pv - pa).dot(pb - pa) / (pb - pa).norm2();
            CHECK(t > 0.0);
            CHECK(t < 1.0);
        }
    }
}

TEST_CASE("contour through a base vertex into a cut cell is rejected") {
    // R = 2.5 puts the circle exactly through grid vertices while cutting
    // the adjacent cells: the crossing structure degenerates
    const LevelSet phi = circle_levelset({0, 0}, 2.5);
    CHECK_THROWS_AS(build_levelset_mesh(Rect{0, 0, 5, 5}, 2, 2, phi, 0), MeshFailure);
}

TEST_CASE("midground cover map partitions every base cell") {
    const LevelSet phi = circle_levelset({0, 0}, 1.0);
    Mesh m = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, 1);
    const MidgroundSpace mg = build_midground_space(m, 1);
    CHECK(mg.space.ndofs == 8 * 8 * 4); // k=1 DG: 4 dofs per cell
    for (int e = 0; e < mg.space.mesh.n_cells(); ++e) {
        double sum = 0;
        for (int c : mg.cover[e]) sum += m.cell_area(c);
        CHECK(sum == doctest::Approx(mg.space.mesh.cell_area(e)).epsilon(1e-12));
    }
    const LagrangeSpace uni = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.25, 1,
                                                       Continuity::CG);
    const MidgroundSpace mg2 = build_midground_space(uni.mesh, 1);
    for (int e = 0; e < mg2.space.mesh.n_cells(); ++e) {
        REQUIRE(mg2.cover[e].size() == 1);
        CHECK(mg2.cover[e][0] == e);
    }
}

TEST_CASE("filtered plate mesh keeps outside cells and retags the hole") {
    const LevelSet phi = circle_levelset({0, 0}, 1.0);
    Mesh full = build_levelset_mesh(Rect{0, 0, 5, 5}, 8, 8, phi, 1);
    Mesh plate = filter_cells(full, 1);
    for (const Cell& c : plate.cells) CHECK(c.material == 1);
    int hole_facets = 0;
    for (const Facet& f : plate.facets)
        if (f.tag == kTagInterface) {
            CHECK(f.cell2 < 0);
            ++hole_facets;
        }
    CHECK(hole_facets > 0);
    CHECK(plate.total_area() ==
          doctest::Approx(25.0 - 3.14159265358979 / 4).epsilon(0.01));
}

TEST_CASE("facet points carry outward unit normals") {
    const LagrangeSpace sp = build_uniform_quad_space(Rect{0, 0, 1, 1}, 0.5, 1,
                                                      Continuity::CG);
    for (const Facet& f : sp.mesh.facets) {
        const FacetPoint fp = facet_point(sp.mesh, f.cell, f.local_edge, 0.5);
        const Vec2 g = sp.mesh.cell_centroid(f.cell);
        CHECK((fp.x - g).dot(fp.normal) > 0);
        CHECK(fp.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
    }
}
