#include "rkpm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "rkpm/errors.hpp"

namespace rkpm {

namespace {

// quad corners CCW from (x0, y0); edges e0 bottom, e1 right, e2 top, e3 left
constexpr int kQuadEdges[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
constexpr int kTriEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

/// Coordinate-hash vertex dedup: points within `tol` of an existing vertex
/// reuse its id. Deterministic for a fixed insertion order.
class VertexPool {
public:
    VertexPool(std::vector<Vec2>& verts, double tol)
        : verts_(verts), tol_(tol), cell_(4.0 * tol) {}

    int add(Vec2 p) {
        const long long ix = llround(p.x / cell_);
        const long long iy = llround(p.y / cell_);
        for (long long dy = -1; dy <= 1; ++dy)
            for (long long dx = -1; dx <= 1; ++dx) {
                auto it = map_.find(key(ix + dx, iy + dy));
                if (it == map_.end()) continue;
                for (int id : it->second)
                    if (dist(verts_[id], p) <= tol_) return id;
            }
        const int id = static_cast<int>(verts_.size());
        verts_.push_back(p);
        map_[key(ix, iy)].push_back(id);
        return id;
    }

private:
    static std::uint64_t key(long long ix, long long iy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy));
    }
    std::vector<Vec2>& verts_;
    double tol_, cell_;
    std::unordered_map<std::uint64_t, std::vector<int>> map_;
};

double polygon_area(const std::vector<Vec2>& pts) {
    double a = 0;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % n];
        a += cross(p, q);
    }
    return 0.5 * a;
}

int side_of_edge(const Mesh& m, Vec2 a, Vec2 b) {
    const double tol = 1e-9 * std::max(m.domain.extent(), 1.0);
    auto on = [&](double va, double vb, double line) {
        return std::abs(va - line) <= tol && std::abs(vb - line) <= tol;
    };
    if (on(a.x, b.x, m.domain.x0)) return kTagLeft;
    if (on(a.x, b.x, m.domain.x1)) return kTagRight;
    if (on(a.y, b.y, m.domain.y0)) return kTagBottom;
    if (on(a.y, b.y, m.domain.y1)) return kTagTop;
    return -1;
}

/// Facet + hanging-edge detection shared by all builders.
void finalize_mesh(Mesh& m) {
    m.facets.clear();
    m.hanging_edges.clear();
    m.hanging_vertex.assign(m.vertices.size(), false);

    for (int c = 0; c < m.n_cells(); ++c) {
        std::vector<Vec2> pts;
        for (int i = 0; i < m.cells[c].nverts(); ++i)
            pts.push_back(m.vertices[m.cells[c].v[i]]);
        if (polygon_area(pts) <= 0.0)
            throw MeshFailure("cell " + std::to_string(c) + " not positively oriented");
    }

    struct EdgeUse {
        int cell, ledge;
    };
    std::map<std::pair<int, int>, std::vector<EdgeUse>> edges;
    for (int c = 0; c < m.n_cells(); ++c) {
        const int ne = m.cells[c].nverts();
        for (int e = 0; e < ne; ++e) {
            auto [a, b] = m.edge_vertices(c, e);
            edges[{std::min(a, b), std::max(a, b)}].push_back({c, e});
        }
    }

    // bin grid over vertices for hanging-vertex lookups
    Rect box = m.domain;
    const int nbx = 64, nby = 64;
    std::vector<std::vector<int>> vbins(nbx * nby);
    auto bin_ix = [&](double x) {
        return std::clamp(static_cast<int>((x - box.x0) / box.width() * nbx), 0, nbx - 1);
    };
    auto bin_iy = [&](double y) {
        return std::clamp(static_cast<int>((y - box.y0) / box.height() * nby), 0, nby - 1);
    };
    for (int v = 0; v < m.n_vertices(); ++v)
        vbins[bin_iy(m.vertices[v].y) * nbx + bin_ix(m.vertices[v].x)].push_back(v);

    for (const auto& [key, uses] : edges) {
        if (uses.size() > 2)
            throw MeshFailure("edge shared by more than two cells");
        if (uses.size() == 2) {
            const Cell& c0 = m.cells[uses[0].cell];
            const Cell& c1 = m.cells[uses[1].cell];
            if (c0.material != c1.material) {
                // orient from lower material toward higher
                const bool first = c0.material < c1.material;
                Facet f;
                f.cell = first ? uses[0].cell : uses[1].cell;
                f.local_edge = first ? uses[0].ledge : uses[1].ledge;
                f.cell2 = first ? uses[1].cell : uses[0].cell;
                f.local_edge2 = first ? uses[1].ledge : uses[0].ledge;
                f.tag = kTagInterface;
                m.facets.push_back(f);
            }
            continue;
        }

        const EdgeUse u = uses[0];
        auto [va, vb] = m.edge_vertices(u.cell, u.ledge);
        const Vec2 a = m.vertices[va], b = m.vertices[vb];
        const int side = side_of_edge(m, a, b);
        if (side >= 0) {
            m.facets.push_back({u.cell, u.ledge, -1, -1, side});
            continue;
        }

        // interior once-used edge: collect vertices strictly inside it
        const Vec2 ab = b - a;
        const double len2 = ab.norm2();
        const double tol = 1e-12 * std::sqrt(len2) * std::max(m.domain.extent(), 1.0);
        std::vector<std::pair<double, int>> inner;
        const int ix0 = std::min(bin_ix(a.x), bin_ix(b.x));
        const int ix1 = std::max(bin_ix(a.x), bin_ix(b.x));
        const int iy0 = std::min(bin_iy(a.y), bin_iy(b.y));
        const int iy1 = std::max(bin_iy(a.y), bin_iy(b.y));
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix)
                for (int v : vbins[iy * nbx + ix]) {
                    if (v == va || v == vb) continue;
                    const Vec2 ap = m.vertices[v] - a;
                    if (std::abs(cross(ab, ap)) > tol * std::sqrt(len2)) continue;
                    const double t = ap.dot(ab) / len2;
                    if (t > 1e-9 && t < 1.0 - 1e-9) inner.emplace_back(t, v);
                }
        if (!inner.empty()) {
            std::sort(inner.begin(), inner.end());
            HangingEdge he;
            he.cell = u.cell;
            he.local_edge = u.ledge;
            for (auto& [t, v] : inner) {
                he.vertices.push_back(v);
                m.hanging_vertex[v] = true;
            }
            m.hanging_edges.push_back(std::move(he));
        }
    }
}

} // namespace

std::array<int, 2> Mesh::edge_vertices(int cell, int local_edge) const {
    const Cell& c = cells[cell];
    if (c.kind == CellKind::Quad)
        return {c.v[kQuadEdges[local_edge][0]], c.v[kQuadEdges[local_edge][1]]};
    return {c.v[kTriEdges[local_edge][0]], c.v[kTriEdges[local_edge][1]]};
}

double Mesh::cell_area(int cell) const {
    std::vector<Vec2> pts;
    for (int i = 0; i < cells[cell].nverts(); ++i) pts.push_back(vertices[cells[cell].v[i]]);
    return polygon_area(pts);
}

double Mesh::total_area() const {
    double a = 0;
    for (int c = 0; c < n_cells(); ++c) a += cell_area(c);
    return a;
}

Vec2 Mesh::cell_centroid(int cell) const {
    Vec2 g{0, 0};
    const int n = cells[cell].nverts();
    for (int i = 0; i < n; ++i) g += vertices[cells[cell].v[i]];
    return g / n;
}

int Mesh::n_materials() const {
    int m = 0;
    for (const Cell& c : cells) m = std::max(m, c.material + 1);
    return m;
}

double LevelSet::operator()(Vec2 p) const {
    if (kind == Kind::Circle) return dist(p, center) - radius;
    return p.x - radius;
}

std::vector<double> LevelSet::edge_roots(Vec2 a, Vec2 b) const {
    std::vector<double> out;
    if (kind == Kind::PlaneX) {
        const double dx = b.x - a.x;
        if (dx != 0.0) {
            const double t = (radius - a.x) / dx;
            if (t > 1e-14 && t < 1.0 - 1e-14) out.push_back(t);
        }
        return out;
    }
    // |a + t(b-a) - center|^2 = R^2
    const Vec2 d0 = a - center;
    const Vec2 dv = b - a;
    const double qa = dv.norm2();
    const double qb = 2.0 * d0.dot(dv);
    const double qc = d0.norm2() - radius * radius;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0 || qa == 0.0) return out;
    const double sq = std::sqrt(disc);
    // numerically stable pair
    const double q = -0.5 * (qb + (qb >= 0 ? sq : -sq));
    double t1 = q / qa;
    double t2 = (q != 0.0) ? qc / q : t1;
    if (t1 > t2) std::swap(t1, t2);
    for (double t : {t1, t2})
        if (t > 1e-14 && t < 1.0 - 1e-14) out.push_back(t);
    return out;
}

LevelSet circle_levelset(Vec2 center, double radius) {
    LevelSet ls;
    ls.kind = LevelSet::Kind::Circle;
    ls.center = center;
    ls.radius = radius;
    return ls;
}

LevelSet plane_levelset_x(double x) {
    LevelSet ls;
    ls.kind = LevelSet::Kind::PlaneX;
    ls.radius = x;
    return ls;
}

Mesh build_tensor_quad_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::function<int(Vec2)>& material_of) {
    if (xs.size() < 2 || ys.size() < 2)
        throw InvalidArgument("tensor mesh needs at least 2 grid lines per axis");

    Mesh m;
    m.domain = {xs.front(), ys.front(), xs.back(), ys.back()};
    m.base_nx = static_cast<int>(xs.size()) - 1;
    m.base_ny = static_cast<int>(ys.size()) - 1;

    const int nvx = static_cast<int>(xs.size());
    for (double y : ys)
        for (double x : xs) m.vertices.push_back({x, y});

    for (int j = 0; j < m.base_ny; ++j)
        for (int i = 0; i < m.base_nx; ++i) {
            Cell c;
            c.kind = CellKind::Quad;
            c.v = {j * nvx + i, j * nvx + i + 1, (j + 1) * nvx + i + 1, (j + 1) * nvx + i};
            c.parent = j * m.base_nx + i;
            Vec2 g = (m.vertices[c.v[0]] + m.vertices[c.v[2]]) * 0.5;
            c.material = material_of ? material_of(g) : 0;
            m.cells.push_back(c);
        }
    finalize_mesh(m);
    return m;
}

Mesh build_uniform_quad_mesh(Rect domain, double h_fg) {
    if (h_fg <= 0) throw InvalidArgument("non-positive foreground cell size");
    const int nx = std::max(1, static_cast<int>(std::lround(domain.width() / h_fg)));
    const int ny = std::max(1, static_cast<int>(std::lround(domain.height() / h_fg)));
    std::vector<double> xs(nx + 1), ys(ny + 1);
    for (int i = 0; i <= nx; ++i) xs[i] = domain.x0 + domain.width() * i / nx;
    for (int j = 0; j <= ny; ++j) ys[j] = domain.y0 + domain.height() * j / ny;
    return build_tensor_quad_mesh(xs, ys);
}

namespace {

struct SubQuad {
    std::array<Vec2, 4> p; // CCW from lower-left
};

void emit_cut_quad(Mesh& m, VertexPool& pool, const SubQuad& q, const LevelSet& phi,
                   int parent) {
    std::array<double, 4> f;
    for (int i = 0; i < 4; ++i) f[i] = phi(q.p[i]);

    // cyclic boundary walk: corners plus one root per sign-change edge
    struct BPoint {
        Vec2 p;
        bool is_root;
        double sign; // corner sign; unused for roots
    };
    std::vector<BPoint> cycle;
    int nroots = 0;
    for (int e = 0; e < 4; ++e) {
        const int i0 = kQuadEdges[e][0], i1 = kQuadEdges[e][1];
        cycle.push_back({q.p[i0], false, f[i0]});
        if (f[i0] * f[i1] < 0.0) {
            const auto roots = phi.edge_roots(q.p[i0], q.p[i1]);
            if (roots.size() != 1)
                throw MeshFailure("sign-change edge without a unique root");
            const Vec2 r = q.p[i0] + (q.p[i1] - q.p[i0]) * roots[0];
            cycle.push_back({r, true, 0.0});
            ++nroots;
        }
    }
    if (nroots != 2)
        throw MeshFailure("cut cell with " + std::to_string(nroots) +
                          " interface crossings (saddle cells unsupported)");

    const double cell_area = polygon_area({q.p[0], q.p[1], q.p[2], q.p[3]});

    // split the cycle at the roots into two same-sign chains
    const int n = static_cast<int>(cycle.size());
    int first_root = 0;
    while (!cycle[first_root].is_root) ++first_root;

    std::vector<std::vector<BPoint>> polys;
    std::vector<BPoint> cur;
    cur.push_back(cycle[first_root]);
    for (int k = 1; k <= n; ++k) {
        const BPoint& bp = cycle[(first_root + k) % n];
        cur.push_back(bp);
        if (bp.is_root) {
            polys.push_back(cur);
            cur.clear();
            cur.push_back(bp);
        }
    }

    for (const auto& poly : polys) {
        double sign = 0;
        std::vector<Vec2> pts;
        Vec2 g{0, 0};
        for (const BPoint& bp : poly) {
            pts.push_back(bp.p);
            g += bp.p;
            if (!bp.is_root) sign = bp.sign;
        }
        g = g / static_cast<double>(pts.size());
        const int gid = pool.add(g);
        const int mat = (sign < 0) ? 0 : 1;
        const int np = static_cast<int>(pts.size());
        for (int i = 0; i < np; ++i) {
            const Vec2 a = pts[i], b = pts[(i + 1) % np];
            const double area = 0.5 * cross(b - a, g - a);
            if (std::abs(area) < 1e-14 * cell_area)
                throw MeshFailure("degenerate triangle in cut cell (perturb the grid)");
            Cell c;
            c.kind = CellKind::Tri;
            c.v = {pool.add(a), pool.add(b), gid, -1};
            c.material = mat;
            c.parent = parent;
            m.cells.push_back(c);
        }
    }
}

} // namespace

Mesh build_levelset_mesh(Rect domain, int nx, int ny, const LevelSet& phi,
                         int refine_levels) {
    if (!domain.valid()) throw InvalidArgument("degenerate domain");
    if (nx < 1 || ny < 1) throw InvalidArgument("base grid needs at least one cell");
    if (refine_levels < 0 || refine_levels > 2)
        throw InvalidArgument("refine_levels must be 0, 1, or 2");

    const double hx = domain.width() / nx;
    const double hy = domain.height() / ny;
    auto gx = [&](int i) { return domain.x0 + i * hx; };
    auto gy = [&](int j) { return domain.y0 + j * hy; };

    // a vertex zero is fine when the isocontour conforms to the grid; cells
    // it actually cuts fail the two-crossings check below

    Mesh m;
    m.domain = domain;
    m.base_nx = nx;
    m.base_ny = ny;
    VertexPool pool(m.vertices, 1e-12 * std::max(domain.extent(), 1.0));

    const int nsub = 1 << refine_levels;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int parent = j * nx + i;
            const Vec2 p00{gx(i), gy(j)}, p10{gx(i + 1), gy(j)};
            const Vec2 p11{gx(i + 1), gy(j + 1)}, p01{gx(i), gy(j + 1)};
            const double f00 = phi(p00), f10 = phi(p10), f11 = phi(p11), f01 = phi(p01);
            const double fmin = std::min({f00, f10, f11, f01});
            const double fmax = std::max({f00, f10, f11, f01});
            const bool cut = fmin < 0.0 && fmax > 0.0;

            auto sub_pt = [&](int a, int b) {
                return Vec2{p00.x + (p10.x - p00.x) * (static_cast<double>(a) / nsub),
                            p00.y + (p01.y - p00.y) * (static_cast<double>(b) / nsub)};
            };

            const int splits = cut ? nsub : 1;
            for (int sj = 0; sj < splits; ++sj) {
                for (int si = 0; si < splits; ++si) {
                    SubQuad q;
                    if (cut) {
                        q.p = {sub_pt(si, sj), sub_pt(si + 1, sj), sub_pt(si + 1, sj + 1),
                               sub_pt(si, sj + 1)};
                    } else {
                        q.p = {p00, p10, p11, p01};
                    }
                    std::array<double, 4> f;
                    for (int k = 0; k < 4; ++k) f[k] = phi(q.p[k]);
                    const double smin = std::min({f[0], f[1], f[2], f[3]});
                    const double smax = std::max({f[0], f[1], f[2], f[3]});
                    if (smin < 0.0 && smax > 0.0) {
                        emit_cut_quad(m, pool, q, phi, parent);
                    } else {
                        Cell c;
                        c.kind = CellKind::Quad;
                        c.v = {pool.add(q.p[0]), pool.add(q.p[1]), pool.add(q.p[2]),
                               pool.add(q.p[3])};
                        const Vec2 g = (q.p[0] + q.p[2]) * 0.5;
                        c.material = (phi(g) < 0.0) ? 0 : 1;
                        c.parent = parent;
                        m.cells.push_back(c);
                    }
                }
            }
        }
    }
    finalize_mesh(m);
    return m;
}

Mesh filter_cells(const Mesh& mesh, int keep_material) {
    Mesh out;
    out.domain = mesh.domain;
    out.base_nx = mesh.base_nx;
    out.base_ny = mesh.base_ny;

    std::vector<int> cell_map(mesh.n_cells(), -1);
    std::vector<int> vert_map(mesh.n_vertices(), -1);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        if (mesh.cells[c].material != keep_material) continue;
        Cell nc = mesh.cells[c];
        for (int i = 0; i < nc.nverts(); ++i) {
            int& vm = vert_map[nc.v[i]];
            if (vm < 0) {
                vm = out.n_vertices();
                out.vertices.push_back(mesh.vertices[nc.v[i]]);
            }
            nc.v[i] = vm;
        }
        cell_map[c] = out.n_cells();
        out.cells.push_back(nc);
    }
    if (out.cells.empty()) throw MaterialMissing("no cells with requested material");

    for (const Facet& f : mesh.facets) {
        if (f.tag == kTagInterface) {
            // keep the side that survived as a traction-free boundary facet
            if (cell_map[f.cell] >= 0 && cell_map[f.cell2] < 0)
                out.facets.push_back({cell_map[f.cell], f.local_edge, -1, -1, kTagInterface});
            else if (cell_map[f.cell2] >= 0 && cell_map[f.cell] < 0)
                out.facets.push_back({cell_map[f.cell2], f.local_edge2, -1, -1, kTagInterface});
            else if (cell_map[f.cell] >= 0 && cell_map[f.cell2] >= 0)
                out.facets.push_back({cell_map[f.cell], f.local_edge, cell_map[f.cell2],
                                      f.local_edge2, kTagInterface});
        } else if (cell_map[f.cell] >= 0) {
            out.facets.push_back({cell_map[f.cell], f.local_edge, -1, -1, f.tag});
        }
    }
    out.hanging_vertex.assign(out.vertices.size(), false);
    for (const HangingEdge& he : mesh.hanging_edges) {
        if (cell_map[he.cell] < 0) continue;
        HangingEdge nh;
        nh.cell = cell_map[he.cell];
        nh.local_edge = he.local_edge;
        bool all = true;
        for (int v : he.vertices) {
            if (vert_map[v] < 0) { all = false; break; }
            nh.vertices.push_back(vert_map[v]);
        }
        if (all && !nh.vertices.empty()) {
            for (int v : nh.vertices) out.hanging_vertex[v] = true;
            out.hanging_edges.push_back(std::move(nh));
        }
    }
    return out;
}

} // namespace rkpm
