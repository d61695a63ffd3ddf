#include "rkpm/space.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rkpm/errors.hpp"

namespace rkpm {

namespace {

constexpr int kMaxOrder = 4;

/// 1D Lagrange basis on [-1, 1] with equispaced nodes, stored as monomial
/// coefficients; orders here are small enough for this to be well behaved.
struct Lagrange1D {
    int k;
    // coef[i][p]: coefficient of t^p in l_i
    std::vector<std::array<double, kMaxOrder + 1>> coef;

    explicit Lagrange1D(int order) : k(order) {
        std::vector<double> nodes(k + 1);
        for (int i = 0; i <= k; ++i) nodes[i] = -1.0 + 2.0 * i / k;
        coef.resize(k + 1);
        for (int i = 0; i <= k; ++i) {
            std::array<double, kMaxOrder + 1> c{};
            c[0] = 1.0;
            int deg = 0;
            for (int j = 0; j <= k; ++j) {
                if (j == i) continue;
                const double scale = 1.0 / (nodes[i] - nodes[j]);
                // multiply by (t - nodes[j]) * scale
                for (int p = deg + 1; p >= 1; --p)
                    c[p] = c[p - 1] * scale + c[p] * (-nodes[j] * scale);
                c[0] *= -nodes[j] * scale;
                ++deg;
            }
            coef[i] = c;
        }
    }

    void eval(int i, double t, double out[4]) const {
        // value and first three derivatives by differentiated Horner
        const auto& c = coef[i];
        out[0] = out[1] = out[2] = out[3] = 0.0;
        for (int p = k; p >= 0; --p) {
            out[3] = out[3] * t + 3.0 * out[2];
            out[2] = out[2] * t + 2.0 * out[1];
            out[1] = out[1] * t + out[0];
            out[0] = out[0] * t + c[p];
        }
    }
};

const Lagrange1D& lagrange1d(int k) {
    static Lagrange1D tables[] = {Lagrange1D(1), Lagrange1D(1), Lagrange1D(2),
                                  Lagrange1D(3), Lagrange1D(4)};
    if (k < 1 || k > kMaxOrder) throw Unsupported("Lagrange order out of range");
    return tables[k];
}

/// Silvester polynomial P_a(l) = prod_{m<a} (k l - m)/(a - m) as monomial
/// coefficients in l.
struct Silvester {
    int k;
    std::vector<std::array<double, kMaxOrder + 1>> coef; // per a = 0..k

    explicit Silvester(int order) : k(order) {
        coef.resize(k + 1);
        for (int a = 0; a <= k; ++a) {
            std::array<double, kMaxOrder + 1> c{};
            c[0] = 1.0;
            int deg = 0;
            for (int m = 0; m < a; ++m) {
                const double s = 1.0 / (a - m);
                for (int p = deg + 1; p >= 1; --p)
                    c[p] = c[p - 1] * (k * s) + c[p] * (-m * s);
                c[0] *= -m * s;
                ++deg;
            }
            coef[a] = c;
        }
    }

    void eval(int a, double l, double out[3]) const {
        const auto& c = coef[a];
        out[0] = out[1] = out[2] = 0.0;
        for (int p = k; p >= 0; --p) {
            out[2] = out[2] * l + 2.0 * out[1];
            out[1] = out[1] * l + out[0];
            out[0] = out[0] * l + c[p];
        }
    }
};

const Silvester& silvester(int k) {
    static Silvester tables[] = {Silvester(1), Silvester(1), Silvester(2),
                                 Silvester(3), Silvester(4)};
    if (k < 1 || k > kMaxOrder) throw Unsupported("Lagrange order out of range");
    return tables[k];
}

struct RefEval {
    std::vector<double> N;
    std::vector<Vec2> dN;      // reference derivatives
    std::vector<Sym2> ddN;     // reference second derivatives
    std::vector<std::array<double, 4>> dddN; // xxx, xxy, xyy, yyy (reference)
};

RefEval eval_reference(CellKind kind, int k, Vec2 ref, int order) {
    RefEval out;
    if (kind == CellKind::Quad) {
        const Lagrange1D& l1 = lagrange1d(k);
        const int n1 = k + 1;
        std::vector<std::array<double, 4>> fx(n1), fy(n1);
        for (int i = 0; i < n1; ++i) {
            l1.eval(i, ref.x, fx[i].data());
            l1.eval(i, ref.y, fy[i].data());
        }
        const int n = n1 * n1;
        out.N.resize(n);
        if (order >= 1) out.dN.resize(n);
        if (order >= 2) out.ddN.resize(n);
        if (order >= 3) out.dddN.resize(n);
        for (int b = 0; b < n1; ++b)
            for (int a = 0; a < n1; ++a) {
                const int idx = b * n1 + a;
                out.N[idx] = fx[a][0] * fy[b][0];
                if (order >= 1)
                    out.dN[idx] = {fx[a][1] * fy[b][0], fx[a][0] * fy[b][1]};
                if (order >= 2)
                    out.ddN[idx] = {fx[a][2] * fy[b][0], fx[a][1] * fy[b][1],
                                    fx[a][0] * fy[b][2]};
                if (order >= 3)
                    out.dddN[idx] = {fx[a][3] * fy[b][0], fx[a][2] * fy[b][1],
                                     fx[a][1] * fy[b][2], fx[a][0] * fy[b][3]};
            }
        return out;
    }

    // triangle: barycentric l0 = 1 - r - s, l1 = r, l2 = s on the lattice
    const Silvester& sv = silvester(k);
    const double l0 = 1.0 - ref.x - ref.y, l1 = ref.x, l2 = ref.y;
    std::vector<std::array<double, 3>> p0(k + 1), p1(k + 1), p2(k + 1);
    for (int a = 0; a <= k; ++a) {
        sv.eval(a, l0, p0[a].data());
        sv.eval(a, l1, p1[a].data());
        sv.eval(a, l2, p2[a].data());
    }
    const int n = (k + 1) * (k + 2) / 2;
    out.N.resize(n);
    if (order >= 1) out.dN.resize(n);
    if (order >= 2) out.ddN.resize(n);
    if (order >= 3) out.dddN.assign(n, {0, 0, 0, 0});
    int idx = 0;
    for (int j = 0; j <= k; ++j)
        for (int i = 0; i <= k - j; ++i, ++idx) {
            const int l = k - i - j;
            const auto &A = p1[i], &B = p2[j], &C = p0[l];
            out.N[idx] = A[0] * B[0] * C[0];
            if (order >= 1) {
                // d l0/dr = -1, d l1/dr = 1; d l0/ds = -1, d l2/ds = 1
                out.dN[idx] = {A[1] * B[0] * C[0] - A[0] * B[0] * C[1],
                               A[0] * B[1] * C[0] - A[0] * B[0] * C[1]};
            }
            if (order >= 2) {
                const double rr = A[2] * B[0] * C[0] - 2.0 * A[1] * B[0] * C[1] +
                                  A[0] * B[0] * C[2];
                const double ss = A[0] * B[2] * C[0] - 2.0 * A[0] * B[1] * C[1] +
                                  A[0] * B[0] * C[2];
                const double rs = A[1] * B[1] * C[0] - A[1] * B[0] * C[1] -
                                  A[0] * B[1] * C[1] + A[0] * B[0] * C[2];
                out.ddN[idx] = {rr, rs, ss};
            }
            if (order >= 3 && k >= 3) {
                // not needed by the shipped forms on triangles
                throw Unsupported("third derivatives on triangles not shipped");
            }
        }
    return out;
}

struct DofPool {
    double tol, cell;
    std::unordered_map<std::uint64_t, std::vector<int>> map;
    std::vector<Vec2>& coords;

    DofPool(std::vector<Vec2>& c, double tolerance)
        : tol(tolerance), cell(4.0 * tolerance), coords(c) {}

    int add(Vec2 p) {
        const long long ix = llround(p.x / cell);
        const long long iy = llround(p.y / cell);
        for (long long dy = -1; dy <= 1; ++dy)
            for (long long dx = -1; dx <= 1; ++dx) {
                auto it = map.find(key(ix + dx, iy + dy));
                if (it == map.end()) continue;
                for (int id : it->second)
                    if (dist(coords[id], p) <= tol) return id;
            }
        const int id = static_cast<int>(coords.size());
        coords.push_back(p);
        map[key(ix, iy)].push_back(id);
        return id;
    }

    static std::uint64_t key(long long ix, long long iy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy));
    }
};

} // namespace

std::vector<Vec2> reference_dof_coords(CellKind kind, int k) {
    std::vector<Vec2> out;
    if (kind == CellKind::Quad) {
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a)
                out.push_back({-1.0 + 2.0 * a / k, -1.0 + 2.0 * b / k});
    } else {
        for (int j = 0; j <= k; ++j)
            for (int i = 0; i <= k - j; ++i)
                out.push_back({static_cast<double>(i) / k, static_cast<double>(j) / k});
    }
    return out;
}

Vec2 map_point(const Mesh& mesh, int cell, Vec2 ref) {
    const Cell& c = mesh.cells[cell];
    if (c.kind == CellKind::Tri) {
        const Vec2 v0 = mesh.vertices[c.v[0]], v1 = mesh.vertices[c.v[1]],
                   v2 = mesh.vertices[c.v[2]];
        return v0 + (v1 - v0) * ref.x + (v2 - v0) * ref.y;
    }
    const Vec2 p0 = mesh.vertices[c.v[0]], p1 = mesh.vertices[c.v[1]],
               p2 = mesh.vertices[c.v[2]], p3 = mesh.vertices[c.v[3]];
    const double xm = 1.0 - ref.x, xp = 1.0 + ref.x;
    const double ym = 1.0 - ref.y, yp = 1.0 + ref.y;
    return (p0 * (xm * ym) + p1 * (xp * ym) + p2 * (xp * yp) + p3 * (xm * yp)) * 0.25;
}

Mat2 map_jacobian(const Mesh& mesh, int cell, Vec2 ref) {
    const Cell& c = mesh.cells[cell];
    if (c.kind == CellKind::Tri) {
        const Vec2 v0 = mesh.vertices[c.v[0]], v1 = mesh.vertices[c.v[1]],
                   v2 = mesh.vertices[c.v[2]];
        return {v1.x - v0.x, v2.x - v0.x, v1.y - v0.y, v2.y - v0.y};
    }
    const Vec2 p0 = mesh.vertices[c.v[0]], p1 = mesh.vertices[c.v[1]],
               p2 = mesh.vertices[c.v[2]], p3 = mesh.vertices[c.v[3]];
    const double ym = 1.0 - ref.y, yp = 1.0 + ref.y;
    const double xm = 1.0 - ref.x, xp = 1.0 + ref.x;
    Vec2 dxi = (p1 - p0) * ym + (p2 - p3) * yp;
    Vec2 deta = (p3 - p0) * xm + (p2 - p1) * xp;
    return {0.25 * dxi.x, 0.25 * deta.x, 0.25 * dxi.y, 0.25 * deta.y};
}

Vec2 inverse_map(const Mesh& mesh, int cell, Vec2 x) {
    Vec2 ref = (mesh.cells[cell].kind == CellKind::Tri) ? Vec2{1.0 / 3, 1.0 / 3}
                                                        : Vec2{0, 0};
    for (int it = 0; it < 30; ++it) {
        const Vec2 r = map_point(mesh, cell, ref) - x;
        if (r.norm() < 1e-14 * std::max(1.0, mesh.domain.extent())) return ref;
        const Mat2 J = map_jacobian(mesh, cell, ref);
        if (std::abs(J.det()) < 1e-30) throw SingularJacobian("inverse_map");
        const Vec2 d = J.inverse().apply(r);
        ref = ref - d;
    }
    return ref;
}

SpaceEval eval_space(const LagrangeSpace& space, int cell, Vec2 ref, int order) {
    const Cell& c = space.mesh.cells[cell];
    const RefEval re = eval_reference(c.kind, space.order, ref, order);

    SpaceEval out;
    out.values = re.N;
    if (order < 1) return out;

    const Mat2 J = map_jacobian(space.mesh, cell, ref);
    const double det = J.det();
    if (det <= 0.0 || !std::isfinite(det))
        throw SingularJacobian("cell " + std::to_string(cell));
    const Mat2 Jinv = J.inverse();
    // rows of Jinv transpose: d ref / d x
    const double rx = Jinv.a00, ry = Jinv.a01; // d xi / dx, d xi / dy
    const double sx = Jinv.a10, sy = Jinv.a11; // d eta / dx, d eta / dy

    const int n = static_cast<int>(re.N.size());
    out.grads.resize(n);
    for (int i = 0; i < n; ++i)
        out.grads[i] = {re.dN[i].x * rx + re.dN[i].y * sx,
                        re.dN[i].x * ry + re.dN[i].y * sy};
    if (order < 2) return out;

    // geometric curvature: for a bilinear quad, d2x/(dxi deta) is constant
    Vec2 hgeo{0, 0};
    if (c.kind == CellKind::Quad) {
        const Vec2 p0 = space.mesh.vertices[c.v[0]], p1 = space.mesh.vertices[c.v[1]],
                   p2 = space.mesh.vertices[c.v[2]], p3 = space.mesh.vertices[c.v[3]];
        hgeo = (p0 - p1 + p2 - p3) * 0.25;
    }

    out.hessians.resize(n);
    for (int i = 0; i < n; ++i) {
        // subtract dN/dx . d2x/dref2 (only mixed ref term nonzero)
        const Vec2 g = out.grads[i];
        const double corr = g.x * hgeo.x + g.y * hgeo.y;
        const double hrr = re.ddN[i].xx;
        const double hrs = re.ddN[i].xy - corr;
        const double hss = re.ddN[i].yy;
        // J^-T Href J^-1
        out.hessians[i].xx = rx * (hrr * rx + hrs * sx) + sx * (hrs * rx + hss * sx);
        out.hessians[i].xy = rx * (hrr * ry + hrs * sy) + sx * (hrs * ry + hss * sy);
        out.hessians[i].yy = ry * (hrr * ry + hrs * sy) + sy * (hrs * ry + hss * sy);
    }
    return out;
}

std::vector<std::array<double, 4>> eval_space_third(const LagrangeSpace& space,
                                                    int cell, Vec2 ref) {
    const Cell& c = space.mesh.cells[cell];
    if (c.kind == CellKind::Quad) {
        const Vec2 p0 = space.mesh.vertices[c.v[0]], p1 = space.mesh.vertices[c.v[1]],
                   p2 = space.mesh.vertices[c.v[2]], p3 = space.mesh.vertices[c.v[3]];
        if ((p0 - p1 + p2 - p3).norm() > 1e-12 * space.mesh.domain.extent())
            throw Unsupported("third derivatives require an affine cell map");
    }
    const RefEval re = eval_reference(c.kind, space.order, ref, 3);
    const Mat2 Jinv = map_jacobian(space.mesh, cell, ref).inverse();
    const double rx = Jinv.a00, ry = Jinv.a01;
    const double sx = Jinv.a10, sy = Jinv.a11;

    const int n = static_cast<int>(re.N.size());
    std::vector<std::array<double, 4>> out(n);
    for (int i = 0; i < n; ++i) {
        const auto& t = re.dddN[i]; // rrr, rrs, rss, sss
        auto third = [&](double a1, double a2, double a3, double b1, double b2,
                         double b3) {
            // (a_i, b_i) = (d xi/dx_{axis_i}, d eta/dx_{axis_i})
            return t[0] * a1 * a2 * a3 +
                   t[1] * (a1 * a2 * b3 + a1 * b2 * a3 + b1 * a2 * a3) +
                   t[2] * (a1 * b2 * b3 + b1 * a2 * b3 + b1 * b2 * a3) +
                   t[3] * b1 * b2 * b3;
        };
        out[i] = {third(rx, rx, rx, sx, sx, sx), third(rx, rx, ry, sx, sx, sy),
                  third(rx, ry, ry, sx, sy, sy), third(ry, ry, ry, sy, sy, sy)};
    }
    return out;
}

FacetPoint facet_point(const Mesh& mesh, int cell, int local_edge, double t) {
    const Cell& c = mesh.cells[cell];
    Vec2 ra, rb;
    if (c.kind == CellKind::Quad) {
        static const Vec2 corners[4] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
        ra = corners[local_edge];
        rb = corners[(local_edge + 1) % 4];
    } else {
        static const Vec2 corners[3] = {{0, 0}, {1, 0}, {0, 1}};
        ra = corners[local_edge];
        rb = corners[(local_edge + 1) % 3];
    }
    FacetPoint fp;
    fp.ref = ra + (rb - ra) * t;
    const auto [va, vb] = mesh.edge_vertices(cell, local_edge);
    const Vec2 a = mesh.vertices[va], b = mesh.vertices[vb];
    fp.x = a + (b - a) * t;
    const Vec2 tang = b - a;
    fp.measure = tang.norm();
    fp.normal = {tang.y / fp.measure, -tang.x / fp.measure};
    return fp;
}

LagrangeSpace make_space(Mesh mesh, int k, Continuity continuity) {
    if (k < 1 || k > kMaxOrder) throw InvalidArgument("space order must be 1..4");

    LagrangeSpace sp;
    sp.order = k;
    sp.continuity = continuity;
    sp.mesh = std::move(mesh);

    const int ncells = sp.mesh.n_cells();
    sp.cell_dofs.resize(ncells);

    if (continuity == Continuity::DG) {
        for (int c = 0; c < ncells; ++c) {
            const auto refc = reference_dof_coords(sp.mesh.cells[c].kind, k);
            for (const Vec2& r : refc) {
                sp.cell_dofs[c].push_back(sp.ndofs++);
                sp.dof_coords.push_back(map_point(sp.mesh, c, r));
            }
        }
    } else {
        DofPool pool(sp.dof_coords, 1e-9 * std::max(sp.mesh.domain.extent(), 1.0));
        for (int c = 0; c < ncells; ++c) {
            const auto refc = reference_dof_coords(sp.mesh.cells[c].kind, k);
            for (const Vec2& r : refc)
                sp.cell_dofs[c].push_back(pool.add(map_point(sp.mesh, c, r)));
        }
        sp.ndofs = static_cast<int>(sp.dof_coords.size());
    }

    sp.mesh_size = std::sqrt(sp.mesh.total_area() / std::max(1, ncells));
    return sp;
}

LagrangeSpace build_uniform_quad_space(Rect domain, double h_fg, int k,
                                       Continuity continuity) {
    return make_space(build_uniform_quad_mesh(domain, h_fg), k, continuity);
}

CellLocator::CellLocator(const Mesh& mesh) : mesh_(mesh) {
    box_ = mesh.domain;
    nx_ = ny_ = 64;
    bins_.assign(nx_ * ny_, {});
    auto ix_of = [&](double x) {
        return std::clamp(static_cast<int>((x - box_.x0) / box_.width() * nx_), 0, nx_ - 1);
    };
    auto iy_of = [&](double y) {
        return std::clamp(static_cast<int>((y - box_.y0) / box_.height() * ny_), 0, ny_ - 1);
    };
    for (int c = 0; c < mesh.n_cells(); ++c) {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (int i = 0; i < mesh.cells[c].nverts(); ++i) {
            const Vec2 p = mesh.vertices[mesh.cells[c].v[i]];
            x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
        }
        for (int iy = iy_of(y0); iy <= iy_of(y1); ++iy)
            for (int ix = ix_of(x0); ix <= ix_of(x1); ++ix)
                bins_[iy * nx_ + ix].push_back(c);
    }
}

int CellLocator::locate(Vec2 x, Vec2* ref_out, int skip_cell) const {
    const int ix = std::clamp(static_cast<int>((x.x - box_.x0) / box_.width() * nx_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((x.y - box_.y0) / box_.height() * ny_), 0, ny_ - 1);
    const double tol = 1e-9;
    for (int c : bins_[iy * nx_ + ix]) {
        if (c == skip_cell) continue;
        Vec2 ref;
        try {
            ref = inverse_map(mesh_, c, x);
        } catch (const SingularJacobian&) {
            continue;
        }
        bool inside;
        if (mesh_.cells[c].kind == CellKind::Quad)
            inside = ref.x >= -1 - tol && ref.x <= 1 + tol && ref.y >= -1 - tol &&
                     ref.y <= 1 + tol;
        else
            inside = ref.x >= -tol && ref.y >= -tol && ref.x + ref.y <= 1 + tol;
        if (inside) {
            if (ref_out) *ref_out = ref;
            return c;
        }
    }
    return -1;
}

MidgroundSpace build_midground_space(const Mesh& foreground, int k) {
    if (foreground.base_nx <= 0 || foreground.base_ny <= 0)
        throw InvalidArgument("foreground mesh has no base-grid record");

    std::vector<double> xs(foreground.base_nx + 1), ys(foreground.base_ny + 1);
    const double hx = foreground.domain.width() / foreground.base_nx;
    const double hy = foreground.domain.height() / foreground.base_ny;
    for (int i = 0; i <= foreground.base_nx; ++i) xs[i] = foreground.domain.x0 + i * hx;
    for (int j = 0; j <= foreground.base_ny; ++j) ys[j] = foreground.domain.y0 + j * hy;

    MidgroundSpace mg;
    mg.space = make_space(build_tensor_quad_mesh(xs, ys), k, Continuity::DG);

    const int nmid = mg.space.mesh.n_cells();
    mg.cover.assign(nmid, {});
    for (int c = 0; c < foreground.n_cells(); ++c) {
        const int p = foreground.cells[c].parent;
        if (p < 0 || p >= nmid) throw CoverMismatch("foreground parent out of range");
        mg.cover[p].push_back(c);
    }

    // partition check: covered areas may only fall short when the foreground
    // mesh was filtered; they must never exceed the midground cell
    const double full_area = foreground.domain.area();
    const bool filtered = std::abs(foreground.total_area() - full_area) >
                          1e-10 * full_area;
    for (int e = 0; e < nmid; ++e) {
        double sum = 0;
        for (int c : mg.cover[e]) sum += foreground.cell_area(c);
        const double cell = mg.space.mesh.cell_area(e);
        if (sum > cell * (1.0 + 1e-10))
            throw CoverMismatch("cover exceeds midground cell area");
        if (!filtered && std::abs(sum - cell) > 1e-10 * cell)
            throw CoverMismatch("cover area mismatch on midground cell " +
                                std::to_string(e));
    }
    return mg;
}

} // namespace rkpm
