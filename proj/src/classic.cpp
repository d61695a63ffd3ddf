#include <cmath>

#include "rkpm/assembly.hpp"
#include "rkpm/errors.hpp"
#include "rkpm/parallel.hpp"
#include "rkpm/quadrature.hpp"

namespace rkpm {

namespace {

struct ClassicGrid {
    std::vector<double> xs, ys;
    int nx() const { return static_cast<int>(xs.size()) - 1; }
    int ny() const { return static_cast<int>(ys.size()) - 1; }
};

std::vector<double> segment_lines(double a, double b, double target_h) {
    const int n = std::max(1, static_cast<int>(std::lround((b - a) / target_h)));
    std::vector<double> out(n + 1);
    for (int i = 0; i <= n; ++i) out[i] = a + (b - a) * i / n;
    return out;
}

/// Structured quadrature-cell grid; for the three-material form the x lines
/// snap to the analytic interfaces so no cell straddles a material change.
ClassicGrid make_grid(const ProblemForm& form, Rect domain, double h_cell) {
    ClassicGrid g;
    if (form.kind == FormKind::MultimaterialHeat) {
        auto s0 = segment_lines(domain.x0, kThreeMatX0, h_cell);
        auto s1 = segment_lines(kThreeMatX0, kThreeMatX1, h_cell);
        auto s2 = segment_lines(kThreeMatX1, domain.x1, h_cell);
        g.xs = s0;
        g.xs.insert(g.xs.end(), s1.begin() + 1, s1.end());
        g.xs.insert(g.xs.end(), s2.begin() + 1, s2.end());
    } else {
        g.xs = segment_lines(domain.x0, domain.x1, h_cell);
    }
    g.ys = segment_lines(domain.y0, domain.y1, h_cell);
    return g;
}

int material_at(const ProblemForm& form, Vec2 x) {
    return form.kind == FormKind::MultimaterialHeat ? three_material_of(x) : 0;
}

int row_of(const EnrichmentMap* emap, int node, int material) {
    if (!emap) return node;
    return emap->dof_of(node, material);
}

double kappa_at(const ProblemForm& form, int material) {
    return form.kind == FormKind::MultimaterialHeat ? form.kappa_of(material) : 1.0;
}

} // namespace

AssembledSystem assemble_classic(const ProblemForm& form, const RKPMBasis& basis,
                                 Rect domain, const ClassicQuadOpts& opts,
                                 const EnrichmentMap* emap) {
    if (form.kind != FormKind::Poisson && form.kind != FormKind::MultimaterialHeat)
        throw InvalidArgument("classic baseline ships Poisson and heat only");
    const double hpen = form.nitsche_h > 0 ? form.nitsche_h : basis.nodes.avg_spacing;

    const double h_cell = basis.nodes.avg_spacing / opts.cells_per_spacing;
    const ClassicGrid grid = make_grid(form, domain, h_cell);
    const int q = opts.points_per_cell;
    std::vector<double> gx, gw;
    gauss_jacobi(q, 0.0, 0.0, gx, gw);

    const int nexp = emap ? emap->expanded_dofs() : basis.nodes.size();
    const int ncells = grid.nx() * grid.ny();
    std::vector<std::vector<Eigen::Triplet<double>>> cell_trips(ncells);
    std::vector<std::vector<std::pair<int, double>>> cell_loads(ncells);

#pragma omp parallel for schedule(dynamic, 4)
    for (int c = 0; c < ncells; ++c) {
        const int ci = c % grid.nx(), cj = c / grid.nx();
        const double x0 = grid.xs[ci], x1 = grid.xs[ci + 1];
        const double y0 = grid.ys[cj], y1 = grid.ys[cj + 1];
        const double jac = 0.25 * (x1 - x0) * (y1 - y0);
        auto& trips = cell_trips[c];
        auto& load = cell_loads[c];

        for (int b = 0; b < q; ++b)
            for (int a = 0; a < q; ++a) {
                const Vec2 x{0.5 * (x0 + x1) + 0.5 * (x1 - x0) * gx[a],
                             0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gx[b]};
                const double w = gw[a] * gw[b] * jac;
                const int m = material_at(form, x);
                const double kap = kappa_at(form, m);
                const double f = form.source ? form.source(x) : 0.0;

                const ShapeEval ev = shape_functions(basis, x, 1);
                const int ng = static_cast<int>(ev.ids.size());
                std::vector<int> rows(ng);
                for (int i = 0; i < ng; ++i) rows[i] = row_of(emap, ev.ids[i], m);

                for (int i = 0; i < ng; ++i) {
                    if (rows[i] < 0) continue;
                    load.emplace_back(rows[i], w * f * ev.values[i]);
                    for (int j = 0; j < ng; ++j) {
                        if (rows[j] < 0) continue;
                        trips.emplace_back(rows[i], rows[j],
                                           w * kap * ev.grads[i].dot(ev.grads[j]));
                    }
                }
            }
    }

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd F = Eigen::VectorXd::Zero(nexp);
    {
        std::size_t total = 0;
        for (const auto& t : cell_trips) total += t.size();
        trips.reserve(total + total / 8);
        for (int c = 0; c < ncells; ++c) {
            trips.insert(trips.end(), cell_trips[c].begin(), cell_trips[c].end());
            for (const auto& [r, v] : cell_loads[c]) F(r) += v;
        }
    }

    // Nitsche Dirichlet terms on all four sides
    auto boundary_edge = [&](Vec2 va, Vec2 vb, Vec2 n) {
        const double len = dist(va, vb);
        for (int a = 0; a < q; ++a) {
            const double t = 0.5 * (gx[a] + 1.0);
            const Vec2 x = va + (vb - va) * t;
            const double w = 0.5 * gw[a] * len;
            const int m = material_at(form, x);
            const double kap = kappa_at(form, m);
            const double pen = (form.kind == FormKind::Poisson)
                                   ? form.c_pen / hpen
                                   : form.beta_dirichlet * kap / hpen;
            const double g = form.dirichlet ? form.dirichlet(x) : 0.0;

            const ShapeEval ev = shape_functions(basis, x, 1);
            const int ng = static_cast<int>(ev.ids.size());
            for (int i = 0; i < ng; ++i) {
                const int ri = row_of(emap, ev.ids[i], m);
                if (ri < 0) continue;
                const double dni = ev.grads[i].dot(n);
                F(ri) += w * (-kap * dni * g + pen * g * ev.values[i]);
                for (int j = 0; j < ng; ++j) {
                    const int rj = row_of(emap, ev.ids[j], m);
                    if (rj < 0) continue;
                    trips.emplace_back(ri, rj,
                                       w * (-kap * ev.grads[j].dot(n) * ev.values[i] -
                                            kap * dni * ev.values[j] +
                                            pen * ev.values[i] * ev.values[j]));
                }
            }
        }
    };
    for (int ci = 0; ci < grid.nx(); ++ci) {
        boundary_edge({grid.xs[ci], domain.y0}, {grid.xs[ci + 1], domain.y0}, {0, -1});
        boundary_edge({grid.xs[ci], domain.y1}, {grid.xs[ci + 1], domain.y1}, {0, 1});
    }
    for (int cj = 0; cj < grid.ny(); ++cj) {
        boundary_edge({domain.x0, grid.ys[cj]}, {domain.x0, grid.ys[cj + 1]}, {-1, 0});
        boundary_edge({domain.x1, grid.ys[cj]}, {domain.x1, grid.ys[cj + 1]}, {1, 0});
    }

    // interface residuals along the analytic material interfaces
    if (form.kind == FormKind::MultimaterialHeat && emap) {
        for (double xi : {kThreeMatX0, kThreeMatX1}) {
            const Vec2 n{1, 0}; // lower material -> higher
            const int mi = three_material_of({xi - 1e-9, 0});
            const int mj = three_material_of({xi + 1e-9, 0});
            const double ki = form.kappa_of(mi), kj = form.kappa_of(mj);
            const double gamma = form.gamma_interface > 0
                                     ? form.gamma_interface
                                     : form.beta_dirichlet * std::max(ki, kj) / hpen;
            for (int cj = 0; cj < grid.ny(); ++cj) {
                const double y0 = grid.ys[cj], y1 = grid.ys[cj + 1];
                for (int a = 0; a < q; ++a) {
                    const Vec2 x{xi, 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gx[a]};
                    const double w = 0.5 * gw[a] * (y1 - y0);
                    const ShapeEval ev = shape_functions(basis, x, 1);
                    const int ng = static_cast<int>(ev.ids.size());
                    // per covering node: the two branch rows
                    for (int i = 0; i < ng; ++i)
                        for (int s = 0; s < 2; ++s) {
                            const int ri =
                                row_of(emap, ev.ids[i], s == 0 ? mi : mj);
                            if (ri < 0) continue;
                            const double sg_i = (s == 0) ? 1.0 : -1.0;
                            const double jt = sg_i * ev.values[i];
                            const double at = 0.5 * (s == 0 ? ki : kj) *
                                              ev.grads[i].dot(n);
                            for (int j = 0; j < ng; ++j)
                                for (int sp = 0; sp < 2; ++sp) {
                                    const int rj = row_of(emap, ev.ids[j],
                                                          sp == 0 ? mi : mj);
                                    if (rj < 0) continue;
                                    const double sg_j = (sp == 0) ? 1.0 : -1.0;
                                    const double ju = sg_j * ev.values[j];
                                    const double au = 0.5 * (sp == 0 ? ki : kj) *
                                                      ev.grads[j].dot(n);
                                    trips.emplace_back(
                                        ri, rj,
                                        w * (-ju * at - jt * au + gamma * jt * ju));
                                }
                        }
                }
            }
        }
    }

    // compress to rows that actually received entries
    std::vector<char> touched(nexp, 0);
    for (const auto& t : trips) touched[t.row()] = 1;
    std::vector<int> active;
    std::vector<int> to_active(nexp, -1);
    for (int i = 0; i < nexp; ++i)
        if (touched[i]) {
            to_active[i] = static_cast<int>(active.size());
            active.push_back(i);
        }

    AssembledSystem sys;
    sys.components = 1;
    sys.block_size = static_cast<int>(active.size());
    sys.reduced_map = active;
    sys.F = Eigen::VectorXd::Zero(sys.block_size);
    for (int i = 0; i < nexp; ++i)
        if (to_active[i] >= 0) sys.F(to_active[i]) = F(i);
    std::vector<Eigen::Triplet<double>> ctrips;
    ctrips.reserve(trips.size());
    for (const auto& t : trips)
        ctrips.emplace_back(to_active[t.row()], to_active[t.col()], t.value());
    sys.K.resize(sys.block_size, sys.block_size);
    sys.K.setFromTriplets(ctrips.begin(), ctrips.end());
    sys.K.makeCompressed();
    return sys;
}

ClassicNorms classic_error_norms(const ProblemForm& form, const RKPMBasis& basis,
                                 Rect domain, const ClassicQuadOpts& opts,
                                 const EnrichmentMap* emap,
                                 const Eigen::VectorXd& d,
                                 const std::vector<int>& reduced_map) {
    const double h_cell = basis.nodes.avg_spacing / opts.cells_per_spacing;
    const ClassicGrid grid = make_grid(form, domain, h_cell);
    const int q = opts.points_per_cell;
    std::vector<double> gx, gw;
    gauss_jacobi(q, 0.0, 0.0, gx, gw);

    const int nexp = emap ? emap->expanded_dofs() : basis.nodes.size();
    std::vector<double> dexp(nexp, 0.0);
    for (std::size_t i = 0; i < reduced_map.size(); ++i) dexp[reduced_map[i]] = d(i);

    const int ncells = grid.nx() * grid.ny();
    std::vector<std::array<double, 2>> parts(ncells, {0, 0});

#pragma omp parallel for schedule(dynamic, 4)
    for (int c = 0; c < ncells; ++c) {
        const int ci = c % grid.nx(), cj = c / grid.nx();
        const double x0 = grid.xs[ci], x1 = grid.xs[ci + 1];
        const double y0 = grid.ys[cj], y1 = grid.ys[cj + 1];
        const double jac = 0.25 * (x1 - x0) * (y1 - y0);
        double l2 = 0, h1 = 0;
        for (int b = 0; b < q; ++b)
            for (int a = 0; a < q; ++a) {
                const Vec2 x{0.5 * (x0 + x1) + 0.5 * (x1 - x0) * gx[a],
                             0.5 * (y0 + y1) + 0.5 * (y1 - y0) * gx[b]};
                const double w = gw[a] * gw[b] * jac;
                const int m = material_at(form, x);
                const ShapeEval ev = shape_functions(basis, x, 1);
                double uh = 0;
                Vec2 gh{0, 0};
                for (std::size_t i = 0; i < ev.ids.size(); ++i) {
                    const int r = row_of(emap, ev.ids[i], m);
                    if (r < 0) continue;
                    uh += dexp[r] * ev.values[i];
                    gh += ev.grads[i] * dexp[r];
                }
                const double du = uh - form.exact.value(x, m);
                const Vec2 dg = gh - form.exact.grad(x, m);
                l2 += w * du * du;
                h1 += w * dg.norm2();
            }
        parts[c] = {l2, h1};
    }

    ClassicNorms out;
    double l2 = 0, h1 = 0;
    for (const auto& p : parts) {
        l2 += p[0];
        h1 += p[1];
    }
    out.l2 = std::sqrt(l2);
    out.h1 = std::sqrt(h1);
    return out;
}

} // namespace rkpm
