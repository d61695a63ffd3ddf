#include "rkpm/assembly.hpp"

#include "rkpm/element_blocks.hpp"

#include <cmath>

#include "rkpm/errors.hpp"
#include "rkpm/parallel.hpp"
#include "rkpm/quadrature.hpp"

namespace rkpm {

namespace {

double penalty_h(const ProblemForm& form) {
    if (form.nitsche_h <= 0)
        throw InvalidArgument("form.nitsche_h not set by the driver");
    return form.nitsche_h;
}

int volume_eval_order(const ProblemForm& form) {
    return form.kind == FormKind::Biharmonic ? 2 : 1;
}

} // namespace

LocalBlock volume_block(const ProblemForm& form, const LagrangeSpace& space,
                        int cell) {
    const Cell& c = space.mesh.cells[cell];
    const int nloc = space.dofs_per_cell(cell);
    const int ncomp = form.components;
    LocalBlock blk;
    blk.K = Eigen::MatrixXd::Zero(ncomp * nloc, ncomp * nloc);
    blk.F = Eigen::VectorXd::Zero(ncomp * nloc);

    const QuadratureRule rule = quadrature(c.kind, 2 * space.order + 2);
    const int evo = volume_eval_order(form);

    for (int q = 0; q < rule.size(); ++q) {
        const Vec2 ref = rule.points[q];
        const Mat2 J = map_jacobian(space.mesh, cell, ref);
        const double w = rule.weights[q] * J.det();
        const SpaceEval ev = eval_space(space, cell, ref, evo);
        const Vec2 x = map_point(space.mesh, cell, ref);

        switch (form.kind) {
            case FormKind::Poisson: {
                const double f = form.source ? form.source(x) : 0.0;
                for (int i = 0; i < nloc; ++i) {
                    blk.F(i) += w * f * ev.values[i];
                    for (int j = 0; j < nloc; ++j)
                        blk.K(i, j) += w * ev.grads[i].dot(ev.grads[j]);
                }
                break;
            }
            case FormKind::MultimaterialHeat: {
                const double kap = form.kappa_of(c.material);
                const double f = form.source ? form.source(x) : 0.0;
                for (int i = 0; i < nloc; ++i) {
                    blk.F(i) += w * f * ev.values[i];
                    for (int j = 0; j < nloc; ++j)
                        blk.K(i, j) += w * kap * ev.grads[i].dot(ev.grads[j]);
                }
                break;
            }
            case FormKind::Biharmonic: {
                const double f = form.source ? form.source(x) : 0.0;
                for (int i = 0; i < nloc; ++i) {
                    const double li = ev.hessians[i].trace();
                    blk.F(i) += w * f * ev.values[i];
                    for (int j = 0; j < nloc; ++j)
                        blk.K(i, j) += w * li * ev.hessians[j].trace();
                }
                break;
            }
            case FormKind::Elasticity:
            case FormKind::EigenstrainElasticity: {
                const double mu = form.mu_of(c.material);
                const double lam = form.lambda_of(c.material);
                for (int a = 0; a < 2; ++a)
                    for (int i = 0; i < nloc; ++i) {
                        const int I = a * nloc + i;
                        const double gia[2] = {ev.grads[i].x, ev.grads[i].y};
                        for (int b = 0; b < 2; ++b)
                            for (int j = 0; j < nloc; ++j) {
                                const double gjb[2] = {ev.grads[j].x, ev.grads[j].y};
                                double v = mu * gia[b] * gjb[a] +
                                           lam * gjb[b] * gia[a];
                                if (a == b) v += mu * ev.grads[i].dot(ev.grads[j]);
                                blk.K(I, b * nloc + j) += w * v;
                            }
                    }
                if (form.kind == FormKind::EigenstrainElasticity &&
                    c.material == form.inclusion_material) {
                    const double s = 2.0 * form.eigenstrain * (mu + lam);
                    for (int a = 0; a < 2; ++a)
                        for (int i = 0; i < nloc; ++i)
                            blk.F(a * nloc + i) +=
                                w * s * (a == 0 ? ev.grads[i].x : ev.grads[i].y);
                }
                break;
            }
        }
        (void)ncomp;
    }
    return blk;
}

namespace {

/// n . sigma(N_j e_b) . n for the elasticity Nitsche terms.
inline double normal_flux(double mu, double lam, Vec2 g, Vec2 n, int b) {
    const double gn = g.dot(n);
    const double nb = (b == 0) ? n.x : n.y;
    const double gb = (b == 0) ? g.x : g.y;
    return 2.0 * mu * gn * nb + lam * gb;
}

/// component c of sigma(N_i e_a) . n.
inline double traction_comp(double mu, double lam, Vec2 g, Vec2 n, int a, int c) {
    const double gn = g.dot(n);
    const double na = (a == 0) ? n.x : n.y;
    const double nc = (c == 0) ? n.x : n.y;
    const double ga = (a == 0) ? g.x : g.y;
    const double gc = (c == 0) ? g.x : g.y;
    return mu * (gc * na + gn * ((a == c) ? 1.0 : 0.0)) + lam * ga * nc;
}

} // namespace

LocalBlock boundary_block(const ProblemForm& form, const LagrangeSpace& space,
                          const Facet& facet) {
    const int cell = facet.cell;
    const Cell& c = space.mesh.cells[cell];
    const int nloc = space.dofs_per_cell(cell);
    const int ncomp = form.components;
    LocalBlock blk;
    blk.K = Eigen::MatrixXd::Zero(ncomp * nloc, ncomp * nloc);
    blk.F = Eigen::VectorXd::Zero(ncomp * nloc);

    const BC bc = (facet.tag == kTagInterface) ? BC::None : form.side_bc[facet.tag];
    if (bc == BC::None) return blk;

    const double h = penalty_h(form);
    const QuadratureRule rule = facet_quadrature(2 * space.order + 2);

    for (int q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q].x;
        const FacetPoint fp = facet_point(space.mesh, cell, facet.local_edge, t);
        const double w = rule.weights[q] * fp.measure;
        const Vec2 n = fp.normal;

        switch (form.kind) {
            case FormKind::Poisson: {
                if (bc != BC::Dirichlet) throw UnknownTag("poisson facet BC");
                const SpaceEval ev = eval_space(space, cell, fp.ref, 1);
                const double g = form.dirichlet ? form.dirichlet(fp.x) : 0.0;
                const double pen = form.c_pen / h;
                for (int i = 0; i < nloc; ++i) {
                    const double dni = ev.grads[i].dot(n);
                    blk.F(i) += w * (-dni * g + pen * g * ev.values[i]);
                    for (int j = 0; j < nloc; ++j)
                        blk.K(i, j) += w * (-ev.grads[j].dot(n) * ev.values[i] -
                                            dni * ev.values[j] +
                                            pen * ev.values[i] * ev.values[j]);
                }
                break;
            }
            case FormKind::MultimaterialHeat: {
                if (bc != BC::Dirichlet) throw UnknownTag("heat facet BC");
                const SpaceEval ev = eval_space(space, cell, fp.ref, 1);
                const double kap = form.kappa_of(c.material);
                const double g = form.dirichlet ? form.dirichlet(fp.x) : 0.0;
                const double pen = form.beta_dirichlet * kap / h;
                for (int i = 0; i < nloc; ++i) {
                    const double dni = ev.grads[i].dot(n);
                    blk.F(i) += w * (-kap * dni * g + pen * g * ev.values[i]);
                    for (int j = 0; j < nloc; ++j)
                        blk.K(i, j) += w * (-kap * ev.grads[j].dot(n) * ev.values[i] -
                                            kap * dni * ev.values[j] +
                                            pen * ev.values[i] * ev.values[j]);
                }
                break;
            }
            case FormKind::Biharmonic: {
                if (bc != BC::Dirichlet) throw UnknownTag("biharmonic facet BC");
                const SpaceEval ev = eval_space(space, cell, fp.ref, 2);
                const auto d3 = eval_space_third(space, cell, fp.ref);
                const double g = form.dirichlet ? form.dirichlet(fp.x) : 0.0;
                const double hf = form.neumann_flux ? form.neumann_flux(fp.x, n) : 0.0;
                const double pen_u = form.alpha / (h * h * h);
                const double pen_g = form.beta / h;
                for (int i = 0; i < nloc; ++i) {
                    const double Li = ev.hessians[i].trace();
                    // gradient of the Laplacian dotted with n
                    const double Ti =
                        (d3[i][0] + d3[i][2]) * n.x + (d3[i][1] + d3[i][3]) * n.y;
                    const double Dni = ev.grads[i].dot(n);
                    blk.F(i) += w * (Ti * g - Li * hf + pen_u * g * ev.values[i] +
                                     pen_g * hf * Dni);
                    for (int j = 0; j < nloc; ++j) {
                        const double Lj = ev.hessians[j].trace();
                        const double Tj =
                            (d3[j][0] + d3[j][2]) * n.x + (d3[j][1] + d3[j][3]) * n.y;
                        const double Dnj = ev.grads[j].dot(n);
                        blk.K(i, j) +=
                            w * (Tj * ev.values[i] - Lj * Dni + Ti * ev.values[j] -
                                 Li * Dnj + pen_u * ev.values[i] * ev.values[j] +
                                 pen_g * Dni * Dnj);
                    }
                }
                break;
            }
            case FormKind::Elasticity:
            case FormKind::EigenstrainElasticity: {
                const SpaceEval ev = eval_space(space, cell, fp.ref, 1);
                const double mu = form.mu_of(c.material);
                const double lam = form.lambda_of(c.material);
                if (bc == BC::Traction) {
                    if (!form.traction) throw InvalidArgument("traction data missing");
                    const Vec2 tr = form.traction(fp.x, n);
                    for (int i = 0; i < nloc; ++i) {
                        blk.F(0 * nloc + i) += w * ev.values[i] * tr.x;
                        blk.F(1 * nloc + i) += w * ev.values[i] * tr.y;
                    }
                } else if (bc == BC::Symmetry) {
                    const double pen = form.beta_sym * mu / h;
                    const bool inc = form.kind == FormKind::EigenstrainElasticity &&
                                     c.material == form.inclusion_material;
                    const double s0 =
                        inc ? -2.0 * form.eigenstrain * (mu + lam) : 0.0;
                    for (int a = 0; a < 2; ++a)
                        for (int i = 0; i < nloc; ++i) {
                            const int I = a * nloc + i;
                            const double vin =
                                ev.values[i] * ((a == 0) ? n.x : n.y);
                            const double Si = normal_flux(mu, lam, ev.grads[i], n, a);
                            if (inc) blk.F(I) += w * vin * s0;
                            for (int b = 0; b < 2; ++b)
                                for (int j = 0; j < nloc; ++j) {
                                    const double ujn =
                                        ev.values[j] * ((b == 0) ? n.x : n.y);
                                    const double Sj =
                                        normal_flux(mu, lam, ev.grads[j], n, b);
                                    blk.K(I, b * nloc + j) +=
                                        w * (-ujn * Si - vin * Sj + pen * vin * ujn);
                                }
                        }
                } else if (bc == BC::Dirichlet) {
                    if (!form.dirichlet_vec)
                        throw InvalidArgument("vector dirichlet data missing");
                    const Vec2 g = form.dirichlet_vec(fp.x);
                    const double pen = form.beta_dirichlet * (2.0 * mu + lam) / h;
                    const bool inc = form.kind == FormKind::EigenstrainElasticity &&
                                     c.material == form.inclusion_material;
                    const double s0 =
                        inc ? -2.0 * form.eigenstrain * (mu + lam) : 0.0;
                    for (int a = 0; a < 2; ++a)
                        for (int i = 0; i < nloc; ++i) {
                            const int I = a * nloc + i;
                            const double Vi0 =
                                traction_comp(mu, lam, ev.grads[i], n, a, 0);
                            const double Vi1 =
                                traction_comp(mu, lam, ev.grads[i], n, a, 1);
                            blk.F(I) += w * (-(g.x * Vi0 + g.y * Vi1) +
                                             pen * ((a == 0) ? g.x : g.y) * ev.values[i]);
                            if (inc)
                                blk.F(I) += w * ev.values[i] * s0 * ((a == 0) ? n.x : n.y);
                            for (int b = 0; b < 2; ++b)
                                for (int j = 0; j < nloc; ++j) {
                                    const double Vib = (b == 0) ? Vi0 : Vi1;
                                    const double Vja = traction_comp(
                                        mu, lam, ev.grads[j], n, b, a);
                                    double v = -ev.values[j] * Vib -
                                               ev.values[i] * Vja;
                                    if (a == b)
                                        v += pen * ev.values[i] * ev.values[j];
                                    blk.K(I, b * nloc + j) += w * v;
                                }
                        }
                } else {
                    throw UnknownTag("elasticity facet BC");
                }
                break;
            }
        }
    }
    return blk;
}

LocalBlock interface_block(const ProblemForm& form, const LagrangeSpace& space,
                           const Facet& facet) {
    const int c0 = facet.cell, c1 = facet.cell2;
    const int n0 = space.dofs_per_cell(c0), n1 = space.dofs_per_cell(c1);
    const int ncomp = form.components;
    const int total = ncomp * (n0 + n1);
    LocalBlock blk;
    blk.K = Eigen::MatrixXd::Zero(total, total);
    blk.F = Eigen::VectorXd::Zero(total);
    if (form.kind != FormKind::MultimaterialHeat &&
        form.kind != FormKind::EigenstrainElasticity)
        return blk;

    const double h = penalty_h(form);
    const int m0 = space.mesh.cells[c0].material;
    const int m1 = space.mesh.cells[c1].material;
    const QuadratureRule rule = facet_quadrature(2 * space.order + 2);

    for (int q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q].x;
        const FacetPoint fp = facet_point(space.mesh, c0, facet.local_edge, t);
        const double w = rule.weights[q] * fp.measure;
        const Vec2 n = fp.normal; // points from side 0 toward side 1

        const SpaceEval e0 = eval_space(space, c0, fp.ref, 1);
        const Vec2 ref1 = inverse_map(space.mesh, c1, fp.x);
        const SpaceEval e1 = eval_space(space, c1, ref1, 1);

        auto val = [&](int side, int j) {
            return side == 0 ? e0.values[j] : e1.values[j];
        };
        auto grd = [&](int side, int j) { return side == 0 ? e0.grads[j] : e1.grads[j]; };
        auto nl = [&](int side) { return side == 0 ? n0 : n1; };
        auto base = [&](int side) { return side == 0 ? 0 : ncomp * n0; };
        auto sgn = [&](int side) { return side == 0 ? 1.0 : -1.0; };
        auto mat = [&](int side) { return side == 0 ? m0 : m1; };

        if (form.kind == FormKind::MultimaterialHeat) {
            const double k0 = form.kappa_of(m0), k1 = form.kappa_of(m1);
            const double gamma = form.gamma_interface > 0
                                     ? form.gamma_interface
                                     : form.beta_dirichlet * std::max(k0, k1) / h;
            for (int s = 0; s < 2; ++s)
                for (int i = 0; i < nl(s); ++i) {
                    const int I = base(s) + i;
                    const double jt = sgn(s) * val(s, i);
                    const double at = 0.5 * form.kappa_of(mat(s)) * grd(s, i).dot(n);
                    for (int sp = 0; sp < 2; ++sp)
                        for (int j = 0; j < nl(sp); ++j) {
                            const int Jc = base(sp) + j;
                            const double ju = sgn(sp) * val(sp, j);
                            const double au =
                                0.5 * form.kappa_of(mat(sp)) * grd(sp, j).dot(n);
                            blk.K(I, Jc) += w * (-ju * at - jt * au + gamma * jt * ju);
                        }
                }
        } else {
            const double stiff0 = 2.0 * form.mu_of(m0) + form.lambda_of(m0);
            const double stiff1 = 2.0 * form.mu_of(m1) + form.lambda_of(m1);
            const double gamma = form.gamma_interface > 0
                                     ? form.gamma_interface
                                     : form.beta_dirichlet * std::max(stiff0, stiff1) / h;
            // eigenstrain pre-stress on whichever side is the inclusion
            for (int s = 0; s < 2; ++s)
                for (int a = 0; a < 2; ++a)
                    for (int i = 0; i < nl(s); ++i) {
                        const int I = base(s) + a * nl(s) + i;
                        const double mu_s = form.mu_of(mat(s));
                        const double lam_s = form.lambda_of(mat(s));
                        const double jva = sgn(s) * val(s, i); // [[v]]_a coefficient
                        if (mat(s) == form.inclusion_material ||
                            mat(1 - s) == form.inclusion_material) {
                            const int mi = form.inclusion_material;
                            const double s0 = -2.0 * form.eigenstrain *
                                              (form.mu_of(mi) + form.lambda_of(mi));
                            blk.F(I) +=
                                w * jva * 0.5 * s0 * ((a == 0) ? n.x : n.y);
                        }
                        for (int sp = 0; sp < 2; ++sp)
                            for (int b = 0; b < 2; ++b)
                                for (int j = 0; j < nl(sp); ++j) {
                                    const int Jc = base(sp) + b * nl(sp) + j;
                                    const double mu_t = form.mu_of(mat(sp));
                                    const double lam_t = form.lambda_of(mat(sp));
                                    const double jub = sgn(sp) * val(sp, j);
                                    // average tractions
                                    const double av_t = 0.5 * traction_comp(
                                        mu_s, lam_s, grd(s, i), n, a, b);
                                    const double av_u = 0.5 * traction_comp(
                                        mu_t, lam_t, grd(sp, j), n, b, a);
                                    double v = -jub * av_t - jva * av_u;
                                    if (a == b) v += gamma * jva * jub;
                                    blk.K(I, Jc) += w * v;
                                }
                    }
        }
    }
    return blk;
}

namespace {

bool need_interface_terms(const ProblemForm& form, const LagrangeSpace& space,
                          bool reduced_enriched) {
    if (form.kind != FormKind::MultimaterialHeat &&
        form.kind != FormKind::EigenstrainElasticity)
        return false;
    return reduced_enriched || space.continuity == Continuity::DG;
}

} // namespace

AssembledSystem assemble_foreground(const ProblemForm& form,
                                    const LagrangeSpace& space) {
    const int ncomp = form.components;
    const int nu = space.ndofs;
    const int ncells = space.mesh.n_cells();

    std::vector<std::vector<Eigen::Triplet<double>>> cell_trips(ncells);
    std::vector<Eigen::VectorXd> cell_loads(ncells);

#pragma omp parallel for schedule(dynamic, 16)
    for (int c = 0; c < ncells; ++c) {
        const LocalBlock blk = volume_block(form, space, c);
        const auto& dofs = space.cell_dofs[c];
        const int nloc = static_cast<int>(dofs.size());
        auto& trips = cell_trips[c];
        trips.reserve(blk.K.size());
        for (int a = 0; a < ncomp; ++a)
            for (int i = 0; i < nloc; ++i)
                for (int b = 0; b < ncomp; ++b)
                    for (int j = 0; j < nloc; ++j) {
                        const double v = blk.K(a * nloc + i, b * nloc + j);
                        if (v != 0.0)
                            trips.emplace_back(a * nu + dofs[i], b * nu + dofs[j], v);
                    }
        cell_loads[c] = blk.F;
    }

    AssembledSystem sys;
    sys.components = ncomp;
    sys.block_size = nu;
    sys.F = Eigen::VectorXd::Zero(ncomp * nu);

    std::vector<Eigen::Triplet<double>> trips;
    std::size_t total = 0;
    for (const auto& t : cell_trips) total += t.size();
    trips.reserve(total + total / 4);
    for (int c = 0; c < ncells; ++c) {
        trips.insert(trips.end(), cell_trips[c].begin(), cell_trips[c].end());
        const auto& dofs = space.cell_dofs[c];
        for (int a = 0; a < ncomp; ++a)
            for (std::size_t i = 0; i < dofs.size(); ++i)
                sys.F(a * nu + dofs[i]) += cell_loads[c](a * dofs.size() + i);
    }

    const bool iface = need_interface_terms(form, space, false);
    for (const Facet& f : space.mesh.facets) {
        if (f.cell2 < 0) {
            const LocalBlock blk = boundary_block(form, space, f);
            const auto& dofs = space.cell_dofs[f.cell];
            const int nloc = static_cast<int>(dofs.size());
            for (int a = 0; a < ncomp; ++a)
                for (int i = 0; i < nloc; ++i) {
                    sys.F(a * nu + dofs[i]) += blk.F(a * nloc + i);
                    for (int b = 0; b < ncomp; ++b)
                        for (int j = 0; j < nloc; ++j) {
                            const double v = blk.K(a * nloc + i, b * nloc + j);
                            if (v != 0.0)
                                trips.emplace_back(a * nu + dofs[i], b * nu + dofs[j], v);
                        }
                }
        } else if (iface) {
            const LocalBlock blk = interface_block(form, space, f);
            const auto& d0 = space.cell_dofs[f.cell];
            const auto& d1 = space.cell_dofs[f.cell2];
            const int nl0 = static_cast<int>(d0.size());
            auto global = [&](int local) {
                // local layout: [side0 comp-major | side1 comp-major]
                if (local < ncomp * nl0) {
                    const int a = local / nl0;
                    return a * nu + d0[local % nl0];
                }
                const int l = local - ncomp * nl0;
                const int a = l / static_cast<int>(d1.size());
                return a * nu + d1[l % d1.size()];
            };
            const int tot = static_cast<int>(blk.F.size());
            for (int i = 0; i < tot; ++i) {
                sys.F(global(i)) += blk.F(i);
                for (int j = 0; j < tot; ++j)
                    if (blk.K(i, j) != 0.0)
                        trips.emplace_back(global(i), global(j), blk.K(i, j));
            }
        }
    }

    sys.K.resize(ncomp * nu, ncomp * nu);
    sys.K.setFromTriplets(trips.begin(), trips.end());
    sys.K.makeCompressed();
    return sys;
}

AssembledSystem reduce_system(const AssembledSystem& sys, const ReductionOp& op) {
    if (op.is_enriched())
        throw InvalidArgument("plain reduction cannot apply an enriched operator; "
                              "use assemble_reduced");
    const SpMat& M = op.plain()->M;
    if (static_cast<int>(M.cols()) != sys.block_size)
        throw DimensionMismatch("operator columns vs foreground dofs");

    // compress active rows, expand per component
    const int na = op.n_reduced();
    const int ncomp = sys.components;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(M.nonZeros() * ncomp);
    std::vector<int> expanded_to_active(M.rows(), -1);
    for (int i = 0; i < na; ++i) expanded_to_active[op.active_rows()[i]] = i;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            const int r = expanded_to_active[it.row()];
            for (int a = 0; a < ncomp; ++a)
                trips.emplace_back(a * na + r, a * sys.block_size + it.col(),
                                   it.value());
        }
    SpMat Mbig(ncomp * na, ncomp * sys.block_size);
    Mbig.setFromTriplets(trips.begin(), trips.end());
    Mbig.makeCompressed();

    AssembledSystem out;
    out.components = ncomp;
    out.block_size = na;
    const SpMat MK = Mbig * sys.K;
    const SpMat Mt = Mbig.transpose();
    out.K = MK * Mt;
    out.K.makeCompressed();
    out.F = Mbig * sys.F;
    out.reduced_map = op.active_rows();
    return out;
}

AssembledSystem assemble_reduced(const ProblemForm& form, const LagrangeSpace& space,
                                 const ReductionOp& op) {
    const int ncomp = form.components;
    const int na = op.n_reduced();
    const int ncells = space.mesh.n_cells();

    std::vector<std::vector<Eigen::Triplet<double>>> cell_trips(ncells);
    std::vector<std::vector<std::pair<int, double>>> cell_loads(ncells);

#pragma omp parallel for schedule(dynamic, 8)
    for (int c = 0; c < ncells; ++c) {
        const LocalBlock blk = volume_block(form, space, c);
        const ReductionOp::CellBlock rb = op.cell_block(space, c);
        const int nloc = space.dofs_per_cell(c);
        const int nr = static_cast<int>(rb.rows.size());
        auto& trips = cell_trips[c];
        auto& load = cell_loads[c];
        for (int a = 0; a < ncomp; ++a)
            for (int b = 0; b < ncomp; ++b) {
                const Eigen::MatrixXd Kr =
                    rb.B * blk.K.block(a * nloc, b * nloc, nloc, nloc) *
                    rb.B.transpose();
                for (int r = 0; r < nr; ++r)
                    for (int s = 0; s < nr; ++s)
                        if (Kr(r, s) != 0.0)
                            trips.emplace_back(a * na + rb.rows[r],
                                               b * na + rb.rows[s], Kr(r, s));
            }
        for (int a = 0; a < ncomp; ++a) {
            const Eigen::VectorXd Fr = rb.B * blk.F.segment(a * nloc, nloc);
            for (int r = 0; r < nr; ++r)
                if (Fr(r) != 0.0) load.emplace_back(a * na + rb.rows[r], Fr(r));
        }
    }

    AssembledSystem sys;
    sys.components = ncomp;
    sys.block_size = na;
    sys.reduced_map = op.active_rows();
    sys.F = Eigen::VectorXd::Zero(ncomp * na);

    std::vector<Eigen::Triplet<double>> trips;
    std::size_t total = 0;
    for (const auto& t : cell_trips) total += t.size();
    trips.reserve(total + total / 4);
    for (int c = 0; c < ncells; ++c) {
        trips.insert(trips.end(), cell_trips[c].begin(), cell_trips[c].end());
        for (const auto& [r, v] : cell_loads[c]) sys.F(r) += v;
    }

    const bool iface = need_interface_terms(form, space, op.is_enriched());
    for (const Facet& f : space.mesh.facets) {
        if (f.cell2 < 0) {
            const LocalBlock blk = boundary_block(form, space, f);
            const ReductionOp::CellBlock rb = op.cell_block(space, f.cell);
            const int nloc = space.dofs_per_cell(f.cell);
            const int nr = static_cast<int>(rb.rows.size());
            for (int a = 0; a < ncomp; ++a) {
                const Eigen::VectorXd Fr = rb.B * blk.F.segment(a * nloc, nloc);
                for (int r = 0; r < nr; ++r) sys.F(a * na + rb.rows[r]) += Fr(r);
                for (int b = 0; b < ncomp; ++b) {
                    const Eigen::MatrixXd Kr =
                        rb.B * blk.K.block(a * nloc, b * nloc, nloc, nloc) *
                        rb.B.transpose();
                    for (int r = 0; r < nr; ++r)
                        for (int s = 0; s < nr; ++s)
                            if (Kr(r, s) != 0.0)
                                trips.emplace_back(a * na + rb.rows[r],
                                                   b * na + rb.rows[s], Kr(r, s));
                }
            }
        } else if (iface) {
            const LocalBlock blk = interface_block(form, space, f);
            const ReductionOp::CellBlock rb0 = op.cell_block(space, f.cell);
            const ReductionOp::CellBlock rb1 = op.cell_block(space, f.cell2);
            const int nl0 = space.dofs_per_cell(f.cell);
            const int nl1 = space.dofs_per_cell(f.cell2);
            const ReductionOp::CellBlock* rbs[2] = {&rb0, &rb1};
            const int nls[2] = {nl0, nl1};
            const int offs[2] = {0, ncomp * nl0};
            for (int s0 = 0; s0 < 2; ++s0)
                for (int a = 0; a < ncomp; ++a) {
                    const Eigen::VectorXd Fr =
                        rbs[s0]->B * blk.F.segment(offs[s0] + a * nls[s0], nls[s0]);
                    for (std::size_t r = 0; r < rbs[s0]->rows.size(); ++r)
                        sys.F(a * na + rbs[s0]->rows[r]) += Fr(r);
                    for (int s1 = 0; s1 < 2; ++s1)
                        for (int b = 0; b < ncomp; ++b) {
                            const Eigen::MatrixXd Kr =
                                rbs[s0]->B *
                                blk.K.block(offs[s0] + a * nls[s0],
                                            offs[s1] + b * nls[s1], nls[s0],
                                            nls[s1]) *
                                rbs[s1]->B.transpose();
                            for (std::size_t r = 0; r < rbs[s0]->rows.size(); ++r)
                                for (std::size_t t = 0; t < rbs[s1]->rows.size(); ++t)
                                    if (Kr(r, t) != 0.0)
                                        trips.emplace_back(a * na + rbs[s0]->rows[r],
                                                           b * na + rbs[s1]->rows[t],
                                                           Kr(r, t));
                        }
                }
        }
    }

    sys.K.resize(ncomp * na, ncomp * na);
    sys.K.setFromTriplets(trips.begin(), trips.end());
    sys.K.makeCompressed();
    return sys;
}

} // namespace rkpm
