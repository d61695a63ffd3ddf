#include "rkpm/reference.hpp"

#include <algorithm>
#include <cmath>

#include "rkpm/element_blocks.hpp"
#include "rkpm/quadrature.hpp"

namespace rkpm::reference {

Eigen::SparseMatrix<double> extraction_serial(const RKPMBasis& basis,
                                              const LagrangeSpace& space) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j < space.ndofs; ++j) {
        const ShapeEval ev = shape_functions(basis, space.dof_coords[j], 0);
        for (std::size_t q = 0; q < ev.ids.size(); ++q)
            if (std::abs(ev.values[q]) >= 1e-14)
                trips.emplace_back(ev.ids[q], j, ev.values[q]);
    }
    Eigen::SparseMatrix<double> M(basis.nodes.size(), space.ndofs);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
}

AssembledSystem assemble_foreground_serial(const ProblemForm& form,
                                           const LagrangeSpace& space) {
    const int ncomp = form.components;
    const int nu = space.ndofs;
    AssembledSystem sys;
    sys.components = ncomp;
    sys.block_size = nu;
    sys.F = Eigen::VectorXd::Zero(ncomp * nu);

    std::vector<Eigen::Triplet<double>> trips;
    for (int c = 0; c < space.mesh.n_cells(); ++c) {
        const LocalBlock blk = volume_block(form, space, c);
        const auto& dofs = space.cell_dofs[c];
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
    }
    for (const Facet& f : space.mesh.facets) {
        if (f.cell2 >= 0) continue;
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
    }
    sys.K.resize(ncomp * nu, ncomp * nu);
    sys.K.setFromTriplets(trips.begin(), trips.end());
    sys.K.makeCompressed();
    return sys;
}

ErrorNorms error_norms_serial(const ProblemForm& form, const LagrangeSpace& space,
                              const LocalField& field, int order) {
    const int deg = 2 * space.order + 2;
    double l2 = 0, h1 = 0, h2 = 0;
    for (int c = 0; c < space.mesh.n_cells(); ++c) {
        const QuadratureRule rule = quadrature(space.mesh.cells[c].kind, deg);
        const int m = space.mesh.cells[c].material;
        Eigen::VectorXd coef = field(c, 0);
        for (int q = 0; q < rule.size(); ++q) {
            const Vec2 ref = rule.points[q];
            const double w = rule.weights[q] * map_jacobian(space.mesh, c, ref).det();
            const Vec2 x = map_point(space.mesh, c, ref);
            const SpaceEval ev = eval_space(space, c, ref, order);
            double uh = 0;
            Vec2 gh{0, 0};
            Sym2 hh{};
            for (std::size_t i = 0; i < ev.values.size(); ++i) {
                uh += coef(i) * ev.values[i];
                if (order >= 1) gh += coef(i) * ev.grads[i];
                if (order >= 2) hh = hh + ev.hessians[i] * coef(i);
            }
            const double du = uh - form.exact.value(x, m);
            l2 += w * du * du;
            if (order >= 1) {
                const Vec2 dg = gh - form.exact.grad(x, m);
                h1 += w * dg.norm2();
            }
            if (order >= 2) {
                const Sym2 dh = hh - form.exact.hess(x, m);
                h2 += w * dh.ddot(dh);
            }
        }
    }
    ErrorNorms out;
    out.l2 = std::sqrt(l2);
    out.h1 = std::sqrt(h1);
    out.h2 = std::sqrt(h2);
    return out;
}

std::vector<double> nodal_spacing_serial(const NodeSet& nodes, int neighbor_count) {
    const int np = nodes.size();
    std::vector<double> h(np);
    for (int i = 0; i < np; ++i) {
        std::vector<std::pair<double, int>> d;
        d.reserve(np - 1);
        for (int j = 0; j < np; ++j)
            if (j != i) d.emplace_back(dist2(nodes.coords[i], nodes.coords[j]), j);
        std::sort(d.begin(), d.end());
        h[i] = std::sqrt(d[neighbor_count - 1].first);
    }
    return h;
}

} // namespace rkpm::reference
