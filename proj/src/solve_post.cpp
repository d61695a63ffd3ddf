#include "rkpm/solve_post.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "rkpm/errors.hpp"
#include "rkpm/parallel.hpp"

namespace rkpm {

SolveResult solve(const AssembledSystem& sys, const SolveOptions& opts) {
    const int n = sys.size();
    if (sys.K.rows() != n || sys.K.cols() != n || sys.F.size() != n)
        throw DimensionMismatch("system dimensions");

    SolveResult res;
    const double fnorm = sys.F.norm();
    if (fnorm == 0.0) {
        res.d = Eigen::VectorXd::Zero(n);
        res.converged = true;
        return res;
    }

    if (n > opts.direct_dof_cap) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(opts.tol);
        cg.setMaxIterations(20 * n);
        cg.compute(sys.K);
        res.d = cg.solve(sys.F);
        res.residual = (sys.K * res.d - sys.F).norm() / fnorm;
        res.converged = res.residual <= opts.tol;
        if (!res.converged && !opts.allow_regularized)
            throw NotConverged("cg residual " + std::to_string(res.residual));
        return res;
    }

    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(sys.K);
    bool ok = (ldlt.info() == Eigen::Success);
    if (ok) {
        res.d = ldlt.solve(sys.F);
        ok = res.d.allFinite();
    }

    if (!ok) {
        // escalate a diagonal shift until the factorization succeeds
        double mean_diag = 0;
        for (int i = 0; i < n; ++i) mean_diag += std::abs(sys.K.coeff(i, i));
        mean_diag = std::max(mean_diag / n, 1e-300);
        double shift = 1e-14 * mean_diag;
        SpMat I(n, n);
        I.setIdentity();
        for (int attempt = 0; attempt < 8 && !ok; ++attempt, shift *= 100.0) {
            SpMat Ks = sys.K + shift * I;
            ldlt.compute(Ks);
            if (ldlt.info() != Eigen::Success) continue;
            res.d = ldlt.solve(sys.F);
            ok = res.d.allFinite();
        }
        if (!ok)
            throw IndefiniteMatrix("factorization failed despite diagonal shifts");
        res.regularized = true;
    }

    // iterative refinement against the unshifted matrix
    Eigen::VectorXd r = sys.F - sys.K * res.d;
    res.residual = r.norm() / fnorm;
    for (int it = 0; it < opts.max_refine && res.residual > opts.tol; ++it) {
        const Eigen::VectorXd dd = ldlt.solve(r);
        if (!dd.allFinite()) break;
        res.d += dd;
        r = sys.F - sys.K * res.d;
        const double nr = r.norm() / fnorm;
        if (nr >= res.residual) break;
        res.residual = nr;
    }

    res.converged = res.residual <= opts.tol;
    if (!res.converged && !opts.allow_regularized)
        throw NotConverged("residual " + std::to_string(res.residual) +
                           (res.regularized ? " (regularized factorization)" : ""));
    return res;
}

SolutionField push_solution(const ReductionOp& op, const LagrangeSpace& space,
                            const Eigen::VectorXd& d, int components) {
    SolutionField sf;
    sf.components = components;
    sf.d = d;
    sf.u_fg.resize(components * space.ndofs);
    const int na = op.n_reduced();
    for (int a = 0; a < components; ++a)
        sf.u_fg.segment(a * space.ndofs, space.ndofs) =
            op.push_to_foreground(space, d.segment(a * na, na));
    return sf;
}

LocalField field_from_foreground(const LagrangeSpace& space,
                                 const Eigen::VectorXd& u_fg, int components) {
    const int nu = space.ndofs;
    if (u_fg.size() != components * nu)
        throw DimensionMismatch("foreground coefficient size");
    return [&space, u_fg, nu](int cell, int comp) {
        const auto& dofs = space.cell_dofs[cell];
        Eigen::VectorXd out(dofs.size());
        for (std::size_t i = 0; i < dofs.size(); ++i)
            out(i) = u_fg(comp * nu + dofs[i]);
        return out;
    };
}

LocalField field_from_reduced(const LagrangeSpace& space, const ReductionOp& op,
                              const Eigen::VectorXd& d, int components) {
    const int na = op.n_reduced();
    if (d.size() != components * na)
        throw DimensionMismatch("reduced coefficient size");
    return [&space, &op, d, na](int cell, int comp) {
        return op.local_coefficients(space, cell, d.segment(comp * na, na));
    };
}

ErrorNorms error_norms(const ProblemForm& form, const LagrangeSpace& space,
                       const LocalField& field, int order, int quad_degree) {
    const int deg = quad_degree > 0 ? quad_degree : 2 * space.order + 2;
    const int ncomp = form.components;
    const bool elastic = (form.kind == FormKind::Elasticity ||
                          form.kind == FormKind::EigenstrainElasticity);
    const int ncells = space.mesh.n_cells();

    std::vector<std::array<double, 4>> parts(ncells, {0, 0, 0, 0});

#pragma omp parallel for schedule(dynamic, 16)
    for (int c = 0; c < ncells; ++c) {
        const Cell& cellref = space.mesh.cells[c];
        const int m = cellref.material;
        const QuadratureRule rule = quadrature(cellref.kind, deg);
        std::vector<Eigen::VectorXd> coef(ncomp);
        for (int a = 0; a < ncomp; ++a) coef[a] = field(c, a);
        double l2 = 0, h1 = 0, h2 = 0, en = 0;

        for (int q = 0; q < rule.size(); ++q) {
            const Vec2 ref = rule.points[q];
            const Mat2 J = map_jacobian(space.mesh, c, ref);
            const double w = rule.weights[q] * J.det();
            const Vec2 x = map_point(space.mesh, c, ref);
            const SpaceEval ev = eval_space(space, c, ref, std::max(order, elastic ? 1 : 0));
            const int nloc = static_cast<int>(ev.values.size());

            if (ncomp == 1) {
                double uh = 0;
                Vec2 gh{0, 0};
                Sym2 hh{};
                for (int i = 0; i < nloc; ++i) {
                    uh += coef[0](i) * ev.values[i];
                    if (order >= 1) gh += coef[0](i) * ev.grads[i];
                    if (order >= 2) hh = hh + ev.hessians[i] * coef[0](i);
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
            } else {
                Vec2 uh{0, 0};
                Mat2 gh{};
                for (int i = 0; i < nloc; ++i) {
                    uh.x += coef[0](i) * ev.values[i];
                    uh.y += coef[1](i) * ev.values[i];
                    gh.a00 += coef[0](i) * ev.grads[i].x;
                    gh.a01 += coef[0](i) * ev.grads[i].y;
                    gh.a10 += coef[1](i) * ev.grads[i].x;
                    gh.a11 += coef[1](i) * ev.grads[i].y;
                }
                const Vec2 du = uh - form.exact.vec(x, m);
                l2 += w * du.norm2();
                if (order >= 1) {
                    const Mat2 ge = form.exact.vec_grad(x, m);
                    const Mat2 dg{gh.a00 - ge.a00, gh.a01 - ge.a01,
                                  gh.a10 - ge.a10, gh.a11 - ge.a11};
                    h1 += w * (dg.a00 * dg.a00 + dg.a01 * dg.a01 + dg.a10 * dg.a10 +
                               dg.a11 * dg.a11);
                }
                if (elastic && form.exact.stress) {
                    const double mu = form.mu_of(m), lam = form.lambda_of(m);
                    Sym2 eps_h = gh.sym();
                    Sym2 sig_h{2 * mu * eps_h.xx + lam * eps_h.trace(),
                               2 * mu * eps_h.xy,
                               2 * mu * eps_h.yy + lam * eps_h.trace()};
                    if (form.kind == FormKind::EigenstrainElasticity &&
                        m == form.inclusion_material) {
                        const double s0 = -2.0 * form.eigenstrain * (mu + lam);
                        sig_h.xx += s0;
                        sig_h.yy += s0;
                    }
                    const Sym2 eps_e = form.exact.vec_grad(x, m).sym();
                    const Sym2 dsig = sig_h - form.exact.stress(x, m);
                    const Sym2 deps = eps_h - eps_e;
                    en += w * dsig.ddot(deps);
                }
            }
        }
        parts[c] = {l2, h1, h2, en};
    }

    ErrorNorms out;
    double l2 = 0, h1 = 0, h2 = 0, en = 0;
    for (const auto& p : parts) {
        l2 += p[0];
        h1 += p[1];
        h2 += p[2];
        en += p[3];
    }
    out.l2 = std::sqrt(l2);
    out.h1 = std::sqrt(h1);
    out.h2 = std::sqrt(h2);
    out.energy = std::sqrt(std::max(en, 0.0));
    return out;
}

RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 3)
        throw DegenerateFit("need at least 3 rows");
    for (double e : err)
        if (!(e > 0.0)) throw DegenerateFit("non-positive error");

    const int n = static_cast<int>(h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    RateFit out;
    out.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.last_interval = std::log(err[n - 1] / err[n - 2]) / std::log(h[n - 1] / h[n - 2]);
    return out;
}

} // namespace rkpm
