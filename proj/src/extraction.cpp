#include "rkpm/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rkpm/errors.hpp"
#include "rkpm/parallel.hpp"

namespace rkpm {

namespace {

constexpr double kDropTol = 1e-14; // kernel-boundary round-off noise

/// Evaluates Psi at every coordinate in `points` (parallel over points) and
/// assembles the sparse operator column-by-column in point order.
SpMat evaluate_operator(const RKPMBasis& basis, const std::vector<Vec2>& points) {
    const int ncols = static_cast<int>(points.size());
    std::vector<std::vector<std::pair<int, double>>> cols(ncols);
    std::vector<int> failed(ncols, 0);

#pragma omp parallel for schedule(dynamic, 64)
    for (int j = 0; j < ncols; ++j) {
        try {
            const ShapeEval ev = shape_functions(basis, points[j], 0);
            auto& col = cols[j];
            col.reserve(ev.ids.size());
            for (std::size_t q = 0; q < ev.ids.size(); ++q)
                if (std::abs(ev.values[q]) >= kDropTol)
                    col.emplace_back(ev.ids[q], ev.values[q]);
        } catch (const Error&) {
            failed[j] = 1;
        }
    }

    std::string offenders;
    int nfail = 0;
    for (int j = 0; j < ncols; ++j)
        if (failed[j]) {
            if (++nfail <= 8)
                offenders += " (" + std::to_string(points[j].x) + ", " +
                             std::to_string(points[j].y) + ")";
        }
    if (nfail > 0)
        throw NotCovered(std::to_string(nfail) +
                         " foreground dof coordinates lack adequate coverage:" +
                         offenders);

    std::vector<Eigen::Triplet<double>> trips;
    std::size_t nnz = 0;
    for (const auto& c : cols) nnz += c.size();
    trips.reserve(nnz);
    for (int j = 0; j < ncols; ++j)
        for (const auto& [i, v] : cols[j]) trips.emplace_back(i, j, v);

    SpMat M(basis.nodes.size(), ncols);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
}

std::vector<int> rows_with_entries(const SpMat& m) {
    std::vector<char> seen(m.rows(), 0);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) seen[it.row()] = 1;
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(seen.size()); ++i)
        if (seen[i]) out.push_back(i);
    return out;
}

/// Minimum distance from p to a convex cell polygon (0 if inside).
double cell_distance(const Mesh& mesh, int cell, Vec2 p) {
    const Cell& c = mesh.cells[cell];
    const int n = c.nverts();
    bool inside = true;
    double dmin = std::numeric_limits<double>::max();
    for (int e = 0; e < n; ++e) {
        const Vec2 a = mesh.vertices[c.v[e]];
        const Vec2 b = mesh.vertices[c.v[(e + 1) % n]];
        if (cross(b - a, p - a) < 0) inside = false;
        const Vec2 ab = b - a;
        const double t = std::clamp((p - a).dot(ab) / ab.norm2(), 0.0, 1.0);
        dmin = std::min(dmin, dist(p, a + ab * t));
    }
    return inside ? 0.0 : dmin;
}

} // namespace

ExtractionOperator compute_extraction(const RKPMBasis& basis,
                                      const LagrangeSpace& space) {
    ExtractionOperator op;
    op.M = evaluate_operator(basis, space.dof_coords);
    op.active_rows = rows_with_entries(op.M);
    return op;
}

DoubleExtraction compute_double_extraction(const RKPMBasis& basis,
                                           const MidgroundSpace& mid,
                                           const LagrangeSpace& space) {
    DoubleExtraction out;
    out.M1 = evaluate_operator(basis, mid.space.dof_coords);

    // owner midground cell per foreground dof: lowest parent id among the
    // cells containing the dof (traces agree on shared boundaries, so the
    // choice only fixes which polynomial evaluates them)
    const int nu = space.ndofs;
    std::vector<int> owner(nu, -1);
    for (int c = 0; c < space.mesh.n_cells(); ++c) {
        const int p = space.mesh.cells[c].parent;
        for (int g : space.cell_dofs[c])
            if (owner[g] < 0 || p < owner[g]) owner[g] = p;
    }

    const int mu = mid.space.ndofs;
    std::vector<Eigen::Triplet<double>> trips;
    for (int g = 0; g < nu; ++g) {
        const int e = owner[g];
        if (e < 0) continue;
        const Vec2 ref = inverse_map(mid.space.mesh, e, space.dof_coords[g]);
        const SpaceEval ev = eval_space(mid.space, e, ref, 0);
        const auto& dofs = mid.space.cell_dofs[e];
        for (std::size_t i = 0; i < dofs.size(); ++i)
            if (std::abs(ev.values[i]) >= kDropTol)
                trips.emplace_back(dofs[i], g, ev.values[i]);
    }
    out.M2.resize(mu, nu);
    out.M2.setFromTriplets(trips.begin(), trips.end());
    out.M2.makeCompressed();

    out.composite.M = (out.M1 * out.M2).pruned(kDropTol, 1.0);
    out.composite.M.makeCompressed();
    out.composite.active_rows = rows_with_entries(out.composite.M);
    return out;
}

EnrichmentMap build_enrichment(const Mesh& fg, const RKPMBasis& basis,
                               const MidgroundSpace* mid) {
    EnrichmentMap map;
    map.n_materials = fg.n_materials();
    const int np = basis.nodes.size();
    map.node_materials.assign(np, {});

    CellLocator locator(fg);
    // bin cells by bbox once for disk overlap queries
    std::vector<Rect> boxes(fg.n_cells());
    for (int c = 0; c < fg.n_cells(); ++c) {
        Rect r{1e300, 1e300, -1e300, -1e300};
        for (int i = 0; i < fg.cells[c].nverts(); ++i) {
            const Vec2 p = fg.vertices[fg.cells[c].v[i]];
            r.x0 = std::min(r.x0, p.x);
            r.y0 = std::min(r.y0, p.y);
            r.x1 = std::max(r.x1, p.x);
            r.y1 = std::max(r.y1, p.y);
        }
        boxes[c] = r;
    }

#pragma omp parallel for schedule(dynamic, 32)
    for (int i = 0; i < np; ++i) {
        const Vec2 xi = basis.nodes.coords[i];
        const double a = basis.nodes.a[i];
        std::vector<int> mats;
        for (int c = 0; c < fg.n_cells(); ++c) {
            const Rect& r = boxes[c];
            if (xi.x + a < r.x0 || xi.x - a > r.x1 || xi.y + a < r.y0 ||
                xi.y - a > r.y1)
                continue;
            if (cell_distance(fg, c, xi) < a) {
                const int m = fg.cells[c].material;
                if (std::find(mats.begin(), mats.end(), m) == mats.end())
                    mats.push_back(m);
            }
        }
        std::sort(mats.begin(), mats.end());
        map.node_materials[i] = std::move(mats);
    }

    map.offsets.assign(np + 1, 0);
    for (int i = 0; i < np; ++i) {
        const int n = map.enriched(i) ? static_cast<int>(map.node_materials[i].size()) : 1;
        map.offsets[i + 1] = map.offsets[i] + n;
    }

    if (mid) {
        const int nmid = mid->space.mesh.n_cells();
        map.mid_materials.assign(nmid, {});
        for (int e = 0; e < nmid; ++e) {
            std::vector<int>& mats = map.mid_materials[e];
            for (int c : mid->cover[e]) {
                const int m = fg.cells[c].material;
                if (std::find(mats.begin(), mats.end(), m) == mats.end())
                    mats.push_back(m);
            }
            std::sort(mats.begin(), mats.end());
        }
    }
    return map;
}

EnrichmentMap build_enrichment_analytic(const RKPMBasis& basis,
                                        const std::vector<double>& interfaces_x) {
    EnrichmentMap map;
    map.n_materials = static_cast<int>(interfaces_x.size()) + 1;
    const int np = basis.nodes.size();
    map.node_materials.assign(np, {});
    auto material_of = [&](double x) {
        int m = 0;
        for (double c : interfaces_x)
            if (x > c) ++m;
        return m;
    };
    for (int i = 0; i < np; ++i) {
        const double x = basis.nodes.coords[i].x;
        const double a = basis.nodes.a[i];
        const int lo = material_of(x - a);
        const int hi = material_of(x + a);
        for (int m = lo; m <= hi; ++m) map.node_materials[i].push_back(m);
    }
    map.offsets.assign(np + 1, 0);
    for (int i = 0; i < np; ++i) {
        const int n = map.enriched(i) ? static_cast<int>(map.node_materials[i].size()) : 1;
        map.offsets[i + 1] = map.offsets[i] + n;
    }
    return map;
}

EnrichedExtraction compute_enriched_extraction(const RKPMBasis& basis,
                                               const LagrangeSpace& space,
                                               const EnrichmentMap& map,
                                               const MidgroundSpace* mid) {
    EnrichedExtraction out;
    out.map = map;
    out.cols = space.ndofs;

    if (!mid) {
        ExtractionOperator plain = compute_extraction(basis, space);
        out.plain = std::move(plain.M);
        out.per_material.assign(map.n_materials, out.plain);
    } else {
        if (map.mid_materials.empty())
            throw InvalidArgument("enrichment map has no midground masks");
        DoubleExtraction dbl = compute_double_extraction(basis, *mid, space);
        out.plain = dbl.composite.M;

        // midground dof -> cell
        std::vector<int> dof_cell(mid->space.ndofs, -1);
        for (int e = 0; e < mid->space.mesh.n_cells(); ++e)
            for (int g : mid->space.cell_dofs[e]) dof_cell[g] = e;

        out.per_material.reserve(map.n_materials);
        for (int m = 0; m < map.n_materials; ++m) {
            SpMat gated = dbl.M1;
            for (int k = 0; k < gated.outerSize(); ++k)
                for (SpMat::InnerIterator it(gated, k); it; ++it) {
                    const auto& mats = map.mid_materials[dof_cell[it.col()]];
                    if (std::find(mats.begin(), mats.end(), m) == mats.end())
                        it.valueRef() = 0.0;
                }
            gated.prune(0.0, 0.0);
            SpMat comp = (gated * dbl.M2).pruned(kDropTol, 1.0);
            comp.makeCompressed();
            out.per_material.push_back(std::move(comp));
        }
    }

    // exact activity: sweep cells, mark the expanded rows that receive entries
    std::vector<char> active(map.expanded_dofs(), 0);
    for (int c = 0; c < space.mesh.n_cells(); ++c) {
        const int m = space.mesh.cells[c].material;
        const SpMat& mat = out.per_material[m];
        for (int g : space.cell_dofs[c]) {
            for (SpMat::InnerIterator it(out.plain, g); it; ++it)
                if (!map.enriched(it.row())) active[map.offsets[it.row()]] = 1;
            for (SpMat::InnerIterator it(mat, g); it; ++it) {
                if (!map.enriched(it.row())) continue;
                const int dof = map.dof_of(it.row(), m);
                if (dof >= 0) active[dof] = 1;
            }
        }
    }
    for (int i = 0; i < static_cast<int>(active.size()); ++i)
        if (active[i]) out.active_rows.push_back(i);
    return out;
}

ReductionOp::ReductionOp(const ExtractionOperator& plain)
    : plain_(&plain), active_(plain.active_rows),
      n_expanded_(plain.rows()) {
    expanded_to_active_.assign(n_expanded_, -1);
    for (int i = 0; i < n_reduced(); ++i) expanded_to_active_[active_[i]] = i;
}

ReductionOp::ReductionOp(const EnrichedExtraction& enriched)
    : enriched_(&enriched), active_(enriched.active_rows),
      n_expanded_(enriched.map.expanded_dofs()) {
    expanded_to_active_.assign(n_expanded_, -1);
    for (int i = 0; i < n_reduced(); ++i) expanded_to_active_[active_[i]] = i;
}

ReductionOp::CellBlock ReductionOp::cell_block(const LagrangeSpace& space,
                                               int cell) const {
    CellBlock blk;
    const auto& dofs = space.cell_dofs[cell];
    const int nloc = static_cast<int>(dofs.size());
    std::unordered_map<int, int> row_pos;
    std::vector<Eigen::Triplet<double>> entries;

    auto push = [&](int expanded_row, int j, double v) {
        const int a = expanded_to_active_[expanded_row];
        if (a < 0) return;
        auto [it, inserted] = row_pos.try_emplace(a, static_cast<int>(blk.rows.size()));
        if (inserted) blk.rows.push_back(a);
        entries.emplace_back(it->second, j, v);
    };

    if (!enriched_) {
        const SpMat& M = plain_->M;
        for (int j = 0; j < nloc; ++j)
            for (SpMat::InnerIterator it(M, dofs[j]); it; ++it)
                push(static_cast<int>(it.row()), j, it.value());
    } else {
        const EnrichmentMap& map = enriched_->map;
        const int m = space.mesh.cells[cell].material;
        const SpMat& gated = enriched_->per_material[m];
        for (int j = 0; j < nloc; ++j) {
            for (SpMat::InnerIterator it(enriched_->plain, dofs[j]); it; ++it)
                if (!map.enriched(static_cast<int>(it.row())))
                    push(map.offsets[it.row()], j, it.value());
            for (SpMat::InnerIterator it(gated, dofs[j]); it; ++it) {
                if (!map.enriched(static_cast<int>(it.row()))) continue;
                const int dof = map.dof_of(static_cast<int>(it.row()), m);
                if (dof >= 0) push(dof, j, it.value());
            }
        }
    }

    blk.B = Eigen::MatrixXd::Zero(static_cast<int>(blk.rows.size()), nloc);
    for (const auto& t : entries) blk.B(t.row(), t.col()) += t.value();
    return blk;
}

Eigen::VectorXd ReductionOp::local_coefficients(const LagrangeSpace& space, int cell,
                                                const Eigen::VectorXd& d_reduced) const {
    const CellBlock blk = cell_block(space, cell);
    Eigen::VectorXd dr(blk.rows.size());
    for (std::size_t i = 0; i < blk.rows.size(); ++i) dr(i) = d_reduced(blk.rows[i]);
    return blk.B.transpose() * dr;
}

Eigen::VectorXd ReductionOp::push_to_foreground(const LagrangeSpace& space,
                                                const Eigen::VectorXd& d_reduced) const {
    if (d_reduced.size() != n_reduced())
        throw DimensionMismatch("reduced coefficient size");
    Eigen::VectorXd u = Eigen::VectorXd::Zero(space.ndofs);
    std::vector<char> set(space.ndofs, 0);
    for (int c = 0; c < space.mesh.n_cells(); ++c) {
        const Eigen::VectorXd loc = local_coefficients(space, c, d_reduced);
        const auto& dofs = space.cell_dofs[c];
        for (std::size_t j = 0; j < dofs.size(); ++j) {
            if (!set[dofs[j]]) {
                u(dofs[j]) = loc(j);
                set[dofs[j]] = 1;
            }
        }
    }
    return u;
}

Eigen::VectorXd column_sums(const SpMat& m) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m.cols());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) s(it.col()) += it.value();
    return s;
}

} // namespace rkpm
