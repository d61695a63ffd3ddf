#pragma once

#include <Eigen/Sparse>

#include "rkpm/extraction.hpp"
#include "rkpm/forms.hpp"
#include "rkpm/space.hpp"

namespace rkpm {

/// Sparse symmetric stiffness + load vector. `block_size` is the dof count
/// per component (K is components*block_size square). Reduced systems carry
/// the map from compressed rows back to expanded background dofs.
struct AssembledSystem {
    SpMat K;
    Eigen::VectorXd F;
    int components = 1;
    int block_size = 0;
    std::vector<int> reduced_map; // empty for foreground systems

    int size() const { return components * block_size; }
};

/// Foreground-sized assembly of a weak form: cell terms, boundary Nitsche /
/// traction terms per facet tag, and (on DG spaces) interface residuals.
AssembledSystem assemble_foreground(const ProblemForm& form,
                                    const LagrangeSpace& space);

/// Galerkin reduction K_hat = M K M^T, F_hat = M F through an unenriched
/// operator, applied per component block.
AssembledSystem reduce_system(const AssembledSystem& sys, const ReductionOp& op);

/// Direct assembly of the reduced system through cell-local reduction
/// blocks. Required for enriched operators (whose interface residuals only
/// exist after reduction); equivalent to assemble_foreground + reduce_system
/// for unenriched operators.
AssembledSystem assemble_reduced(const ProblemForm& form, const LagrangeSpace& space,
                                 const ReductionOp& op);

/// Classic-RKPM Gauss baseline on a rectangular domain: the background basis
/// is evaluated directly on a structured quadrature-cell grid (cell size =
/// average nodal spacing / cells_per_spacing). Supports the Poisson and
/// multimaterial heat forms; enriched heat gates contributions with the
/// analytic characteristic functions in `emap`.
struct ClassicQuadOpts {
    int cells_per_spacing = 1;
    int points_per_cell = 6; // per axis; 6 for n=1, 8 for n=2
};

AssembledSystem assemble_classic(const ProblemForm& form, const RKPMBasis& basis,
                                 Rect domain, const ClassicQuadOpts& opts,
                                 const EnrichmentMap* emap = nullptr);

/// L2/H1 errors of a classic-RKPM solution, integrated on the same
/// structured Gauss grid.
struct ClassicNorms {
    double l2 = 0, h1 = 0;
};
ClassicNorms classic_error_norms(const ProblemForm& form, const RKPMBasis& basis,
                                 Rect domain, const ClassicQuadOpts& opts,
                                 const EnrichmentMap* emap,
                                 const Eigen::VectorXd& d,
                                 const std::vector<int>& reduced_map);

} // namespace rkpm
