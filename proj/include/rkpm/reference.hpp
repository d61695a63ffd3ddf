#pragma once

#include "rkpm/assembly.hpp"
#include "rkpm/solve_post.hpp"

namespace rkpm::reference {

/// Serial reference implementations of the OpenMP kernels: same element
/// math, plain single-threaded loops. Kept for the equivalence tests and
/// the bench target; never used by the studies.

Eigen::SparseMatrix<double> extraction_serial(const RKPMBasis& basis,
                                              const LagrangeSpace& space);

AssembledSystem assemble_foreground_serial(const ProblemForm& form,
                                           const LagrangeSpace& space);

ErrorNorms error_norms_serial(const ProblemForm& form, const LagrangeSpace& space,
                              const LocalField& field, int order);

std::vector<double> nodal_spacing_serial(const NodeSet& nodes, int neighbor_count);

} // namespace rkpm::reference
