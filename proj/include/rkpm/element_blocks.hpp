#pragma once

#include <Eigen/Dense>

#include "rkpm/forms.hpp"
#include "rkpm/space.hpp"

namespace rkpm {

/// Dense element contribution; vector problems use component-major local
/// ordering (comp * nloc + local_dof).
struct LocalBlock {
    Eigen::MatrixXd K;
    Eigen::VectorXd F;
};

LocalBlock volume_block(const ProblemForm& form, const LagrangeSpace& space, int cell);
LocalBlock boundary_block(const ProblemForm& form, const LagrangeSpace& space,
                          const Facet& facet);
/// Interface residual over a conforming facet pair; local layout
/// [side-0 dofs | side-1 dofs], each side component-major.
LocalBlock interface_block(const ProblemForm& form, const LagrangeSpace& space,
                           const Facet& facet);

} // namespace rkpm
