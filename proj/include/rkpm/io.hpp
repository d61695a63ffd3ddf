#pragma once

#include <string>

#include <Eigen/Core>

#include "rkpm/extraction.hpp"
#include "rkpm/mesh.hpp"
#include "rkpm/pointcloud.hpp"

namespace rkpm {

/// Plain-text node set: `# NP=<n> c_a=<v> seed=<s>` header then one
/// `x y h a` line per node.
void write_nodeset(const NodeSet& nodes, const std::string& path);
NodeSet read_nodeset(const std::string& path);

/// Plain-text mesh: vertex block (`x y`), cell block (kind + vertex ids +
/// material label), facet block (vertex ids + tag); `solution` appends one
/// value line per dof when provided.
void write_mesh(const Mesh& mesh, const std::string& path,
                const Eigen::VectorXd* solution = nullptr);

/// Coordinate-list operator dump: header `rows cols nnz`, then `I j value`.
void write_operator(const SpMat& m, const std::string& path);

} // namespace rkpm
