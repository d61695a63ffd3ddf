#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "rkpm/basis.hpp"
#include "rkpm/space.hpp"

namespace rkpm {

using SpMat = Eigen::SparseMatrix<double>;

/// Sparse NP x nu operator with M_Ij = Psi_I(x_j): rows are background RKPM
/// functions, columns foreground Lagrange dofs. Rows without entries (nodes
/// whose support contains no foreground dof) are tracked as inactive.
struct ExtractionOperator {
    SpMat M;
    std::vector<int> active_rows;

    int rows() const { return static_cast<int>(M.rows()); }
    int cols() const { return static_cast<int>(M.cols()); }
};

ExtractionOperator compute_extraction(const RKPMBasis& basis,
                                      const LagrangeSpace& space);

/// Double interpolation: M1 maps RKPM onto the midground DG space, M2 the
/// midground onto the foreground; the composite M = M1 M2 restores
/// continuity across hanging-node edges.
struct DoubleExtraction {
    SpMat M1; // NP x mu
    SpMat M2; // mu x nu
    ExtractionOperator composite;
};

DoubleExtraction compute_double_extraction(const RKPMBasis& basis,
                                           const MidgroundSpace& mid,
                                           const LagrangeSpace& space);

/// Heaviside enrichment bookkeeping: which materials each background node's
/// support touches, the expanded dof table, and (with a midground) the
/// per-midground-cell material masks.
struct EnrichmentMap {
    int n_materials = 1;
    std::vector<std::vector<int>> node_materials; // sorted, per node
    std::vector<int> offsets;                     // size NP + 1
    std::vector<std::vector<int>> mid_materials;  // per midground cell; empty if none

    int expanded_dofs() const { return offsets.back(); }
    bool enriched(int node) const { return node_materials[node].size() >= 2; }
    int dof_of(int node, int material) const {
        if (!enriched(node)) return offsets[node];
        const auto& mats = node_materials[node];
        for (std::size_t i = 0; i < mats.size(); ++i)
            if (mats[i] == material) return offsets[node] + static_cast<int>(i);
        return -1;
    }
    int n_enriched_nodes() const {
        int c = 0;
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i)
            if (enriched(static_cast<int>(i))) ++c;
        return c;
    }
};

/// A node is enriched iff foreground cells of two or more materials overlap
/// its support disk. With a midground, each midground cell's material mask
/// is the set of materials of the foreground cells covering it.
EnrichmentMap build_enrichment(const Mesh& fg, const RKPMBasis& basis,
                               const MidgroundSpace* mid = nullptr);

/// Builds an analytic enrichment map from vertical material interfaces at
/// the given x positions (used by the classic Gauss baseline, which gates
/// with exact characteristic functions instead of mesh labels).
EnrichmentMap build_enrichment_analytic(const RKPMBasis& basis,
                                        const std::vector<double>& interfaces_x);

/// Extraction with enrichment-expanded rows. `plain` carries the rows of
/// unenriched nodes; `per_material[m]` the midground-gated composite used
/// for enriched rows active on material-m cells (for single interpolation
/// all per-material blocks equal `plain`, and the material resolution
/// happens cell-wise at assembly time).
struct EnrichedExtraction {
    EnrichmentMap map;
    SpMat plain;
    std::vector<SpMat> per_material;
    int cols = 0;
    std::vector<int> active_rows; // expanded dof ids with assembly support
};

EnrichedExtraction compute_enriched_extraction(const RKPMBasis& basis,
                                               const LagrangeSpace& space,
                                               const EnrichmentMap& map,
                                               const MidgroundSpace* mid = nullptr);

/// Uniform assembly-facing view of any extraction flavor. Reduced dofs are
/// compressed to active rows; `cell_block` returns the local reduction block
/// for one cell (rows: positions into the active set).
class ReductionOp {
public:
    explicit ReductionOp(const ExtractionOperator& plain);
    explicit ReductionOp(const EnrichedExtraction& enriched);

    int n_reduced() const { return static_cast<int>(active_.size()); }
    int n_expanded() const { return n_expanded_; }
    bool is_enriched() const { return enriched_ != nullptr; }
    const std::vector<int>& active_rows() const { return active_; }
    const EnrichedExtraction* enriched() const { return enriched_; }
    const ExtractionOperator* plain() const { return plain_; }

    struct CellBlock {
        std::vector<int> rows;  // compressed reduced indices
        Eigen::MatrixXd B;      // n_rows x n_local_dofs
    };
    CellBlock cell_block(const LagrangeSpace& space, int cell) const;

    /// Foreground coefficients on one cell from reduced coefficients
    /// (one scalar component): B^T d restricted to the cell's dofs.
    Eigen::VectorXd local_coefficients(const LagrangeSpace& space, int cell,
                                       const Eigen::VectorXd& d_reduced) const;

    /// Scatter reduced coefficients to a foreground vector; entries of dofs
    /// shared between materials take the value from their lowest cell id.
    Eigen::VectorXd push_to_foreground(const LagrangeSpace& space,
                                       const Eigen::VectorXd& d_reduced) const;

private:
    const ExtractionOperator* plain_ = nullptr;
    const EnrichedExtraction* enriched_ = nullptr;
    std::vector<int> active_;
    std::vector<int> expanded_to_active_;
    int n_expanded_ = 0;
};

/// Column sums of an operator (= 1 within 1e-11 for unenriched operators,
/// by partition of unity at the foreground nodes).
Eigen::VectorXd column_sums(const SpMat& m);

} // namespace rkpm
