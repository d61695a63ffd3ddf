#pragma once

#include <cstdint>
#include <vector>

#include "rkpm/geometry.hpp"

namespace rkpm {

/// RKPM node distribution. Coordinates, per-node nodal spacing h_I,
/// per-node support radius a_I = c_a * h_I, and the average spacing used
/// for Nitsche penalty scaling.
struct NodeSet {
    std::vector<Vec2> coords;
    std::vector<double> h; // nodal spacing h_I
    std::vector<double> a; // support radius a_I
    double c_a = 0.0;      // normalized support size
    double avg_spacing = 0.0;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(coords.size()); }
    Rect bounding_box() const;
};

/// Perturbs an nx-by-ny tensor grid over `domain`: each coordinate moves by
/// epsilon * h * eta with eta drawn uniformly from [-1, 1). The generator is
/// std::mt19937_64 seeded with `seed`; eta = 2 * (next() >> 11) * 2^-53 - 1,
/// drawn x-then-y per node in row-major node order, so runs are reproducible
/// across platforms.
NodeSet generate_jittered_grid(int nx, int ny, Rect domain, double epsilon,
                               std::uint64_t seed);

/// h_I = distance from node I to the farthest of its `neighbor_count`
/// nearest neighbors (self excluded, ties broken by lowest node index).
/// Fills nodes.h and nodes.avg_spacing.
void compute_nodal_spacing(NodeSet& nodes, int neighbor_count = 4);

/// a_I = c_a * h_I. When min_cover > 0, probes a sample grid over the
/// bounding box and warns (stderr) if any probe is covered by fewer than
/// min_cover supports; returns the number of under-covered probes.
int assign_supports(NodeSet& nodes, double c_a, int min_cover = 0);

/// Uniform-bin acceleration grid for covering-set queries. Bin size is at
/// least max a_I, so the 3x3 bin neighborhood of a query point is a superset
/// of its covering set. Immutable after construction.
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(const NodeSet& nodes);

    /// Node ids whose support covers x (strict ||x - x_I|| < a_I),
    /// sorted ascending.
    std::vector<int> covering_nodes(Vec2 x) const;

    /// Superset of covering_nodes(x): all nodes in the 3x3 bin patch.
    std::vector<int> candidates(Vec2 x) const;

    /// Ids of the k nearest nodes to x (ties by lowest id). Used by the
    /// covering fallback diagnostics; not a covering query.
    bool empty() const { return nx_ == 0; }

private:
    int bin_of(Vec2 p) const;

    std::vector<Vec2> coords_;
    std::vector<double> radii_;
    std::vector<std::vector<int>> bins_;
    Rect box_;
    double bin_size_ = 0.0;
    int nx_ = 0, ny_ = 0;
};

} // namespace rkpm
