#include "rkpm/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>

#include "rkpm/errors.hpp"
#include "rkpm/parallel.hpp"

namespace rkpm {

Rect NodeSet::bounding_box() const {
    Rect r{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Vec2& p : coords) {
        r.x0 = std::min(r.x0, p.x);
        r.y0 = std::min(r.y0, p.y);
        r.x1 = std::max(r.x1, p.x);
        r.y1 = std::max(r.y1, p.y);
    }
    return r;
}

NodeSet generate_jittered_grid(int nx, int ny, Rect domain, double epsilon,
                               std::uint64_t seed) {
    if (nx < 2 || ny < 2)
        throw InvalidArgument("jittered grid needs nx, ny >= 2");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw InvalidArgument("jitter epsilon must lie in [0, 1]");
    if (!domain.valid())
        throw InvalidArgument("degenerate domain rectangle");

    const double hx = domain.width() / (nx - 1);
    const double hy = domain.height() / (ny - 1);

    std::mt19937_64 rng(seed);
    auto eta = [&rng]() {
        // uniform in [-1, 1); fixed mapping, portable across platforms
        return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
    };

    NodeSet out;
    out.seed = seed;
    out.coords.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Vec2 p{domain.x0 + i * hx, domain.y0 + j * hy};
            if (epsilon > 0.0) {
                p.x += epsilon * hx * eta();
                p.y += epsilon * hy * eta();
            } else {
                // keep the draw sequence independent of epsilon == 0
            }
            out.coords.push_back(p);
        }
    }
    return out;
}

void compute_nodal_spacing(NodeSet& nodes, int neighbor_count) {
    const int np = nodes.size();
    if (np <= neighbor_count)
        throw InvalidArgument("node count must exceed neighbor_count");
    if (neighbor_count < 1)
        throw InvalidArgument("neighbor_count must be positive");

    nodes.h.assign(np, 0.0);

#pragma omp parallel
    {
        std::vector<std::pair<double, int>> d2;
        d2.reserve(np - 1);
#pragma omp for schedule(static)
        for (int i = 0; i < np; ++i) {
            d2.clear();
            for (int j = 0; j < np; ++j) {
                if (j == i) continue;
                d2.emplace_back(dist2(nodes.coords[i], nodes.coords[j]), j);
            }
            std::nth_element(d2.begin(), d2.begin() + (neighbor_count - 1), d2.end());
            nodes.h[i] = std::sqrt(d2[neighbor_count - 1].first);
        }
    }

    double sum = 0.0;
    for (double v : nodes.h) sum += v;
    nodes.avg_spacing = sum / np;
}

int assign_supports(NodeSet& nodes, double c_a, int min_cover) {
    if (c_a <= 0.0) throw InvalidArgument("c_a must be positive");
    if (nodes.h.empty()) throw InvalidArgument("nodal spacing not computed");

    nodes.c_a = c_a;
    nodes.a.resize(nodes.h.size());
    for (std::size_t i = 0; i < nodes.h.size(); ++i) nodes.a[i] = c_a * nodes.h[i];

    int under = 0;
    if (min_cover > 0) {
        SpatialIndex index(nodes);
        const Rect box = nodes.bounding_box();
        const int ns = 16;
        for (int j = 0; j <= ns; ++j) {
            for (int i = 0; i <= ns; ++i) {
                Vec2 p{box.x0 + box.width() * i / ns, box.y0 + box.height() * j / ns};
                if (static_cast<int>(index.covering_nodes(p).size()) < min_cover)
                    ++under;
            }
        }
        if (under > 0)
            std::cerr << "warning: " << under << " sample points covered by fewer than "
                      << min_cover << " supports (c_a = " << c_a << ")\n";
    }
    return under;
}

SpatialIndex::SpatialIndex(const NodeSet& nodes)
    : coords_(nodes.coords), radii_(nodes.a) {
    if (radii_.size() != coords_.size())
        throw InvalidArgument("support radii not assigned before index build");

    box_ = nodes.bounding_box();
    double max_a = 0.0;
    for (double a : radii_) {
        if (a <= 0.0) throw InvalidArgument("non-positive support radius");
        max_a = std::max(max_a, a);
    }
    bin_size_ = std::max(max_a, 1e-300);
    nx_ = std::max(1, static_cast<int>(std::floor(box_.width() / bin_size_)));
    ny_ = std::max(1, static_cast<int>(std::floor(box_.height() / bin_size_)));
    // floor() keeps every bin at least bin_size_ wide
    bins_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (int i = 0; i < static_cast<int>(coords_.size()); ++i)
        bins_[bin_of(coords_[i])].push_back(i);
}

int SpatialIndex::bin_of(Vec2 p) const {
    int ix = static_cast<int>(std::floor((p.x - box_.x0) / box_.width() * nx_));
    int iy = static_cast<int>(std::floor((p.y - box_.y0) / box_.height() * ny_));
    ix = std::clamp(ix, 0, nx_ - 1);
    iy = std::clamp(iy, 0, ny_ - 1);
    return iy * nx_ + ix;
}

std::vector<int> SpatialIndex::candidates(Vec2 x) const {
    std::vector<int> out;
    const int b = bin_of(x);
    const int bx = b % nx_, by = b / nx_;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const int ix = bx + dx, iy = by + dy;
            if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) continue;
            const auto& bin = bins_[static_cast<std::size_t>(iy) * nx_ + ix];
            out.insert(out.end(), bin.begin(), bin.end());
        }
    }
    return out;
}

std::vector<int> SpatialIndex::covering_nodes(Vec2 x) const {
    std::vector<int> out;
    for (int id : candidates(x)) {
        // strict inequality on the distance itself so exact-boundary points
        // resolve identically to a brute-force ||x - x_I|| < a_I scan
        if (dist(x, coords_[id]) < radii_[id]) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace rkpm
