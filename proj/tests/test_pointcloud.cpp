#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rkpm/errors.hpp"
#include "rkpm/pointcloud.hpp"

using namespace rkpm;

namespace {

// brute-force k-nearest spacing, ties by lowest index
double knn_spacing_bruteforce(const NodeSet& n, int i, int k) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < n.size(); ++j)
        if (j != i) d.emplace_back(dist2(n.coords[i], n.coords[j]), j);
    std::sort(d.begin(), d.end());
    return std::sqrt(d[k - 1].first);
}

std::vector<int> covering_bruteforce(const NodeSet& n, Vec2 x) {
    std::vector<int> out;
    for (int i = 0; i < n.size(); ++i)
        if (dist(x, n.coords[i]) < n.a[i]) out.push_back(i);
    return out;
}

NodeSet make_set(int nx, int ny, double eps, std::uint64_t seed, double c_a = 2.0) {
    NodeSet n = generate_jittered_grid(nx, ny, Rect{0, 0, 1, 1}, eps, seed);
    compute_nodal_spacing(n, 4);
    assign_supports(n, c_a);
    return n;
}

} // namespace

TEST_CASE("zero perturbation reproduces the tensor grid") {
    NodeSet n = generate_jittered_grid(3, 3, Rect{0, 0, 1, 1}, 0.0, 42);
    REQUIRE(n.size() == 9);
    int idx = 0;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i, ++idx) {
            CHECK(n.coords[idx].x == 0.5 * i);
            CHECK(n.coords[idx].y == 0.5 * j);
        }
}

TEST_CASE("jitter stays within epsilon h per coordinate") {
    const double eps = 0.5; // the setting used by every shipped study
    NodeSet n = generate_jittered_grid(9, 9, Rect{0, 0, 1, 1}, eps, 3);
    const double h = 1.0 / 8.0;
    int idx = 0;
    for (int j = 0; j < 9; ++j)
        for (int i = 0; i < 9; ++i, ++idx) {
            CHECK(std::abs(n.coords[idx].x - i * h) <= eps * h);
            CHECK(std::abs(n.coords[idx].y - j * h) <= eps * h);
        }
}

TEST_CASE("same seed gives bit-identical coordinates") {
    NodeSet a = generate_jittered_grid(7, 5, Rect{0, 0, 2, 1}, 0.4, 99);
    NodeSet b = generate_jittered_grid(7, 5, Rect{0, 0, 2, 1}, 0.4, 99);
    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) {
        CHECK(a.coords[i].x == b.coords[i].x);
        CHECK(a.coords[i].y == b.coords[i].y);
    }
}

TEST_CASE("epsilon outside [0,1] and degenerate domains are rejected") {
    CHECK_THROWS_AS(generate_jittered_grid(3, 3, Rect{0, 0, 1, 1}, -0.1, 1),
                    InvalidArgument);
    CHECK_THROWS_AS(generate_jittered_grid(3, 3, Rect{0, 0, 1, 1}, 1.5, 1),
                    InvalidArgument);
    CHECK_THROWS_AS(generate_jittered_grid(3, 3, Rect{1, 0, 1, 1}, 0.5, 1),
                    InvalidArgument);
}

TEST_CASE("interior node of a uniform grid has h_I equal to the spacing") {
    NodeSet n = generate_jittered_grid(5, 5, Rect{0, 0, 1, 1}, 0.0, 0);
    compute_nodal_spacing(n, 4);
    // node (2,2) = index 12 has four axis neighbors at distance 0.25
    CHECK(n.h[12] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("corner-node spacing matches brute-force neighbor sort") {
    NodeSet n = generate_jittered_grid(3, 3, Rect{0, 0, 1, 1}, 0.0, 0);
    compute_nodal_spacing(n, 4);
    CHECK(n.h[0] == doctest::Approx(knn_spacing_bruteforce(n, 0, 4)).epsilon(1e-14));
}

TEST_CASE("neighbor_count=1 on two nodes gives h = their distance") {
    NodeSet n;
    n.coords = {{0, 0}, {0.7, 0}};
    compute_nodal_spacing(n, 1);
    CHECK(n.h[0] == doctest::Approx(0.7));
    CHECK(n.h[1] == doctest::Approx(0.7));
}

TEST_CASE("spacing fails when NP <= neighbor_count") {
    NodeSet n;
    n.coords = {{0, 0}, {1, 0}};
    CHECK_THROWS_AS(compute_nodal_spacing(n, 4), InvalidArgument);
}

TEST_CASE("support assignment is linear in c_a") {
    NodeSet n = make_set(6, 6, 0.5, 11, 2.0);
    std::vector<double> a1 = n.a;
    assign_supports(n, 4.0);
    for (int i = 0; i < n.size(); ++i) {
        CHECK(n.a[i] == doctest::Approx(2.0 * a1[i]).epsilon(1e-15));
        CHECK(n.a[i] == doctest::Approx(4.0 * n.h[i]).epsilon(1e-15));
    }
}

TEST_CASE("covering count at a node of a uniform 5x5 grid meets n_p for n=1") {
    NodeSet n = make_set(5, 5, 0.0, 0, 2.0);
    SpatialIndex idx(n);
    // exhaustive check at every node
    for (int i = 0; i < n.size(); ++i) {
        const auto cover = covering_bruteforce(n, n.coords[i]);
        CHECK(cover.size() >= 3);
        CHECK(idx.covering_nodes(n.coords[i]) == cover);
    }
}

TEST_CASE("covering query equals brute-force scan on jittered sets") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        NodeSet n = make_set(10, 10, 0.5, seed, 2.0);
        SpatialIndex idx(n);
        std::mt19937_64 rng(seed * 977 + 1);
        for (int t = 0; t < 100; ++t) {
            const Vec2 x{1.2 * ((rng() >> 11) * 0x1.0p-53) - 0.1,
                         1.2 * ((rng() >> 11) * 0x1.0p-53) - 0.1};
            CHECK(idx.covering_nodes(x) == covering_bruteforce(n, x));
        }
    }
}

TEST_CASE("point far outside all supports has empty covering set") {
    NodeSet n = make_set(5, 5, 0.3, 8, 2.0);
    SpatialIndex idx(n);
    CHECK(idx.covering_nodes({50.0, 50.0}).empty());
}

TEST_CASE("h is invariant under node permutation (tie-free set)") {
    NodeSet n = make_set(8, 8, 0.5, 17, 2.0);
    NodeSet p = n;
    // reverse the node order
    std::reverse(p.coords.begin(), p.coords.end());
    compute_nodal_spacing(p, 4);
    for (int i = 0; i < n.size(); ++i)
        CHECK(p.h[n.size() - 1 - i] == doctest::Approx(n.h[i]).epsilon(1e-14));
}
