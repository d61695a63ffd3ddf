#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rkpm/basis.hpp"
#include "rkpm/errors.hpp"
#include "rkpm/kernel.hpp"

using namespace rkpm;

namespace {

RKPMBasis make_test_basis(int nx, double eps, std::uint64_t seed, int order) {
    NodeSet n = generate_jittered_grid(nx, nx, Rect{0, 0, 1, 1}, eps, seed);
    compute_nodal_spacing(n, 4);
    assign_supports(n, order + 1.0);
    return make_basis(std::move(n), order);
}

std::vector<Vec2> interior_probes(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto u = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
    std::vector<Vec2> out;
    for (int i = 0; i < count; ++i) out.push_back({0.1 + 0.8 * u(), 0.1 + 0.8 * u()});
    return out;
}

} // namespace

TEST_CASE("cubic B-spline closed-form values") {
    auto k0 = cubic_bspline(0.0);
    CHECK(k0.value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(k0.dz == 0.0);

    auto k1 = cubic_bspline(1.0);
    CHECK(k1.value == 0.0);
    CHECK(k1.dz == 0.0);

    auto kh = cubic_bspline(0.5);
    CHECK(kh.value == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    // C2 at the knot and the boundary
    const double e = 1e-9;
    CHECK(cubic_bspline(0.5 - e).dzz == doctest::Approx(cubic_bspline(0.5 + e).dzz).epsilon(1e-6));
    CHECK(cubic_bspline(1.0 - e).dzz == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("cartesian kernel derivatives match finite differences") {
    const double a = 0.37;
    for (Vec2 d : {Vec2{0.1, 0.05}, Vec2{-0.21, 0.11}, Vec2{0.3, -0.17}, Vec2{1e-14, 0}}) {
        const KernelPoint k = kernel_cartesian(d, a, 2);
        const double e = 1e-7;
        auto w = [&](Vec2 p) { return kernel_cartesian(p, a, 0).w; };
        const double fx = (w({d.x + e, d.y}) - w({d.x - e, d.y})) / (2 * e);
        const double fy = (w({d.x, d.y + e}) - w({d.x, d.y - e})) / (2 * e);
        CHECK(k.grad.x == doctest::Approx(fx).epsilon(1e-5));
        CHECK(k.grad.y == doctest::Approx(fy).epsilon(1e-5));
        // larger step for second differences: eps / e^2 rounding otherwise
        const double e2 = 1e-4;
        const double fxx =
            (w({d.x + e2, d.y}) - 2 * w(d) + w({d.x - e2, d.y})) / (e2 * e2);
        const double fyy =
            (w({d.x, d.y + e2}) - 2 * w(d) + w({d.x, d.y - e2})) / (e2 * e2);
        CHECK(k.hess.xx == doctest::Approx(fxx).epsilon(1e-3));
        CHECK(k.hess.yy == doctest::Approx(fyy).epsilon(1e-3));
    }
}

TEST_CASE("moment matrix matches a dense double-loop oracle") {
    RKPMBasis b = make_test_basis(5, 0.0, 0, 1);
    std::mt19937_64 rng(5);
    auto u = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
    for (int t = 0; t < 10; ++t) {
        const Vec2 x{0.1 + 0.8 * u(), 0.1 + 0.8 * u()};
        const auto cover = b.index.covering_nodes(x);
        const MomentMatrices mm = moment_matrix(b, x, cover, 0);

        // independent summation with explicit loops over the scaled monomials
        Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
        for (int id : cover) {
            const Vec2 d = x - b.nodes.coords[id];
            const double z = d.norm() / b.nodes.a[id];
            const double w = cubic_bspline(z).value;
            const double hx = d.x / b.mono_scale, hy = d.y / b.mono_scale;
            const double H[3] = {1.0, hx, hy};
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) M(r, c) += H[r] * H[c] * w;
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(mm.M(r, c) == doctest::Approx(M(r, c)).epsilon(1e-13));
        // exact symmetry by construction
        CHECK((mm.M - mm.M.transpose()).norm() == 0.0);
    }
}

TEST_CASE("undersized covering set raises SingularMoment") {
    RKPMBasis b = make_test_basis(5, 0.0, 0, 2);
    // a point covered by fewer than n_p = 6 nodes: shrink supports locally
    for (double& a : b.nodes.a) a *= 0.35;
    b.index = SpatialIndex(b.nodes);
    CHECK_THROWS_AS(shape_functions(b, {0.5, 0.5}, 0), SingularMoment);
}

TEST_CASE("no coverage raises NotCovered") {
    RKPMBasis b = make_test_basis(5, 0.0, 0, 1);
    CHECK_THROWS_AS(shape_functions(b, {7.0, 7.0}, 0), NotCovered);
}

TEST_CASE("partition of unity and linear reproduction") {
    for (int order : {1, 2}) {
        RKPMBasis b = make_test_basis(10, 0.5, 21, order);
        for (const Vec2& x : interior_probes(50, 77)) {
            const ShapeEval ev = shape_functions(b, x, 0);
            double s = 0;
            Vec2 sx{0, 0};
            for (std::size_t q = 0; q < ev.ids.size(); ++q) {
                s += ev.values[q];
                sx += ev.values[q] * b.nodes.coords[ev.ids[q]];
            }
            CHECK(std::abs(s - 1.0) <= 1e-11);
            CHECK(std::abs(sx.x - x.x) <= 1e-10 * b.nodes.avg_spacing);
            CHECK(std::abs(sx.y - x.y) <= 1e-10 * b.nodes.avg_spacing);
        }
    }
}

TEST_CASE("gradients and hessians match finite differences") {
    RKPMBasis b = make_test_basis(10, 0.5, 33, 2);
    const double h = b.nodes.avg_spacing;
    const double e = 1e-6 * h;
    const double e2 = 1e-4 * h; // second differences need a larger step
    int checked = 0;
    for (const Vec2& x : interior_probes(25, 13)) {
        const ShapeEval ev = shape_functions(b, x, 2);
        auto at = [&](Vec2 p, int id) {
            const ShapeEval e2 = shape_functions(b, p, 0);
            for (std::size_t q = 0; q < e2.ids.size(); ++q)
                if (e2.ids[q] == id) return e2.values[q];
            return 0.0;
        };
        for (std::size_t q = 0; q < ev.ids.size(); ++q) {
            const int id = ev.ids[q];
            if (std::abs(ev.values[q]) < 1e-3) continue; // skip near-boundary noise
            const double gx = (at({x.x + e, x.y}, id) - at({x.x - e, x.y}, id)) / (2 * e);
            const double gy = (at({x.x, x.y + e}, id) - at({x.x, x.y - e}, id)) / (2 * e);
            CHECK(ev.grads[q].x == doctest::Approx(gx).epsilon(1e-5));
            CHECK(ev.grads[q].y == doctest::Approx(gy).epsilon(1e-5));
            const double hxx =
                (at({x.x + e2, x.y}, id) - 2 * at(x, id) + at({x.x - e2, x.y}, id)) /
                (e2 * e2);
            CHECK(ev.hessians[q].xx == doctest::Approx(hxx).epsilon(1e-3));
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("quadratic basis reproduces x^2; linear basis does not") {
    RKPMBasis b2 = make_test_basis(10, 0.5, 55, 2);
    const auto probes = interior_probes(20, 3);
    ReproReport r2 = reproduce_check(b2, probes);
    CHECK(r2.value_residual[3] <= 1e-9); // x^2

    RKPMBasis b1 = make_test_basis(10, 0.5, 55, 1);
    double res = 0;
    for (const Vec2& x : probes) {
        const ShapeEval ev = shape_functions(b1, x, 0);
        double s = 0;
        for (std::size_t q = 0; q < ev.ids.size(); ++q) {
            const double xi = b1.nodes.coords[ev.ids[q]].x;
            s += ev.values[q] * xi * xi;
        }
        res = std::max(res, std::abs(s - x.x * x.x));
    }
    CHECK(res > 1e-7); // beyond the reproducing order, reported not an error
}

TEST_CASE("gradient reproduction of f = x equals 1") {
    RKPMBasis b = make_test_basis(10, 0.5, 4, 1);
    ReproReport rep = reproduce_check(b, interior_probes(50, 4));
    CHECK(rep.grad_residual[1] <= 1e-8);
}

TEST_CASE("monomial reproduction over many probes") {
    for (int order : {1, 2}) {
        RKPMBasis b = make_test_basis(10, 0.5, 5, order);
        ReproReport rep = reproduce_check(b, interior_probes(200, 5));
        const double h = b.nodes.avg_spacing;
        for (int m = 0; m < b.np; ++m) {
            CHECK(rep.value_residual[m] <= 1e-9);
            CHECK(rep.grad_residual[m] <= 1e-7 / h);
        }
    }
}

TEST_CASE("shape functions vanish outside their support") {
    RKPMBasis b = make_test_basis(8, 0.5, 6, 1);
    const Vec2 x{0.47, 0.52};
    const ShapeEval ev = shape_functions(b, x, 0);
    for (int i = 0; i < b.nodes.size(); ++i) {
        const bool covering = dist(x, b.nodes.coords[i]) < b.nodes.a[i];
        const bool listed =
            std::find(ev.ids.begin(), ev.ids.end(), i) != ev.ids.end();
        CHECK(covering == listed);
    }
}

TEST_CASE("kernel magnitude scaling leaves shape functions unchanged") {
    RKPMBasis b = make_test_basis(8, 0.5, 7, 2);
    RKPMBasis b2 = b;
    b2.kernel_scale = 2.0;
    for (const Vec2& x : interior_probes(10, 7)) {
        const ShapeEval e1 = shape_functions(b, x, 0);
        const ShapeEval e2 = shape_functions(b2, x, 0);
        REQUIRE(e1.ids == e2.ids);
        for (std::size_t q = 0; q < e1.ids.size(); ++q)
            CHECK(e1.values[q] == doctest::Approx(e2.values[q]).epsilon(1e-12));
    }
}
