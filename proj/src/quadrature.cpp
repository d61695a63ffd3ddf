#include "rkpm/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

#include "rkpm/errors.hpp"

namespace rkpm {

namespace {

constexpr int kMaxDegree = 20;

double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

} // namespace

void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& nodes,
                  std::vector<double>& weights) {
    // symmetric tridiagonal Jacobi matrix from the three-term recurrence
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + alpha + beta;
        double ak;
        if (k == 0 && alpha + beta == 0.0)
            ak = 0.0;
        else if (k == 0)
            ak = (beta - alpha) / (alpha + beta + 2.0);
        else
            ak = (beta * beta - alpha * alpha) / (s * (s + 2.0));
        J(k, k) = ak;
        if (k >= 1) {
            double bk2;
            if (k == 1 && alpha + beta == -1.0) {
                bk2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + alpha + beta) *
                      (2.0 + alpha + beta) * (3.0 + alpha + beta));
            } else {
                bk2 = 4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta) /
                      (s * s * (s + 1.0) * (s - 1.0));
            }
            J(k, k - 1) = J(k - 1, k) = std::sqrt(bk2);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 =
        std::pow(2.0, alpha + beta + 1.0) * beta_fn(alpha + 1.0, beta + 1.0);

    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        weights[i] = mu0 * v * v;
    }
}

namespace {

QuadratureRule make_quad_rule(int degree) {
    const int q = degree / 2 + 1; // 2q - 1 >= degree
    std::vector<double> x, w;
    gauss_jacobi(q, 0.0, 0.0, x, w);
    QuadratureRule rule;
    rule.points.reserve(q * q);
    rule.weights.reserve(q * q);
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < q; ++i) {
            rule.points.push_back({x[i], x[j]});
            rule.weights.push_back(w[i] * w[j]);
        }
    return rule;
}

QuadratureRule make_tri_rule(int degree) {
    QuadratureRule rule;
    if (degree <= 1) {
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {0.5};
        return rule;
    }
    if (degree == 2) {
        rule.points = {{2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0},
                       {1.0 / 6.0, 1.0 / 6.0}};
        rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
        return rule;
    }
    // conical product: x = u (1 - v), y = v on the unit triangle;
    // Gauss-Legendre in u, Gauss-Jacobi (1,0) in v absorbs the (1 - v) factor
    const int q = degree / 2 + 1;
    std::vector<double> xu, wu, xv, wv;
    gauss_jacobi(q, 0.0, 0.0, xu, wu);
    gauss_jacobi(q, 1.0, 0.0, xv, wv);
    rule.points.reserve(q * q);
    rule.weights.reserve(q * q);
    for (int j = 0; j < q; ++j) {
        const double v = 0.5 * (xv[j] + 1.0);
        // jacobian of both interval maps and the cone map: (1-v)/4 with the
        // (1-v) already inside the Jacobi weight, scaled by 1/2 per interval
        const double wj = wv[j] * 0.125;
        for (int i = 0; i < q; ++i) {
            const double u = 0.5 * (xu[i] + 1.0);
            rule.points.push_back({u * (1.0 - v), v});
            rule.weights.push_back(wu[i] * wj);
        }
    }
    return rule;
}

} // namespace

QuadratureRule quadrature(CellKind kind, int degree) {
    if (degree < 0) throw InvalidArgument("negative quadrature degree");
    if (degree > kMaxDegree)
        throw Unsupported("quadrature degree above shipped maximum (20)");

    static std::map<std::pair<int, int>, QuadratureRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(static_cast<int>(kind), degree);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    QuadratureRule rule =
        (kind == CellKind::Quad) ? make_quad_rule(degree) : make_tri_rule(degree);
    cache[key] = rule;
    return rule;
}

QuadratureRule facet_quadrature(int degree) {
    if (degree < 0) throw InvalidArgument("negative quadrature degree");
    if (degree > kMaxDegree)
        throw Unsupported("quadrature degree above shipped maximum (20)");

    const int q = degree / 2 + 1;
    std::vector<double> x, w;
    gauss_jacobi(q, 0.0, 0.0, x, w);
    QuadratureRule rule;
    for (int i = 0; i < q; ++i) {
        rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
        rule.weights.push_back(0.5 * w[i]);
    }
    return rule;
}

} // namespace rkpm
