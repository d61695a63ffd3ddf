#include "rkpm/forms.hpp"

#include <cmath>

#include "rkpm/errors.hpp"

namespace rkpm {

namespace {

constexpr double kPi = 3.14159265358979323846;

// plate-with-hole constants: equal-biaxial far field, traction-free hole
constexpr double kSigmaInf = 1.0;
constexpr double kPlateMu = 151.0;    // GPa
constexpr double kPlateLambda = 65.9; // GPa

// circular-inclusion eigenstrain constants
constexpr double kIncLambda1 = 497.16, kIncMu1 = 390.63;
constexpr double kIncLambda2 = 656.79, kIncMu2 = 338.35;
constexpr double kEigenstrain = 0.1;

} // namespace

double ProblemForm::kappa_of(int material) const {
    if (material < 0 || material >= static_cast<int>(kappa.size()))
        throw MaterialMissing("kappa for material " + std::to_string(material));
    return kappa[material];
}

double ProblemForm::lambda_of(int material) const {
    if (material < 0 || material >= static_cast<int>(lambda.size()))
        throw MaterialMissing("lambda for material " + std::to_string(material));
    return lambda[material];
}

double ProblemForm::mu_of(int material) const {
    if (material < 0 || material >= static_cast<int>(mu.size()))
        throw MaterialMissing("mu for material " + std::to_string(material));
    return mu[material];
}

int three_material_of(Vec2 p) {
    if (p.x <= kThreeMatX0) return 0;
    if (p.x <= kThreeMatX1) return 1;
    return 2;
}

namespace {

ProblemForm poisson_form() {
    ProblemForm f;
    f.kind = FormKind::Poisson;
    auto u = [](Vec2 p) { return std::sin(0.1 * p.x + 0.1) * std::sin(0.1 * p.y + 0.1); };
    f.source = [u](Vec2 p) { return 0.02 * u(p); };
    f.dirichlet = u;
    f.exact.components = 1;
    f.exact.value = [u](Vec2 p, int) { return u(p); };
    f.exact.grad = [](Vec2 p, int) {
        return Vec2{0.1 * std::cos(0.1 * p.x + 0.1) * std::sin(0.1 * p.y + 0.1),
                    0.1 * std::sin(0.1 * p.x + 0.1) * std::cos(0.1 * p.y + 0.1)};
    };
    f.exact.hess = [u](Vec2 p, int) {
        return Sym2{-0.01 * u(p),
                    0.01 * std::cos(0.1 * p.x + 0.1) * std::cos(0.1 * p.y + 0.1),
                    -0.01 * u(p)};
    };
    return f;
}

ProblemForm biharmonic_form() {
    ProblemForm f;
    f.kind = FormKind::Biharmonic;
    auto u = [](Vec2 p) { return std::sin(0.1 * p.y + 0.1) * std::sin(0.1 * p.x + 0.2); };
    auto grad = [](Vec2 p) {
        return Vec2{0.1 * std::sin(0.1 * p.y + 0.1) * std::cos(0.1 * p.x + 0.2),
                    0.1 * std::cos(0.1 * p.y + 0.1) * std::sin(0.1 * p.x + 0.2)};
    };
    f.source = [u](Vec2 p) { return 4e-4 * u(p); };
    f.dirichlet = u;
    f.neumann_flux = [grad](Vec2 p, Vec2 n) { return grad(p).dot(n); };
    f.exact.components = 1;
    f.exact.value = [u](Vec2 p, int) { return u(p); };
    f.exact.grad = [grad](Vec2 p, int) { return grad(p); };
    f.exact.hess = [u](Vec2 p, int) {
        return Sym2{-0.01 * u(p),
                    0.01 * std::cos(0.1 * p.y + 0.1) * std::cos(0.1 * p.x + 0.2),
                    -0.01 * u(p)};
    };
    return f;
}

ProblemForm plate_form() {
    ProblemForm f;
    f.kind = FormKind::Elasticity;
    f.components = 2;
    f.lambda = {kPlateLambda, kPlateLambda};
    f.mu = {kPlateMu, kPlateMu};
    f.side_bc = {BC::Symmetry, BC::Traction, BC::Symmetry, BC::Traction};

    const double A = kSigmaInf / (2.0 * (kPlateLambda + kPlateMu));
    const double B = kSigmaInf * kHoleRadius * kHoleRadius / (2.0 * kPlateMu);

    auto stress = [](Vec2 p, int) {
        const double r2 = p.norm2();
        const double rr = kSigmaInf * (1.0 - kHoleRadius * kHoleRadius / r2);
        const double tt = kSigmaInf * (1.0 + kHoleRadius * kHoleRadius / r2);
        const double c2 = p.x * p.x / r2, s2 = p.y * p.y / r2;
        const double cs = p.x * p.y / r2;
        return Sym2{rr * c2 + tt * s2, (rr - tt) * cs, rr * s2 + tt * c2};
    };
    f.exact.components = 2;
    f.exact.stress = stress;
    f.exact.vec = [A, B](Vec2 p, int) {
        const double fr = A + B / p.norm2();
        return Vec2{fr * p.x, fr * p.y};
    };
    f.exact.vec_grad = [A, B](Vec2 p, int) {
        const double r2 = p.norm2();
        const double fr = A + B / r2;
        const double c = -2.0 * B / (r2 * r2); // f'(r)/r
        return Mat2{fr + c * p.x * p.x, c * p.x * p.y, c * p.x * p.y,
                    fr + c * p.y * p.y};
    };
    f.traction = [stress](Vec2 p, Vec2 n) { return stress(p, 0).apply(n); };
    return f;
}

ProblemForm three_material_form() {
    ProblemForm f;
    f.kind = FormKind::MultimaterialHeat;
    f.kappa = {1.0, 0.5, 1.0};
    const double w = 5.0 * kPi / 3.0;
    auto s1 = [w](double x) { return std::sin(w * (x - kThreeMatX0)); };
    auto c1 = [w](double x) { return std::cos(w * (x - kThreeMatX0)); };
    auto s2 = [w](double y) { return std::sin(w * y); };
    auto c2 = [w](double y) { return std::cos(w * y); };

    f.source = [=](Vec2 p) { return w * w * s1(p.x) * s2(p.y); };
    const std::vector<double> kap = f.kappa;
    f.dirichlet = [=](Vec2 p) { return s1(p.x) * s2(p.y) / kap[three_material_of(p)]; };
    f.exact.components = 1;
    f.exact.value = [=](Vec2 p, int m) { return s1(p.x) * s2(p.y) / kap[m]; };
    f.exact.grad = [=](Vec2 p, int m) {
        return Vec2{w * c1(p.x) * s2(p.y) / kap[m], w * s1(p.x) * c2(p.y) / kap[m]};
    };
    f.exact.hess = [=](Vec2 p, int m) {
        return Sym2{-w * w * s1(p.x) * s2(p.y) / kap[m],
                    w * w * c1(p.x) * c2(p.y) / kap[m],
                    -w * w * s1(p.x) * s2(p.y) / kap[m]};
    };
    return f;
}

ProblemForm inclusion_form() {
    ProblemForm f;
    f.kind = FormKind::EigenstrainElasticity;
    f.components = 2;
    f.lambda = {kIncLambda1, kIncLambda2};
    f.mu = {kIncMu1, kIncMu2};
    f.eigenstrain = kEigenstrain;
    f.inclusion_material = 0;
    f.side_bc = {BC::Symmetry, BC::Dirichlet, BC::Symmetry, BC::Dirichlet};

    const double R2 = kHoleRadius * kHoleRadius;
    const double c1 =
        (kIncLambda1 + kIncMu1) * kEigenstrain / (kIncLambda1 + kIncMu1 + kIncMu2);

    auto vec = [=](Vec2 p, int m) {
        if (m == 0) return Vec2{c1 * p.x, c1 * p.y};
        const double s = c1 * R2 / p.norm2();
        return Vec2{s * p.x, s * p.y};
    };
    auto vgrad = [=](Vec2 p, int m) {
        if (m == 0) return Mat2{c1, 0, 0, c1};
        const double r2 = p.norm2();
        const double s = c1 * R2 / (r2 * r2);
        return Mat2{s * (p.y * p.y - p.x * p.x), -2.0 * s * p.x * p.y,
                    -2.0 * s * p.x * p.y, s * (p.x * p.x - p.y * p.y)};
    };
    f.exact.components = 2;
    f.exact.vec = vec;
    f.exact.vec_grad = vgrad;
    f.exact.stress = [=](Vec2 p, int m) {
        if (m == 0) {
            const double s = 2.0 * (kIncMu1 + kIncLambda1) * (c1 - kEigenstrain);
            return Sym2{s, 0.0, s};
        }
        const Mat2 g = vgrad(p, 1);
        const Sym2 eps = g.sym(); // traceless outside
        return Sym2{2.0 * kIncMu2 * eps.xx, 2.0 * kIncMu2 * eps.xy,
                    2.0 * kIncMu2 * eps.yy};
    };
    f.dirichlet_vec = [vec](Vec2 p) { return vec(p, 1); };
    return f;
}

} // namespace

ProblemForm manufactured_data(StudyId id) {
    switch (id) {
        case StudyId::Poisson: return poisson_form();
        case StudyId::Biharmonic: return biharmonic_form();
        case StudyId::PlateHole: return plate_form();
        case StudyId::ThreeMaterial: return three_material_form();
        case StudyId::Inclusion: return inclusion_form();
    }
    throw InvalidArgument("unknown study");
}

} // namespace rkpm
