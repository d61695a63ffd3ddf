#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rkpm/geometry.hpp"
#include "rkpm/mesh.hpp"

namespace rkpm {

enum class FormKind {
    Poisson,
    Biharmonic,
    Elasticity,
    MultimaterialHeat,
    EigenstrainElasticity,
};

enum class StudyId { Poisson, Biharmonic, PlateHole, ThreeMaterial, Inclusion };

enum class BC { None, Dirichlet, Traction, Symmetry };

/// Exact fields for the manufactured studies, material-resolved where the
/// solution is only piecewise smooth.
struct ExactSolution {
    int components = 1;

    std::function<double(Vec2, int)> value;
    std::function<Vec2(Vec2, int)> grad;
    std::function<Sym2(Vec2, int)> hess;

    std::function<Vec2(Vec2, int)> vec;
    std::function<Mat2(Vec2, int)> vec_grad;
    std::function<Sym2(Vec2, int)> stress; // physical stress

    bool valid() const { return components == 1 ? bool(value) : bool(vec); }
};

/// Coefficients, boundary data, and penalties for one weak form. `nitsche_h`
/// is the penalty length scale: the background average nodal spacing for the
/// Poisson/biharmonic/elasticity studies and the foreground mesh size for
/// the three-material heat study; the driver fills it in.
struct ProblemForm {
    FormKind kind = FormKind::Poisson;
    int components = 1;

    std::function<double(Vec2)> source;
    std::function<double(Vec2)> dirichlet;
    std::function<double(Vec2, Vec2)> neumann_flux;  // h(x, n), biharmonic
    std::function<Vec2(Vec2, Vec2)> traction;        // t(x, n)
    std::function<Vec2(Vec2)> dirichlet_vec;

    std::vector<double> kappa;
    std::vector<double> lambda, mu;
    double eigenstrain = 0.0;
    int inclusion_material = 0;

    double c_pen = 10.0;          // Poisson Dirichlet penalty constant
    double alpha = 10.0;          // biharmonic value penalty (alpha / h^3)
    double beta = 10.0;           // biharmonic slope penalty (beta / h)
    double beta_sym = 10.0;       // symmetry penalty factor (times mu / h)
    double beta_dirichlet = 10.0; // heat/elasticity Dirichlet factor
    double gamma_interface = 0.0; // 0 = beta_dirichlet * max stiffness / h
    double nitsche_h = 0.0;

    std::array<BC, 4> side_bc{BC::Dirichlet, BC::Dirichlet, BC::Dirichlet,
                              BC::Dirichlet};

    ExactSolution exact;

    double kappa_of(int material) const;
    double lambda_of(int material) const;
    double mu_of(int material) const;
};

/// Geometry constants of the shipped studies.
inline constexpr Rect kUnitSquare{0, 0, 1, 1};
inline constexpr Rect kPlateDomain{0, 0, 5, 5};
inline constexpr double kHoleRadius = 1.0;
inline constexpr double kThreeMatX0 = 0.2;
inline constexpr double kThreeMatX1 = 0.8;

/// Material index of a point in the three-material strip domain.
int three_material_of(Vec2 p);

/// Coefficients + exact solution of a shipped study, with closed-form data
/// derived by hand from the exact solutions.
ProblemForm manufactured_data(StudyId id);

} // namespace rkpm
