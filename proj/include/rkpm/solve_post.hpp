#pragma once

#include <functional>

#include "rkpm/assembly.hpp"

namespace rkpm {

struct SolveOptions {
    double tol = 1e-12;     // relative residual
    int max_refine = 3;     // iterative refinement sweeps
    bool allow_regularized = false;
    int direct_dof_cap = 200000; // conjugate gradients beyond this
};

struct SolveResult {
    Eigen::VectorXd d;
    double residual = 0;
    bool converged = false;
    bool regularized = false; // a diagonal shift was needed to factorize
};

/// Sparse Cholesky (LDLT) with diagonal-shift fallback and iterative
/// refinement; conjugate gradients with diagonal preconditioning above the
/// direct-solver cap. Throws NotConverged / IndefiniteMatrix unless
/// `allow_regularized` accepts a best-effort regularized solution.
SolveResult solve(const AssembledSystem& sys, const SolveOptions& opts = {});

/// Background + foreground coefficients of one solve.
struct SolutionField {
    Eigen::VectorXd d;    // reduced (active) coefficients, component-major
    Eigen::VectorXd u_fg; // foreground coefficients, component-major
    int components = 1;
};

SolutionField push_solution(const ReductionOp& op, const LagrangeSpace& space,
                            const Eigen::VectorXd& d, int components);

/// Cell-resolved field access: local foreground coefficients per (cell,
/// component). The reduced variant evaluates enriched solutions with the
/// material branch of each cell.
using LocalField = std::function<Eigen::VectorXd(int cell, int comp)>;

LocalField field_from_foreground(const LagrangeSpace& space,
                                 const Eigen::VectorXd& u_fg, int components);
LocalField field_from_reduced(const LagrangeSpace& space, const ReductionOp& op,
                              const Eigen::VectorXd& d, int components);

struct ErrorNorms {
    double l2 = 0, h1 = 0, h2 = 0, energy = 0;
};

/// Cell-wise Gauss quadrature of squared differences against the form's
/// exact solution; `order` controls the highest derivative norm (0..2).
/// Elasticity forms also fill the energy norm (stress:strain of the error).
/// quad_degree < 0 selects the default 2k + 2.
ErrorNorms error_norms(const ProblemForm& form, const LagrangeSpace& space,
                       const LocalField& field, int order, int quad_degree = -1);

struct RateFit {
    double rate = 0;          // least-squares slope of log(err) vs log(h)
    double last_interval = 0; // rate over the finest pair
};

/// Throws DegenerateFit when fewer than 3 rows or any error <= 0.
RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& err);

} // namespace rkpm
