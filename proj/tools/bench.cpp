// Benchmark comparing the OpenMP kernels against the serial reference
// implementations: extraction, foreground assembly, error-norm integration,
// and nodal spacing.

#include <chrono>
#include <cstdio>

#include "rkpm/assembly.hpp"
#include "rkpm/parallel.hpp"
#include "rkpm/reference.hpp"
#include "rkpm/solve_post.hpp"

using namespace rkpm;

namespace {

double now_ms() {
    using clk = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clk::now().time_since_epoch())
        .count();
}

template <typename F>
double time_ms(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    int nx = 33;
    if (argc > 1) nx = std::atoi(argv[1]);
    std::printf("# background %dx%d nodes, foreground Q2 at ratio 1, %d threads\n",
                nx, nx, max_threads());

    NodeSet nodes = generate_jittered_grid(nx, nx, Rect{0, 0, 1, 1}, 0.5, 7);
    compute_nodal_spacing(nodes, 4);
    assign_supports(nodes, 3.0);
    const RKPMBasis basis = make_basis(std::move(nodes), 2);

    const LagrangeSpace space =
        build_uniform_quad_space(Rect{0, 0, 1, 1}, 1.0 / (nx - 1), 2, Continuity::CG);
    ProblemForm form = manufactured_data(StudyId::Poisson);
    form.nitsche_h = basis.nodes.avg_spacing;

    std::printf("%-22s %12s %12s %8s\n", "# kernel", "openmp[ms]", "serial[ms]",
                "speedup");

    const double t_sp = time_ms([&] {
        NodeSet n2 = basis.nodes;
        compute_nodal_spacing(n2, 4);
    });
    const double t_sp_ref =
        time_ms([&] { reference::nodal_spacing_serial(basis.nodes, 4); });
    std::printf("%-22s %12.2f %12.2f %8.2f\n", "nodal_spacing", t_sp, t_sp_ref,
                t_sp_ref / t_sp);

    ExtractionOperator op;
    const double t_ex = time_ms([&] { op = compute_extraction(basis, space); });
    SpMat ref_M;
    const double t_ex_ref =
        time_ms([&] { ref_M = reference::extraction_serial(basis, space); });
    const double ex_dev = (SpMat(op.M - ref_M)).coeffs().size()
                              ? SpMat(op.M - ref_M).coeffs().abs().maxCoeff()
                              : 0.0;
    std::printf("%-22s %12.2f %12.2f %8.2f   max|diff| %.1e\n", "extraction", t_ex,
                t_ex_ref, t_ex_ref / t_ex, ex_dev);

    AssembledSystem fg;
    const double t_as = time_ms([&] { fg = assemble_foreground(form, space); });
    AssembledSystem fg_ref;
    const double t_as_ref =
        time_ms([&] { fg_ref = reference::assemble_foreground_serial(form, space); });
    const double as_dev = SpMat(fg.K - fg_ref.K).coeffs().size()
                              ? SpMat(fg.K - fg_ref.K).coeffs().abs().maxCoeff()
                              : 0.0;
    std::printf("%-22s %12.2f %12.2f %8.2f   max|diff| %.1e\n", "assembly", t_as,
                t_as_ref, t_as_ref / t_as, as_dev);

    const ReductionOp red(op);
    const AssembledSystem sys = reduce_system(fg, red);
    const SolveResult sol = solve(sys);
    const LocalField field = field_from_reduced(space, red, sol.d, 1);
    ErrorNorms n_par, n_ser;
    const double t_nm = time_ms([&] { n_par = error_norms(form, space, field, 1); });
    const double t_nm_ref =
        time_ms([&] { n_ser = reference::error_norms_serial(form, space, field, 1); });
    std::printf("%-22s %12.2f %12.2f %8.2f   max|diff| %.1e\n", "error_norms", t_nm,
                t_nm_ref, t_nm_ref / t_nm,
                std::abs(n_par.l2 - n_ser.l2) + std::abs(n_par.h1 - n_ser.h1));
    return 0;
}
