#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rkpm/basis.hpp"
#include "rkpm/errors.hpp"
#include "rkpm/io.hpp"
#include "rkpm/studies.hpp"

namespace {

struct StudyArgs {
    std::string name;
    std::string config_path;
    std::string out_path;
    std::vector<std::string> penalty_kv;
    rkpm::StudyConfig cfg;
    bool has_order = false, has_ratio = false, has_pref = false, has_refine = false;
    bool has_eps = false, has_seed = false, has_levels = false, has_threads = false;
    bool flag_double = false, flag_enrich = false, flag_classic = false;
    bool flag_allow_degenerate = false;
    int order = 1, fg_ratio = 1, p_ref = 0, refine = 0, levels = 0, threads = 0;
    double epsilon = 0.5;
    std::uint64_t seed = 7;
};

rkpm::StudyConfig resolve_config(const StudyArgs& a) {
    rkpm::StudyConfig cfg;
    if (!a.config_path.empty()) cfg = rkpm::read_config_file(a.config_path);
    if (!a.name.empty()) cfg.study = rkpm::study_from_name(a.name);
    if (a.has_order) cfg.order = a.order;
    if (a.has_ratio) cfg.fg_ratio = a.fg_ratio;
    if (a.has_pref) cfg.p_ref = a.p_ref;
    if (a.has_refine) cfg.refine_levels = a.refine;
    if (a.has_eps) cfg.epsilon = a.epsilon;
    if (a.has_seed) cfg.seed = a.seed;
    if (a.has_levels) cfg.levels = a.levels;
    if (a.has_threads) cfg.threads = a.threads;
    if (a.flag_double) cfg.double_interp = true;
    if (a.flag_enrich) cfg.enrich = true;
    if (a.flag_classic) cfg.classic = true;
    if (a.flag_allow_degenerate) cfg.allow_degenerate = true;
    for (const std::string& kv : a.penalty_kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw rkpm::InvalidArgument("--penalty expects NAME=VALUE");
        cfg.penalties[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpolation-based RKPM convergence studies"};
    app.require_subcommand(1);

    StudyArgs sa;
    auto* study = app.add_subcommand("study", "run a convergence study");
    study->add_option("name", sa.name, "poisson | biharmonic | plate_hole | "
                                       "three_material | inclusion");
    study->add_option("--config", sa.config_path, "flat key=value config file");
    study->add_option("--order", sa.order)->each([&](std::string) { sa.has_order = true; });
    study->add_option("--fg-ratio", sa.fg_ratio, "foreground h-refinement divisor (1, 2, 4)")
        ->each([&](std::string) { sa.has_ratio = true; });
    study->add_option("--p-ref", sa.p_ref)->each([&](std::string) { sa.has_pref = true; });
    study->add_option("--refine-levels", sa.refine)
        ->each([&](std::string) { sa.has_refine = true; });
    study->add_flag("--double", sa.flag_double, "double interpolation (midground)");
    study->add_flag("--enrich", sa.flag_enrich, "Heaviside enrichment");
    study->add_flag("--classic", sa.flag_classic, "classic Gauss baseline");
    study->add_flag("--allow-degenerate", sa.flag_allow_degenerate,
                    "accept regularized solves (degenerate controls)");
    study->add_option("--epsilon", sa.epsilon)->each([&](std::string) { sa.has_eps = true; });
    study->add_option("--seed", sa.seed)->each([&](std::string) { sa.has_seed = true; });
    study->add_option("--levels", sa.levels)->each([&](std::string) { sa.has_levels = true; });
    study->add_option("--threads", sa.threads)
        ->each([&](std::string) { sa.has_threads = true; });
    study->add_option("--penalty", sa.penalty_kv, "NAME=VALUE penalty override")
        ->take_all();
    study->add_option("--out", sa.out_path, "CSV output path (default stdout)");

    std::string props_suite;
    auto* props = app.add_subcommand("props", "run a property suite");
    props->add_option("suite", props_suite, "basis | extraction | assembly | solve | all")
        ->required();

    std::string em_config, em_path;
    auto* em = app.add_subcommand("export-mesh", "write the coarsest study mesh");
    em->add_option("config", em_config, "study config file")->required();
    em->add_option("path", em_path, "output path")->required();

    // shape-function line samples for plotting
    std::string ds_out = "shape.dat";
    int ds_order = 1, ds_node = -1;
    double ds_eps = 0.5;
    std::uint64_t ds_seed = 7;
    auto* ds = app.add_subcommand("dump-shape", "sample a shape function along y=const");
    ds->add_option("--order", ds_order);
    ds->add_option("--epsilon", ds_eps);
    ds->add_option("--seed", ds_seed);
    ds->add_option("--node", ds_node, "node id (default: nearest to center)");
    ds->add_option("--out", ds_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (study->parsed()) {
            const rkpm::StudyConfig cfg = resolve_config(sa);
            const rkpm::ConvergenceReport rep = rkpm::run_study(cfg);
            if (sa.out_path.empty()) {
                rkpm::write_csv(rep, std::cout);
            } else {
                std::ofstream out(sa.out_path);
                if (!out) throw rkpm::InvalidArgument("cannot write " + sa.out_path);
                rkpm::write_csv(rep, out);
            }
            for (const auto& row : rep.rows)
                if (!row.converged) {
                    std::cerr << "error: NotConverged: degenerate level accepted "
                                 "(--allow-degenerate)\n";
                    return 0; // rows were still produced on request
                }
            return 0;
        }
        if (props->parsed()) {
            const int fails = rkpm::run_properties(props_suite, std::cout);
            if (fails > 0) {
                std::cerr << "error: PropertyFailure: " << fails << " checks failed\n";
                return 1;
            }
            return 0;
        }
        if (em->parsed()) {
            rkpm::export_study_mesh(rkpm::read_config_file(em_config), em_path);
            return 0;
        }
        if (ds->parsed()) {
            rkpm::NodeSet nodes =
                rkpm::generate_jittered_grid(11, 11, rkpm::Rect{0, 0, 1, 1}, ds_eps, ds_seed);
            rkpm::compute_nodal_spacing(nodes, 4);
            rkpm::assign_supports(nodes, ds_order + 1.0);
            const rkpm::RKPMBasis basis = rkpm::make_basis(std::move(nodes), ds_order);
            int node = ds_node;
            if (node < 0) {
                double best = 1e300;
                for (int i = 0; i < basis.nodes.size(); ++i) {
                    const double d = rkpm::dist(basis.nodes.coords[i], {0.5, 0.5});
                    if (d < best) {
                        best = d;
                        node = i;
                    }
                }
            }
            std::ofstream out(ds_out);
            if (!out) throw rkpm::InvalidArgument("cannot write " + ds_out);
            out << "# x psi dpsi_dx d2psi_dx2 (node " << node << ", y = "
                << basis.nodes.coords[node].y << ")\n";
            const double y = basis.nodes.coords[node].y;
            for (int s = 0; s <= 400; ++s) {
                const double x = s / 400.0;
                double v = 0, g = 0, h = 0;
                try {
                    const rkpm::ShapeEval ev = rkpm::shape_functions(basis, {x, y}, 2);
                    for (std::size_t q = 0; q < ev.ids.size(); ++q)
                        if (ev.ids[q] == node) {
                            v = ev.values[q];
                            g = ev.grads[q].x;
                            h = ev.hessians[q].xx;
                        }
                } catch (const rkpm::Error&) {
                    continue;
                }
                out << x << ' ' << v << ' ' << g << ' ' << h << "\n";
            }
            return 0;
        }
    } catch (const rkpm::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
