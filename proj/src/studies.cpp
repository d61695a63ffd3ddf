#include "rkpm/studies.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "rkpm/assembly.hpp"
#include "rkpm/errors.hpp"
#include "rkpm/io.hpp"
#include "rkpm/parallel.hpp"
#include "rkpm/solve_post.hpp"

namespace rkpm {

std::string study_name(StudyId id) {
    switch (id) {
        case StudyId::Poisson: return "poisson";
        case StudyId::Biharmonic: return "biharmonic";
        case StudyId::PlateHole: return "plate_hole";
        case StudyId::ThreeMaterial: return "three_material";
        case StudyId::Inclusion: return "inclusion";
    }
    return "?";
}

StudyId study_from_name(const std::string& name) {
    for (StudyId id : {StudyId::Poisson, StudyId::Biharmonic, StudyId::PlateHole,
                       StudyId::ThreeMaterial, StudyId::Inclusion})
        if (study_name(id) == name) return id;
    throw InvalidArgument("unknown study: " + name);
}

StudyConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config: " + path);
    StudyConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        if (key == "study") cfg.study = study_from_name(val);
        else if (key == "order") cfg.order = std::stoi(val);
        else if (key == "fg_ratio") cfg.fg_ratio = std::stoi(val);
        else if (key == "p_ref") cfg.p_ref = std::stoi(val);
        else if (key == "refine_levels") cfg.refine_levels = std::stoi(val);
        else if (key == "double") cfg.double_interp = std::stoi(val) != 0;
        else if (key == "enrich") cfg.enrich = std::stoi(val) != 0;
        else if (key == "classic") cfg.classic = std::stoi(val) != 0;
        else if (key == "epsilon") cfg.epsilon = std::stod(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "levels") cfg.levels = std::stoi(val);
        else if (key == "threads") cfg.threads = std::stoi(val);
        else if (key == "allow_degenerate") cfg.allow_degenerate = std::stoi(val) != 0;
        else if (key == "solver_tol") cfg.solver_tol = std::stod(val);
        else if (key.rfind("penalty.", 0) == 0)
            cfg.penalties[key.substr(8)] = std::stod(val);
        else throw InvalidArgument("unknown config key: " + key);
    }
    return cfg;
}

namespace {

struct LadderLevel {
    double h;   // nominal background spacing
    int nx;     // background nodes per side
};

std::vector<LadderLevel> ladder(const StudyConfig& cfg) {
    const bool unit = (cfg.study == StudyId::Poisson ||
                       cfg.study == StudyId::Biharmonic ||
                       cfg.study == StudyId::ThreeMaterial);
    const int levels = cfg.levels > 0 ? cfg.levels : 4;
    std::vector<LadderLevel> out;
    for (int l = 0; l < levels; ++l) {
        if (unit) {
            const double h = 1.0 / (8 << l);
            out.push_back({h, (8 << l) + 1});
        } else {
            const double h = 0.625 / (1 << l);
            out.push_back({h, (8 << l) + 1});
        }
    }
    return out;
}

Rect study_domain(StudyId id) {
    return (id == StudyId::PlateHole || id == StudyId::Inclusion) ? kPlateDomain
                                                                  : kUnitSquare;
}

void apply_penalties(ProblemForm& form, const StudyConfig& cfg) {
    for (const auto& [name, value] : cfg.penalties) {
        if (name == "c_pen") form.c_pen = value;
        else if (name == "alpha") form.alpha = value;
        else if (name == "beta") form.beta = value;
        else if (name == "beta_sym") form.beta_sym = value;
        else if (name == "beta_dirichlet") form.beta_dirichlet = value;
        else if (name == "gamma_interface") form.gamma_interface = value;
        else if (name == "nitsche_h") form.nitsche_h = value;
        else throw InvalidArgument("unknown penalty name: " + name);
    }
}

LagrangeSpace build_study_space(const StudyConfig& cfg, double h_bg, int nx_bg) {
    const int k = cfg.fg_order();
    const double h_fg = h_bg / cfg.fg_ratio;
    switch (cfg.study) {
        case StudyId::Poisson:
        case StudyId::Biharmonic:
            return build_uniform_quad_space(kUnitSquare, h_fg, k, Continuity::CG);
        case StudyId::ThreeMaterial: {
            auto lines = [&](double a, double b) {
                const int n = std::max(1, static_cast<int>(std::lround((b - a) / h_fg)));
                std::vector<double> xs(n + 1);
                for (int i = 0; i <= n; ++i) xs[i] = a + (b - a) * i / n;
                return xs;
            };
            std::vector<double> xs = lines(0.0, kThreeMatX0);
            auto mid = lines(kThreeMatX0, kThreeMatX1);
            auto hi = lines(kThreeMatX1, 1.0);
            xs.insert(xs.end(), mid.begin() + 1, mid.end());
            xs.insert(xs.end(), hi.begin() + 1, hi.end());
            const std::vector<double> ys = lines(0.0, 1.0);
            Mesh m = build_tensor_quad_mesh(xs, ys, three_material_of);
            return make_space(std::move(m), k, Continuity::CG);
        }
        case StudyId::PlateHole:
        case StudyId::Inclusion: {
            const int nc = (nx_bg - 1) * cfg.fg_ratio;
            Mesh full = build_levelset_mesh(kPlateDomain, nc, nc,
                                            circle_levelset({0, 0}, kHoleRadius),
                                            cfg.refine_levels);
            if (cfg.study == StudyId::PlateHole)
                return make_space(filter_cells(full, 1), k, Continuity::CG);
            return make_space(std::move(full), k, Continuity::CG);
        }
    }
    throw InvalidArgument("unknown study");
}

} // namespace

ConvergenceReport run_study(const StudyConfig& cfg) {
    set_num_threads(cfg.threads);
    ConvergenceReport report;
    report.config = cfg;

    const Rect domain = study_domain(cfg.study);
    const int n = cfg.order;
    const int np_min = (n + 1) * (n + 2) / 2;

    for (const LadderLevel& lvl : ladder(cfg)) {
        NodeSet nodes = generate_jittered_grid(lvl.nx, lvl.nx, domain, cfg.epsilon,
                                               cfg.seed + 1000003ull * lvl.nx);
        compute_nodal_spacing(nodes, 4);
        assign_supports(nodes, n + 1.0, np_min);
        RKPMBasis basis = make_basis(std::move(nodes), n);

        ProblemForm form = manufactured_data(cfg.study);
        LevelRow row;
        row.h = lvl.h;
        row.np = basis.nodes.size();

        if (cfg.classic) {
            if (cfg.study != StudyId::Poisson && cfg.study != StudyId::ThreeMaterial)
                throw InvalidArgument("classic path ships poisson and three_material");
            form.nitsche_h = basis.nodes.avg_spacing;
            apply_penalties(form, cfg);
            EnrichmentMap emap;
            const EnrichmentMap* pmap = nullptr;
            if (cfg.enrich) {
                emap = build_enrichment_analytic(basis, {kThreeMatX0, kThreeMatX1});
                pmap = &emap;
            }
            ClassicQuadOpts opts;
            opts.points_per_cell = (n == 1) ? 6 : 8;
            AssembledSystem sys = assemble_classic(form, basis, domain, opts, pmap);
            SolveOptions sopts;
            sopts.tol = cfg.solver_tol;
            sopts.allow_regularized = cfg.allow_degenerate;
            const SolveResult sol = solve(sys, sopts);
            row.converged = sol.converged;
            const ClassicNorms cn = classic_error_norms(form, basis, domain, opts,
                                                        pmap, sol.d, sys.reduced_map);
            row.l2 = cn.l2;
            row.h1 = cn.h1;
            row.nu = sys.size();
            report.rows.push_back(row);
            continue;
        }

        LagrangeSpace space = build_study_space(cfg, lvl.h, lvl.nx);
        row.nu = space.ndofs;

        form.nitsche_h = (cfg.study == StudyId::ThreeMaterial)
                             ? space.mesh_size
                             : basis.nodes.avg_spacing;
        apply_penalties(form, cfg);

        MidgroundSpace mid;
        const MidgroundSpace* pmid = nullptr;
        if (cfg.double_interp) {
            mid = build_midground_space(space.mesh, cfg.fg_order());
            pmid = &mid;
        }

        // extraction flavor
        ExtractionOperator plain_op;
        DoubleExtraction double_op;
        EnrichedExtraction enriched_op;
        std::unique_ptr<ReductionOp> op;
        if (cfg.enrich) {
            EnrichmentMap emap = build_enrichment(space.mesh, basis, pmid);
            enriched_op = compute_enriched_extraction(basis, space, emap, pmid);
            op = std::make_unique<ReductionOp>(enriched_op);
        } else if (cfg.double_interp) {
            double_op = compute_double_extraction(basis, mid, space);
            op = std::make_unique<ReductionOp>(double_op.composite);
        } else {
            plain_op = compute_extraction(basis, space);
            op = std::make_unique<ReductionOp>(plain_op);
        }

        AssembledSystem reduced;
        if (cfg.enrich) {
            reduced = assemble_reduced(form, space, *op);
        } else {
            const AssembledSystem fg = assemble_foreground(form, space);
            reduced = reduce_system(fg, *op);
        }

        SolveOptions sopts;
        sopts.tol = cfg.solver_tol;
        sopts.allow_regularized = cfg.allow_degenerate;
        const SolveResult sol = solve(reduced, sopts);
        row.converged = sol.converged;

        const LocalField field =
            field_from_reduced(space, *op, sol.d, form.components);
        const int norm_order = (cfg.study == StudyId::Biharmonic) ? 2 : 1;
        const ErrorNorms norms = error_norms(form, space, field, norm_order);
        row.l2 = norms.l2;
        row.h1 = norms.h1;
        row.h2 = norms.h2;
        row.energy = norms.energy;
        report.rows.push_back(row);

        // radial-displacement jump across the material interface (finest
        // level wins: overwritten each ladder step)
        if (cfg.study == StudyId::Inclusion) {
            double sum2 = 0;
            int count = 0;
            const int na = op->n_reduced();
            for (const Facet& f : space.mesh.facets) {
                if (f.tag != kTagInterface || f.cell2 < 0) continue;
                const FacetPoint fp =
                    facet_point(space.mesh, f.cell, f.local_edge, 0.5);
                const Vec2 rhat = fp.x / fp.x.norm();
                double side[2];
                const int cells[2] = {f.cell, f.cell2};
                for (int s = 0; s < 2; ++s) {
                    const Vec2 ref = inverse_map(space.mesh, cells[s], fp.x);
                    const SpaceEval ev = eval_space(space, cells[s], ref, 0);
                    Vec2 u{0, 0};
                    for (int a = 0; a < 2; ++a) {
                        const Eigen::VectorXd coef = op->local_coefficients(
                            space, cells[s], sol.d.segment(a * na, na));
                        double ua = 0;
                        for (std::size_t i = 0; i < ev.values.size(); ++i)
                            ua += coef(i) * ev.values[i];
                        (a == 0 ? u.x : u.y) = ua;
                    }
                    side[s] = u.dot(rhat);
                }
                sum2 += (side[0] - side[1]) * (side[0] - side[1]);
                ++count;
            }
            if (count > 0) report.interface_jump = std::sqrt(sum2 / count);
        }
    }

    // fitted rates over the ladder
    std::vector<double> hs, l2s, h1s, h2s, ens;
    for (const LevelRow& r : report.rows) {
        hs.push_back(r.h);
        l2s.push_back(r.l2);
        h1s.push_back(r.h1);
        h2s.push_back(r.h2);
        ens.push_back(r.energy);
    }
    auto safe_fit = [&](const std::vector<double>& err, double& rate,
                        double* last = nullptr) {
        try {
            const RateFit f = fit_rates(hs, err);
            rate = f.rate;
            if (last) *last = f.last_interval;
        } catch (const DegenerateFit&) {
            rate = 0;
        }
    };
    safe_fit(l2s, report.rate_l2, &report.rate_l2_last);
    safe_fit(h1s, report.rate_h1);
    safe_fit(h2s, report.rate_h2);
    safe_fit(ens, report.rate_energy);
    return report;
}

void write_csv(const ConvergenceReport& report, std::ostream& os) {
    const StudyConfig& c = report.config;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "# study=%s order=%d fg_ratio=%d p_ref=%d refine_levels=%d "
                  "double=%d enrich=%d classic=%d epsilon=%.17g seed=%llu levels=%d "
                  "threads=%d allow_degenerate=%d solver_tol=%.17g\n",
                  study_name(c.study).c_str(), c.order, c.fg_ratio, c.p_ref,
                  c.refine_levels, c.double_interp ? 1 : 0, c.enrich ? 1 : 0,
                  c.classic ? 1 : 0, c.epsilon,
                  static_cast<unsigned long long>(c.seed),
                  c.levels, c.threads, c.allow_degenerate ? 1 : 0, c.solver_tol);
    os << buf;
    for (const auto& [name, value] : c.penalties) {
        std::snprintf(buf, sizeof buf, "# penalty.%s=%.17g\n", name.c_str(), value);
        os << buf;
    }
    os << "study,n,k,fg_ratio,refine,h,NP,nu,L2,H1,H2,energy,rate_L2,rate_H1,rate_H2\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const LevelRow& r = report.rows[i];
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%.12e,%d,%d,%.12e,%.12e,%.12e,%.12e",
                      study_name(c.study).c_str(), c.order, c.fg_order(), c.fg_ratio,
                      c.refine_levels, r.h, r.np, r.nu, r.l2, r.h1, r.h2, r.energy);
        os << buf;
        if (i + 1 == report.rows.size()) {
            std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", report.rate_l2,
                          report.rate_h1, report.rate_h2);
            os << buf;
        } else {
            os << ",,,\n";
        }
    }
}

void export_study_mesh(const StudyConfig& cfg, const std::string& path) {
    const auto lvls = ladder(cfg);
    const LadderLevel& lvl = lvls.front();
    LagrangeSpace space = build_study_space(cfg, lvl.h, lvl.nx);
    write_mesh(space.mesh, path);
}

} // namespace rkpm
