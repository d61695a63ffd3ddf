#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rkpm/forms.hpp"

namespace rkpm {

/// One convergence-study run: the study id plus discretization and
/// interpolation options. Flags override config-file keys of the same name.
struct StudyConfig {
    StudyId study = StudyId::Poisson;
    int order = 1;       // reproducing order n
    int fg_ratio = 1;    // foreground cell size = h_bg / fg_ratio (1, 2, 4)
    int p_ref = 0;       // foreground order k = order + p_ref
    int refine_levels = 0;
    bool double_interp = false;
    bool enrich = false;
    bool classic = false;
    double epsilon = 0.5;
    std::uint64_t seed = 7;
    int levels = 0; // 0 = study default
    std::map<std::string, double> penalties; // name -> override
    int threads = 0;
    bool allow_degenerate = false;
    double solver_tol = 1e-12;

    int fg_order() const { return order + p_ref; }
};

std::string study_name(StudyId id);
StudyId study_from_name(const std::string& name);

/// Reads a flat key=value config file (one pair per line, # comments).
StudyConfig read_config_file(const std::string& path);

struct LevelRow {
    double h = 0;
    int np = 0;
    int nu = 0;
    double l2 = 0, h1 = 0, h2 = 0, energy = 0;
    bool converged = true;
};

struct ConvergenceReport {
    StudyConfig config;
    std::vector<LevelRow> rows;
    double rate_l2 = 0, rate_h1 = 0, rate_h2 = 0, rate_energy = 0;
    double rate_l2_last = 0;
    double interface_jump = -1; // RMS radial-displacement jump (inclusion)
};

/// Runs the study ladder: point cloud, basis, foreground (and midground)
/// meshes, extraction, assembly, reduction, solve, norms per level.
ConvergenceReport run_study(const StudyConfig& config);

/// CSV with a # header echoing the full config; byte-stable for a fixed
/// config (including seed and thread count).
void write_csv(const ConvergenceReport& report, std::ostream& os);

/// Named invariant suites (basis | extraction | assembly | solve); prints
/// machine-readable pass/fail lines, returns the number of failures.
int run_properties(const std::string& suite, std::ostream& os);

/// Mesh/solution text export for a study's first ladder level.
void export_study_mesh(const StudyConfig& config, const std::string& path);

} // namespace rkpm
