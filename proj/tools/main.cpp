// menisim command-line front end: run modes, verification suites, config
// and mesh inspection. Exit codes: 0 success, 1 validation/input error,
// 2 solver failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "menisim/common.hpp"
#include "menisim/config.hpp"
#include "menisim/io.hpp"
#include "menisim/orchestrator.hpp"
#include "menisim/verification.hpp"

using namespace menisim;

namespace {

constexpr const char* kVersion = "menisim 1.0.0";

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string restore_path;
    int steps = -1;
    double dt = -1.0;
    int threads = 0;
    bool frozen_stress = false;
    bool fallback = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_run_flags = true) {
    cmd->add_option("--config", opts.config_path, "configuration file (JSON)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    if (with_run_flags) {
        cmd->add_option("--steps", opts.steps, "override run.n_steps");
        cmd->add_option("--dt", opts.dt, "override run.dt");
        cmd->add_option("--restore", opts.restore_path, "resume from a checkpoint file");
        cmd->add_flag("--frozen-stress", opts.frozen_stress,
                      "reuse the first mechanics solution for all steps");
        cmd->add_flag("--fallback", opts.fallback,
                      "use the prescribed-traction mechanics model");
    }
    cmd->add_option("--threads", opts.threads,
                    "cap on worker threads (this build runs the assembly on one)");
}

Config load_with_overrides(const CommonOpts& opts) {
    Config config = opts.config_path.empty() ? Config{} : Config::load(opts.config_path);
    if (!opts.out_dir.empty()) config.run.output_dir = opts.out_dir;
    if (opts.steps > 0) config.run.n_steps = opts.steps;
    if (opts.dt > 0.0) config.run.dt = opts.dt;
    if (opts.threads > 0) config.run.threads = opts.threads;
    if (opts.frozen_stress) config.run.frozen_stress = true;
    if (opts.fallback) config.run.mechanics_model = MechanicsModel::PoroTraction;
    config.validate();  // overrides re-validated
    return config;
}

int run_mode(const CommonOpts& opts, RunMode mode) {
    Config config = load_with_overrides(opts);
    config.run.mode = mode;
    if (mode == RunMode::Coupled || mode == RunMode::MechanicsOnly) {
        if (!opts.fallback && config.geometry.spec == "channel-over-porous")
            config.run.mechanics_model = MechanicsModel::StokesBiot;
    }
    Orchestrator orch(config);
    if (!opts.restore_path.empty()) orch.restore(opts.restore_path);
    const RunReport report = orch.run();
    std::printf("%s", report.to_text().c_str());
    std::printf("outputs written to %s\n", config.run.output_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"menisim: coupled scaffold mechanics and cell-population simulation"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOpts opts;
    int levels = 3;
    bool with_taxis = false;
    std::string mesh_path;

    CLI::App* run_cells = app.add_subcommand("run-cells", "biology-only time loop");
    add_common(run_cells, opts);

    CLI::App* run_poro = app.add_subcommand("run-poro", "poroelastic mechanics only");
    add_common(run_poro, opts);

    CLI::App* run_coupled =
        app.add_subcommand("run-coupled", "mechanics + stimulus + biology loop");
    add_common(run_coupled, opts);

    CLI::App* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
    add_common(mms, opts, false);
    mms->add_option("--levels", levels, "refinement levels (>= 3)");
    mms->add_flag("--taxis", with_taxis, "enable the taxis terms (threshold 1.5)");

    CLI::App* terz = app.add_subcommand("terzaghi", "consolidation benchmark vs series oracle");
    add_common(terz, opts, false);
    terz->add_option("--levels", levels, "refinement levels (>= 3)");

    CLI::App* check = app.add_subcommand("check-config", "validate and normalize a config file");
    check->add_option("file", opts.config_path, "config file")->required();
    bool write_default = false;
    check->add_flag("--print", write_default, "print the normalized config");

    CLI::App* info = app.add_subcommand("mesh-info", "mesh statistics");
    info->add_option("file", mesh_path, "MSH 2.2 mesh file");
    add_common(info, opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run_cells->parsed()) return run_mode(opts, RunMode::BiologyOnly);
        if (run_poro->parsed()) {
            CommonOpts poro_opts = opts;
            poro_opts.fallback = true;
            return run_mode(poro_opts, RunMode::MechanicsOnly);
        }
        if (run_coupled->parsed()) return run_mode(opts, RunMode::Coupled);

        if (mms->parsed()) {
            verification::MmsOptions mo;
            mo.levels = levels;
            mo.with_taxis = with_taxis;
            mo.order_threshold = with_taxis ? 1.5 : 1.8;
            const auto report = verification::mms_cells(mo);
            std::printf("%s", report.to_text().c_str());
            return report.pass ? 0 : 1;
        }
        if (terz->parsed()) {
            verification::TerzaghiOptions to;
            to.levels = levels;
            const auto report = verification::terzaghi(to);
            std::printf("%s", report.to_text().c_str());
            return report.pass ? 0 : 1;
        }
        if (check->parsed()) {
            const Config config = Config::load(opts.config_path);
            if (write_default) std::printf("%s", config.to_json_text().c_str());
            std::printf("config OK: %s\n", opts.config_path.c_str());
            return 0;
        }
        if (info->parsed()) {
            Mesh mesh = [&] {
                if (!mesh_path.empty()) return read_msh(mesh_path);
                Config config = load_with_overrides(opts);
                GeometrySpec spec = GeometrySpec::parse(config.geometry.spec);
                spec.length = config.geometry.length;
                spec.porous_height = config.geometry.porous_height;
                spec.fluid_height = config.geometry.fluid_height;
                spec.ny_porous = config.geometry.ny_porous;
                return structured_generator(config.geometry.nx, config.geometry.ny, spec);
            }();
            std::printf("vertices: %d\nelements: %d\nfaces: %d\n", mesh.num_vertices(),
                        mesh.num_elements(), mesh.num_faces());
            std::printf("total area: %.17g\n", mesh.total_area());
            std::printf("porous area: %.17g\nfluid area: %.17g\n",
                        mesh.subdomain_area(Subdomain::Porous),
                        mesh.subdomain_area(Subdomain::Fluid));
            for (auto tag : {BoundaryTag::PorousWall, BoundaryTag::FluidWall, BoundaryTag::Inflow,
                             BoundaryTag::Outflow, BoundaryTag::Interface, BoundaryTag::Free}) {
                const double m = mesh.tag_measure(tag);
                if (m > 0.0) std::printf("tag %s: measure %.17g\n", to_string(tag), m);
            }
            return 0;
        }
    } catch (const InputError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    } catch (const SolverError& err) {
        std::fprintf(stderr, "solver error: %s\n", err.what());
        return 2;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 1;
}
