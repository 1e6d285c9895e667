#include "menisim/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "menisim/common.hpp"

namespace menisim {

namespace {

Mesh build_run_mesh(const GeometryConfig& g) {
    if (!g.mesh_file.empty()) return read_msh(g.mesh_file);
    GeometrySpec spec = GeometrySpec::parse(g.spec);
    spec.length = g.length;
    spec.porous_height = g.porous_height;
    spec.fluid_height = g.fluid_height;
    spec.ny_porous = g.ny_porous;
    auto parse_tag = [](const std::string& s) -> std::optional<BoundaryTag> {
        if (s.empty()) return std::nullopt;
        return boundary_tag_from_string(s);
    };
    spec.left_tag = parse_tag(g.left_tag);
    spec.right_tag = parse_tag(g.right_tag);
    spec.bottom_tag = parse_tag(g.bottom_tag);
    spec.top_tag = parse_tag(g.top_tag);
    return structured_generator(g.nx, g.ny, spec);
}

PoroBCTable fallback_poro_bcs(const MechParams& params) {
    PoroBCTable bcs = default_poro_bcs();
    // prescribed-traction fallback: the inflow pressure loads the porous
    // boundary directly and acts as the pore pressure datum there
    PoroBC inflow;
    inflow.disp = DisplacementBC::Free;
    inflow.darcy = DarcyBC::Pressure;
    const double p_max = params.p_max;
    inflow.normal_pressure = [p_max](double t) { return p_max * std::sin(M_PI * t); };
    inflow.pressure_datum = [p_max](double t) { return p_max * std::sin(M_PI * t); };
    bcs[BoundaryTag::Inflow] = inflow;
    return bcs;
}

void write_doubles(std::FILE* f, const Vector& v) {
    const std::int64_t n = v.size();
    std::fwrite(&n, sizeof(n), 1, f);
    if (n > 0) std::fwrite(v.data(), sizeof(double), static_cast<std::size_t>(n), f);
}

Vector read_doubles(std::FILE* f) {
    std::int64_t n = 0;
    require(std::fread(&n, sizeof(n), 1, f) == 1, "checkpoint: truncated file");
    Vector v(n);
    if (n > 0)
        require(std::fread(v.data(), sizeof(double), static_cast<std::size_t>(n), f) ==
                    static_cast<std::size_t>(n),
                "checkpoint: truncated field data");
    return v;
}

} // namespace

std::string RunReport::to_text() const {
    std::ostringstream os;
    os << "steps: " << steps << "\n";
    os << "wall_time_s: " << wall_time_s << "\n";
    os << "newton_total: " << newton_total << "\n";
    os << "newton_max: " << newton_max << "\n";
    os << "conservation_drift: " << conservation_drift << "\n";
    os << "min_c1: " << min_c1 << "\n";
    os << "min_c2: " << min_c2 << "\n";
    os << "int_c1: " << int_c1 << "\n";
    os << "int_c2: " << int_c2 << "\n";
    os << "int_h: " << int_h << "\n";
    os << "int_k: " << int_k << "\n";
    os << "max_displacement: " << max_displacement << "\n";
    os << "max_pressure: " << max_pressure << "\n";
    os << "final_energy: " << final_energy << "\n";
    os << "window_occupancy: " << window_occupancy << "\n";
    return os.str();
}

Orchestrator::Orchestrator(const Config& config) : config_(config) {
    config_.validate();
    mesh_ = std::make_unique<Mesh>(build_run_mesh(config_.geometry));
    const RunPlan& run = config_.run;

    const bool wants_biology = run.mode != RunMode::MechanicsOnly;
    const bool wants_mechanics = run.mode != RunMode::BiologyOnly;

    if (wants_biology) {
        if (mesh_->has_fluid()) {
            bio_sub_ = extract_submesh(*mesh_, Subdomain::Porous, BoundaryTag::PorousWall);
            bio_mesh_ = &bio_sub_->mesh;
        } else {
            bio_mesh_ = mesh_.get();
        }
        cells_ = std::make_unique<CellSolver>(*bio_mesh_, config_.biology, config_.solver);
        cell_state_ = cells_->make_state(config_.initial.c1, config_.initial.c2,
                                         config_.initial.h, config_.initial.k);
    }
    if (wants_mechanics) {
        const double dt_mech = run.dt * run.mechanics_cadence;
        if (run.mechanics_model == MechanicsModel::StokesBiot) {
            coupled_ = std::make_unique<CoupledSolver>(
                *mesh_, config_.mechanics, InterfaceParams{config_.coupling.gamma_N,
                                                           config_.coupling.bjs_slip},
                dt_mech, paper_stokes_bcs(config_.mechanics.p_max), default_poro_bcs());
            coupled_state_ = coupled_->zero_state();
        } else {
            require(!mesh_->has_fluid(),
                    "poro-traction mechanics expects a porous-only mesh; use stokes-biot for "
                    "channel geometries");
            poro_ = std::make_unique<PoroSolver>(*mesh_, config_.mechanics,
                                                 fallback_poro_bcs(config_.mechanics), dt_mech,
                                                 true, config_.coupling.pressure_stabilization);
            poro_state_ = poro_->zero_state();
        }
    }
    if (wants_biology) {
        std::vector<Vec2> centroids(mesh_->num_elements());
        for (int e = 0; e < mesh_->num_elements(); ++e) centroids[e] = mesh_->centroid(e);
        StimulusParams sp = config_.stimulus;
        if (sp.mode == StimulusMode::StressMapped &&
            sp.source == StimulusSource::Mechanics && !wants_mechanics)
            throw InputError(
                "config: biology-only mode with stress-mapped rates needs stimulus.source = "
                "expression");
        coupler_ = std::make_unique<StimulusCoupler>(sp, std::move(centroids));
    }

    std::filesystem::create_directories(run.output_dir);
    const std::string base = run.output_dir + "/";
    if (wants_biology)
        cells_csv_.emplace(base + "cells.csv",
                           std::vector<std::string>{"t", "int_c1", "int_c2", "int_h", "int_k",
                                                    "min_c1", "min_c2", "newton_iterations"});
    if (wants_mechanics)
        mech_csv_.emplace(base + "mechanics.csv",
                          std::vector<std::string>{"t", "max_displacement", "max_pressure"});
    if (wants_biology && config_.stimulus.mode == StimulusMode::StressMapped)
        stim_csv_.emplace(base + "stimulus.csv",
                          std::vector<std::string>{"t", "window_occupancy"});
}

Orchestrator::~Orchestrator() = default;

const Mesh& Orchestrator::biology_mesh() const {
    require(bio_mesh_ != nullptr, "no biology domain in this run mode");
    return *bio_mesh_;
}

void Orchestrator::solve_mechanics_if_due() {
    if (!poro_ && !coupled_) return;
    const RunPlan& run = config_.run;
    if (run.frozen_stress && mech_solved_once_) return;
    if ((step_ - 1) % run.mechanics_cadence != 0) return;

    if (coupled_) {
        coupled_state_ = coupled_->step(*coupled_state_);
        mech_max_disp_ =
            std::max(mech_max_disp_, coupled_state_->eta.coeffs.lpNorm<Eigen::Infinity>());
        mech_max_p_ = std::max(
            mech_max_p_, std::max(coupled_state_->p_p.coeffs.lpNorm<Eigen::Infinity>(),
                                  coupled_state_->p_f.coeffs.lpNorm<Eigen::Infinity>()));
        if (coupler_ && config_.stimulus.source == StimulusSource::Mechanics)
            coupler_->update_from_mechanics(coupled_->compute_stress(*coupled_state_),
                                            coupled_state_->u_p, config_.mechanics.Phi);
        if (mech_csv_)
            mech_csv_->append({coupled_state_->t,
                               coupled_state_->eta.coeffs.lpNorm<Eigen::Infinity>(),
                               coupled_state_->p_p.coeffs.lpNorm<Eigen::Infinity>()});
    } else {
        poro_state_ = poro_->step(*poro_state_);
        mech_max_disp_ =
            std::max(mech_max_disp_, poro_state_->eta.coeffs.lpNorm<Eigen::Infinity>());
        mech_max_p_ = std::max(mech_max_p_, poro_state_->p.coeffs.lpNorm<Eigen::Infinity>());
        if (coupler_ && config_.stimulus.source == StimulusSource::Mechanics)
            coupler_->update_from_mechanics(poro_->compute_stress(*poro_state_),
                                            poro_state_->u, config_.mechanics.Phi);
        if (mech_csv_)
            mech_csv_->append({poro_state_->t, poro_state_->eta.coeffs.lpNorm<Eigen::Infinity>(),
                               poro_state_->p.coeffs.lpNorm<Eigen::Infinity>()});
    }
    mech_solved_once_ = true;
}

void Orchestrator::write_outputs(int step, const NewtonReport* newton) {
    const RunPlan& run = config_.run;
    if (cell_state_ && cells_csv_) {
        cells_csv_->append({cell_state_->t, integrate(cell_state_->c1),
                            integrate(cell_state_->c2), integrate(cell_state_->h),
                            integrate(cell_state_->k), cell_state_->c1.coeffs.minCoeff(),
                            cell_state_->c2.coeffs.minCoeff(),
                            newton ? static_cast<double>(newton->iterations) : 0.0});
    }
    if (stim_csv_ && coupler_)
        stim_csv_->append({run.dt * step, coupler_->occupancy()});

    if (step % run.output_stride == 0 || step == run.n_steps) {
        char name[64];
        if (cell_state_) {
            std::snprintf(name, sizeof name, "/cells_%05d.vtk", step);
            write_vtk(*bio_mesh_,
                      {{"c1", &cell_state_->c1},
                       {"c2", &cell_state_->c2},
                       {"h", &cell_state_->h},
                       {"k", &cell_state_->k}},
                      run.output_dir + name);
        }
        if (poro_state_ || coupled_state_) {
            std::snprintf(name, sizeof name, "/mech_%05d.vtk", step);
            FunctionSpace p0(*mesh_, SpaceKind::P0);
            Field vm(p0), stim(p0), a1(p0);
            StressField stress;
            if (coupled_state_) stress = coupled_->compute_stress(*coupled_state_);
            else stress = poro_->compute_stress(*poro_state_);
            for (int e = 0; e < mesh_->num_elements(); ++e) {
                vm.coeffs[e] = stress.von_mises[e];
                if (coupler_) {
                    stim.coeffs[e] = coupler_->stimulus().S[e];
                    a1.coeffs[e] = coupler_->rates().alpha1[e];
                }
            }
            std::vector<NamedField> fields;
            if (coupled_state_) {
                fields = {{"eta", &coupled_state_->eta},   {"p_p", &coupled_state_->p_p},
                          {"u_p", &coupled_state_->u_p},   {"u_f", &coupled_state_->u_f},
                          {"p_f", &coupled_state_->p_f},   {"von_mises", &vm}};
            } else {
                fields = {{"eta", &poro_state_->eta},
                          {"p_p", &poro_state_->p},
                          {"u_p", &poro_state_->u},
                          {"von_mises", &vm}};
            }
            if (coupler_) {
                fields.push_back({"S", &stim});
                fields.push_back({"alpha1", &a1});
            }
            write_vtk(*mesh_, fields, run.output_dir + name);
        }
    }
    if (run.checkpoint_stride > 0 && step % run.checkpoint_stride == 0 && step < run.n_steps) {
        char name[64];
        std::snprintf(name, sizeof name, "/checkpoint_%05d.bin", step);
        checkpoint(run.output_dir + name);
    }
}

RunReport Orchestrator::run() {
    const RunPlan& plan = config_.run;
    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;

    const double mass0 =
        cell_state_ ? integrate(cell_state_->c1) + integrate(cell_state_->c2) : 0.0;
    double min_c1 = cell_state_ ? cell_state_->c1.coeffs.minCoeff() : 0.0;
    double min_c2 = cell_state_ ? cell_state_->c2.coeffs.minCoeff() : 0.0;

    for (step_ = step_ + 1; step_ <= plan.n_steps; ++step_) {
        const char* phase = "mechanics";
        try {
            solve_mechanics_if_due();
            NewtonReport newton;
            if (cells_) {
                phase = "stimulus";
                if (config_.stimulus.source == StimulusSource::ExpressionField && coupler_)
                    coupler_->update_from_expression(cell_state_->t + plan.dt);
                RateField full = coupler_->rates();
                RateField rates;
                if (bio_sub_) {
                    const auto& map = bio_sub_->element_map;
                    rates.alpha1.resize(map.size());
                    rates.alpha2.resize(map.size());
                    for (std::size_t i = 0; i < map.size(); ++i) {
                        rates.alpha1[i] = full.alpha1[map[i]];
                        rates.alpha2[i] = full.alpha2[map[i]];
                    }
                } else {
                    rates = std::move(full);
                }
                phase = "biology";
                cell_state_ = cells_->newton_step(*cell_state_, rates, plan.dt, &newton);
                report.newton_total += newton.iterations;
                report.newton_max = std::max(report.newton_max, newton.iterations);
                min_c1 = std::min(min_c1, cell_state_->c1.coeffs.minCoeff());
                min_c2 = std::min(min_c2, cell_state_->c2.coeffs.minCoeff());
            }
            phase = "output";
            write_outputs(step_, cells_ ? &newton : nullptr);
        } catch (const std::exception& err) {
            if (cells_csv_) cells_csv_->flush();
            if (mech_csv_) mech_csv_->flush();
            throw SolverError("run aborted at step " + std::to_string(step_) + " (" + phase +
                              " phase): " + err.what());
        }
    }
    step_ = plan.n_steps;

    report.steps = plan.n_steps;
    if (cell_state_) {
        report.int_c1 = integrate(cell_state_->c1);
        report.int_c2 = integrate(cell_state_->c2);
        report.int_h = integrate(cell_state_->h);
        report.int_k = integrate(cell_state_->k);
        const double massT = report.int_c1 + report.int_c2;
        report.conservation_drift = std::abs(massT - mass0) / std::max(std::abs(mass0), 1e-300);
        report.min_c1 = min_c1;
        report.min_c2 = min_c2;
    }
    report.max_displacement = mech_max_disp_;
    report.max_pressure = mech_max_p_;
    if (coupled_state_) report.final_energy = coupled_->energy(*coupled_state_);
    if (coupler_) report.window_occupancy = coupler_->occupancy();
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_final_report(report);
    if (cells_csv_) cells_csv_->flush();
    if (mech_csv_) mech_csv_->flush();
    if (stim_csv_) stim_csv_->flush();
    return report;
}

void Orchestrator::write_final_report(const RunReport& report) const {
    const std::string base = config_.run.output_dir + "/";
    std::FILE* f = std::fopen((base + "report.txt").c_str(), "w");
    if (f) {
        std::fputs(report.to_text().c_str(), f);
        std::fclose(f);
    }
    // machine-readable summary; wall time excluded so reruns are bitwise equal
    SeriesWriter summary(base + "summary.csv",
                         {"steps", "newton_total", "conservation_drift", "min_c1", "min_c2",
                          "int_c1", "int_c2", "int_h", "int_k", "max_displacement",
                          "max_pressure", "window_occupancy"});
    summary.append({static_cast<double>(report.steps), static_cast<double>(report.newton_total),
                    report.conservation_drift, report.min_c1, report.min_c2, report.int_c1,
                    report.int_c2, report.int_h, report.int_k, report.max_displacement,
                    report.max_pressure, report.window_occupancy});
}

void Orchestrator::checkpoint(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, "checkpoint: cannot open '" + path + "'");
    const char magic[8] = {'M', 'E', 'N', 'I', 'S', 'I', 'M', '1'};
    std::fwrite(magic, 1, 8, f);
    const std::uint64_t chash = config_.content_hash();
    const std::uint64_t mhash = mesh_->content_hash();
    std::fwrite(&chash, sizeof(chash), 1, f);
    std::fwrite(&mhash, sizeof(mhash), 1, f);
    const std::int32_t step = step_;
    std::fwrite(&step, sizeof(step), 1, f);
    const std::uint8_t has_bio = cell_state_ ? 1 : 0;
    const std::uint8_t mech_kind = coupled_state_ ? 2 : (poro_state_ ? 1 : 0);
    const std::uint8_t solved = mech_solved_once_ ? 1 : 0;
    std::fwrite(&has_bio, 1, 1, f);
    std::fwrite(&mech_kind, 1, 1, f);
    std::fwrite(&solved, 1, 1, f);
    if (cell_state_) {
        std::fwrite(&cell_state_->t, sizeof(double), 1, f);
        write_doubles(f, cell_state_->c1.coeffs);
        write_doubles(f, cell_state_->c2.coeffs);
        write_doubles(f, cell_state_->h.coeffs);
        write_doubles(f, cell_state_->k.coeffs);
    }
    if (poro_state_) {
        std::fwrite(&poro_state_->t, sizeof(double), 1, f);
        write_doubles(f, poro_state_->eta.coeffs);
        write_doubles(f, poro_state_->u.coeffs);
        write_doubles(f, poro_state_->p.coeffs);
    }
    if (coupled_state_) {
        std::fwrite(&coupled_state_->t, sizeof(double), 1, f);
        write_doubles(f, coupled_state_->u_f.coeffs);
        write_doubles(f, coupled_state_->p_f.coeffs);
        write_doubles(f, coupled_state_->eta.coeffs);
        write_doubles(f, coupled_state_->u_p.coeffs);
        write_doubles(f, coupled_state_->p_p.coeffs);
    }
    std::fclose(f);
}

void Orchestrator::restore(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, "restore: cannot open '" + path + "'");
    char magic[8];
    require(std::fread(magic, 1, 8, f) == 8 && std::memcmp(magic, "MENISIM1", 8) == 0,
            "restore: not a checkpoint file");
    std::uint64_t chash = 0, mhash = 0;
    require(std::fread(&chash, sizeof(chash), 1, f) == 1 &&
                std::fread(&mhash, sizeof(mhash), 1, f) == 1,
            "restore: truncated header");
    if (chash != config_.content_hash())
        throw InputError("restore: checkpoint was written with a different config");
    if (mhash != mesh_->content_hash())
        throw InputError("restore: checkpoint was written with a different mesh");
    std::int32_t step = 0;
    require(std::fread(&step, sizeof(step), 1, f) == 1, "restore: truncated header");
    std::uint8_t has_bio = 0, mech_kind = 0, solved = 0;
    require(std::fread(&has_bio, 1, 1, f) == 1 && std::fread(&mech_kind, 1, 1, f) == 1 &&
                std::fread(&solved, 1, 1, f) == 1,
            "restore: truncated header");
    require((has_bio == 1) == bool(cell_state_), "restore: biology state presence mismatch");
    require(mech_kind == (coupled_state_ ? 2 : (poro_state_ ? 1 : 0)),
            "restore: mechanics state kind mismatch");
    if (cell_state_) {
        require(std::fread(&cell_state_->t, sizeof(double), 1, f) == 1, "restore: truncated");
        cell_state_->c1.coeffs = read_doubles(f);
        cell_state_->c2.coeffs = read_doubles(f);
        cell_state_->h.coeffs = read_doubles(f);
        cell_state_->k.coeffs = read_doubles(f);
    }
    if (poro_state_) {
        require(std::fread(&poro_state_->t, sizeof(double), 1, f) == 1, "restore: truncated");
        poro_state_->eta.coeffs = read_doubles(f);
        poro_state_->u.coeffs = read_doubles(f);
        poro_state_->p.coeffs = read_doubles(f);
    }
    if (coupled_state_) {
        require(std::fread(&coupled_state_->t, sizeof(double), 1, f) == 1, "restore: truncated");
        coupled_state_->u_f.coeffs = read_doubles(f);
        coupled_state_->p_f.coeffs = read_doubles(f);
        coupled_state_->eta.coeffs = read_doubles(f);
        coupled_state_->u_p.coeffs = read_doubles(f);
        coupled_state_->p_p.coeffs = read_doubles(f);
    }
    std::fclose(f);
    step_ = step;
    mech_solved_once_ = solved != 0;
    // the stimulus of a frozen-stress run is reconstructed from the restored
    // mechanics state
    if (coupler_ && mech_solved_once_ && config_.stimulus.source == StimulusSource::Mechanics) {
        if (coupled_state_)
            coupler_->update_from_mechanics(coupled_->compute_stress(*coupled_state_),
                                            coupled_state_->u_p, config_.mechanics.Phi);
        else if (poro_state_)
            coupler_->update_from_mechanics(poro_->compute_stress(*poro_state_), poro_state_->u,
                                            config_.mechanics.Phi);
    }
}

} // namespace menisim
