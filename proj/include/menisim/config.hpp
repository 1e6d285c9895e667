#pragma once

#include <cstdint>
#include <string>

#include "menisim/expr.hpp"
#include "menisim/geometry.hpp"
#include "menisim/solvers.hpp"

namespace menisim {

/// Dimensionless biology constants (Table 2 values ship as defaults).
struct BiologyParams {
    double a1 = 0.015;      // ADSC diffusivity
    double b1 = 0.005;      // hyaluron taxis coefficient
    double b2 = 0.001;      // cartilage taxis coefficient
    double beta = 0.5;      // proliferation rate
    double gamma1 = 0.01;   // hyaluron uptake by chondrocytes
    double delta1 = 0.01;   // cartilage degradation by ADSCs
    double eta0 = 4.0;      // dG penalty scale

    void validate() const;
};

/// Poroelasticity and fluid parameters, stored in the units of the source
/// table (MPa, MPa.s, kg/m^3, m^4/(N s)). The solvers work in (mm, s, MPa);
/// the derived accessors below perform that conversion once.
struct MechParams {
    double p_max = 10.0;       // MPa
    double mu_f = 1e-9;        // MPa.s
    double rho_p = 1.1e3;      // kg/m^3
    double kappa = 1e-14;      // m^4/(N s)
    double rho_f = 1e3;        // kg/m^3
    double Phi = 0.8;          // porosity
    double E = 80.0;           // MPa
    double inv_M = 68.9;       // 1/MPa
    double nu = 0.167;
    double alpha_biot = 1.0;
    Vec2 gravity{0.0, 0.0};    // mm/s^2

    void validate() const;

    /// kappa/mu_f treated as one Darcy mobility, converted m^2 -> mm^2:
    /// 1e-14/1e-9 = 1e-5 m^2/(MPa s) = 10 mm^2/(MPa s) for the defaults.
    double mobility_mm() const { return kappa / mu_f * 1e6; }
    /// Densities in tonne/mm^3 (the mass unit consistent with mm-s-MPa).
    double rho_p_t() const { return rho_p * 1e-12; }
    double rho_f_t() const { return rho_f * 1e-12; }
};

struct LameParameters {
    double lambda = 0.0;
    double mu = 0.0;
};
/// lambda = E nu / ((1+nu)(1-2nu)), mu = E / (2(1+nu)). Throws on nu >= 0.5.
LameParameters lame_from_table(const MechParams& params);

enum class StimulusMode { ConstantRates, StressMapped };
enum class StimulusSource { Mechanics, ExpressionField };

struct StimulusParams {
    double S_min = 1.0;
    double S_max = 3.0;
    double alpha_min = 0.05;
    double alpha_max = 0.1;
    double a_strain = 0.0375;     // octahedral shear strain scale
    double a_vel = 0.003;         // seepage speed scale, mm/s
    double ramp_fraction = 0.1;   // in (0, 0.5]
    StimulusMode mode = StimulusMode::ConstantRates;
    StimulusSource source = StimulusSource::Mechanics;
    Expression expression;        // synthetic S(x,y,t) when source = expression

    void validate() const;
};

enum class RunMode { BiologyOnly, MechanicsOnly, Coupled };
enum class MechanicsModel { PoroTraction, StokesBiot };

struct RunPlan {
    double dt = 0.1;
    int n_steps = 300;
    int mechanics_cadence = 1;   // biology steps per mechanics solve
    RunMode mode = RunMode::BiologyOnly;
    MechanicsModel mechanics_model = MechanicsModel::PoroTraction;
    bool frozen_stress = false;  // reuse the first mechanics solution
    int output_stride = 10;
    int checkpoint_stride = 0;   // 0 disables checkpoints
    std::string output_dir = "out";
    int threads = 1;

    void validate() const;
};

struct GeometryConfig {
    std::string spec = "unit-square-porous";
    int nx = 16;
    int ny = 16;
    int ny_porous = 0;
    double length = 1.0;
    double porous_height = 0.5;
    double fluid_height = 0.5;
    std::string mesh_file;  // overrides the generator when nonempty
    std::string left_tag, right_tag, bottom_tag, top_tag;  // unit-square overrides

    void validate() const;
};

/// Defaults mimic the experimental setup: ADSCs seeded near the scaffold
/// boundary, hyaluron impregnated uniformly, no chondrocytes or cartilage.
struct InitialConditions {
    Expression c1 = Expression::parse("0.5*exp(-40*min(min(x,1-x),min(y,1-y))^2)");
    Expression c2 = Expression::parse("0");
    Expression h = Expression::parse("1");
    Expression k = Expression::parse("0");
};

struct SolverSettings {
    LinearSolverConfig linear;
    double newton_tolerance = 1e-10;
    int newton_max_iterations = 25;

    void validate() const;
};

struct CouplingParams {
    double gamma_N = 100.0;  // Nitsche interface penalty
    double bjs_slip = 1.0;   // Beavers-Joseph-Saffman slip constant
    double pressure_stabilization = 0.0;

    void validate() const;
};

struct Config {
    BiologyParams biology;
    MechParams mechanics;
    StimulusParams stimulus;
    RunPlan run;
    GeometryConfig geometry;
    InitialConditions initial;
    SolverSettings solver;
    CouplingParams coupling;

    void validate() const;

    /// Parses, validates and normalizes. Unknown keys are rejected; parse
    /// errors carry the line number; range violations name key and bound.
    static Config load(const std::string& path);
    static Config from_json_text(const std::string& text);

    /// Normalized JSON (sorted keys, shortest round-trip numbers);
    /// load(save(x)) is the identity.
    std::string to_json_text() const;
    void save(const std::string& path) const;

    /// Hash of the normalized document with run.output_dir blanked, so a
    /// restarted run may write elsewhere and still match its checkpoint.
    std::uint64_t content_hash() const;
};

} // namespace menisim
