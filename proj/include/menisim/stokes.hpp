#pragma once

#include <functional>
#include <map>

#include "menisim/config.hpp"
#include "menisim/poro.hpp"

namespace menisim {

struct StokesBC {
    enum class Kind {
        NoSlip,    // u = 0
        Traction,  // sigma n = -p(t) n, tangential velocity pinned
        Open,      // sigma n = 0
        Velocity,  // u = g(x, t)
    };
    Kind kind = Kind::NoSlip;
    std::function<double(double)> pressure;            // Traction
    std::function<Vec2(Vec2, double)> velocity;        // Velocity
};
using StokesBCTable = std::map<BoundaryTag, StokesBC>;

/// Inflow driven by p_in(t) = p_max sin(pi t), open outflow, no-slip walls.
StokesBCTable paper_stokes_bcs(double p_max);

struct StokesState {
    Field u;  // velocity, vector P1-bubble (mm/s)
    Field p;  // pressure, P1 (MPa)
    double t = 0.0;
};

/// Unsteady (or steady) Stokes with the mini element on an all-fluid mesh.
class StokesSolver {
public:
    StokesSolver(const Mesh& mesh, MechParams params, StokesBCTable bcs, double dt,
                 bool steady = false);

    const FunctionSpace& velocity_space() const { return vel_; }
    const FunctionSpace& pressure_space() const { return pre_; }

    StokesState zero_state() const;
    StokesState step(const StokesState& old) const;

    /// || (q, div u) || over pressure test functions, scaled by the rhs norm
    /// of the last solve; small by construction for a converged solve.
    double divergence_residual(const StokesState& state) const;

private:
    void assemble_matrix();
    const Mesh* mesh_;
    MechParams params_;
    StokesBCTable bcs_;
    double dt_;
    bool steady_;
    FunctionSpace vel_, pre_;
    std::vector<bool> constrained_;
    SparseMatrix mass_vel_;
    SparseMatrix div_block_;    // (q, div u), pressure rows x velocity cols
    SparseMatrix full_matrix_;  // unreduced operator, for Dirichlet lifting
    DirectSolver lu_;

    int off_u() const { return 0; }
    int off_p() const { return vel_.ndof(); }
};

struct InterfaceParams {
    double gamma_N = 100.0;
    double bjs_slip = 1.0;
};

struct CoupledState {
    Field u_f;  // fluid velocity (P1-bubble, fluid subdomain)
    Field p_f;  // fluid pressure (P1)
    Field eta;  // displacement (vector P1, porous subdomain)
    Field u_p;  // Darcy flux (RT0)
    Field p_p;  // pore pressure (P0)
    double t = 0.0;
};

/// Monolithic backward-Euler Stokes--Biot system on a two-subdomain mesh.
/// The interface conditions (mass conservation, normal stress balance,
/// Beavers-Joseph-Saffman slip) are imposed by penalized consistency terms;
/// see docs/coupled_weak_form.md for the discrete form.
class CoupledSolver {
public:
    CoupledSolver(const Mesh& mesh, MechParams params, InterfaceParams iface, double dt,
                  StokesBCTable fluid_bcs, PoroBCTable poro_bcs);

    const Mesh& mesh() const { return *mesh_; }
    double dt() const { return dt_; }

    CoupledState zero_state() const;
    CoupledState step(const CoupledState& old) const;

    /// Integral over the interface of |(u_f - d eta/dt - u_p)·n|, using the
    /// previous state for the displacement rate.
    double interface_mismatch(const CoupledState& snew, const CoupledState& sold) const;

    /// Kinetic + elastic + pore-storage energy.
    double energy(const CoupledState& state) const;

    /// Poro-side state view for stress evaluation (shares the porous mesh
    /// restriction conventions of PoroSolver).
    StressField compute_stress(const CoupledState& state) const;
    std::vector<Vec2> seepage_velocity(const CoupledState& state) const;

    const FunctionSpace& fluid_velocity_space() const { return u_f_; }
    const FunctionSpace& displacement_space() const { return eta_; }
    const FunctionSpace& pore_pressure_space() const { return p_p_; }

    int n_unknowns() const {
        return u_f_.ndof() + p_f_.ndof() + eta_.ndof() + u_p_.ndof() + p_p_.ndof();
    }

private:
    void assemble_matrix();
    Vector assemble_rhs(const CoupledState& old, double t_new) const;

    const Mesh* mesh_;
    MechParams params_;
    InterfaceParams iface_;
    double dt_;
    StokesBCTable fluid_bcs_;
    PoroBCTable poro_bcs_;
    LameParameters lame_;

    FunctionSpace u_f_, p_f_, eta_, u_p_, p_p_;
    std::vector<bool> constrained_;
    SparseMatrix mass_uf_;      // fluid velocity mass (active part)
    SparseMatrix elast_;        // elasticity block
    SparseMatrix div_eta_;      // (div eta, q_p) porous
    DirectSolver lu_;

    int off_uf() const { return 0; }
    int off_pf() const { return u_f_.ndof(); }
    int off_eta() const { return u_f_.ndof() + p_f_.ndof(); }
    int off_up() const { return u_f_.ndof() + p_f_.ndof() + eta_.ndof(); }
    int off_pp() const { return u_f_.ndof() + p_f_.ndof() + eta_.ndof() + u_p_.ndof(); }
};

} // namespace menisim
