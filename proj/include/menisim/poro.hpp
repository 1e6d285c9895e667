#pragma once

#include <functional>
#include <map>

#include "menisim/config.hpp"
#include "menisim/forms.hpp"
#include "menisim/mesh.hpp"
#include "menisim/solvers.hpp"
#include "menisim/spaces.hpp"

namespace menisim {

enum class DisplacementBC { Fixed, RollerX, RollerY, Free };
enum class DarcyBC { Pressure, Impermeable };

/// Per-tag boundary condition for the Biot system. Displacement Dirichlet
/// parts are imposed by dof elimination (homogeneous); pressure data enter
/// the mixed Darcy equation as natural boundary terms; tractions load the
/// momentum balance.
struct PoroBC {
    DisplacementBC disp = DisplacementBC::Free;
    DarcyBC darcy = DarcyBC::Impermeable;
    std::function<double(double)> normal_pressure;  // traction sigma n = -p(t) n
    std::function<double(double)> pressure_datum;   // Darcy boundary pressure (default 0)
};

using PoroBCTable = std::map<BoundaryTag, PoroBC>;

/// Paper defaults: the whole outer porous wall is clamped and drained.
PoroBCTable default_poro_bcs();

struct PoroState {
    Field eta;  // displacement, vector P1 (mm)
    Field u;    // Darcy flux, RT0 (mm/s)
    Field p;    // pore pressure, P0 (MPa)
    double t = 0.0;
    // Newmark history, used only in dynamic mode
    Vector eta_dot, eta_ddot;
};

struct StressField {
    std::vector<SymTensor2> strain;     // D(eta), per element
    std::vector<SymTensor2> effective;  // sigma_e
    std::vector<SymTensor2> total;      // sigma_p = sigma_e - alpha p I
    std::vector<double> von_mises;              // of sigma_p, plane strain
    std::vector<double> octahedral_shear_strain;
};

/// Quasi-static (default) or Newmark(1/4, 1/2) dynamic Biot stepping with
/// the mixed three-field discretization. The system matrix is constant in
/// time and factorized once.
class PoroSolver {
public:
    PoroSolver(const Mesh& mesh, MechParams params, PoroBCTable bcs, double dt,
               bool quasi_static = true, double pressure_stabilization = 0.0);

    const Mesh& mesh() const { return *mesh_; }
    const FunctionSpace& displacement_space() const { return vec_p1_; }
    const FunctionSpace& flux_space() const { return rt0_; }
    const FunctionSpace& pressure_space() const { return p0_; }
    double dt() const { return dt_; }

    PoroState zero_state() const;
    PoroState step(const PoroState& old) const;

    StressField compute_stress(const PoroState& state) const;
    /// Seepage velocity u/Phi at element centroids.
    std::vector<Vec2> seepage_velocity(const PoroState& state) const;

    /// Independent recomputation of the per-element mass balance
    /// (1/M) dp/dt |T| + alpha d(div eta)/dt |T| + sum of face fluxes.
    double local_mass_balance(const PoroState& snew, const PoroState& sold) const;

    int n_unknowns() const { return vec_p1_.ndof() + rt0_.ndof() + p0_.ndof(); }

private:
    void assemble_matrix();
    Vector assemble_rhs(const PoroState& old, double t_new, const Vector& eta_pred) const;

    const Mesh* mesh_;
    MechParams params_;
    PoroBCTable bcs_;
    double dt_;
    bool quasi_static_;
    double stab_;
    LameParameters lame_;

    FunctionSpace vec_p1_, rt0_, p0_;
    std::vector<bool> constrained_;  // eliminated dofs (full system indexing)
    SparseMatrix div_eta_;           // (div eta, q) block, P0 rows x vecP1 cols
    SparseMatrix div_u_;             // (div u, q) block, P0 rows x RT0 cols
    Vector p0_mass_;                 // element areas
    SparseMatrix vec_mass_;          // vector P1 mass (dynamic mode)
    DirectSolver lu_;

    int off_eta() const { return 0; }
    int off_u() const { return vec_p1_.ndof(); }
    int off_p() const { return vec_p1_.ndof() + rt0_.ndof(); }

    friend class CoupledSolver;
};

/// RT0 mass matrix weighted by `coefficient` (the inverse Darcy mobility).
SparseMatrix rt0_mass_matrix(const FunctionSpace& rt0, double coefficient);

} // namespace menisim
