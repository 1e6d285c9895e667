#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "menisim/config.hpp"
#include "menisim/forms.hpp"
#include "menisim/mesh.hpp"
#include "menisim/solvers.hpp"
#include "menisim/spaces.hpp"

namespace menisim {

/// Differentiation rates, elementwise constant and uniformly bounded.
struct RateField {
    std::vector<double> alpha1;
    std::vector<double> alpha2;

    static RateField constant(int n_elements, double a1, double a2) {
        return {std::vector<double>(n_elements, a1), std::vector<double>(n_elements, a2)};
    }
};

/// One time level of the cell system: broken P1 densities for the two cell
/// populations, nodal P1 fields for hyaluron and cartilage.
struct CellState {
    Field c1, c2;  // dG-P1
    Field h, k;    // P1
    double t = 0.0;
};

/// Optional manufactured sources appended to the four equations (MMS).
/// s_c1/s_c2 are integrated with the reaction quadrature; s_h/s_k enter the
/// nodal ODE rows pointwise.
struct CellSources {
    std::function<double(Vec2, double)> c1, c2, h, k;
    bool active = false;
};

struct NewtonReport {
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> history;
};

struct CellRunSummary {
    int steps = 0;
    int newton_total = 0;
    int newton_max = 0;
    double min_c1 = 0.0, min_c2 = 0.0;  // over the whole run
    double mass0 = 0.0, mass_final = 0.0;  // integral of c1 + c2
};

/// NIP dG discretization of the cell system with upwinded taxis transport,
/// implicit Euler in time and a Newton solve per step. The h/k equations are
/// nodal ODEs with lumped mass, driven by the lumped L2 projection of the
/// broken fields onto P1.
class CellSolver {
public:
    CellSolver(const Mesh& mesh, BiologyParams params, SolverSettings solver = {});

    const Mesh& mesh() const { return *mesh_; }
    const FunctionSpace& dg_space() const { return dg_; }
    const FunctionSpace& p1_space() const { return p1_; }
    const BiologyParams& params() const { return params_; }

    CellState make_state(const Expression& c1, const Expression& c2, const Expression& h,
                         const Expression& k, double t = 0.0) const;
    CellState zero_state() const;

    /// v|_T = b1 grad h|_T + b2 grad k|_T (elementwise constant).
    std::vector<Vec2> taxis_velocity(const Field& h, const Field& k) const;

    /// Fully implicit residual of all four blocks, unknowns ordered
    /// [c1, c2, h, k].
    Vector residual(const CellState& snew, const CellState& sold, const RateField& rates,
                    double dt) const;

    /// One backward-Euler step solved with Newton (analytic Jacobian).
    CellState newton_step(const CellState& sold, const RateField& rates, double dt,
                          NewtonReport* report = nullptr) const;

    using RateProvider = std::function<RateField(const CellState&, int step)>;
    using Observer = std::function<void(int step, const CellState&, const NewtonReport&)>;

    /// Runs n_steps implicit Euler steps; observers fire every `stride` steps
    /// (and at the last step).
    CellRunSummary run(CellState& state, const RateProvider& rates, double dt, int n_steps,
                       const std::vector<Observer>& observers = {}, int stride = 1) const;

    void set_sources(CellSources sources) { sources_ = std::move(sources); }

    /// Independent per-element balance: mass change + reactions + recomputed
    /// face fluxes; returns the max |imbalance| over elements and species.
    double local_balance_residual(const CellState& snew, const CellState& sold,
                                  const RateField& rates, double dt) const;

    /// Nodal values of a dG field under the lumped L2 projection onto P1.
    Vector project_to_p1(const Field& dg_field) const;

    int n_unknowns() const { return 2 * dg_.ndof() + 2 * p1_.ndof(); }

private:
    struct Blocks;
    void assemble(const CellState& snew, const CellState& sold, const RateField& rates, double dt,
                  Vector& residual_out, TripletList* jacobian_out) const;

    const Mesh* mesh_;
    BiologyParams params_;
    SolverSettings solver_;
    FunctionSpace dg_;
    FunctionSpace p1_;
    CellSources sources_;

    SparseMatrix mass_dg_;        // dG mass
    SparseMatrix diff_c1_;        // a1 (stiffness + NIP faces + penalty)
    SparseMatrix diff_c2_;        // same with unit diffusivity
    SparseMatrix projection_;     // P1 x dG mass, divided by lumped mass on use
    Vector lumped_;               // P1 lumped mass

    int off_c1() const { return 0; }
    int off_c2() const { return dg_.ndof(); }
    int off_h() const { return 2 * dg_.ndof(); }
    int off_k() const { return 2 * dg_.ndof() + p1_.ndof(); }
};

} // namespace menisim
