#pragma once

#include <vector>

#include "menisim/spaces.hpp"

namespace menisim {

/// Local indices of a face's endpoints within one incident element.
struct FaceSide {
    int elem = -1;
    int loc_v0 = -1, loc_v1 = -1;
};
struct FaceContext {
    FaceSide left, right;  // right.elem < 0 on boundary faces
};
FaceContext face_context(const Mesh& mesh, int f);

/// Fixed catalogue of bilinear forms. Velocity-carrying forms take one
/// constant vector per element; face velocities are the average of the two
/// incident element values (interior value on the boundary).
struct FormSpec {
    enum class Kind {
        Mass,               // (c u, v)
        Stiffness,          // (c ∇u, ∇v), elementwise coefficient optional
        Advection,          // -(v_el u, ∇v): the dG volume transport term
        DGUpwind,           // ((v·n u)^up, [v]) over interior faces
        DGFaceNIP,          // +([u],{c ∇v}·n) - ([v],{c ∇u}·n) + eta [u][v]
        DivergenceRT0P0,    // (div u, q), u in RT0, q in P0
        DivergenceVecP1P0,  // (div u, q), u in vector P1/P1-bubble, q in P0
        BoundaryTangentPenalty,  // p (u·t, v·t) on faces with the given tag
    };
    Kind kind = Kind::Mass;

    double coefficient = 1.0;          // c above
    std::vector<double> element_coefficient;  // optional per-element c
    std::vector<Vec2> element_velocity;       // Advection/DGUpwind
    double eta0 = 4.0;                 // DGFaceNIP penalty scale
    double penalty_coefficient = 1.0;  // eta reference diffusivity / boundary penalty
    BoundaryTag tag = BoundaryTag::Free;
};

/// Assembles the requested form with quadrature exact for the polynomial
/// degrees involved. Throws InputError for space/form mismatches.
SparseMatrix assemble_bilinear(const FormSpec& form, const FunctionSpace& trial,
                               const FunctionSpace& test);

// Convenience wrappers used throughout the solvers.
SparseMatrix mass_matrix(const FunctionSpace& space, double coeff = 1.0);
SparseMatrix stiffness_matrix(const FunctionSpace& space, double coeff = 1.0);
SparseMatrix dg_nip_matrix(const FunctionSpace& dg, double diffusivity, double eta0,
                           double eta_ref_diffusivity);
SparseMatrix rt0_p0_divergence(const FunctionSpace& rt0, const FunctionSpace& p0);

/// (lambda div u div xi + 2 mu D(u):D(xi)) for vector P1 or P1-bubble.
SparseMatrix elasticity_matrix(const FunctionSpace& vec_space, double lambda, double mu);

/// Diagonal of the lumped P1 mass matrix (row sums).
Vector lumped_mass(const FunctionSpace& p1);

/// NIP dG penalty on face f: eta0 * max(a_ref, 1) / h_F.
double nip_penalty(double eta0, double a_ref, double face_measure);

} // namespace menisim
