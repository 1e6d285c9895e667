#include "menisim/forms.hpp"

#include <cmath>

#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"

namespace menisim {

FaceContext face_context(const Mesh& mesh, int f) {
    const Face& face = mesh.face(f);
    FaceContext ctx;
    auto fill = [&](int e, FaceSide& side) {
        side.elem = e;
        const auto& el = mesh.element(e);
        for (int k = 0; k < 3; ++k) {
            if (el[k] == face.v0) side.loc_v0 = k;
            if (el[k] == face.v1) side.loc_v1 = k;
        }
        require(side.loc_v0 >= 0 && side.loc_v1 >= 0, "face_context: inconsistent face table");
    };
    fill(face.left, ctx.left);
    if (face.right >= 0) fill(face.right, ctx.right);
    return ctx;
}

double nip_penalty(double eta0, double a_ref, double face_measure) {
    return eta0 * std::max(a_ref, 1.0) / face_measure;
}

namespace {

bool is_lagrange_scalar(const FunctionSpace& s) {
    return s.vector_dim() == 1 &&
           (s.kind() == SpaceKind::P1 || s.kind() == SpaceKind::DGP1 || s.kind() == SpaceKind::P0);
}

// Global dofs of the nodal basis functions on an element, with barycentric
// weights lambda -> basis values. P0 is the single indicator function.
int local_basis_count(const FunctionSpace& s) {
    switch (s.kind()) {
        case SpaceKind::P0: return 1;
        case SpaceKind::P1:
        case SpaceKind::DGP1: return 3;
        case SpaceKind::P1Bubble: return 4;
        default: return 0;
    }
}

int local_dof(const FunctionSpace& s, int e, int local, int comp = 0) {
    switch (s.kind()) {
        case SpaceKind::P0: return s.element_dof(e, 0, comp);
        case SpaceKind::P1: return s.vertex_dof(s.mesh().element(e)[local], comp);
        case SpaceKind::DGP1: return s.element_dof(e, local, comp);
        case SpaceKind::P1Bubble:
            return local < 3 ? s.vertex_dof(s.mesh().element(e)[local], comp)
                             : s.bubble_dof(e, comp);
        default: throw InputError("space has no nodal element basis");
    }
}

double basis_value(const FunctionSpace& s, int local, const std::array<double, 3>& b) {
    if (s.kind() == SpaceKind::P0) return 1.0;
    if (local < 3) return b[local];
    return 27.0 * b[0] * b[1] * b[2];
}

Vec2 basis_gradient(const FunctionSpace& s, const std::array<Vec2, 3>& g, int local,
                    const std::array<double, 3>& b) {
    if (s.kind() == SpaceKind::P0) return {};
    if (local < 3) return g[local];
    return 27.0 * (g[0] * (b[1] * b[2]) + g[1] * (b[0] * b[2]) + g[2] * (b[0] * b[1]));
}

SparseMatrix assemble_mass(const FormSpec& form, const FunctionSpace& trial,
                           const FunctionSpace& test) {
    require(trial.kind() == test.kind() && trial.vector_dim() == test.vector_dim(),
            "mass form needs matching trial/test spaces");
    require(trial.kind() != SpaceKind::RT0, "mass form not provided for RT0");
    const Mesh& mesh = trial.mesh();
    const int degree = trial.kind() == SpaceKind::P1Bubble ? 6 : 2;
    const QuadratureRule& rule = triangle_rule(degree);
    const int nb = local_basis_count(trial);
    TripletList trip(test.ndof(), trial.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double c =
            form.element_coefficient.empty() ? form.coefficient : form.element_coefficient[e];
        const double scale = c * mesh.area(e);
        for (const auto& q : rule.points) {
            for (int i = 0; i < nb; ++i) {
                const double vi = basis_value(test, i, q.bary);
                for (int j = 0; j < nb; ++j) {
                    const double vj = basis_value(trial, j, q.bary);
                    const double val = scale * q.weight * vi * vj;
                    for (int comp = 0; comp < trial.vector_dim(); ++comp)
                        trip.add(local_dof(test, e, i, comp), local_dof(trial, e, j, comp), val);
                }
            }
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_stiffness(const FormSpec& form, const FunctionSpace& trial,
                                const FunctionSpace& test) {
    require(trial.kind() == test.kind() && trial.vector_dim() == test.vector_dim(),
            "stiffness form needs matching trial/test spaces");
    require(trial.kind() == SpaceKind::P1 || trial.kind() == SpaceKind::DGP1 ||
                trial.kind() == SpaceKind::P1Bubble,
            "stiffness form needs a P1-type space");
    const Mesh& mesh = trial.mesh();
    const bool bubble = trial.kind() == SpaceKind::P1Bubble;
    const QuadratureRule& rule = triangle_rule(bubble ? 4 : 1);
    const int nb = local_basis_count(trial);
    TripletList trip(test.ndof(), trial.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double c =
            form.element_coefficient.empty() ? form.coefficient : form.element_coefficient[e];
        const auto g = p1_gradients(mesh, e);
        const double scale = c * mesh.area(e);
        for (const auto& q : rule.points) {
            for (int i = 0; i < nb; ++i) {
                const Vec2 gi = basis_gradient(test, g, i, q.bary);
                for (int j = 0; j < nb; ++j) {
                    const Vec2 gj = basis_gradient(trial, g, j, q.bary);
                    const double val = scale * q.weight * gi.dot(gj);
                    for (int comp = 0; comp < trial.vector_dim(); ++comp)
                        trip.add(local_dof(test, e, i, comp), local_dof(trial, e, j, comp), val);
                }
            }
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_advection(const FormSpec& form, const FunctionSpace& trial,
                                const FunctionSpace& test) {
    require(trial.kind() == SpaceKind::DGP1 && test.kind() == SpaceKind::DGP1,
            "advection volume form is defined for dG-P1");
    const Mesh& mesh = trial.mesh();
    require(static_cast<int>(form.element_velocity.size()) == mesh.num_elements(),
            "advection form needs one velocity per element");
    TripletList trip(test.ndof(), trial.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto g = p1_gradients(mesh, e);
        const Vec2 v = form.element_velocity[e];
        const double third_area = mesh.area(e) / 3.0;
        for (int i = 0; i < 3; ++i) {
            const double vi = -v.dot(g[i]) * third_area;  // -(v u, grad test)
            for (int j = 0; j < 3; ++j)
                trip.add(test.element_dof(e, i), trial.element_dof(e, j), vi);
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_upwind(const FormSpec& form, const FunctionSpace& trial,
                             const FunctionSpace& test) {
    require(trial.kind() == SpaceKind::DGP1 && test.kind() == SpaceKind::DGP1,
            "upwind face form is defined for dG-P1");
    const Mesh& mesh = trial.mesh();
    require(static_cast<int>(form.element_velocity.size()) == mesh.num_elements(),
            "upwind form needs one velocity per element");
    const EdgeRule& rule = edge_rule(2);
    TripletList trip(test.ndof(), trial.ndof());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        if (face.is_boundary()) continue;  // zero-flux: no boundary advective flux
        const FaceContext ctx = face_context(mesh, f);
        const Vec2 vf =
            (form.element_velocity[face.left] + form.element_velocity[face.right]) * 0.5;
        const double vn = vf.dot(face.normal);
        // Upwind weights on (left, right) traces; tie -> average.
        double wl = 0.5, wr = 0.5;
        if (vn > 0.0) { wl = 1.0; wr = 0.0; }
        else if (vn < 0.0) { wl = 0.0; wr = 1.0; }
        for (const auto& q : rule.points) {
            const double tl0 = 1.0 - q.t, tl1 = q.t;  // traces of v0/v1 hats
            const double ds = q.weight * face.measure * vn;
            // trial value at the quadrature point from the upwind side(s)
            const std::array<std::pair<int, double>, 4> trial_terms = {
                std::pair{trial.element_dof(ctx.left.elem, ctx.left.loc_v0), wl * tl0},
                std::pair{trial.element_dof(ctx.left.elem, ctx.left.loc_v1), wl * tl1},
                std::pair{trial.element_dof(ctx.right.elem, ctx.right.loc_v0), wr * tl0},
                std::pair{trial.element_dof(ctx.right.elem, ctx.right.loc_v1), wr * tl1}};
            // [test] = test_L - test_R
            const std::array<std::pair<int, double>, 4> test_terms = {
                std::pair{test.element_dof(ctx.left.elem, ctx.left.loc_v0), tl0},
                std::pair{test.element_dof(ctx.left.elem, ctx.left.loc_v1), tl1},
                std::pair{test.element_dof(ctx.right.elem, ctx.right.loc_v0), -tl0},
                std::pair{test.element_dof(ctx.right.elem, ctx.right.loc_v1), -tl1}};
            for (const auto& [ti, wi] : test_terms)
                for (const auto& [tj, wj] : trial_terms)
                    if (wi != 0.0 && wj != 0.0) trip.add(ti, tj, ds * wi * wj);
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_dg_face_nip(const FormSpec& form, const FunctionSpace& trial,
                                  const FunctionSpace& test) {
    require(trial.kind() == SpaceKind::DGP1 && test.kind() == SpaceKind::DGP1,
            "NIP face form is defined for dG-P1");
    const Mesh& mesh = trial.mesh();
    const double a = form.coefficient;
    const EdgeRule& rule = edge_rule(2);
    TripletList trip(test.ndof(), trial.ndof());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        if (face.is_boundary()) continue;  // zero-flux BCs: boundary terms omitted
        const FaceContext ctx = face_context(mesh, f);
        const double eta = nip_penalty(form.eta0, form.penalty_coefficient, face.measure);
        const auto gl = p1_gradients(mesh, ctx.left.elem);
        const auto gr = p1_gradients(mesh, ctx.right.elem);

        // Per-dof trace weights at a parameter t and normal-gradient values.
        struct Dof {
            int index;
            double jump_sign;  // +1 left, -1 right
            int trace_local;   // which endpoint hat (-1 for the opposite vertex)
            double grad_n;     // grad(basis)·n, constant per element
        };
        std::array<Dof, 6> dofs;
        for (int k = 0; k < 3; ++k) {
            const int il = trial.element_dof(ctx.left.elem, k);
            const int ir = trial.element_dof(ctx.right.elem, k);
            int tl = -1, tr = -1;
            if (k == ctx.left.loc_v0) tl = 0;
            if (k == ctx.left.loc_v1) tl = 1;
            if (k == ctx.right.loc_v0) tr = 0;
            if (k == ctx.right.loc_v1) tr = 1;
            dofs[k] = {il, +1.0, tl, gl[k].dot(face.normal)};
            dofs[3 + k] = {ir, -1.0, tr, gr[k].dot(face.normal)};
        }
        auto trace = [](const Dof& d, double t) {
            if (d.trace_local < 0) return 0.0;
            return d.trace_local == 0 ? 1.0 - t : t;
        };
        for (const auto& q : rule.points) {
            const double ds = q.weight * face.measure;
            for (const auto& di : dofs) {        // test
                for (const auto& dj : dofs) {    // trial
                    const double jump_j = dj.jump_sign * trace(dj, q.t);
                    const double jump_i = di.jump_sign * trace(di, q.t);
                    const double avg_gi = 0.5 * a * di.grad_n;
                    const double avg_gj = 0.5 * a * dj.grad_n;
                    // +([u],{a grad v}·n) - ([v],{a grad u}·n) + eta [u][v]
                    const double val =
                        jump_j * avg_gi - jump_i * avg_gj + eta * jump_j * jump_i;
                    if (val != 0.0) trip.add(di.index, dj.index, ds * val);
                }
            }
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_div_rt0_p0(const FunctionSpace& trial, const FunctionSpace& test) {
    require(trial.kind() == SpaceKind::RT0 && test.kind() == SpaceKind::P0,
            "divergence coupling needs RT0 trial and P0 test");
    const Mesh& mesh = trial.mesh();
    TripletList trip(test.ndof(), trial.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int k = 0; k < 3; ++k) {
            const int f = mesh.element_faces(e)[k];
            trip.add(test.element_dof(e, 0), trial.face_dof(f),
                     mesh.face_sign(e, f) * mesh.face(f).measure);
        }
    }
    return assemble(trip);
}

SparseMatrix assemble_div_vecp1_p0(const FunctionSpace& trial, const FunctionSpace& test) {
    require((trial.kind() == SpaceKind::P1 || trial.kind() == SpaceKind::P1Bubble) &&
                trial.vector_dim() == 2 && test.kind() == SpaceKind::P0,
            "divergence coupling needs vector P1(+bubble) trial and P0 test");
    const Mesh& mesh = trial.mesh();
    TripletList trip(test.ndof(), trial.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto g = p1_gradients(mesh, e);
        const double A = mesh.area(e);
        for (int i = 0; i < 3; ++i) {
            trip.add(test.element_dof(e, 0), local_dof(trial, e, i, 0), A * g[i].x);
            trip.add(test.element_dof(e, 0), local_dof(trial, e, i, 1), A * g[i].y);
        }
        // Bubble columns vanish: the bubble has zero trace, so its divergence
        // integrates to zero against piecewise constants.
    }
    return assemble(trip);
}

SparseMatrix assemble_boundary_tangent_penalty(const FormSpec& form, const FunctionSpace& trial,
                                               const FunctionSpace& test) {
    require((trial.kind() == SpaceKind::P1 || trial.kind() == SpaceKind::P1Bubble) &&
                trial.vector_dim() == 2 && test.kind() == trial.kind(),
            "tangent penalty needs a vector P1(+bubble) space");
    const Mesh& mesh = trial.mesh();
    const EdgeRule& rule = edge_rule(2);
    TripletList trip(test.ndof(), trial.ndof());
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        if (!face.is_boundary() || face.tag != form.tag) continue;
        const Vec2 tangent = (mesh.vertex(face.v1) - mesh.vertex(face.v0)) / face.measure;
        const FaceContext ctx = face_context(mesh, f);
        const double p = form.penalty_coefficient / face.measure;
        const std::array<std::pair<int, int>, 2> locs = {
            std::pair{ctx.left.loc_v0, 0}, std::pair{ctx.left.loc_v1, 1}};
        for (const auto& q : rule.points) {
            const double ds = q.weight * face.measure * p;
            for (const auto& [li, ei] : locs) {
                const double vi = ei == 0 ? 1.0 - q.t : q.t;
                for (const auto& [lj, ej] : locs) {
                    const double vj = ej == 0 ? 1.0 - q.t : q.t;
                    for (int a2 = 0; a2 < 2; ++a2) {
                        const double ti = vi * (a2 == 0 ? tangent.x : tangent.y);
                        for (int b2 = 0; b2 < 2; ++b2) {
                            const double tj = vj * (b2 == 0 ? tangent.x : tangent.y);
                            trip.add(local_dof(test, ctx.left.elem, li, a2),
                                     local_dof(trial, ctx.left.elem, lj, b2), ds * ti * tj);
                        }
                    }
                }
            }
        }
    }
    return assemble(trip);
}

} // namespace

SparseMatrix assemble_bilinear(const FormSpec& form, const FunctionSpace& trial,
                               const FunctionSpace& test) {
    switch (form.kind) {
        case FormSpec::Kind::Mass: return assemble_mass(form, trial, test);
        case FormSpec::Kind::Stiffness: return assemble_stiffness(form, trial, test);
        case FormSpec::Kind::Advection: return assemble_advection(form, trial, test);
        case FormSpec::Kind::DGUpwind: return assemble_upwind(form, trial, test);
        case FormSpec::Kind::DGFaceNIP: return assemble_dg_face_nip(form, trial, test);
        case FormSpec::Kind::DivergenceRT0P0: return assemble_div_rt0_p0(trial, test);
        case FormSpec::Kind::DivergenceVecP1P0: return assemble_div_vecp1_p0(trial, test);
        case FormSpec::Kind::BoundaryTangentPenalty:
            return assemble_boundary_tangent_penalty(form, trial, test);
    }
    throw InputError("unknown form kind");
}

SparseMatrix mass_matrix(const FunctionSpace& space, double coeff) {
    FormSpec form;
    form.kind = FormSpec::Kind::Mass;
    form.coefficient = coeff;
    return assemble_bilinear(form, space, space);
}

SparseMatrix stiffness_matrix(const FunctionSpace& space, double coeff) {
    FormSpec form;
    form.kind = FormSpec::Kind::Stiffness;
    form.coefficient = coeff;
    return assemble_bilinear(form, space, space);
}

SparseMatrix dg_nip_matrix(const FunctionSpace& dg, double diffusivity, double eta0,
                           double eta_ref_diffusivity) {
    FormSpec form;
    form.kind = FormSpec::Kind::DGFaceNIP;
    form.coefficient = diffusivity;
    form.eta0 = eta0;
    form.penalty_coefficient = eta_ref_diffusivity;
    return assemble_bilinear(form, dg, dg);
}

SparseMatrix rt0_p0_divergence(const FunctionSpace& rt0, const FunctionSpace& p0) {
    FormSpec form;
    form.kind = FormSpec::Kind::DivergenceRT0P0;
    return assemble_bilinear(form, rt0, p0);
}

SparseMatrix elasticity_matrix(const FunctionSpace& vec_space, double lambda, double mu) {
    require((vec_space.kind() == SpaceKind::P1 || vec_space.kind() == SpaceKind::P1Bubble) &&
                vec_space.vector_dim() == 2,
            "elasticity form needs a vector P1(+bubble) space");
    const Mesh& mesh = vec_space.mesh();
    const bool bubble = vec_space.kind() == SpaceKind::P1Bubble;
    const QuadratureRule& rule = triangle_rule(bubble ? 4 : 1);
    const int nb = local_basis_count(vec_space);
    TripletList trip(vec_space.ndof(), vec_space.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto g = p1_gradients(mesh, e);
        const double A = mesh.area(e);
        for (const auto& q : rule.points) {
            std::array<Vec2, 4> grad;
            for (int i = 0; i < nb; ++i) grad[i] = basis_gradient(vec_space, g, i, q.bary);
            for (int i = 0; i < nb; ++i) {
                for (int a = 0; a < 2; ++a) {
                    // strain of basis (i, a): D(phi_i e_a)
                    const Vec2 gi = grad[i];
                    const SymTensor2 Di = a == 0 ? SymTensor2{gi.x, 0.0, 0.5 * gi.y}
                                                 : SymTensor2{0.0, gi.y, 0.5 * gi.x};
                    const double divi = a == 0 ? gi.x : gi.y;
                    for (int j = 0; j < nb; ++j) {
                        for (int b = 0; b < 2; ++b) {
                            const Vec2 gj = grad[j];
                            const SymTensor2 Dj = b == 0 ? SymTensor2{gj.x, 0.0, 0.5 * gj.y}
                                                         : SymTensor2{0.0, gj.y, 0.5 * gj.x};
                            const double divj = b == 0 ? gj.x : gj.y;
                            const double ddot = Di.xx * Dj.xx + Di.yy * Dj.yy + 2.0 * Di.xy * Dj.xy;
                            const double val =
                                A * q.weight * (lambda * divi * divj + 2.0 * mu * ddot);
                            trip.add(local_dof(vec_space, e, i, a), local_dof(vec_space, e, j, b),
                                     val);
                        }
                    }
                }
            }
        }
    }
    return assemble(trip);
}

Vector lumped_mass(const FunctionSpace& p1) {
    require(p1.kind() == SpaceKind::P1 && p1.vector_dim() == 1, "lumped_mass expects scalar P1");
    const Mesh& mesh = p1.mesh();
    Vector m = Vector::Zero(p1.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double third = mesh.area(e) / 3.0;
        for (int i = 0; i < 3; ++i) m[p1.vertex_dof(mesh.element(e)[i])] += third;
    }
    return m;
}

} // namespace menisim
