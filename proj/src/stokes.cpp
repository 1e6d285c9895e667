#include "menisim/stokes.hpp"

#include <cmath>

#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"

namespace menisim {

StokesBCTable paper_stokes_bcs(double p_max) {
    StokesBCTable bcs;
    bcs[BoundaryTag::FluidWall] = StokesBC{StokesBC::Kind::NoSlip, nullptr, nullptr};
    StokesBC in;
    in.kind = StokesBC::Kind::Traction;
    in.pressure = [p_max](double t) { return p_max * std::sin(M_PI * t); };
    bcs[BoundaryTag::Inflow] = in;
    bcs[BoundaryTag::Outflow] = StokesBC{StokesBC::Kind::Open, nullptr, nullptr};
    return bcs;
}

namespace {

constexpr double kTangentPenaltyScale = 1e8;  // times mu / h on pinned faces

struct VelDof {
    int dof;       // global dof
    int basis;     // 0..2 vertex hats, 3 bubble
    int comp;      // 0 = x, 1 = y
};

// the 8 local dofs of a vector P1-bubble element
std::array<VelDof, 8> velocity_dofs(const FunctionSpace& vel, int e) {
    const Mesh& mesh = vel.mesh();
    std::array<VelDof, 8> out;
    int idx = 0;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c)
            out[idx++] = {vel.vertex_dof(mesh.element(e)[i], c), i, c};
    for (int c = 0; c < 2; ++c) out[idx++] = {vel.bubble_dof(e, c), 3, c};
    return out;
}

double basis_val(int basis, const std::array<double, 3>& b) {
    if (basis < 3) return b[basis];
    return 27.0 * b[0] * b[1] * b[2];
}

Vec2 basis_grad(int basis, const std::array<Vec2, 3>& g, const std::array<double, 3>& b) {
    if (basis < 3) return g[basis];
    return 27.0 * (g[0] * (b[1] * b[2]) + g[1] * (b[0] * b[2]) + g[2] * (b[0] * b[1]));
}

// (2 mu D(u), D(v)) + optional (c u, v) over one element, into triplets
void add_fluid_element(TripletList& trip, const Mesh& mesh, const FunctionSpace& vel,
                       const FunctionSpace& pre, int e, double mu, double mass_coeff,
                       int off_u, int off_p) {
    const auto dofs = velocity_dofs(vel, e);
    const auto g = p1_gradients(mesh, e);
    const double A = mesh.area(e);
    const QuadratureRule& visc_rule = triangle_rule(4);
    for (const auto& q : visc_rule.points) {
        std::array<Vec2, 4> grads;
        for (int bi = 0; bi < 4; ++bi) grads[bi] = basis_grad(bi, g, q.bary);
        for (const auto& di : dofs) {
            const Vec2 gi = grads[di.basis];
            const SymTensor2 Di = di.comp == 0 ? SymTensor2{gi.x, 0.0, 0.5 * gi.y}
                                               : SymTensor2{0.0, gi.y, 0.5 * gi.x};
            for (const auto& dj : dofs) {
                const Vec2 gj = grads[dj.basis];
                const SymTensor2 Dj = dj.comp == 0 ? SymTensor2{gj.x, 0.0, 0.5 * gj.y}
                                                   : SymTensor2{0.0, gj.y, 0.5 * gj.x};
                const double ddot = Di.xx * Dj.xx + Di.yy * Dj.yy + 2.0 * Di.xy * Dj.xy;
                trip.add(off_u + di.dof, off_u + dj.dof, 2.0 * mu * A * q.weight * ddot);
            }
        }
    }
    if (mass_coeff > 0.0) {
        const QuadratureRule& mass_rule = triangle_rule(6);
        for (const auto& q : mass_rule.points) {
            for (const auto& di : dofs) {
                const double vi = basis_val(di.basis, q.bary);
                for (const auto& dj : dofs) {
                    if (di.comp != dj.comp) continue;
                    trip.add(off_u + di.dof, off_u + dj.dof,
                             mass_coeff * A * q.weight * vi * basis_val(dj.basis, q.bary));
                }
            }
        }
    }
    // pressure blocks: -(p, div v) and +(q, div u)
    const QuadratureRule& div_rule = triangle_rule(4);
    for (const auto& q : div_rule.points) {
        std::array<Vec2, 4> grads;
        for (int bi = 0; bi < 4; ++bi) grads[bi] = basis_grad(bi, g, q.bary);
        for (int pi = 0; pi < 3; ++pi) {
            const int prow = off_p + pre.vertex_dof(mesh.element(e)[pi]);
            const double pv = q.bary[pi];
            for (const auto& dj : dofs) {
                const Vec2 gj = grads[dj.basis];
                const double div_j = dj.comp == 0 ? gj.x : gj.y;
                trip.add(prow, off_u + dj.dof, A * q.weight * pv * div_j);  // +(q, div u)
                trip.add(off_u + dj.dof, prow, -A * q.weight * pv * div_j); // -(p, div v)
            }
        }
    }
}

void add_tangent_penalty(TripletList& trip, const Mesh& mesh, const FunctionSpace& vel, int fid,
                         double penalty, int off_u) {
    const Face& face = mesh.face(fid);
    const Vec2 tangent = (mesh.vertex(face.v1) - mesh.vertex(face.v0)) / face.measure;
    const EdgeRule& rule = edge_rule(2);
    const std::array<int, 2> verts = {face.v0, face.v1};
    for (const auto& q : rule.points) {
        const double ds = q.weight * face.measure * penalty / face.measure;
        const std::array<double, 2> hat = {1.0 - q.t, q.t};
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a)
                for (int j = 0; j < 2; ++j)
                    for (int b = 0; b < 2; ++b)
                        trip.add(off_u + vel.vertex_dof(verts[i], a),
                                 off_u + vel.vertex_dof(verts[j], b),
                                 ds * hat[i] * hat[j] * (a == 0 ? tangent.x : tangent.y) *
                                     (b == 0 ? tangent.x : tangent.y));
    }
}

void add_traction_rhs(Vector& rhs, const Mesh& mesh, const FunctionSpace& vel, int fid,
                      double pressure, int off_u) {
    const Face& face = mesh.face(fid);
    const Vec2 load = face.normal * (-pressure * face.measure * 0.5);
    for (int v : {face.v0, face.v1}) {
        rhs[off_u + vel.vertex_dof(v, 0)] += load.x;
        rhs[off_u + vel.vertex_dof(v, 1)] += load.y;
    }
}

} // namespace

// ---------------------------------------------------------------------------
// StokesSolver
// ---------------------------------------------------------------------------

StokesSolver::StokesSolver(const Mesh& mesh, MechParams params, StokesBCTable bcs, double dt,
                           bool steady)
    : mesh_(&mesh),
      params_(params),
      bcs_(std::move(bcs)),
      dt_(dt),
      steady_(steady),
      vel_(mesh, SpaceKind::P1Bubble, 2),
      pre_(mesh, SpaceKind::P1) {
    require(dt > 0.0 || steady, "stokes: dt must be positive");
    bool has_tag = false;
    for (const auto& f : mesh.faces())
        if (f.is_boundary() && bcs_.count(f.tag)) has_tag = true;
    require(has_tag, "stokes: no boundary face carries a tag present in the BC table");

    constrained_.assign(vel_.ndof() + pre_.ndof(), false);
    for (const auto& f : mesh.faces()) {
        if (!f.is_boundary()) continue;
        const auto it = bcs_.find(f.tag);
        if (it == bcs_.end()) continue;
        if (it->second.kind == StokesBC::Kind::NoSlip ||
            it->second.kind == StokesBC::Kind::Velocity) {
            for (int v : {f.v0, f.v1}) {
                constrained_[vel_.vertex_dof(v, 0)] = true;
                constrained_[vel_.vertex_dof(v, 1)] = true;
            }
        }
    }
    assemble_matrix();
}

void StokesSolver::assemble_matrix() {
    const Mesh& mesh = *mesh_;
    const int n = vel_.ndof() + pre_.ndof();
    TripletList trip(n, n);
    const double mass_coeff = steady_ ? 0.0 : params_.rho_f_t() / dt_;
    for (int e = 0; e < mesh.num_elements(); ++e)
        add_fluid_element(trip, mesh, vel_, pre_, e, params_.mu_f, mass_coeff, off_u(), off_p());
    for (int fid = 0; fid < mesh.num_faces(); ++fid) {
        const Face& f = mesh.face(fid);
        if (!f.is_boundary()) continue;
        const auto it = bcs_.find(f.tag);
        if (it != bcs_.end() && it->second.kind == StokesBC::Kind::Traction)
            add_tangent_penalty(trip, mesh, vel_, fid, kTangentPenaltyScale * params_.mu_f,
                                off_u());
    }
    // keep the velocity mass and divergence blocks for reports
    {
        TripletList mt(vel_.ndof(), vel_.ndof());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            // reuse the fluid element kernel with zero viscosity: cheaper to
            // assemble the plain vector mass directly
            const auto dofs = velocity_dofs(vel_, e);
            const double A = mesh.area(e);
            const QuadratureRule& rule = triangle_rule(6);
            for (const auto& q : rule.points)
                for (const auto& di : dofs)
                    for (const auto& dj : dofs)
                        if (di.comp == dj.comp)
                            mt.add(di.dof, dj.dof,
                                   A * q.weight * basis_val(di.basis, q.bary) *
                                       basis_val(dj.basis, q.bary));
        }
        mass_vel_ = SparseMatrix::from_triplets(mt);
    }
    {
        TripletList divt(pre_.ndof(), vel_.ndof());
        const QuadratureRule& rule = triangle_rule(4);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto dofs = velocity_dofs(vel_, e);
            const auto g = p1_gradients(mesh, e);
            const double A = mesh.area(e);
            for (const auto& q : rule.points)
                for (int pi = 0; pi < 3; ++pi)
                    for (const auto& dj : dofs) {
                        const Vec2 gj = basis_grad(dj.basis, g, q.bary);
                        divt.add(pre_.vertex_dof(mesh.element(e)[pi]), dj.dof,
                                 A * q.weight * q.bary[pi] * (dj.comp == 0 ? gj.x : gj.y));
                    }
        }
        div_block_ = SparseMatrix::from_triplets(divt);
    }

    TripletList reduced(n, n);
    for (const auto& t : trip.entries())
        if (!constrained_[t.row] && !constrained_[t.col]) reduced.add(t.row, t.col, t.value);
    for (int d = 0; d < n; ++d)
        if (constrained_[d]) reduced.add(d, d, 1.0);
    full_matrix_ = SparseMatrix::from_triplets(trip);
    lu_.factorize(SparseMatrix::from_triplets(reduced));
}

StokesState StokesSolver::zero_state() const {
    return StokesState{Field(vel_), Field(pre_), 0.0};
}

StokesState StokesSolver::step(const StokesState& old) const {
    const Mesh& mesh = *mesh_;
    const double t_new = steady_ ? old.t : old.t + dt_;
    const int n = vel_.ndof() + pre_.ndof();
    Vector rhs = Vector::Zero(n);
    if (!steady_) {
        Vector mu_old = mass_vel_.multiply(old.u.coeffs);
        rhs.segment(off_u(), vel_.ndof()) += (params_.rho_f_t() / dt_) * mu_old;
    }
    Vector x_bc = Vector::Zero(n);
    for (int fid = 0; fid < mesh.num_faces(); ++fid) {
        const Face& f = mesh.face(fid);
        if (!f.is_boundary()) continue;
        const auto it = bcs_.find(f.tag);
        if (it == bcs_.end()) continue;
        const StokesBC& bc = it->second;
        if (bc.kind == StokesBC::Kind::Traction && bc.pressure)
            add_traction_rhs(rhs, mesh, vel_, fid, bc.pressure(t_new), off_u());
        if (bc.kind == StokesBC::Kind::Velocity && bc.velocity) {
            for (int v : {f.v0, f.v1}) {
                const Vec2 g = bc.velocity(mesh.vertex(v), t_new);
                x_bc[off_u() + vel_.vertex_dof(v, 0)] = g.x;
                x_bc[off_u() + vel_.vertex_dof(v, 1)] = g.y;
            }
        }
    }
    // lift inhomogeneous Dirichlet values through the unreduced operator
    if (x_bc.lpNorm<Eigen::Infinity>() > 0.0) {
        full_matrix_.multiply_add(x_bc, -1.0, rhs);
    }
    for (int d = 0; d < n; ++d)
        if (constrained_[d]) rhs[d] = x_bc[d];

    Vector x = lu_.solve(rhs);
    StokesState next = old;
    next.t = t_new;
    next.u.coeffs = x.segment(off_u(), vel_.ndof());
    next.p.coeffs = x.segment(off_p(), pre_.ndof());
    return next;
}

double StokesSolver::divergence_residual(const StokesState& state) const {
    return div_block_.multiply(state.u.coeffs).lpNorm<Eigen::Infinity>();
}

// ---------------------------------------------------------------------------
// CoupledSolver
// ---------------------------------------------------------------------------

CoupledSolver::CoupledSolver(const Mesh& mesh, MechParams params, InterfaceParams iface,
                             double dt, StokesBCTable fluid_bcs, PoroBCTable poro_bcs)
    : mesh_(&mesh),
      params_(params),
      iface_(iface),
      dt_(dt),
      fluid_bcs_(std::move(fluid_bcs)),
      poro_bcs_(std::move(poro_bcs)),
      u_f_(mesh, SpaceKind::P1Bubble, 2),
      p_f_(mesh, SpaceKind::P1),
      eta_(mesh, SpaceKind::P1, 2),
      u_p_(mesh, SpaceKind::RT0),
      p_p_(mesh, SpaceKind::P0) {
    require(dt > 0.0, "coupled: dt must be positive");
    require(mesh.has_fluid() && mesh.has_porous(),
            "coupled: mesh must contain both subdomains");
    require(!mesh.interface_faces().empty(), "coupled: mesh has no Interface faces");
    require(iface_.gamma_N > 0.0, "coupled: gamma_N must be positive");
    lame_ = lame_from_table(params_);

    // activity masks: everything starts constrained, element loops release
    constrained_.assign(n_unknowns(), true);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const bool fluid = mesh.subdomain(e) == Subdomain::Fluid;
        for (int i = 0; i < 3; ++i) {
            const int v = mesh.element(e)[i];
            if (fluid) {
                constrained_[off_uf() + u_f_.vertex_dof(v, 0)] = false;
                constrained_[off_uf() + u_f_.vertex_dof(v, 1)] = false;
                constrained_[off_pf() + p_f_.vertex_dof(v)] = false;
            } else {
                constrained_[off_eta() + eta_.vertex_dof(v, 0)] = false;
                constrained_[off_eta() + eta_.vertex_dof(v, 1)] = false;
            }
        }
        if (fluid) {
            constrained_[off_uf() + u_f_.bubble_dof(e, 0)] = false;
            constrained_[off_uf() + u_f_.bubble_dof(e, 1)] = false;
        } else {
            constrained_[off_pp() + p_p_.element_dof(e, 0)] = false;
            for (int f : mesh.element_faces(e)) constrained_[off_up() + u_p_.face_dof(f)] = false;
        }
    }
    // Dirichlet parts
    for (const auto& f : mesh.faces()) {
        if (!f.is_boundary()) continue;
        if (const auto it = fluid_bcs_.find(f.tag); it != fluid_bcs_.end()) {
            if (it->second.kind == StokesBC::Kind::NoSlip ||
                it->second.kind == StokesBC::Kind::Velocity) {
                for (int v : {f.v0, f.v1}) {
                    constrained_[off_uf() + u_f_.vertex_dof(v, 0)] = true;
                    constrained_[off_uf() + u_f_.vertex_dof(v, 1)] = true;
                }
            }
        }
        if (const auto it = poro_bcs_.find(f.tag); it != poro_bcs_.end()) {
            const PoroBC& bc = it->second;
            for (int v : {f.v0, f.v1}) {
                if (bc.disp == DisplacementBC::Fixed || bc.disp == DisplacementBC::RollerX)
                    constrained_[off_eta() + eta_.vertex_dof(v, 0)] = true;
                if (bc.disp == DisplacementBC::Fixed || bc.disp == DisplacementBC::RollerY)
                    constrained_[off_eta() + eta_.vertex_dof(v, 1)] = true;
            }
            if (bc.darcy == DarcyBC::Impermeable) {
                const int fid = static_cast<int>(&f - mesh.faces().data());
                constrained_[off_up() + u_p_.face_dof(fid)] = true;
            }
        }
    }
    assemble_matrix();
}

void CoupledSolver::assemble_matrix() {
    const Mesh& mesh = *mesh_;
    const double mu = params_.mu_f;
    const double alpha = params_.alpha_biot;
    const double inv_mob = 1.0 / params_.mobility_mm();
    TripletList trip(n_unknowns(), n_unknowns());

    TripletList mass_trip(u_f_.ndof(), u_f_.ndof());
    TripletList elast_trip(eta_.ndof(), eta_.ndof());
    TripletList deta_trip(p_p_.ndof(), eta_.ndof());

    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double A = mesh.area(e);
        if (mesh.subdomain(e) == Subdomain::Fluid) {
            add_fluid_element(trip, mesh, u_f_, p_f_, e, mu, params_.rho_f_t() / dt_, off_uf(),
                              off_pf());
            const auto dofs = velocity_dofs(u_f_, e);
            const QuadratureRule& rule = triangle_rule(6);
            for (const auto& q : rule.points)
                for (const auto& di : dofs)
                    for (const auto& dj : dofs)
                        if (di.comp == dj.comp)
                            mass_trip.add(di.dof, dj.dof,
                                          A * q.weight * basis_val(di.basis, q.bary) *
                                              basis_val(dj.basis, q.bary));
            continue;
        }
        // porous element: elasticity, Darcy, mass balance
        const auto g = p1_gradients(mesh, e);
        const auto& el = mesh.element(e);
        for (int i = 0; i < 3; ++i) {
            for (int a = 0; a < 2; ++a) {
                const Vec2 gi = g[i];
                const SymTensor2 Di = a == 0 ? SymTensor2{gi.x, 0.0, 0.5 * gi.y}
                                             : SymTensor2{0.0, gi.y, 0.5 * gi.x};
                const double divi = a == 0 ? gi.x : gi.y;
                const int row = eta_.vertex_dof(el[i], a);
                for (int j = 0; j < 3; ++j) {
                    for (int b = 0; b < 2; ++b) {
                        const Vec2 gj = g[j];
                        const SymTensor2 Dj = b == 0 ? SymTensor2{gj.x, 0.0, 0.5 * gj.y}
                                                     : SymTensor2{0.0, gj.y, 0.5 * gj.x};
                        const double divj = b == 0 ? gj.x : gj.y;
                        const double ddot =
                            Di.xx * Dj.xx + Di.yy * Dj.yy + 2.0 * Di.xy * Dj.xy;
                        const double val =
                            A * (lame_.lambda * divi * divj + 2.0 * lame_.mu * ddot);
                        trip.add(off_eta() + row, off_eta() + eta_.vertex_dof(el[j], b), val);
                        elast_trip.add(row, eta_.vertex_dof(el[j], b), val);
                    }
                }
                // -alpha (p, div xi) and mass-balance coupling (alpha/dt)(div eta, q)
                trip.add(off_eta() + row, off_pp() + p_p_.element_dof(e, 0), -alpha * A * divi);
                trip.add(off_pp() + p_p_.element_dof(e, 0), off_eta() + row,
                         (alpha / dt_) * A * divi);
                deta_trip.add(p_p_.element_dof(e, 0), row, A * divi);
            }
        }
        // Darcy: (1/mob)(u, w) - (p, div w); mass balance (div u, q), storage
        {
            const QuadratureRule& rule = triangle_rule(2);
            const auto& faces = mesh.element_faces(e);
            std::array<Vec2, 3> opp;
            std::array<double, 3> scale;
            for (int k = 0; k < 3; ++k) {
                opp[k] = mesh.vertex(el[(k + 2) % 3]);
                scale[k] = mesh.face_sign(e, faces[k]) * mesh.face(faces[k]).measure / (2.0 * A);
            }
            for (const auto& q : rule.points) {
                const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                               mesh.vertex(el[2]) * q.bary[2];
                for (int i = 0; i < 3; ++i) {
                    const Vec2 phi_i = (x - opp[i]) * scale[i];
                    for (int j = 0; j < 3; ++j) {
                        const Vec2 phi_j = (x - opp[j]) * scale[j];
                        trip.add(off_up() + u_p_.face_dof(faces[i]),
                                 off_up() + u_p_.face_dof(faces[j]),
                                 inv_mob * q.weight * A * phi_i.dot(phi_j));
                    }
                }
            }
            for (int k = 0; k < 3; ++k) {
                const double div_int = mesh.face_sign(e, faces[k]) * mesh.face(faces[k]).measure;
                trip.add(off_up() + u_p_.face_dof(faces[k]), off_pp() + p_p_.element_dof(e, 0),
                         -div_int);
                trip.add(off_pp() + p_p_.element_dof(e, 0), off_up() + u_p_.face_dof(faces[k]),
                         div_int);
            }
            trip.add(off_pp() + p_p_.element_dof(e, 0), off_pp() + p_p_.element_dof(e, 0),
                     params_.inv_M * A / dt_);
        }
    }

    // fluid boundary faces: tangential pin on traction inflow
    for (int fid = 0; fid < mesh.num_faces(); ++fid) {
        const Face& f = mesh.face(fid);
        if (!f.is_boundary()) continue;
        const auto it = fluid_bcs_.find(f.tag);
        if (it != fluid_bcs_.end() && it->second.kind == StokesBC::Kind::Traction)
            add_tangent_penalty(trip, mesh, u_f_, fid, kTangentPenaltyScale * mu, off_uf());
    }

    // interface coupling
    const double bjs_gamma =
        iface_.bjs_slip * mu / std::sqrt(std::max(mu * params_.mobility_mm(), 1e-300));
    for (int fid : mesh.interface_faces()) {
        const Face& f = mesh.face(fid);
        const Vec2 n = f.normal;  // fluid -> porous
        const Vec2 tau = (mesh.vertex(f.v1) - mesh.vertex(f.v0)) / f.measure;
        const int e_f = f.left, e_p = f.right;
        const double h = f.measure;
        const double penalty =
            iface_.gamma_N * (mu + h * h / params_.mobility_mm()) / h;
        const FaceContext ctx = face_context(mesh, fid);
        const auto gf = p1_gradients(mesh, e_f);
        const int opp_local =
            3 - ctx.left.loc_v0 - ctx.left.loc_v1;  // fluid vertex opposite the face
        const int pp_dof = off_pp() + p_p_.element_dof(e_p, 0);
        const int up_dof = off_up() + u_p_.face_dof(fid);

        const EdgeRule& rule = edge_rule(2);
        for (const auto& q : rule.points) {
            const double ds = q.weight * f.measure;
            const std::array<double, 2> hat = {1.0 - q.t, q.t};
            const std::array<int, 2> verts = {f.v0, f.v1};

            // --- (A)+(C): pore pressure vs normal components ---
            for (int i = 0; i < 2; ++i) {
                for (int a = 0; a < 2; ++a) {
                    const double vin = hat[i] * (a == 0 ? n.x : n.y);
                    trip.add(off_uf() + u_f_.vertex_dof(verts[i], a), pp_dof, ds * vin);
                    trip.add(off_eta() + eta_.vertex_dof(verts[i], a), pp_dof, -ds * vin);
                }
            }
            // --- (B)+(C) tangential BJS ---
            for (int i = 0; i < 2; ++i) {
                for (int a = 0; a < 2; ++a) {
                    const double vit = hat[i] * (a == 0 ? tau.x : tau.y);
                    for (int j = 0; j < 2; ++j) {
                        for (int b = 0; b < 2; ++b) {
                            const double vjt = hat[j] * (b == 0 ? tau.x : tau.y);
                            const double m = ds * bjs_gamma * vit * vjt;
                            const int uf_i = off_uf() + u_f_.vertex_dof(verts[i], a);
                            const int uf_j = off_uf() + u_f_.vertex_dof(verts[j], b);
                            const int eta_i = off_eta() + eta_.vertex_dof(verts[i], a);
                            const int eta_j = off_eta() + eta_.vertex_dof(verts[j], b);
                            trip.add(uf_i, uf_j, m);
                            trip.add(uf_i, eta_j, -m / dt_);
                            trip.add(eta_i, uf_j, -m);
                            trip.add(eta_i, eta_j, m / dt_);
                        }
                    }
                }
            }
            // --- (D): Darcy row sees the fluid normal stress ---
            // n·sigma_f n = -p_f + 2 mu n·D(u_f) n
            for (int i = 0; i < 2; ++i)
                trip.add(up_dof, off_pf() + p_f_.vertex_dof(verts[i]), -ds * hat[i]);
            {
                std::array<double, 3> bary{0, 0, 0};
                bary[ctx.left.loc_v0] = 1.0 - q.t;
                bary[ctx.left.loc_v1] = q.t;
                for (int bi = 0; bi < 4; ++bi) {
                    const Vec2 gb = basis_grad(bi, gf, bary);
                    const double gn = gb.dot(n);
                    for (int a = 0; a < 2; ++a) {
                        const double val = 2.0 * mu * gn * (a == 0 ? n.x : n.y);
                        const int dof = bi < 3
                                            ? u_f_.vertex_dof(mesh.element(e_f)[bi], a)
                                            : u_f_.bubble_dof(e_f, a);
                        trip.add(up_dof, off_uf() + dof, ds * val);
                    }
                }
                (void)opp_local;
            }
            // --- (E): mass-conservation penalty ---
            // test/trial slots share the factor layout:
            //   u_f vertex (i, a): hat_i n_a; eta vertex (i, a): -hat_i n_a / dt;
            //   u_p face dof: -1
            struct Slot { int dof; double factor; };
            std::array<Slot, 9> slots;
            int ns = 0;
            for (int i = 0; i < 2; ++i)
                for (int a = 0; a < 2; ++a) {
                    const double na = a == 0 ? n.x : n.y;
                    slots[ns++] = {off_uf() + u_f_.vertex_dof(verts[i], a), hat[i] * na};
                    slots[ns++] = {off_eta() + eta_.vertex_dof(verts[i], a),
                                   -hat[i] * na / dt_};
                }
            slots[ns++] = {up_dof, -1.0};
            for (int i = 0; i < ns; ++i)
                for (int j = 0; j < ns; ++j)
                    trip.add(slots[i].dof, slots[j].dof,
                             ds * penalty * slots[i].factor * slots[j].factor);
        }
    }

    mass_uf_ = SparseMatrix::from_triplets(mass_trip);
    elast_ = SparseMatrix::from_triplets(elast_trip);
    div_eta_ = SparseMatrix::from_triplets(deta_trip);

    TripletList reduced(n_unknowns(), n_unknowns());
    for (const auto& t : trip.entries())
        if (!constrained_[t.row] && !constrained_[t.col]) reduced.add(t.row, t.col, t.value);
    for (int d = 0; d < n_unknowns(); ++d)
        if (constrained_[d]) reduced.add(d, d, 1.0);
    lu_.factorize(SparseMatrix::from_triplets(reduced));
}

Vector CoupledSolver::assemble_rhs(const CoupledState& old, double t_new) const {
    const Mesh& mesh = *mesh_;
    Vector rhs = Vector::Zero(n_unknowns());

    // fluid inertia history
    {
        Vector mu_old = mass_uf_.multiply(old.u_f.coeffs);
        rhs.segment(off_uf(), u_f_.ndof()) += (params_.rho_f_t() / dt_) * mu_old;
    }
    // storage + coupling history in the mass balance
    {
        Vector div_old = div_eta_.multiply(old.eta.coeffs);
        for (int e = 0; e < p_p_.ndof(); ++e) {
            rhs[off_pp() + e] += (params_.alpha_biot / dt_) * div_old[e];
        }
        for (int e = 0; e < mesh.num_elements(); ++e)
            if (mesh.subdomain(e) == Subdomain::Porous)
                rhs[off_pp() + p_p_.element_dof(e, 0)] +=
                    params_.inv_M * mesh.area(e) / dt_ * old.p_p.coeffs[e];
    }
    // fluid boundary tractions
    for (int fid = 0; fid < mesh.num_faces(); ++fid) {
        const Face& f = mesh.face(fid);
        if (!f.is_boundary()) continue;
        if (const auto it = fluid_bcs_.find(f.tag);
            it != fluid_bcs_.end() && it->second.kind == StokesBC::Kind::Traction &&
            it->second.pressure)
            add_traction_rhs(rhs, mesh, u_f_, fid, it->second.pressure(t_new), off_uf());
        if (const auto it = poro_bcs_.find(f.tag); it != poro_bcs_.end()) {
            const PoroBC& bc = it->second;
            if (bc.normal_pressure) {
                const double pv = bc.normal_pressure(t_new);
                const Vec2 load = f.normal * (-pv * f.measure * 0.5);
                for (int v : {f.v0, f.v1}) {
                    rhs[off_eta() + eta_.vertex_dof(v, 0)] += load.x;
                    rhs[off_eta() + eta_.vertex_dof(v, 1)] += load.y;
                }
            }
            if (bc.darcy == DarcyBC::Pressure && bc.pressure_datum)
                rhs[off_up() + u_p_.face_dof(fid)] -= bc.pressure_datum(t_new) * f.measure;
        }
    }
    // interface history terms (eta^n in the BJS and penalty expressions)
    const double mu = params_.mu_f;
    const double bjs_gamma =
        iface_.bjs_slip * mu / std::sqrt(std::max(mu * params_.mobility_mm(), 1e-300));
    for (int fid : mesh.interface_faces()) {
        const Face& f = mesh.face(fid);
        const Vec2 n = f.normal;
        const Vec2 tau = (mesh.vertex(f.v1) - mesh.vertex(f.v0)) / f.measure;
        const double h = f.measure;
        const double penalty = iface_.gamma_N * (mu + h * h / params_.mobility_mm()) / h;
        const int up_dof = off_up() + u_p_.face_dof(fid);
        const EdgeRule& rule = edge_rule(2);
        for (const auto& q : rule.points) {
            const double ds = q.weight * f.measure;
            const std::array<double, 2> hat = {1.0 - q.t, q.t};
            const std::array<int, 2> verts = {f.v0, f.v1};
            Vec2 eta_old{0, 0};
            for (int i = 0; i < 2; ++i) {
                eta_old.x += hat[i] * old.eta.coeffs[eta_.vertex_dof(verts[i], 0)];
                eta_old.y += hat[i] * old.eta.coeffs[eta_.vertex_dof(verts[i], 1)];
            }
            const double eta_old_t = eta_old.dot(tau) / dt_;
            const double eta_old_n = eta_old.dot(n) / dt_;
            for (int i = 0; i < 2; ++i) {
                for (int a = 0; a < 2; ++a) {
                    const double vit = hat[i] * (a == 0 ? tau.x : tau.y);
                    const double vin = hat[i] * (a == 0 ? n.x : n.y);
                    // BJS: slip contains +eta^n·tau/dt
                    rhs[off_uf() + u_f_.vertex_dof(verts[i], a)] -= ds * bjs_gamma * eta_old_t * vit;
                    rhs[off_eta() + eta_.vertex_dof(verts[i], a)] += ds * bjs_gamma * eta_old_t * vit;
                    // penalty: C contains +eta^n·n/dt
                    rhs[off_uf() + u_f_.vertex_dof(verts[i], a)] -= ds * penalty * eta_old_n * vin;
                    rhs[off_eta() + eta_.vertex_dof(verts[i], a)] +=
                        ds * penalty * eta_old_n * vin / dt_;
                }
            }
            rhs[up_dof] += ds * penalty * eta_old_n;
        }
    }
    for (int d = 0; d < n_unknowns(); ++d)
        if (constrained_[d]) rhs[d] = 0.0;
    return rhs;
}

CoupledState CoupledSolver::zero_state() const {
    return CoupledState{Field(u_f_), Field(p_f_), Field(eta_), Field(u_p_), Field(p_p_), 0.0};
}

CoupledState CoupledSolver::step(const CoupledState& old) const {
    const double t_new = old.t + dt_;
    const Vector rhs = assemble_rhs(old, t_new);
    const Vector x = lu_.solve(rhs);
    CoupledState next = old;
    next.t = t_new;
    next.u_f.coeffs = x.segment(off_uf(), u_f_.ndof());
    next.p_f.coeffs = x.segment(off_pf(), p_f_.ndof());
    next.eta.coeffs = x.segment(off_eta(), eta_.ndof());
    next.u_p.coeffs = x.segment(off_up(), u_p_.ndof());
    next.p_p.coeffs = x.segment(off_pp(), p_p_.ndof());
    return next;
}

double CoupledSolver::interface_mismatch(const CoupledState& snew,
                                         const CoupledState& sold) const {
    const Mesh& mesh = *mesh_;
    double total = 0.0;
    const EdgeRule& rule = edge_rule(2);
    for (int fid : mesh.interface_faces()) {
        const Face& f = mesh.face(fid);
        const Vec2 n = f.normal;
        const std::array<int, 2> verts = {f.v0, f.v1};
        for (const auto& q : rule.points) {
            const std::array<double, 2> hat = {1.0 - q.t, q.t};
            Vec2 uf{0, 0}, deta{0, 0};
            for (int i = 0; i < 2; ++i) {
                uf.x += hat[i] * snew.u_f.coeffs[u_f_.vertex_dof(verts[i], 0)];
                uf.y += hat[i] * snew.u_f.coeffs[u_f_.vertex_dof(verts[i], 1)];
                deta.x += hat[i] * (snew.eta.coeffs[eta_.vertex_dof(verts[i], 0)] -
                                    sold.eta.coeffs[eta_.vertex_dof(verts[i], 0)]);
                deta.y += hat[i] * (snew.eta.coeffs[eta_.vertex_dof(verts[i], 1)] -
                                    sold.eta.coeffs[eta_.vertex_dof(verts[i], 1)]);
            }
            const double up_n = snew.u_p.coeffs[u_p_.face_dof(fid)];
            const double mismatch = uf.dot(n) - deta.dot(n) / dt_ - up_n;
            total += q.weight * f.measure * std::abs(mismatch);
        }
    }
    return total;
}

double CoupledSolver::energy(const CoupledState& state) const {
    const Mesh& mesh = *mesh_;
    double E = 0.5 * params_.rho_f_t() * state.u_f.coeffs.dot(mass_uf_.multiply(state.u_f.coeffs));
    E += 0.5 * state.eta.coeffs.dot(elast_.multiply(state.eta.coeffs));
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (mesh.subdomain(e) == Subdomain::Porous)
            E += 0.5 * params_.inv_M * state.p_p.coeffs[e] * state.p_p.coeffs[e] * mesh.area(e);
    return E;
}

StressField CoupledSolver::compute_stress(const CoupledState& state) const {
    const Mesh& mesh = *mesh_;
    StressField out;
    const int ne = mesh.num_elements();
    out.strain.resize(ne);
    out.effective.resize(ne);
    out.total.resize(ne);
    out.von_mises.assign(ne, 0.0);
    out.octahedral_shear_strain.assign(ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        if (mesh.subdomain(e) != Subdomain::Porous) continue;
        const auto g = p1_gradients(mesh, e);
        double ux_x = 0, ux_y = 0, uy_x = 0, uy_y = 0;
        for (int i = 0; i < 3; ++i) {
            const int v = mesh.element(e)[i];
            const double ex = state.eta.coeffs[eta_.vertex_dof(v, 0)];
            const double ey = state.eta.coeffs[eta_.vertex_dof(v, 1)];
            ux_x += ex * g[i].x;
            ux_y += ex * g[i].y;
            uy_x += ey * g[i].x;
            uy_y += ey * g[i].y;
        }
        const SymTensor2 eps{ux_x, uy_y, 0.5 * (ux_y + uy_x)};
        const double tr = eps.trace();
        const SymTensor2 sig_e{lame_.lambda * tr + 2.0 * lame_.mu * eps.xx,
                               lame_.lambda * tr + 2.0 * lame_.mu * eps.yy,
                               2.0 * lame_.mu * eps.xy};
        const double p = state.p_p.coeffs[e];
        out.strain[e] = eps;
        out.effective[e] = sig_e;
        out.total[e] = {sig_e.xx - params_.alpha_biot * p, sig_e.yy - params_.alpha_biot * p,
                        sig_e.xy};
        const double szz = lame_.lambda * tr - params_.alpha_biot * p;
        const double mean = (out.total[e].xx + out.total[e].yy + szz) / 3.0;
        const double dxx = out.total[e].xx - mean, dyy = out.total[e].yy - mean,
                     dzz = szz - mean;
        const double sxy = out.total[e].xy;
        out.von_mises[e] =
            std::sqrt(1.5 * (dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * sxy * sxy));
        const double sum2 =
            3.0 * (eps.xx * eps.xx + eps.yy * eps.yy + 2.0 * eps.xy * eps.xy) - tr * tr;
        out.octahedral_shear_strain[e] = (2.0 / 3.0) * std::sqrt(std::max(0.0, sum2));
    }
    return out;
}

std::vector<Vec2> CoupledSolver::seepage_velocity(const CoupledState& state) const {
    const Mesh& mesh = *mesh_;
    std::vector<Vec2> out(mesh.num_elements(), Vec2{0, 0});
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (mesh.subdomain(e) == Subdomain::Porous)
            out[e] = evaluate_vector(state.u_p, e, {1. / 3, 1. / 3, 1. / 3}).value / params_.Phi;
    return out;
}

} // namespace menisim
