#include "menisim/poro.hpp"

#include <cmath>

#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"

namespace menisim {

PoroBCTable default_poro_bcs() {
    PoroBCTable table;
    PoroBC wall;
    wall.disp = DisplacementBC::Fixed;
    wall.darcy = DarcyBC::Pressure;  // p = 0, drained
    table[BoundaryTag::PorousWall] = wall;
    return table;
}

SparseMatrix rt0_mass_matrix(const FunctionSpace& rt0, double coefficient) {
    require(rt0.kind() == SpaceKind::RT0, "rt0_mass_matrix needs an RT0 space");
    const Mesh& mesh = rt0.mesh();
    const QuadratureRule& rule = triangle_rule(2);
    TripletList trip(rt0.ndof(), rt0.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double A = mesh.area(e);
        const auto& faces = mesh.element_faces(e);
        // basis phi_f = sign * |F| / (2A) (x - opposite vertex)
        std::array<Vec2, 3> opp;
        std::array<double, 3> scale;
        for (int k = 0; k < 3; ++k) {
            const int f = faces[k];
            opp[k] = mesh.vertex(mesh.element(e)[(k + 2) % 3]);
            scale[k] = mesh.face_sign(e, f) * mesh.face(f).measure / (2.0 * A);
        }
        for (const auto& q : rule.points) {
            const auto& el = mesh.element(e);
            const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                           mesh.vertex(el[2]) * q.bary[2];
            for (int i = 0; i < 3; ++i) {
                const Vec2 phi_i = (x - opp[i]) * scale[i];
                for (int j = 0; j < 3; ++j) {
                    const Vec2 phi_j = (x - opp[j]) * scale[j];
                    trip.add(rt0.face_dof(faces[i]), rt0.face_dof(faces[j]),
                             coefficient * q.weight * A * phi_i.dot(phi_j));
                }
            }
        }
    }
    return assemble(trip);
}

PoroSolver::PoroSolver(const Mesh& mesh, MechParams params, PoroBCTable bcs, double dt,
                       bool quasi_static, double pressure_stabilization)
    : mesh_(&mesh),
      params_(params),
      bcs_(std::move(bcs)),
      dt_(dt),
      quasi_static_(quasi_static),
      stab_(pressure_stabilization),
      vec_p1_(mesh, SpaceKind::P1, 2),
      rt0_(mesh, SpaceKind::RT0),
      p0_(mesh, SpaceKind::P0) {
    params_.validate();
    require(dt > 0.0, "poro: dt must be positive");
    require(!mesh.has_fluid(), "poro: mesh must be entirely porous (extract the subdomain first)");
    bool has_tagged = false;
    for (const auto& f : mesh.faces())
        if (f.is_boundary() && bcs_.count(f.tag)) has_tagged = true;
    require(has_tagged, "poro: no boundary face carries a tag present in the BC table");

    lame_ = lame_from_table(params_);

    {
        FormSpec form;
        form.kind = FormSpec::Kind::DivergenceVecP1P0;
        div_eta_ = assemble_bilinear(form, vec_p1_, p0_);
    }
    div_u_ = rt0_p0_divergence(rt0_, p0_);
    p0_mass_ = Vector::Zero(p0_.ndof());
    for (int e = 0; e < mesh.num_elements(); ++e) p0_mass_[p0_.element_dof(e, 0)] = mesh.area(e);
    if (!quasi_static_) vec_mass_ = mass_matrix(vec_p1_);

    // constrained dofs from displacement Dirichlet parts and impermeable faces
    constrained_.assign(n_unknowns(), false);
    for (const auto& f : mesh.faces()) {
        if (!f.is_boundary()) continue;
        const auto it = bcs_.find(f.tag);
        if (it == bcs_.end()) continue;
        const PoroBC& bc = it->second;
        for (int v : {f.v0, f.v1}) {
            if (bc.disp == DisplacementBC::Fixed || bc.disp == DisplacementBC::RollerX)
                constrained_[off_eta() + vec_p1_.vertex_dof(v, 0)] = true;
            if (bc.disp == DisplacementBC::Fixed || bc.disp == DisplacementBC::RollerY)
                constrained_[off_eta() + vec_p1_.vertex_dof(v, 1)] = true;
        }
        if (bc.darcy == DarcyBC::Impermeable)
            constrained_[off_u() + rt0_.face_dof(&f - mesh.faces().data())] = true;
    }

    assemble_matrix();
}

void PoroSolver::assemble_matrix() {
    const Mesh& mesh = *mesh_;
    const double alpha = params_.alpha_biot;
    const double inv_mob = 1.0 / params_.mobility_mm();
    TripletList trip(n_unknowns(), n_unknowns());

    // momentum: elasticity - alpha (p, div xi); Newmark inertia in dynamic mode
    {
        const SparseMatrix K = elasticity_matrix(vec_p1_, lame_.lambda, lame_.mu);
        for (int r = 0; r < K.rows(); ++r)
            for (int k = K.row_offsets()[r]; k < K.row_offsets()[r + 1]; ++k)
                trip.add(off_eta() + r, off_eta() + K.col_indices()[k], K.values()[k]);
        for (int r = 0; r < div_eta_.rows(); ++r)
            for (int k = div_eta_.row_offsets()[r]; k < div_eta_.row_offsets()[r + 1]; ++k)
                trip.add(off_eta() + div_eta_.col_indices()[k], off_p() + r,
                         -alpha * div_eta_.values()[k]);
        if (!quasi_static_) {
            const double c = params_.rho_p_t() / (0.25 * dt_ * dt_);  // beta = 1/4
            for (int r = 0; r < vec_mass_.rows(); ++r)
                for (int k = vec_mass_.row_offsets()[r]; k < vec_mass_.row_offsets()[r + 1]; ++k)
                    trip.add(off_eta() + r, off_eta() + vec_mass_.col_indices()[k],
                             c * vec_mass_.values()[k]);
        }
    }
    // Darcy: (1/mobility)(u, w) - (p, div w)
    {
        const SparseMatrix M = rt0_mass_matrix(rt0_, inv_mob);
        for (int r = 0; r < M.rows(); ++r)
            for (int k = M.row_offsets()[r]; k < M.row_offsets()[r + 1]; ++k)
                trip.add(off_u() + r, off_u() + M.col_indices()[k], M.values()[k]);
        for (int r = 0; r < div_u_.rows(); ++r)
            for (int k = div_u_.row_offsets()[r]; k < div_u_.row_offsets()[r + 1]; ++k)
                trip.add(off_u() + div_u_.col_indices()[k], off_p() + r, -div_u_.values()[k]);
    }
    // mass balance: (1/M)(p,q)/dt + (alpha/dt)(div eta, q) + (div u, q)
    {
        for (int e = 0; e < p0_.ndof(); ++e)
            trip.add(off_p() + e, off_p() + e, params_.inv_M * p0_mass_[e] / dt_);
        for (int r = 0; r < div_eta_.rows(); ++r)
            for (int k = div_eta_.row_offsets()[r]; k < div_eta_.row_offsets()[r + 1]; ++k)
                trip.add(off_p() + r, off_eta() + div_eta_.col_indices()[k],
                         (alpha / dt_) * div_eta_.values()[k]);
        for (int r = 0; r < div_u_.rows(); ++r)
            for (int k = div_u_.row_offsets()[r]; k < div_u_.row_offsets()[r + 1]; ++k)
                trip.add(off_p() + r, off_u() + div_u_.col_indices()[k], div_u_.values()[k]);
        if (stab_ > 0.0) {
            for (const auto& f : mesh.faces()) {
                if (f.is_boundary()) continue;
                const double c = stab_ * f.measure;
                const int pl = off_p() + p0_.element_dof(f.left, 0);
                const int pr = off_p() + p0_.element_dof(f.right, 0);
                trip.add(pl, pl, c);
                trip.add(pr, pr, c);
                trip.add(pl, pr, -c);
                trip.add(pr, pl, -c);
            }
        }
    }

    // Dirichlet elimination: zero constrained rows/cols, unit diagonal.
    TripletList reduced(n_unknowns(), n_unknowns());
    for (const auto& t : trip.entries()) {
        if (constrained_[t.row] || constrained_[t.col]) continue;
        reduced.add(t.row, t.col, t.value);
    }
    for (int d = 0; d < n_unknowns(); ++d)
        if (constrained_[d]) reduced.add(d, d, 1.0);

    lu_.factorize(SparseMatrix::from_triplets(reduced));
}

Vector PoroSolver::assemble_rhs(const PoroState& old, double t_new,
                                const Vector& eta_pred) const {
    const Mesh& mesh = *mesh_;
    const double alpha = params_.alpha_biot;
    Vector rhs = Vector::Zero(n_unknowns());

    // mass balance history
    for (int e = 0; e < p0_.ndof(); ++e)
        rhs[off_p() + e] += params_.inv_M * p0_mass_[e] / dt_ * old.p.coeffs[e];
    {
        Vector div_old = div_eta_.multiply(old.eta.coeffs);
        for (int e = 0; e < p0_.ndof(); ++e) rhs[off_p() + e] += (alpha / dt_) * div_old[e];
    }
    // Newmark inertia history
    if (!quasi_static_) {
        const double c = params_.rho_p_t() / (0.25 * dt_ * dt_);
        Vector mp = vec_mass_.multiply(eta_pred);
        for (int i = 0; i < mp.size(); ++i) rhs[off_eta() + i] += c * mp[i];
    }
    // gravity load in the Darcy equation: (rho_f g, w)
    if (params_.gravity.norm() > 0.0) {
        const QuadratureRule& rule = triangle_rule(2);
        const Vec2 g = params_.gravity * params_.rho_f_t();
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double A = mesh.area(e);
            const auto& faces = mesh.element_faces(e);
            const auto& el = mesh.element(e);
            for (const auto& q : rule.points) {
                const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                               mesh.vertex(el[2]) * q.bary[2];
                for (int k = 0; k < 3; ++k) {
                    const int f = faces[k];
                    const Vec2 opp = mesh.vertex(el[(k + 2) % 3]);
                    const Vec2 phi =
                        (x - opp) * (mesh.face_sign(e, f) * mesh.face(f).measure / (2.0 * A));
                    rhs[off_u() + rt0_.face_dof(f)] += q.weight * A * g.dot(phi);
                }
            }
        }
    }
    // boundary terms: tractions on eta, pressure data on u
    for (int fid = 0; fid < mesh.num_faces(); ++fid) {
        const Face& f = mesh.face(fid);
        if (!f.is_boundary()) continue;
        const auto it = bcs_.find(f.tag);
        if (it == bcs_.end()) continue;
        const PoroBC& bc = it->second;
        if (bc.normal_pressure) {
            const double pv = bc.normal_pressure(t_new);
            // (-p n, xi) with P1 traces: each endpoint takes half the load
            const Vec2 load = f.normal * (-pv * f.measure * 0.5);
            for (int v : {f.v0, f.v1}) {
                rhs[off_eta() + vec_p1_.vertex_dof(v, 0)] += load.x;
                rhs[off_eta() + vec_p1_.vertex_dof(v, 1)] += load.y;
            }
        }
        if (bc.darcy == DarcyBC::Pressure && bc.pressure_datum) {
            const double pb = bc.pressure_datum(t_new);
            rhs[off_u() + rt0_.face_dof(fid)] -= pb * f.measure;
        }
    }
    for (int d = 0; d < n_unknowns(); ++d)
        if (constrained_[d]) rhs[d] = 0.0;
    return rhs;
}

PoroState PoroSolver::zero_state() const {
    PoroState s{Field(vec_p1_), Field(rt0_), Field(p0_), 0.0, Vector(), Vector()};
    if (!quasi_static_) {
        s.eta_dot = Vector::Zero(vec_p1_.ndof());
        s.eta_ddot = Vector::Zero(vec_p1_.ndof());
    }
    return s;
}

PoroState PoroSolver::step(const PoroState& old) const {
    const double t_new = old.t + dt_;
    Vector eta_pred;
    if (!quasi_static_) {
        // beta = 1/4, gamma = 1/2
        eta_pred = old.eta.coeffs + dt_ * old.eta_dot + (0.25 * dt_ * dt_) * old.eta_ddot;
    }
    const Vector rhs = assemble_rhs(old, t_new, eta_pred);
    const Vector x = lu_.solve(rhs);

    PoroState next = old;
    next.t = t_new;
    next.eta.coeffs = x.segment(off_eta(), vec_p1_.ndof());
    next.u.coeffs = x.segment(off_u(), rt0_.ndof());
    next.p.coeffs = x.segment(off_p(), p0_.ndof());
    if (!quasi_static_) {
        next.eta_ddot = (next.eta.coeffs - eta_pred) / (0.25 * dt_ * dt_);
        next.eta_dot = old.eta_dot + dt_ * (0.5 * old.eta_ddot + 0.5 * next.eta_ddot);
    }
    return next;
}

StressField PoroSolver::compute_stress(const PoroState& state) const {
    const Mesh& mesh = *mesh_;
    StressField out;
    const int ne = mesh.num_elements();
    out.strain.resize(ne);
    out.effective.resize(ne);
    out.total.resize(ne);
    out.von_mises.resize(ne);
    out.octahedral_shear_strain.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const auto g = p1_gradients(mesh, e);
        double ux_x = 0, ux_y = 0, uy_x = 0, uy_y = 0;
        for (int i = 0; i < 3; ++i) {
            const int v = mesh.element(e)[i];
            const double ex = state.eta.coeffs[vec_p1_.vertex_dof(v, 0)];
            const double ey = state.eta.coeffs[vec_p1_.vertex_dof(v, 1)];
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
        const double p = state.p.coeffs[p0_.element_dof(e, 0)];
        const SymTensor2 sig_p{sig_e.xx - params_.alpha_biot * p,
                               sig_e.yy - params_.alpha_biot * p, sig_e.xy};
        out.strain[e] = eps;
        out.effective[e] = sig_e;
        out.total[e] = sig_p;

        // plane strain: sigma_zz = lambda tr(eps) - alpha p, eps_zz = 0
        const double szz = lame_.lambda * tr - params_.alpha_biot * p;
        const double mean = (sig_p.xx + sig_p.yy + szz) / 3.0;
        const double dxx = sig_p.xx - mean, dyy = sig_p.yy - mean, dzz = szz - mean;
        out.von_mises[e] =
            std::sqrt(1.5 * (dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * sig_p.xy * sig_p.xy));
        // octahedral shear strain with principal strains (e1, e2, 0)
        const double sum2 = 3.0 * (eps.xx * eps.xx + eps.yy * eps.yy + 2.0 * eps.xy * eps.xy) -
                            tr * tr;
        out.octahedral_shear_strain[e] = (2.0 / 3.0) * std::sqrt(std::max(0.0, sum2));
    }
    return out;
}

std::vector<Vec2> PoroSolver::seepage_velocity(const PoroState& state) const {
    std::vector<Vec2> out(mesh_->num_elements());
    for (int e = 0; e < mesh_->num_elements(); ++e)
        out[e] = evaluate_vector(state.u, e, {1. / 3, 1. / 3, 1. / 3}).value / params_.Phi;
    return out;
}

double PoroSolver::local_mass_balance(const PoroState& snew, const PoroState& sold) const {
    const Mesh& mesh = *mesh_;
    double worst = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double A = mesh.area(e);
        double balance =
            params_.inv_M * (snew.p.coeffs[e] - sold.p.coeffs[e]) / dt_ * A;
        // alpha d(div eta)/dt
        const auto g = p1_gradients(mesh, e);
        double div_new = 0.0, div_old = 0.0;
        for (int i = 0; i < 3; ++i) {
            const int v = mesh.element(e)[i];
            div_new += snew.eta.coeffs[vec_p1_.vertex_dof(v, 0)] * g[i].x +
                       snew.eta.coeffs[vec_p1_.vertex_dof(v, 1)] * g[i].y;
            div_old += sold.eta.coeffs[vec_p1_.vertex_dof(v, 0)] * g[i].x +
                       sold.eta.coeffs[vec_p1_.vertex_dof(v, 1)] * g[i].y;
        }
        balance += params_.alpha_biot * (div_new - div_old) / dt_ * A;
        for (int k = 0; k < 3; ++k) {
            const int f = mesh.element_faces(e)[k];
            balance += mesh.face_sign(e, f) * snew.u.coeffs[rt0_.face_dof(f)] *
                       mesh.face(f).measure;
        }
        worst = std::max(worst, std::abs(balance));
    }
    return worst;
}

} // namespace menisim
