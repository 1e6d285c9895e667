#include "menisim/biology.hpp"

#include <cmath>
#include <sstream>

#include "menisim/common.hpp"
#include "menisim/quadrature.hpp"

namespace menisim {

namespace {

/// Appends scale * M into a block of the triplet list.
void add_scaled_block(TripletList& trip, const SparseMatrix& M, double scale, int row_off,
                      int col_off) {
    for (int r = 0; r < M.rows(); ++r)
        for (int k = M.row_offsets()[r]; k < M.row_offsets()[r + 1]; ++k)
            trip.add(row_off + r, col_off + M.col_indices()[k], scale * M.values()[k]);
}

} // namespace

CellSolver::CellSolver(const Mesh& mesh, BiologyParams params, SolverSettings solver)
    : mesh_(&mesh),
      params_(params),
      solver_(solver),
      dg_(mesh, SpaceKind::DGP1),
      p1_(mesh, SpaceKind::P1) {
    params_.validate();
    solver_.validate();

    mass_dg_ = mass_matrix(dg_);
    const double a_ref = std::max(params_.a1, 1.0);
    // diffusion + NIP face terms; both equations share the penalty scale
    {
        TripletList trip(dg_.ndof(), dg_.ndof());
        add_scaled_block(trip, stiffness_matrix(dg_, params_.a1), 1.0, 0, 0);
        add_scaled_block(trip, dg_nip_matrix(dg_, params_.a1, params_.eta0, a_ref), 1.0, 0, 0);
        diff_c1_ = SparseMatrix::from_triplets(trip);
    }
    {
        TripletList trip(dg_.ndof(), dg_.ndof());
        add_scaled_block(trip, stiffness_matrix(dg_, 1.0), 1.0, 0, 0);
        add_scaled_block(trip, dg_nip_matrix(dg_, 1.0, params_.eta0, a_ref), 1.0, 0, 0);
        diff_c2_ = SparseMatrix::from_triplets(trip);
    }
    // P1 x dG mass, for the lumped projection of cell densities onto nodes
    {
        TripletList trip(p1_.ndof(), dg_.ndof());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double A = mesh.area(e);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    trip.add(p1_.vertex_dof(mesh.element(e)[i]), dg_.element_dof(e, j),
                             A * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
        }
        projection_ = SparseMatrix::from_triplets(trip);
    }
    lumped_ = lumped_mass(p1_);
}

CellState CellSolver::make_state(const Expression& c1, const Expression& c2, const Expression& h,
                                 const Expression& k, double t) const {
    CellState s{Field(dg_), Field(dg_), Field(p1_), Field(p1_), t};
    s.c1 = interpolate([&](Vec2 p) { return c1(p, t); }, dg_);
    s.c2 = interpolate([&](Vec2 p) { return c2(p, t); }, dg_);
    s.h = interpolate([&](Vec2 p) { return h(p, t); }, p1_);
    s.k = interpolate([&](Vec2 p) { return k(p, t); }, p1_);
    return s;
}

CellState CellSolver::zero_state() const {
    return CellState{Field(dg_), Field(dg_), Field(p1_), Field(p1_), 0.0};
}

std::vector<Vec2> CellSolver::taxis_velocity(const Field& h, const Field& k) const {
    require(h.space->kind() == SpaceKind::P1 && k.space->kind() == SpaceKind::P1,
            "taxis_velocity: h and k must be P1 fields");
    std::vector<Vec2> v(mesh_->num_elements());
    for (int e = 0; e < mesh_->num_elements(); ++e) {
        const auto g = p1_gradients(*mesh_, e);
        Vec2 grad_h{0, 0}, grad_k{0, 0};
        for (int i = 0; i < 3; ++i) {
            const int vtx = mesh_->element(e)[i];
            grad_h += g[i] * h.coeffs[p1_.vertex_dof(vtx)];
            grad_k += g[i] * k.coeffs[p1_.vertex_dof(vtx)];
        }
        v[e] = grad_h * params_.b1 + grad_k * params_.b2;
    }
    return v;
}

Vector CellSolver::project_to_p1(const Field& dg_field) const {
    Vector num = projection_.multiply(dg_field.coeffs);
    return num.cwiseQuotient(lumped_);
}

void CellSolver::assemble(const CellState& snew, const CellState& sold, const RateField& rates,
                          double dt, Vector& R, TripletList* J) const {
    const Mesh& mesh = *mesh_;
    const int n1 = dg_.ndof();
    const int nv = p1_.ndof();
    require(static_cast<int>(rates.alpha1.size()) == mesh.num_elements() &&
                static_cast<int>(rates.alpha2.size()) == mesh.num_elements(),
            "rate field size does not match the mesh");
    require(dt > 0.0, "cells: dt must be positive");
    const double t_new = sold.t + dt;

    R.setZero(n_unknowns());

    // --- time derivative and diffusion (constant matrices) ---
    {
        Vector dc1 = (snew.c1.coeffs - sold.c1.coeffs) / dt;
        Vector dc2 = (snew.c2.coeffs - sold.c2.coeffs) / dt;
        Vector r1 = mass_dg_.multiply(dc1);
        diff_c1_.multiply_add(snew.c1.coeffs, 1.0, r1);
        Vector r2 = mass_dg_.multiply(dc2);
        diff_c2_.multiply_add(snew.c2.coeffs, 1.0, r2);
        R.segment(off_c1(), n1) += r1;
        R.segment(off_c2(), n1) += r2;
        if (J) {
            add_scaled_block(*J, mass_dg_, 1.0 / dt, off_c1(), off_c1());
            add_scaled_block(*J, diff_c1_, 1.0, off_c1(), off_c1());
            add_scaled_block(*J, mass_dg_, 1.0 / dt, off_c2(), off_c2());
            add_scaled_block(*J, diff_c2_, 1.0, off_c2(), off_c2());
        }
    }

    // --- taxis transport of c1 (volume + upwind faces), implicit in h, k ---
    const std::vector<Vec2> v = taxis_velocity(snew.h, snew.k);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto g = p1_gradients(mesh, e);
        const double A = mesh.area(e);
        const double c1_mean = (snew.c1.coeffs[dg_.element_dof(e, 0)] +
                                snew.c1.coeffs[dg_.element_dof(e, 1)] +
                                snew.c1.coeffs[dg_.element_dof(e, 2)]) /
                               3.0;
        for (int i = 0; i < 3; ++i) {
            const int row = off_c1() + dg_.element_dof(e, i);
            R[row] += -v[e].dot(g[i]) * A * c1_mean;
            if (!J) continue;
            // d/dc1_j: -(v·grad phi_i) * A/3
            for (int j = 0; j < 3; ++j)
                J->add(row, off_c1() + dg_.element_dof(e, j), -v[e].dot(g[i]) * A / 3.0);
            // d/dh_q, d/dk_q through v
            for (int q = 0; q < 3; ++q) {
                const int vtx = mesh.element(e)[q];
                const double dv = -(g[q].dot(g[i])) * A * c1_mean;
                J->add(row, off_h() + p1_.vertex_dof(vtx), params_.b1 * dv);
                J->add(row, off_k() + p1_.vertex_dof(vtx), params_.b2 * dv);
            }
        }
    }
    {
        const EdgeRule& rule = edge_rule(2);
        for (int f = 0; f < mesh.num_faces(); ++f) {
            const Face& face = mesh.face(f);
            if (face.is_boundary()) continue;  // zero-flux boundary: flux omitted
            const FaceContext ctx = face_context(mesh, f);
            const Vec2 vf = (v[face.left] + v[face.right]) * 0.5;
            const double vn = vf.dot(face.normal);
            double wl = 0.5, wr = 0.5;  // tie -> average of traces
            if (vn > 0.0) { wl = 1.0; wr = 0.0; }
            else if (vn < 0.0) { wl = 0.0; wr = 1.0; }

            // dofs (index, jump sign, endpoint hat or -1)
            struct TraceDof { int dof; double sign; int endpoint; };
            std::array<TraceDof, 6> dofs;
            for (int k = 0; k < 3; ++k) {
                int tl = -1, tr = -1;
                if (k == ctx.left.loc_v0) tl = 0;
                if (k == ctx.left.loc_v1) tl = 1;
                if (k == ctx.right.loc_v0) tr = 0;
                if (k == ctx.right.loc_v1) tr = 1;
                dofs[k] = {dg_.element_dof(ctx.left.elem, k), +1.0, tl};
                dofs[3 + k] = {dg_.element_dof(ctx.right.elem, k), -1.0, tr};
            }
            auto trace = [](const TraceDof& d, double t) {
                return d.endpoint < 0 ? 0.0 : (d.endpoint == 0 ? 1.0 - t : t);
            };
            // quadrature accumulation: residual, d/dc1, and S_i = int c1up [phi_i]
            std::array<double, 6> S{};  // per test dof
            for (const auto& q : rule.points) {
                const double ds = q.weight * face.measure;
                // upwind c1 value (frozen side weights)
                double c1_up = 0.0;
                for (int k = 0; k < 3; ++k) {
                    c1_up += wl * snew.c1.coeffs[dofs[k].dof] * trace(dofs[k], q.t);
                    c1_up += wr * snew.c1.coeffs[dofs[3 + k].dof] * trace(dofs[3 + k], q.t);
                }
                for (int i = 0; i < 6; ++i) {
                    const double jump_i = dofs[i].sign * trace(dofs[i], q.t);
                    if (jump_i == 0.0) continue;
                    R[off_c1() + dofs[i].dof] += ds * vn * c1_up * jump_i;
                    S[i] += ds * c1_up * jump_i;
                    if (!J) continue;
                    for (int j = 0; j < 6; ++j) {
                        const double w = j < 3 ? wl : wr;
                        const double tj = trace(dofs[j], q.t);
                        if (w * tj != 0.0)
                            J->add(off_c1() + dofs[i].dof, off_c1() + dofs[j].dof,
                                   ds * vn * w * tj * jump_i);
                    }
                }
            }
            if (J) {
                // d vn / d h_q = b1/2 (grad_L + grad_R)(q)·n, same for k with b2
                for (const FaceSide* side : {&ctx.left, &ctx.right}) {
                    const auto g = p1_gradients(mesh, side->elem);
                    for (int q = 0; q < 3; ++q) {
                        const int vtx = mesh.element(side->elem)[q];
                        const double dvn = 0.5 * g[q].dot(face.normal);
                        for (int i = 0; i < 6; ++i) {
                            if (S[i] == 0.0) continue;
                            J->add(off_c1() + dofs[i].dof, off_h() + p1_.vertex_dof(vtx),
                                   params_.b1 * dvn * S[i]);
                            J->add(off_c1() + dofs[i].dof, off_k() + p1_.vertex_dof(vtx),
                                   params_.b2 * dvn * S[i]);
                        }
                    }
                }
            }
        }
    }

    // --- reactions (degree-4 quadrature) and MMS volume sources ---
    {
        const QuadratureRule& rule = triangle_rule(4);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const double A = mesh.area(e);
            const double a1r = rates.alpha1[e], a2r = rates.alpha2[e];
            const auto& el = mesh.element(e);
            for (const auto& q : rule.points) {
                double c1v = 0.0, c2v = 0.0, kv = 0.0;
                for (int i = 0; i < 3; ++i) {
                    c1v += snew.c1.coeffs[dg_.element_dof(e, i)] * q.bary[i];
                    c2v += snew.c2.coeffs[dg_.element_dof(e, i)] * q.bary[i];
                    kv += snew.k.coeffs[p1_.vertex_dof(el[i])] * q.bary[i];
                }
                const double w = q.weight * A;
                const double growth = 1.0 - c1v - c2v - kv;
                const double reac1 = a1r * c1v - a2r * c2v - params_.beta * c1v * growth;
                const double reac2 = -(a1r * c1v - a2r * c2v);
                double src1 = 0.0, src2 = 0.0;
                if (sources_.active) {
                    const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                                   mesh.vertex(el[2]) * q.bary[2];
                    src1 = sources_.c1(x, t_new);
                    src2 = sources_.c2(x, t_new);
                }
                for (int i = 0; i < 3; ++i) {
                    const double phi = q.bary[i];
                    R[off_c1() + dg_.element_dof(e, i)] += w * (reac1 - src1) * phi;
                    R[off_c2() + dg_.element_dof(e, i)] += w * (reac2 - src2) * phi;
                    if (!J) continue;
                    const double d1d1 = a1r - params_.beta * (growth - c1v);
                    const double d1d2 = -a2r + params_.beta * c1v;
                    const double d1dk = params_.beta * c1v;
                    for (int j = 0; j < 3; ++j) {
                        const double phj = q.bary[j];
                        J->add(off_c1() + dg_.element_dof(e, i), off_c1() + dg_.element_dof(e, j),
                               w * d1d1 * phj * phi);
                        J->add(off_c1() + dg_.element_dof(e, i), off_c2() + dg_.element_dof(e, j),
                               w * d1d2 * phj * phi);
                        J->add(off_c1() + dg_.element_dof(e, i), off_k() + p1_.vertex_dof(el[j]),
                               w * d1dk * phj * phi);
                        J->add(off_c2() + dg_.element_dof(e, i), off_c1() + dg_.element_dof(e, j),
                               w * (-a1r) * phj * phi);
                        J->add(off_c2() + dg_.element_dof(e, i), off_c2() + dg_.element_dof(e, j),
                               w * (a2r) * phj * phi);
                    }
                }
            }
        }
    }

    // --- h and k rows: lumped nodal ODEs driven by projected densities ---
    {
        const Vector c1_hat = project_to_p1(snew.c1);
        const Vector c2_hat = project_to_p1(snew.c2);
        for (int p = 0; p < nv; ++p) {
            const double m = lumped_[p];
            const double hn = snew.h.coeffs[p], ho = sold.h.coeffs[p];
            const double kn = snew.k.coeffs[p], ko = sold.k.coeffs[p];
            const double c2p = c2_hat[p], c1p = c1_hat[p];
            double sh = 0.0, sk = 0.0;
            if (sources_.active) {
                const Vec2 x = mesh.vertex(p);
                sh = sources_.h(x, t_new);
                sk = sources_.k(x, t_new);
            }
            R[off_h() + p] =
                m * ((hn - ho) / dt + params_.gamma1 * hn * c2p - c2p / (1.0 + c2p) - sh);
            R[off_k() + p] = m * ((kn - ko) / dt + params_.delta1 * kn * c1p - c2p - sk);
            if (!J) continue;
            J->add(off_h() + p, off_h() + p, m * (1.0 / dt + params_.gamma1 * c2p));
            J->add(off_k() + p, off_k() + p, m * (1.0 / dt + params_.delta1 * c1p));
            // through the projection: d c_hat[p] / d c_dof = projection_[p, dof] / m
            const double dh_dc2 = params_.gamma1 * hn - 1.0 / ((1.0 + c2p) * (1.0 + c2p));
            const double dk_dc1 = params_.delta1 * kn;
            for (int idx = projection_.row_offsets()[p]; idx < projection_.row_offsets()[p + 1];
                 ++idx) {
                const int col = projection_.col_indices()[idx];
                const double pv = projection_.values()[idx];
                J->add(off_h() + p, off_c2() + col, dh_dc2 * pv);
                J->add(off_k() + p, off_c1() + col, dk_dc1 * pv);
                J->add(off_k() + p, off_c2() + col, -pv);
            }
        }
    }
}

Vector CellSolver::residual(const CellState& snew, const CellState& sold, const RateField& rates,
                            double dt) const {
    Vector r;
    assemble(snew, sold, rates, dt, r, nullptr);
    return r;
}

CellState CellSolver::newton_step(const CellState& sold, const RateField& rates, double dt,
                                  NewtonReport* report) const {
    CellState snew = sold;
    snew.t = sold.t + dt;

    NewtonReport local;
    double r0 = -1.0;
    for (int it = 0; it <= solver_.newton_max_iterations; ++it) {
        Vector R;
        TripletList Jt(n_unknowns(), n_unknowns());
        assemble(snew, sold, rates, dt, R, &Jt);
        const double norm = R.norm();
        local.history.push_back(norm);
        if (r0 < 0.0) r0 = norm;
        local.residual_norm = norm;
        local.iterations = it;
        if (norm <= solver_.newton_tolerance * std::max(1.0, r0)) {
            if (report) *report = local;
            return snew;
        }
        if (it == solver_.newton_max_iterations) break;

        const SparseMatrix Jm = SparseMatrix::from_triplets(Jt);
        const Vector du = solve(Jm, -R, solver_.linear);
        const int n1 = dg_.ndof();
        const int nv = p1_.ndof();
        snew.c1.coeffs += du.segment(off_c1(), n1);
        snew.c2.coeffs += du.segment(off_c2(), n1);
        snew.h.coeffs += du.segment(off_h(), nv);
        snew.k.coeffs += du.segment(off_k(), nv);
    }
    std::ostringstream msg;
    msg << "cell Newton did not converge in " << solver_.newton_max_iterations
        << " iterations; residual history:";
    for (double rn : local.history) msg << " " << rn;
    throw SolverError(msg.str());
}

CellRunSummary CellSolver::run(CellState& state, const RateProvider& rates, double dt, int n_steps,
                               const std::vector<Observer>& observers, int stride) const {
    require(n_steps >= 1, "run_cells: n_steps must be >= 1");
    require(stride >= 1, "run_cells: observer stride must be >= 1");

    CellRunSummary summary;
    summary.mass0 = integrate(state.c1) + integrate(state.c2);
    summary.min_c1 = state.c1.coeffs.minCoeff();
    summary.min_c2 = state.c2.coeffs.minCoeff();

    for (int step = 1; step <= n_steps; ++step) {
        const RateField rf = rates(state, step);
        NewtonReport report;
        state = newton_step(state, rf, dt, &report);
        summary.steps = step;
        summary.newton_total += report.iterations;
        summary.newton_max = std::max(summary.newton_max, report.iterations);
        summary.min_c1 = std::min(summary.min_c1, state.c1.coeffs.minCoeff());
        summary.min_c2 = std::min(summary.min_c2, state.c2.coeffs.minCoeff());
        if (step % stride == 0 || step == n_steps)
            for (const auto& obs : observers) obs(step, state, report);
    }
    summary.mass_final = integrate(state.c1) + integrate(state.c2);
    return summary;
}

double CellSolver::local_balance_residual(const CellState& snew, const CellState& sold,
                                          const RateField& rates, double dt) const {
    const Mesh& mesh = *mesh_;
    const double t_new = sold.t + dt;
    std::vector<double> bal1(mesh.num_elements(), 0.0), bal2(mesh.num_elements(), 0.0);

    // volume terms: mass change + reactions - sources, via quadrature
    const QuadratureRule& rule = triangle_rule(4);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double A = mesh.area(e);
        const auto& el = mesh.element(e);
        for (const auto& q : rule.points) {
            const ScalarEval c1n = evaluate_scalar(snew.c1, e, q.bary);
            const ScalarEval c2n = evaluate_scalar(snew.c2, e, q.bary);
            const ScalarEval c1o = evaluate_scalar(sold.c1, e, q.bary);
            const ScalarEval c2o = evaluate_scalar(sold.c2, e, q.bary);
            const ScalarEval kv = evaluate_scalar(snew.k, e, q.bary);
            const double w = q.weight * A;
            const double reac1 = rates.alpha1[e] * c1n.value - rates.alpha2[e] * c2n.value -
                                 params_.beta * c1n.value *
                                     (1.0 - c1n.value - c2n.value - kv.value);
            double s1 = 0.0, s2 = 0.0;
            if (sources_.active) {
                const Vec2 x = mesh.vertex(el[0]) * q.bary[0] + mesh.vertex(el[1]) * q.bary[1] +
                               mesh.vertex(el[2]) * q.bary[2];
                s1 = sources_.c1(x, t_new);
                s2 = sources_.c2(x, t_new);
            }
            bal1[e] += w * ((c1n.value - c1o.value) / dt + reac1 - s1);
            bal2[e] += w * ((c2n.value - c2o.value) / dt -
                            (rates.alpha1[e] * c1n.value - rates.alpha2[e] * c2n.value) - s2);
        }
    }

    // face fluxes, each computed once and applied antisymmetrically
    const std::vector<Vec2> v = taxis_velocity(snew.h, snew.k);
    const EdgeRule& erule = edge_rule(2);
    const double a_ref = std::max(params_.a1, 1.0);
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const Face& face = mesh.face(f);
        if (face.is_boundary()) continue;
        const FaceContext ctx = face_context(mesh, f);
        const double eta = nip_penalty(params_.eta0, a_ref, face.measure);
        const Vec2 vf = (v[face.left] + v[face.right]) * 0.5;
        const double vn = vf.dot(face.normal);

        double flux1 = 0.0, flux2 = 0.0;
        for (const auto& q : erule.points) {
            std::array<double, 3> bl{0, 0, 0}, br{0, 0, 0};
            bl[ctx.left.loc_v0] = 1.0 - q.t;
            bl[ctx.left.loc_v1] = q.t;
            br[ctx.right.loc_v0] = 1.0 - q.t;
            br[ctx.right.loc_v1] = q.t;
            const ScalarEval c1l = evaluate_scalar(snew.c1, ctx.left.elem, bl);
            const ScalarEval c1r = evaluate_scalar(snew.c1, ctx.right.elem, br);
            const ScalarEval c2l = evaluate_scalar(snew.c2, ctx.left.elem, bl);
            const ScalarEval c2r = evaluate_scalar(snew.c2, ctx.right.elem, br);
            const double ds = q.weight * face.measure;
            const double up1 = vn > 0.0 ? c1l.value : (vn < 0.0 ? c1r.value
                                                                : 0.5 * (c1l.value + c1r.value));
            flux1 += ds * (-0.5 * params_.a1 * (c1l.gradient + c1r.gradient).dot(face.normal) +
                           eta * (c1l.value - c1r.value) + vn * up1);
            flux2 += ds * (-0.5 * (c2l.gradient + c2r.gradient).dot(face.normal) +
                           eta * (c2l.value - c2r.value));
        }
        bal1[face.left] += flux1;
        bal1[face.right] -= flux1;
        bal2[face.left] += flux2;
        bal2[face.right] -= flux2;
    }

    double worst = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e)
        worst = std::max({worst, std::abs(bal1[e]), std::abs(bal2[e])});
    return worst;
}

} // namespace menisim
