#include <doctest.h>

#include <cmath>

#include "menisim/common.hpp"
#include "menisim/forms.hpp"
#include "menisim/solvers.hpp"

using namespace menisim;

TEST_CASE("P1 mass matrix on the reference triangle: diag 1/12, off-diag 1/24") {
    Mesh m = build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    SparseMatrix M = mass_matrix(FunctionSpace(m, SpaceKind::P1));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(M.coeff(i, j) == doctest::Approx(i == j ? 1.0 / 12 : 1.0 / 24).epsilon(1e-14));
}

TEST_CASE("stiffness matrix rows sum to zero (constants in the kernel)") {
    Mesh m = uniform_refine(structured_generator(3, 3));
    for (auto kind : {SpaceKind::P1, SpaceKind::DGP1}) {
        SparseMatrix K = stiffness_matrix(FunctionSpace(m, kind), 1.7);
        Vector ones = Vector::Ones(K.cols());
        CHECK(K.multiply(ones).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
}

TEST_CASE("NIP dG Laplacian reproduces the continuous P1 stiffness action") {
    Mesh m = uniform_refine(structured_generator(2, 3));
    FunctionSpace dg(m, SpaceKind::DGP1);
    FunctionSpace p1(m, SpaceKind::P1);
    const double a = 0.015;
    SparseMatrix K_dg = stiffness_matrix(dg, a);
    SparseMatrix F_dg = dg_nip_matrix(dg, a, 4.0, a);
    SparseMatrix K_p1 = stiffness_matrix(p1, a);

    Field u_p1 = interpolate([](Vec2 p) { return 0.3 + 2.0 * p.x - p.y; }, p1);
    Field u_dg = interpolate([](Vec2 p) { return 0.3 + 2.0 * p.x - p.y; }, dg);
    Vector y = K_dg.multiply(u_dg.coeffs);
    F_dg.multiply_add(u_dg.coeffs, 1.0, y);
    // sum the dG residual entries per vertex: jumps of continuous hats vanish
    Vector y_vertex = Vector::Zero(p1.ndof());
    for (int e = 0; e < m.num_elements(); ++e)
        for (int i = 0; i < 3; ++i)
            y_vertex[p1.vertex_dof(m.element(e)[i])] += y[dg.element_dof(e, i)];
    Vector y_p1 = K_p1.multiply(u_p1.coeffs);
    CHECK((y_vertex - y_p1).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("NIP face terms vanish on continuous fields") {
    Mesh m = structured_generator(3, 3);
    FunctionSpace dg(m, SpaceKind::DGP1);
    SparseMatrix F = dg_nip_matrix(dg, 1.0, 4.0, 1.0);
    Field u = interpolate([](Vec2 p) { return 1.0 + p.x - 3.0 * p.y; }, dg);
    // +([u],{a grad v}) term survives zero jumps only through [u] = 0
    Vector y = F.multiply(u.coeffs);
    // residual contributions reduce to the consistency term -([v],{a grad u})
    // which must cancel against the volume part when summed per vertex (checked
    // above); here check the penalty part alone via a constant field
    Field c(dg);
    c.coeffs.setOnes();
    CHECK(F.multiply(c.coeffs).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK(y.size() == dg.ndof());
}

TEST_CASE("divergence coupling RT0 -> P0 gives the +-|F| pattern") {
    Mesh m = structured_generator(2, 2);
    FunctionSpace rt0(m, SpaceKind::RT0);
    FunctionSpace p0(m, SpaceKind::P0);
    SparseMatrix B = rt0_p0_divergence(rt0, p0);
    for (int e = 0; e < m.num_elements(); ++e) {
        for (int k = 0; k < 3; ++k) {
            const int f = m.element_faces(e)[k];
            CHECK(B.coeff(e, f) ==
                  doctest::Approx(m.face_sign(e, f) * m.face(f).measure).epsilon(1e-14));
        }
    }
    // interpolant of (x,y): (div u, 1)_T = 2|T|
    Field u = interpolate_vector([](Vec2 p) { return p; }, rt0);
    Vector d = B.multiply(u.coeffs);
    for (int e = 0; e < m.num_elements(); ++e)
        CHECK(d[e] == doctest::Approx(2.0 * m.area(e)).epsilon(1e-13));
}

TEST_CASE("advection + upwind matrices transport constants conservatively") {
    Mesh m = structured_generator(4, 4);
    FunctionSpace dg(m, SpaceKind::DGP1);
    FormSpec adv;
    adv.kind = FormSpec::Kind::Advection;
    adv.element_velocity.assign(m.num_elements(), Vec2{0.4, -0.2});
    SparseMatrix A = assemble_bilinear(adv, dg, dg);
    FormSpec up;
    up.kind = FormSpec::Kind::DGUpwind;
    up.element_velocity = adv.element_velocity;
    SparseMatrix U = assemble_bilinear(up, dg, dg);

    Field c(dg);
    c.coeffs.setOnes();
    // For constant fields all face jumps vanish and -(v c, grad v_test)
    // telescopes: testing with 1 gives zero (global conservation), testing
    // with anything gives the pure volume term; total residual action summed
    // over each element's dofs must vanish since div v = 0 here.
    Vector y = A.multiply(c.coeffs);
    U.multiply_add(c.coeffs, 1.0, y);
    double total = 0.0;
    for (int i = 0; i < y.size(); ++i) total += y[i];
    CHECK(std::abs(total) <= 1e-13);
    // constant test function per interior element: the upwind fluxes close the
    // surface and cancel the volume term (boundary elements keep the open
    // zero-flux side and are covered by the global sum above)
    int checked = 0;
    for (int e = 0; e < m.num_elements(); ++e) {
        bool interior = true;
        for (int f : m.element_faces(e)) interior = interior && !m.face(f).is_boundary();
        if (!interior) continue;
        double row = 0.0;
        for (int i = 0; i < 3; ++i) row += y[dg.element_dof(e, i)];
        CHECK(std::abs(row) <= 1e-13);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("elasticity matrix: rigid motions are in the kernel") {
    Mesh m = uniform_refine(structured_generator(2, 2));
    FunctionSpace v(m, SpaceKind::P1, 2);
    SparseMatrix K = elasticity_matrix(v, 17.19, 34.28);
    // translation + linearized rotation (-y, x)
    Field rigid(v);
    for (int vi = 0; vi < m.num_vertices(); ++vi) {
        rigid.coeffs[v.vertex_dof(vi, 0)] = 0.7 - m.vertex(vi).y;
        rigid.coeffs[v.vertex_dof(vi, 1)] = -0.3 + m.vertex(vi).x;
    }
    CHECK(K.multiply(rigid.coeffs).lpNorm<Eigen::Infinity>() <= 1e-11);
}

TEST_CASE("lumped mass sums to the domain area") {
    Mesh m = structured_generator(3, 5);
    Vector lm = lumped_mass(FunctionSpace(m, SpaceKind::P1));
    CHECK(lm.sum() == doctest::Approx(m.total_area()).epsilon(1e-13));
    for (int i = 0; i < lm.size(); ++i) CHECK(lm[i] > 0.0);
}

TEST_CASE("incompatible spaces are rejected") {
    Mesh m = structured_generator(2, 2);
    FunctionSpace p0(m, SpaceKind::P0);
    FunctionSpace p1(m, SpaceKind::P1);
    FormSpec stiff;
    stiff.kind = FormSpec::Kind::Stiffness;
    CHECK_THROWS_AS(assemble_bilinear(stiff, p0, p0), InputError);
    FormSpec div;
    div.kind = FormSpec::Kind::DivergenceRT0P0;
    CHECK_THROWS_AS(assemble_bilinear(div, p1, p0), InputError);
}
