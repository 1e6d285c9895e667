#include <doctest.h>

#include <cmath>
#include <random>

#include "menisim/biology.hpp"
#include "menisim/common.hpp"
#include "menisim/verification.hpp"

using namespace menisim;

namespace {

SolverSettings tight_newton() {
    SolverSettings s;
    s.newton_tolerance = 1e-12;
    return s;
}

} // namespace

TEST_CASE("taxis velocity: affine h gives the constant b1 grad h") {
    Mesh m = structured_generator(4, 4);
    CellSolver solver(m, BiologyParams{});
    FunctionSpace p1(m, SpaceKind::P1);
    Field h = interpolate([](Vec2 p) { return p.x; }, p1);
    Field k(p1);
    const auto v = solver.taxis_velocity(h, k);
    for (const auto& ve : v) {
        CHECK(ve.x == doctest::Approx(0.005).epsilon(1e-13));
        CHECK(std::abs(ve.y) <= 1e-16);
    }
}

TEST_CASE("taxis velocity: constant h, k give zero") {
    Mesh m = structured_generator(3, 5);
    CellSolver solver(m, BiologyParams{});
    FunctionSpace p1(m, SpaceKind::P1);
    Field h = interpolate([](Vec2) { return 2.7; }, p1);
    Field k = interpolate([](Vec2) { return -1.3; }, p1);
    for (const auto& ve : solver.taxis_velocity(h, k)) CHECK(ve.norm() <= 1e-15);
}

TEST_CASE("taxis velocity of h = x^2: elementwise mean of 2x over the x-extent") {
    Mesh m = structured_generator(5, 2);
    BiologyParams params;
    params.b1 = 1.0;
    params.b2 = 0.001;
    CellSolver solver(m, params);
    FunctionSpace p1(m, SpaceKind::P1);
    Field h = interpolate([](Vec2 p) { return p.x * p.x; }, p1);
    Field k(p1);
    const auto v = solver.taxis_velocity(h, k);
    for (int e = 0; e < m.num_elements(); ++e) {
        double xmin = 1e9, xmax = -1e9;
        for (int i = 0; i < 3; ++i) {
            xmin = std::min(xmin, m.vertex(m.element(e)[i]).x);
            xmax = std::max(xmax, m.vertex(m.element(e)[i]).x);
        }
        CHECK(v[e].x == doctest::Approx(xmin + xmax).epsilon(1e-13));  // (1/(b-a)) int 2x
        CHECK(std::abs(v[e].y) <= 1e-14);
    }
}

TEST_CASE("residual vanishes at the trivial equilibrium") {
    Mesh m = structured_generator(4, 4);
    CellSolver solver(m, BiologyParams{});
    CellState zero = solver.zero_state();
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);
    CHECK(solver.residual(zero, zero, rates, 0.1).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("residual of a uniform state is mass matrix times the pointwise rate") {
    Mesh m = structured_generator(4, 4);
    CellSolver solver(m, BiologyParams{});  // beta = 0.5
    const Expression half = Expression::parse("0.5");
    const Expression zero = Expression::parse("0");
    CellState s = solver.make_state(half, zero, zero, zero);
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);
    // d/dt c1 = -alpha1 c1 + beta c1 (1 - c1) = -0.025 + 0.125 = 0.1; residual
    // rows are M (dc1/dt - 0.1) with dc1 = 0
    const Vector r = solver.residual(s, s, rates, 0.1);
    const SparseMatrix M = mass_matrix(solver.dg_space());
    Vector expected = M.multiply(Vector::Constant(solver.dg_space().ndof(), -0.1));
    const int n1 = solver.dg_space().ndof();
    CHECK((r.segment(0, n1) - expected).lpNorm<Eigen::Infinity>() <= 1e-14);
    // c2 block: -(alpha1 c1 - alpha2 c2) = -0.025
    Vector expected2 = M.multiply(Vector::Constant(n1, -0.025));
    CHECK((r.segment(n1, n1) - expected2).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("constant fields produce no face contributions") {
    // residual of a constant state must have identical rows per dof pattern:
    // any face term would break the elementwise mass-matrix structure
    Mesh m = uniform_refine(structured_generator(3, 2));
    CellSolver solver(m, BiologyParams{});
    const Expression c = Expression::parse("0.3");
    const Expression c2 = Expression::parse("0.2");
    const Expression h = Expression::parse("0.7");
    const Expression k = Expression::parse("0.1");
    CellState s = solver.make_state(c, c2, h, k);
    const RateField rates = RateField::constant(m.num_elements(), 0.06, 0.09);
    const Vector r = solver.residual(s, s, rates, 0.1);
    // pointwise c1 rate: -a1 c1 + a2 c2 + beta c1 (1 - c1 - c2 - k)
    const double f1 = -0.06 * 0.3 + 0.09 * 0.2 + 0.5 * 0.3 * (1.0 - 0.3 - 0.2 - 0.1);
    const SparseMatrix M = mass_matrix(solver.dg_space());
    const int n1 = solver.dg_space().ndof();
    Vector expected = M.multiply(Vector::Constant(n1, -f1));
    CHECK((r.segment(0, n1) - expected).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("newton from the zero state converges immediately") {
    Mesh m = structured_generator(3, 3);
    CellSolver solver(m, BiologyParams{});
    CellState zero = solver.zero_state();
    NewtonReport report;
    CellState next =
        solver.newton_step(zero, RateField::constant(m.num_elements(), 0.05, 0.1), 0.1, &report);
    CHECK(report.iterations <= 1);
    CHECK(next.c1.coeffs.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(next.k.coeffs.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(next.t == doctest::Approx(0.1));
}

TEST_CASE("uniform initial data reproduces the implicit Euler ODE oracle to 1e-10") {
    Mesh m = structured_generator(4, 3);
    CellSolver solver(m, BiologyParams{}, tight_newton());
    const CellState init = solver.make_state(
        Expression::parse("0.4"), Expression::parse("0.1"), Expression::parse("0.8"),
        Expression::parse("0.05"));
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);

    verification::OdeParams op;  // defaults match BiologyParams + rates above
    const auto oracle =
        verification::implicit_euler_oracle(op, {0.4, 0.1, 0.8, 0.05}, 0.1, 20);

    CellState s = init;
    for (int n = 1; n <= 20; ++n) {
        s = solver.newton_step(s, rates, 0.1);
        const auto& ref = oracle[n];
        for (int i = 0; i < s.c1.coeffs.size(); ++i)
            CHECK(s.c1.coeffs[i] == doctest::Approx(ref.c1).epsilon(1e-10));
        for (int i = 0; i < s.h.coeffs.size(); ++i) {
            CHECK(s.h.coeffs[i] == doctest::Approx(ref.h).epsilon(1e-10));
            CHECK(s.k.coeffs[i] == doctest::Approx(ref.k).epsilon(1e-10));
        }
    }
}

TEST_CASE("beta = 0 conserves the total c1 + c2 mass") {
    Mesh m = uniform_refine(structured_generator(4, 4));
    BiologyParams params;
    params.beta = 0.0;
    CellSolver solver(m, params, tight_newton());
    CellState s = solver.make_state(Expression::parse("0.5*exp(-20*((x-0.3)^2+(y-0.6)^2))"),
                                    Expression::parse("0.1"), Expression::parse("1"),
                                    Expression::parse("0"));
    const RateField rates = RateField::constant(m.num_elements(), 0.07, 0.04);
    const double mass0 = integrate(s.c1) + integrate(s.c2);
    for (int n = 0; n < 30; ++n) s = solver.newton_step(s, rates, 0.1);
    const double massT = integrate(s.c1) + integrate(s.c2);
    CHECK(std::abs(massT - mass0) / mass0 <= 1e-10);
}

TEST_CASE("pure diffusion of uniform data stays uniform") {
    Mesh m = structured_generator(5, 5);
    BiologyParams params;
    params.b1 = params.b2 = 0.0;
    CellSolver solver(m, params);
    CellState s = solver.make_state(Expression::parse("0.25"), Expression::parse("0.1"),
                                    Expression::parse("0.5"), Expression::parse("0"));
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);
    auto summary = solver.run(s, [&](const CellState&, int) { return rates; }, 0.1, 40);
    CHECK(summary.steps == 40);
    const double mean = s.c1.coeffs.mean();
    for (int i = 0; i < s.c1.coeffs.size(); ++i)
        CHECK(std::abs(s.c1.coeffs[i] - mean) <= 1e-9);
}

TEST_CASE("run rejects n_steps = 0") {
    Mesh m = structured_generator(2, 2);
    CellSolver solver(m, BiologyParams{});
    CellState s = solver.zero_state();
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);
    CHECK_THROWS_AS(solver.run(s, [&](const CellState&, int) { return rates; }, 0.1, 0),
                    InputError);
}

TEST_CASE("local conservation: per-element flux balance on a random smoke run") {
    Mesh m = uniform_refine(structured_generator(3, 3));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.02, 0.2);
    BiologyParams params;
    params.a1 = u(rng);
    params.b1 = u(rng) * 0.05;
    params.b2 = u(rng) * 0.02;
    params.beta = u(rng);
    CellSolver solver(m, params, tight_newton());
    CellState s = solver.make_state(Expression::parse("0.4*exp(-10*((x-0.4)^2+(y-0.4)^2))"),
                                    Expression::parse("0.05+0.02*x"), Expression::parse("1-0.3*y"),
                                    Expression::parse("0.1*x"));
    RateField rates = RateField::constant(m.num_elements(), 0.0, 0.0);
    for (int e = 0; e < m.num_elements(); ++e) {
        rates.alpha1[e] = 0.05 + 0.05 * u(rng);
        rates.alpha2[e] = 0.05 + 0.05 * u(rng);
    }
    const CellState old = s;
    s = solver.newton_step(s, rates, 0.1);
    CHECK(solver.local_balance_residual(s, old, rates, 0.1) <= 1e-10);
}

TEST_CASE("newton failure carries the iteration history") {
    Mesh m = structured_generator(3, 3);
    SolverSettings s;
    s.newton_max_iterations = 1;
    s.newton_tolerance = 1e-15;
    BiologyParams params;
    params.beta = 5.0;  // strong nonlinearity, cannot converge in one step
    CellSolver solver(m, params, s);
    CellState init = solver.make_state(Expression::parse("0.5+0.3*sin(6*x)"),
                                       Expression::parse("0.2"), Expression::parse("1"),
                                       Expression::parse("0"));
    const RateField rates = RateField::constant(m.num_elements(), 0.05, 0.05);
    CHECK_THROWS_WITH_AS(solver.newton_step(init, rates, 0.5),
                         doctest::Contains("residual history"), SolverError);
}
