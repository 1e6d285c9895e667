#include <doctest.h>

#include <cmath>
#include <random>

#include "menisim/common.hpp"
#include "menisim/solvers.hpp"
#include "menisim/sparse.hpp"

using namespace menisim;

namespace {

// 1D Laplacian stencil (-1, 2, -1) with Dirichlet ends eliminated.
SparseMatrix laplacian_1d(int n) {
    TripletList t(n, n);
    for (int i = 0; i < n; ++i) {
        t.add(i, i, 2.0);
        if (i > 0) t.add(i, i - 1, -1.0);
        if (i + 1 < n) t.add(i, i + 1, -1.0);
    }
    return assemble(t);
}

} // namespace

TEST_CASE("duplicate triplets are summed") {
    TripletList t(2, 2);
    t.add(0, 0, 1.0);
    t.add(0, 0, 2.0);
    t.add(1, 0, -1.0);
    SparseMatrix m = assemble(t);
    CHECK(m.coeff(0, 0) == 3.0);
    CHECK(m.coeff(1, 0) == -1.0);
    CHECK(m.nonzeros() == 2);
}

TEST_CASE("column indices strictly increase within each row") {
    std::mt19937 rng(7);
    TripletList t(20, 20);
    std::uniform_int_distribution<int> idx(0, 19);
    for (int k = 0; k < 400; ++k) t.add(idx(rng), idx(rng), 1.0);
    SparseMatrix m = assemble(t);
    for (int r = 0; r < m.rows(); ++r)
        for (int k = m.row_offsets()[r] + 1; k < m.row_offsets()[r + 1]; ++k)
            CHECK(m.col_indices()[k] > m.col_indices()[k - 1]);
}

TEST_CASE("identity triplets act as the identity map") {
    const int n = 13;
    TripletList t(n, n);
    for (int i = 0; i < n; ++i) t.add(i, i, 1.0);
    SparseMatrix m = assemble(t);
    Vector x = Vector::Random(n);
    CHECK((m.multiply(x) - x).norm() <= 1e-15);
}

TEST_CASE("out-of-range triplet index is rejected") {
    TripletList t(2, 2);
    CHECK_THROWS_AS(t.add(2, 0, 1.0), InputError);
    CHECK_THROWS_AS(t.add(0, -1, 1.0), InputError);
}

TEST_CASE("1D Laplacian n=4 has smallest eigenvalue 2 - 2 cos(pi/5)") {
    SparseMatrix A = laplacian_1d(4);
    // inverse power iteration with the module's own direct solver
    Vector x = Vector::Ones(4);
    for (int it = 0; it < 200; ++it) {
        x = solve(A, x);
        x /= x.norm();
    }
    const double lambda = x.dot(A.multiply(x));
    CHECK(lambda == doctest::Approx(2.0 - 2.0 * std::cos(M_PI / 5.0)).epsilon(1e-10));
    CHECK(lambda == doctest::Approx(0.3819660112501051).epsilon(1e-10));
}

TEST_CASE("identity solve returns the rhs") {
    TripletList t(3, 3);
    for (int i = 0; i < 3; ++i) t.add(i, i, 1.0);
    Vector e1 = Vector::Zero(3);
    e1[0] = 1.0;
    CHECK((solve(assemble(t), e1) - e1).norm() <= 1e-14);
}

TEST_CASE("iterative methods recover a manufactured solution") {
    SparseMatrix A = laplacian_1d(50);
    std::mt19937 rng(3);
    std::normal_distribution<double> dist;
    Vector xstar(50);
    for (auto& v : xstar) v = dist(rng);
    Vector b = A.multiply(xstar);

    for (auto method : {SolveMethod::GMRES, SolveMethod::BiCGStab}) {
        for (auto pc : {Preconditioner::None, Preconditioner::Jacobi, Preconditioner::ILU0}) {
            LinearSolverConfig cfg;
            cfg.method = method;
            cfg.preconditioner = pc;
            cfg.rel_tolerance = 1e-12;
            Vector x = solve(A, b, cfg);
            CHECK((x - xstar).norm() / xstar.norm() <= 1e-8);
        }
    }
}

TEST_CASE("solve verifies the residual contract by recomputation") {
    SparseMatrix A = laplacian_1d(30);
    Vector b = Vector::Ones(30);
    LinearSolverConfig cfg;
    cfg.method = SolveMethod::GMRES;
    cfg.rel_tolerance = 1e-11;
    Vector x = solve(A, b, cfg);
    CHECK((b - A.multiply(x)).norm() <= 1e-11 * b.norm());
}

TEST_CASE("iteration cap produces an error carrying the residual") {
    SparseMatrix A = laplacian_1d(200);
    Vector b = Vector::Ones(200);
    LinearSolverConfig cfg;
    cfg.method = SolveMethod::BiCGStab;
    cfg.rel_tolerance = 1e-14;
    cfg.max_iterations = 1;
    CHECK_THROWS_WITH_AS(solve(A, b, cfg), doctest::Contains("residual"), SolverError);
}

TEST_CASE("singular matrix names the empty row") {
    TripletList t(3, 3);
    t.add(0, 0, 1.0);
    t.add(2, 2, 1.0);  // row 1 left empty
    Vector b = Vector::Ones(3);
    CHECK_THROWS_WITH_AS(solve(assemble(t), b), doctest::Contains("row 1"), SolverError);
}

TEST_CASE("MatrixMarket dump round-trips through a naive parse") {
    TripletList t(2, 3);
    t.add(0, 1, 2.5);
    t.add(1, 2, -4.0);
    SparseMatrix m = assemble(t);
    const std::string path = "mm_dump_test.mtx";
    m.write_matrix_market(path);
    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f != nullptr);
    char header[128];
    REQUIRE(std::fgets(header, sizeof header, f) != nullptr);
    CHECK(std::string(header).find("MatrixMarket") != std::string::npos);
    int rows, cols, nnz;
    REQUIRE(std::fscanf(f, "%d %d %d", &rows, &cols, &nnz) == 3);
    CHECK(rows == 2);
    CHECK(cols == 3);
    CHECK(nnz == 2);
    int r, c;
    double v;
    REQUIRE(std::fscanf(f, "%d %d %lf", &r, &c, &v) == 3);
    CHECK(r == 1);
    CHECK(c == 2);
    CHECK(v == 2.5);
    std::fclose(f);
    std::remove(path.c_str());
}

TEST_CASE("saddle-point block system solved by direct LU to 1e-10 relative") {
    // [A B^T; B 0] with A the SPD 1D Laplacian and B a difference operator
    const int n = 40, m = 10;
    TripletList t(n + m, n + m);
    for (int i = 0; i < n; ++i) {
        t.add(i, i, 2.0);
        if (i > 0) t.add(i, i - 1, -1.0);
        if (i + 1 < n) t.add(i, i + 1, -1.0);
    }
    for (int j = 0; j < m; ++j) {
        const int a = 4 * j, b = 4 * j + 2;
        t.add(n + j, a, 1.0);
        t.add(n + j, b, -1.0);
        t.add(a, n + j, 1.0);
        t.add(b, n + j, -1.0);
    }
    SparseMatrix A = assemble(t);
    std::mt19937 rng(9);
    std::normal_distribution<double> dist;
    Vector b(n + m);
    for (int i = 0; i < b.size(); ++i) b[i] = dist(rng);
    Vector x = solve(A, b);  // direct LU default
    CHECK((b - A.multiply(x)).norm() <= 1e-10 * b.norm());
}
