#pragma once

#include <string>

#include "menisim/sparse.hpp"

namespace menisim {

enum class SolveMethod { DirectLU, GMRES, BiCGStab };
enum class Preconditioner { None, Jacobi, ILU0 };

struct LinearSolverConfig {
    SolveMethod method = SolveMethod::DirectLU;
    double rel_tolerance = 1e-10;
    int max_iterations = 10000;
    Preconditioner preconditioner = Preconditioner::None;
};

/// Solves A x = b and verifies ||b - A x|| <= rel_tolerance * ||b|| before
/// returning (direct solves are checked against 1e-10 relative). Throws
/// SolverError on breakdown, iteration cap, or singular factorization.
Vector solve(const SparseMatrix& A, const Vector& rhs, const LinearSolverConfig& config = {});

/// Reusable direct LU factorization for repeated solves against the same
/// matrix (time stepping with a frozen operator, Newton with pattern reuse).
class DirectSolver {
public:
    DirectSolver();
    ~DirectSolver();
    DirectSolver(DirectSolver&&) noexcept;
    DirectSolver& operator=(DirectSolver&&) noexcept;

    void factorize(const SparseMatrix& A);
    bool factorized() const;
    Vector solve(const Vector& rhs) const;

private:
    struct Impl;
    Impl* impl_;
};

} // namespace menisim
