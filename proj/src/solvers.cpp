#include "menisim/solvers.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <sstream>

#include "menisim/common.hpp"

namespace menisim {

namespace {

using EigenSparse = Eigen::SparseMatrix<double>;

EigenSparse to_eigen(const SparseMatrix& A) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonzeros());
    for (int r = 0; r < A.rows(); ++r)
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k)
            trip.emplace_back(r, A.col_indices()[k], A.values()[k]);
    EigenSparse m(A.rows(), A.cols());
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

void check_square(const SparseMatrix& A, const Vector& rhs) {
    require(A.rows() == A.cols(), "solve: matrix must be square");
    require(rhs.size() == A.rows(), "solve: rhs dimension mismatch");
    for (int r = 0; r < A.rows(); ++r) {
        if (A.row_offsets()[r] == A.row_offsets()[r + 1])
            throw SolverError("singular matrix: row " + std::to_string(r) + " is empty");
    }
}

template <class Solver>
Vector run_iterative(Solver& solver, const EigenSparse& A, const Vector& rhs,
                     const LinearSolverConfig& cfg, const char* name) {
    solver.setTolerance(cfg.rel_tolerance);
    solver.setMaxIterations(cfg.max_iterations);
    solver.compute(A);
    Vector x = solver.solve(rhs);
    const double res = (rhs - A * x).norm();
    const double bound = cfg.rel_tolerance * std::max(rhs.norm(), 1e-300);
    if (solver.info() != Eigen::Success || res > bound) {
        std::ostringstream msg;
        msg << name << " failed to converge: " << solver.iterations()
            << " iterations, final residual " << res << " (required " << bound << ")";
        throw SolverError(msg.str());
    }
    return x;
}

template <template <class, class> class Method>
Vector dispatch_precond(const EigenSparse& A, const Vector& rhs, const LinearSolverConfig& cfg,
                        const char* name) {
    switch (cfg.preconditioner) {
        case Preconditioner::None: {
            Method<EigenSparse, Eigen::IdentityPreconditioner> s;
            return run_iterative(s, A, rhs, cfg, name);
        }
        case Preconditioner::Jacobi: {
            Method<EigenSparse, Eigen::DiagonalPreconditioner<double>> s;
            return run_iterative(s, A, rhs, cfg, name);
        }
        case Preconditioner::ILU0: {
            // Zero-extra-fill incomplete LU (Eigen's ILUT with fill capped at
            // the original pattern density).
            Method<EigenSparse, Eigen::IncompleteLUT<double>> s;
            s.preconditioner().setDroptol(1e-12);
            s.preconditioner().setFillfactor(1);
            return run_iterative(s, A, rhs, cfg, name);
        }
    }
    throw SolverError("unknown preconditioner");
}

} // namespace

struct DirectSolver::Impl {
    Eigen::SparseLU<EigenSparse> lu;
    EigenSparse matrix;
    bool ready = false;
};

DirectSolver::DirectSolver() : impl_(new Impl) {}
DirectSolver::~DirectSolver() { delete impl_; }
DirectSolver::DirectSolver(DirectSolver&& o) noexcept : impl_(o.impl_) { o.impl_ = nullptr; }
DirectSolver& DirectSolver::operator=(DirectSolver&& o) noexcept {
    std::swap(impl_, o.impl_);
    return *this;
}

void DirectSolver::factorize(const SparseMatrix& A) {
    require(A.rows() == A.cols(), "factorize: matrix must be square");
    for (int r = 0; r < A.rows(); ++r) {
        if (A.row_offsets()[r] == A.row_offsets()[r + 1])
            throw SolverError("singular matrix: row " + std::to_string(r) + " is empty");
    }
    impl_->matrix = to_eigen(A);
    impl_->lu.compute(impl_->matrix);
    if (impl_->lu.info() != Eigen::Success)
        throw SolverError("LU factorization failed: " + impl_->lu.lastErrorMessage());
    impl_->ready = true;
}

bool DirectSolver::factorized() const { return impl_ && impl_->ready; }

Vector DirectSolver::solve(const Vector& rhs) const {
    require(impl_ && impl_->ready, "DirectSolver::solve called before factorize");
    Vector x = impl_->lu.solve(rhs);
    // Backward-error guard; catches silently bad factorizations.
    const double scale = rhs.norm() + impl_->matrix.norm() * x.norm() + 1e-300;
    const double res = (rhs - impl_->matrix * x).norm();
    if (!x.allFinite() || res > 1e-8 * scale)
        throw SolverError("direct solve inaccurate: backward error " + std::to_string(res / scale));
    return x;
}

Vector solve(const SparseMatrix& A, const Vector& rhs, const LinearSolverConfig& config) {
    check_square(A, rhs);
    require(config.rel_tolerance > 0.0, "solver tolerance must be positive");
    switch (config.method) {
        case SolveMethod::DirectLU: {
            DirectSolver lu;
            lu.factorize(A);
            return lu.solve(rhs);
        }
        case SolveMethod::GMRES:
            return dispatch_precond<Eigen::GMRES>(to_eigen(A), rhs, config, "GMRES");
        case SolveMethod::BiCGStab:
            return dispatch_precond<Eigen::BiCGSTAB>(to_eigen(A), rhs, config, "BiCGStab");
    }
    throw SolverError("unknown solve method");
}

} // namespace menisim
