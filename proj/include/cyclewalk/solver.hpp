// solver.hpp
// Jacobi-preconditioned BiCGStab for the nonsymmetric stencil systems, with a
// damped Jacobi fixed-point fallback on breakdown. Convergence is judged on
// the sup-norm of the true residual.

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cyclewalk {

struct SolverFailure : std::runtime_error {
    double best_residual;
    SolverFailure(const std::string& m, double r) : std::runtime_error(m), best_residual(r) {}
};

// y = A x
using ApplyFn = std::function<void(const double* x, double* y)>;

struct SolveOptions {
    double tol = 1e-10;       // relative: ||b - Ax||_inf <= tol * max(1, ||b||_inf)
    double tol_abs = -1.0;    // when >= 0, overrides the relative target
    std::int64_t max_iter = 200000;
    bool throw_on_failure = true;
};

struct SolveResult {
    std::int64_t iterations = 0;
    double residual_inf = 0.0;
    bool converged = false;
    int restarts = 0;
    bool used_fallback = false;
};

// Solve A x = b with diag = diag(A) used as the Jacobi preconditioner.
// x carries the initial guess on entry and the solution on exit.
SolveResult bicgstab_jacobi(const ApplyFn& apply, const std::vector<double>& diag,
                            const std::vector<double>& b, std::vector<double>& x,
                            const SolveOptions& opts = {});

}  // namespace cyclewalk
