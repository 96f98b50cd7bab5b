// corrector.hpp
// The regularized nonsymmetric Poisson solve on the torus,
//     (-L + lambda*mu) phi^i = -V^i,
// the corrector chi^i(x) = phi^i(x) - phi^i(0), harmonic coordinates
// Phi^i = x^i - chi^i, the covariance machinery around ||.||_cov, and
// sublinearity diagnostics.

#pragma once

#include <cstdint>
#include <vector>

#include "cyclewalk/environment.hpp"
#include "cyclewalk/solver.hpp"

namespace cyclewalk {

// A per-edge field Psi(x, z), direction-major like the rate tables.
using EdgeField = std::vector<std::vector<double>>;

struct CorrectorSolution {
    double lambda = 0.0;
    std::vector<std::vector<double>> phi;  // per-axis potentials (gauge-free solve)
    std::vector<std::vector<double>> chi;  // chi^i(x) = phi^i(x) - phi^i(0)

    std::vector<double> dphi_cov_norm;      // ||D phi^i||_cov
    std::vector<double> phi_l2mu_norm;      // ||phi^i||_{L2(mu)}
    std::vector<double> solver_residual;    // sup-norm of (-L+lambda*mu)phi^i + V^i
    std::vector<std::int64_t> iterations;
    double alpha = 0.0;

    // filled by harmonic_coordinates / effective_covariance
    std::vector<std::vector<double>> harmonic_residual;  // (L Phi^i)(x)
    std::vector<double> harmonic_residual_inf;
    std::vector<double> sigma2;       // d x d, row-major, symmetrized
    std::vector<double> sigma2_eigs;  // ascending

    int dim() const { return int(phi.size()); }
};

// alpha = max_i sqrt( (1/L^d) sum_bases sum_shapes w(base) * sum_{v in shape} (v^i)^2 )
double compute_alpha(const EnvironmentTorus& env);

// A = -L + lambda*mu as a stencil operator plus its diagonal.
ApplyFn torus_operator(const EnvironmentTorus& env, double lambda, std::vector<double>& diag);

// (1/N) sum_x xi(x) * (-L phi)(x)
double dirichlet_pairing(const EnvironmentTorus& env, const std::vector<double>& xi,
                         const std::vector<double>& phi);

// sqrt( (1/N) sum_x mu(x) f(x)^2 )
double l2mu_norm(const EnvironmentTorus& env, const std::vector<double>& f);

// D f as an edge field: (Df)(x, z) = f(x+z) - f(x)
EdgeField increment_field(const EnvironmentTorus& env, const std::vector<double>& f);

struct CovNormForms {
    double edge = 0.0;   // sqrt( (1/2N) sum_{x,z} c_s(x,x+z) Psi(x,z)^2 )
    double cycle = 0.0;  // sqrt( (1/2N) sum_shapes sum_bases w sum_edges Psi^2 )
};
CovNormForms cov_norm_forms(const EnvironmentTorus& env, const EdgeField& psi);

// Edge form; when require_cocycle is set the two forms must agree to 1e-10
// (relative, on the squares) or a NumericFailure is thrown.
double cov_norm(const EnvironmentTorus& env, const EdgeField& psi, bool require_cocycle = false);

// ||D f||_cov for a site field (edge form, no field materialization)
double cov_norm_of_gradient(const EnvironmentTorus& env, const std::vector<double>& f);

// Solve the regularized equation for each coordinate; fills phi/chi and the
// norm diagnostics. Gauge note: phi is the exact solution of the invertible
// system (norm bounds apply to it); the base-point-zeroed object is chi.
CorrectorSolution solve_regularized_poisson(const EnvironmentTorus& env, double lambda,
                                            double tol = 1e-10, std::int64_t max_iter = 200000);

struct ContinuationStep {
    CorrectorSolution solution;
    bool dphi_bound_ok = false;   // ||D phi||_cov <= sqrt(2)*alpha + 1e-9
    bool l2mu_bound_ok = false;   // lambda*||phi|| <= sqrt(2*lambda)*alpha + 1e-9
    double cauchy_from_prev = 0.0;  // max_i ||D phi_prev^i - D phi^i||_cov
};

// Solve along a strictly decreasing schedule, warm-starting each lambda.
std::vector<ContinuationStep> lambda_continuation(const EnvironmentTorus& env,
                                                  const std::vector<double>& schedule,
                                                  double tol = 1e-10,
                                                  std::int64_t max_iter = 200000);

// chi evaluated at an arbitrary lattice point (periodic phi lookup minus base point)
double corrector_value(const EnvironmentTorus& env, const CorrectorSolution& sol, int axis,
                       const std::vector<std::int64_t>& x);

// Fill harmonic_residual with (L Phi^i)(x) = V^i(x) - (L chi^i)(x).
void harmonic_coordinates(const EnvironmentTorus& env, CorrectorSolution& sol);

// Sigma^2_{ij} = (1/N) sum_{x,z} c_s(x,x+z) Phihat^i(x,z) Phihat^j(x,z),
// Phihat^i(x,z) = z^i - (phi^i(x+z) - phi^i(x)); symmetrized, eigenvalues filled.
std::vector<double> effective_covariance(const EnvironmentTorus& env, CorrectorSolution& sol);

// rho(d, q) = d / (d - 2 + d/q); q may be +infinity when d > 2.
double rho_exponent(int d, double q);

struct SublinearityRow {
    std::int64_t n = 0;
    double s_inf = 0.0;   // max_i max_{|x|<=n} |chi^i(x)| / n
    double s_2rho = 0.0;  // max_i (avg_{B(n)} |chi^i|^{2 rho})^{1/(2 rho)} / n
};
std::vector<SublinearityRow> sublinearity_profile(const EnvironmentTorus& env,
                                                  const CorrectorSolution& sol,
                                                  const std::vector<std::int64_t>& n_grid,
                                                  double q);

// Convenience: solve + harmonic coordinates + covariance at one lambda.
CorrectorSolution solve_corrector(const EnvironmentTorus& env, double lambda,
                                  double tol = 1e-10, std::int64_t max_iter = 200000);

}  // namespace cyclewalk
