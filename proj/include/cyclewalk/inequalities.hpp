// inequalities.hpp
// Numerical verification of the analytic toolkit: harmonic extension on
// sup-norm boxes, the nonsymmetric energy estimate with constant 5/2, weighted
// Sobolev / local Poincare ratios, the De Giorgi level-set iteration and the
// maximal inequality pipeline, plus weak-sector and H_{-1} sweeps.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cyclewalk/corrector.hpp"
#include "cyclewalk/environment.hpp"
#include "cyclewalk/rng.hpp"

namespace cyclewalk {

// Sup-norm box with the linear cutoff eta: 1 on B(sigma'*n), 0 on and outside
// the boundary layer of B(sigma*n), linear in the sup-norm radius between.
struct BoxProblem {
    std::vector<std::int64_t> center;  // torus coordinates
    std::int64_t n = 0;                // scale
    double sigma = 1.0;
    double sigma_prime = 0.5;

    std::int64_t outer_radius() const;  // floor(sigma * n)
    std::int64_t inner_radius() const;  // floor(sigma_prime * n)
    double eta(const std::vector<std::int64_t>& offset) const;
    double grad_eta_sup() const;  // 1 / (outer_radius - inner_radius)
};

// Validates 1/2 <= sigma' < sigma <= 1 and 2*outer+1 <= L; relaxed_inner
// allows sigma' below 1/2 (used by standalone cutoff checks).
void validate_box(const EnvironmentTorus& env, const BoxProblem& box, bool relaxed_inner = false);

struct InequalityResult {
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    double constant_used = 0.0;
    double ratio = 0.0;  // lhs / rhs (0 when rhs = 0)
    bool pass = true;    // lhs <= rhs * (1 + 1e-9)   (+ tiny absolute slack)
    std::int64_t witness_site = -1;
};

InequalityResult make_inequality_result(const std::string& name, double lhs, double rhs,
                                        double constant_used, double abs_slack = 0.0);

// ||u||_{p,B}: normalized p-th moment over the box; p = inf -> max.
double space_avg_norm(const std::vector<double>& values, double p);

// u on all box offsets (lexicographic box_offsets order), boundary layer kept
// at g, interior solved to L u = 0 with residual sup-norm <= tol * max(1,|g|).
struct HarmonicField {
    BoxProblem box;
    std::vector<double> u;  // over box_offsets(d, outer_radius)
    double residual_inf = 0.0;
};
HarmonicField dirichlet_harmonic(const EnvironmentTorus& env, const BoxProblem& box,
                                 const std::vector<double>& g, double tol = 1e-10);

// Embed a box field into a torus-sized field (zero off the box).
std::vector<double> embed_box_field(const EnvironmentTorus& env, const BoxProblem& box,
                                    const std::vector<double>& values);

// Cycle Dirichlet form E_Gamma(f) = sum_cycles w * sum_edges f(x)(f(x)-f(y))
// over every translate of every catalog shape.
double cycle_dirichlet_form(const EnvironmentTorus& env, const std::vector<double>& f);

// E_Gamma(eta*u)/|B| <= (5/2) ||mu^(2)||_{p,B} ||grad eta||_inf^2 ||u^2||_{p*,B}
InequalityResult energy_estimate_check(const EnvironmentTorus& env, const HarmonicField& hf,
                                       double p);

// Ratio of the weighted Sobolev inequality on B(center, radius) for a field
// supported there; pass gate compares against c_gate (default: report only).
InequalityResult weighted_sobolev_check(const EnvironmentTorus& env,
                                        const std::vector<std::int64_t>& center,
                                        std::int64_t radius, const std::vector<double>& u,
                                        double q, double c_gate = 0.0);

InequalityResult local_poincare_check(const EnvironmentTorus& env,
                                      const std::vector<std::int64_t>& center,
                                      std::int64_t radius, const std::vector<double>& u,
                                      double q, double c_gate = 0.0);

struct LatticeConstantsRow {
    std::int64_t n = 0;
    double volume = 0.0;        // |B(n)| = (2n+1)^d
    double volume_ratio = 0.0;  // |B(n)| / n^d
    double sobolev_best = 0.0;  // max ratio over trials (lower bound on C_S1)
    double poincare_best = 0.0; // max ratio over trials (lower bound on C_P)
};
std::vector<LatticeConstantsRow> lattice_inequality_constants(int d,
                                                              const std::vector<std::int64_t>& n_list,
                                                              int trials, std::uint64_t seed);

// K = f0^{(gamma-1)/beta} C^{1/beta} 2^{(alpha+beta)/(gamma-1)+1} (sigma-sigma')^{-alpha/beta}
double de_giorgi_iterate(double f0, double C, double alpha, double beta, double gamma,
                         double sigma, double sigma_prime);

struct MaximalConstants {
    double c2 = 0.0;    // norm-comparison constant (calibrated)
    double c_ws = 0.0;  // weighted Sobolev constant (calibrated)
};

struct MaximalInequalityResult {
    InequalityResult main;   // ||u||_{inf,B(s'n)} vs C_Max (...)^kappa ||u||_{2p*,B(sn)}
    bool recursion_ok = true;      // level-set recursion on the dyadic grid
    bool superlevel_empty = true;  // no |u| > K inside B(s'n)
    double K = 0.0;
    double kappa = 0.0, gamma = 0.0, delta = 0.0, delta_star = 0.0;
    double c1 = 0.0, c_max = 0.0, moment_product = 0.0;
};
MaximalInequalityResult maximal_inequality_check(const EnvironmentTorus& env,
                                                 const HarmonicField& hf, double p, double q,
                                                 const MaximalConstants& constants);

// i.i.d. standard normal site field, smoothed by `smoothing` applications of
// the symmetrized transition operator.
std::vector<double> random_site_field(const EnvironmentTorus& env, RngStream& rng, int smoothing);

// Empirical norm-comparison constant for the cutoff geometry: max over trial
// fields v of ||v^2||_{p*,B(s'n)} / ||(eta v)^2||_{p*,B(sn)}; the indicator of
// the inner box is always part of the trial set (it attains the volume ratio).
double calibrate_c2(int d, const BoxProblem& box, double p, int trials, std::uint64_t seed);

// Empirical weighted Sobolev constant: max ratio over random supported fields
// plus any caller-supplied (radius, field) pairs.
double calibrate_c_ws(const EnvironmentTorus& env, const std::vector<std::int64_t>& center,
                      std::int64_t radius, double q, int trials, std::uint64_t seed,
                      const std::vector<std::pair<std::int64_t, std::vector<double>>>& extra = {});

// |E(xi,phi)| <= 2 ||xi||_{L2(mu)} ||phi||_{L2(mu)} over random bounded pairs.
InequalityResult weak_sector_check(const EnvironmentTorus& env, int trials, std::uint64_t seed);

// |<xi, V^i>| <= sqrt(2) alpha ||D xi||_cov over random fields, every axis.
InequalityResult h_minus_one_check(const EnvironmentTorus& env, int trials, std::uint64_t seed);

}  // namespace cyclewalk
