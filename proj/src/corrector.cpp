#include "cyclewalk/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyclewalk/kernels.hpp"
#include "cyclewalk/stats.hpp"

namespace cyclewalk {

double compute_alpha(const EnvironmentTorus& env) {
    const int d = env.dim();
    const double n = double(env.sites());
    double alpha2 = 0.0;
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
            const CycleShape& sh = env.catalog.shapes[s];
            double vert_sq = 0.0;
            for (int j = 0; j < sh.length(); ++j) {
                double v = double(sh.vertex(j, i));
                vert_sq += v * v;
            }
            if (vert_sq == 0.0) continue;
            acc += vert_sq * kern::sum(env.weights[s].data(), env.weights[s].size());
        }
        alpha2 = std::max(alpha2, acc / n);
    }
    return std::sqrt(alpha2);
}

ApplyFn torus_operator(const EnvironmentTorus& env, double lambda, std::vector<double>& diag) {
    const std::int64_t n = env.sites();
    diag.resize(n);
    for (std::int64_t i = 0; i < n; ++i) diag[i] = env.out_rate[i] + lambda * env.mu[i];
    const int nd = env.ndirs();
    std::vector<const double*> cdir(nd);
    std::vector<const std::int64_t*> nbr(nd);
    for (int k = 0; k < nd; ++k) {
        cdir[k] = env.rate[k].data();
        nbr[k] = env.geom.neighbor_table(k);
    }
    const double* dg = diag.data();
    return [n, nd, dg, cdir, nbr](const double* x, double* y) {
        kern::stencil_apply(std::size_t(n), nd, dg, cdir.data(), nbr.data(), x, y);
    };
}

double dirichlet_pairing(const EnvironmentTorus& env, const std::vector<double>& xi,
                         const std::vector<double>& phi) {
    const std::int64_t n = env.sites();
    std::vector<double> diag;
    ApplyFn apply = torus_operator(env, 0.0, diag);
    std::vector<double> y(n);
    apply(phi.data(), y.data());  // y = -L phi
    return kern::dot(xi.data(), y.data(), n) / double(n);
}

double l2mu_norm(const EnvironmentTorus& env, const std::vector<double>& f) {
    return std::sqrt(kern::weighted_sq_sum(env.mu.data(), f.data(), f.size()) / double(env.sites()));
}

EdgeField increment_field(const EnvironmentTorus& env, const std::vector<double>& f) {
    const std::int64_t n = env.sites();
    const int nd = env.ndirs();
    EdgeField out(nd, std::vector<double>(n));
    for (int k = 0; k < nd; ++k) {
        const std::int64_t* nb = env.geom.neighbor_table(k);
        for (std::int64_t i = 0; i < n; ++i) out[k][i] = f[nb[i]] - f[i];
    }
    return out;
}

CovNormForms cov_norm_forms(const EnvironmentTorus& env, const EdgeField& psi) {
    const std::int64_t n = env.sites();
    const int nd = env.ndirs();
    const int d = env.dim();
    CovNormForms out;

    double edge2 = 0.0;
    for (int k = 0; k < nd; ++k)
        edge2 += kern::weighted_dot(env.rate_sym[k].data(), psi[k].data(), psi[k].data(), n);
    out.edge = std::sqrt(0.5 * edge2 / double(n));

    // cycle form: sum over (shape, base, edge) of w(base) Psi(base + tail, dir)^2
    double cyc2 = 0.0;
    std::vector<std::int64_t> tail(d);
    for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
        const CycleShape& sh = env.catalog.shapes[s];
        const double* w = env.weights[s].data();
        for (int j = 0; j < sh.length(); ++j) {
            for (int a = 0; a < d; ++a) tail[a] = -sh.vertex(j, a);
            const double* pk = psi[sh.step_dirs()[j]].data();
            double acc = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                double p = pk[i];
                acc += w[env.geom.shifted(i, tail)] * p * p;
            }
            cyc2 += acc;
        }
    }
    out.cycle = std::sqrt(0.5 * cyc2 / double(n));
    return out;
}

double cov_norm(const EnvironmentTorus& env, const EdgeField& psi, bool require_cocycle) {
    CovNormForms f = cov_norm_forms(env, psi);
    if (require_cocycle) {
        double e2 = f.edge * f.edge, c2 = f.cycle * f.cycle;
        if (std::fabs(e2 - c2) > 1e-10 * std::max({e2, c2, 1e-30}))
            throw NumericFailure("cov norm: edge and cycle forms disagree on a cocycle field");
    }
    return f.edge;
}

double cov_norm_of_gradient(const EnvironmentTorus& env, const std::vector<double>& f) {
    const std::int64_t n = env.sites();
    double acc = 0.0;
    for (int k = 0; k < env.ndirs(); ++k)
        acc += kern::gather_diff_sq(env.rate_sym[k].data(), f.data(), env.geom.neighbor_table(k), n);
    return std::sqrt(0.5 * acc / double(n));
}

static void fill_norms(const EnvironmentTorus& env, CorrectorSolution& sol) {
    const int d = env.dim();
    sol.dphi_cov_norm.resize(d);
    sol.phi_l2mu_norm.resize(d);
    sol.chi.assign(d, {});
    for (int i = 0; i < d; ++i) {
        sol.dphi_cov_norm[i] = cov_norm_of_gradient(env, sol.phi[i]);
        sol.phi_l2mu_norm[i] = l2mu_norm(env, sol.phi[i]);
        sol.chi[i] = sol.phi[i];
        const double base = sol.phi[i][0];
        for (double& v : sol.chi[i]) v -= base;
    }
}

CorrectorSolution solve_regularized_poisson(const EnvironmentTorus& env, double lambda,
                                            double tol, std::int64_t max_iter) {
    if (!(lambda > 0.0)) throw InvalidInput("regularization parameter must be > 0");
    if (!env.assembled()) throw InvalidInput("environment not assembled");
    if (env.min_cs() <= 0.0) throw InvalidInput("environment is not elliptic (some c_s vanishes)");

    const std::int64_t n = env.sites();
    const int d = env.dim();
    CorrectorSolution sol;
    sol.lambda = lambda;
    sol.alpha = compute_alpha(env);
    sol.phi.assign(d, std::vector<double>(n, 0.0));
    sol.solver_residual.resize(d);
    sol.iterations.resize(d);

    std::vector<double> diag;
    ApplyFn apply = torus_operator(env, lambda, diag);
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;

    for (int i = 0; i < d; ++i) {
        std::vector<double> b(n);
        for (std::int64_t x = 0; x < n; ++x) b[x] = -env.drift[i][x];
        SolveResult r = bicgstab_jacobi(apply, diag, b, sol.phi[i], opts);
        sol.solver_residual[i] = r.residual_inf;
        sol.iterations[i] = r.iterations;
    }
    fill_norms(env, sol);
    return sol;
}

std::vector<ContinuationStep> lambda_continuation(const EnvironmentTorus& env,
                                                  const std::vector<double>& schedule,
                                                  double tol, std::int64_t max_iter) {
    if (schedule.empty()) throw InvalidInput("lambda schedule is empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 0.0)) throw InvalidInput("lambda schedule must be positive");
        if (i > 0 && !(schedule[i] < schedule[i - 1]))
            throw InvalidInput("lambda schedule must be strictly decreasing");
    }
    if (env.min_cs() <= 0.0) throw InvalidInput("environment is not elliptic (some c_s vanishes)");

    const std::int64_t n = env.sites();
    const int d = env.dim();
    const double alpha = compute_alpha(env);

    std::vector<ContinuationStep> out;
    out.reserve(schedule.size());
    std::vector<std::vector<double>> warm(d, std::vector<double>(n, 0.0));

    for (double lambda : schedule) {
        ContinuationStep step;
        CorrectorSolution& sol = step.solution;
        sol.lambda = lambda;
        sol.alpha = alpha;
        sol.phi = warm;  // warm start
        sol.solver_residual.resize(d);
        sol.iterations.resize(d);

        std::vector<double> diag;
        ApplyFn apply = torus_operator(env, lambda, diag);
        SolveOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        for (int i = 0; i < d; ++i) {
            std::vector<double> b(n);
            for (std::int64_t x = 0; x < n; ++x) b[x] = -env.drift[i][x];
            SolveResult r = bicgstab_jacobi(apply, diag, b, sol.phi[i], opts);
            sol.solver_residual[i] = r.residual_inf;
            sol.iterations[i] = r.iterations;
        }
        fill_norms(env, sol);

        step.dphi_bound_ok = true;
        step.l2mu_bound_ok = true;
        for (int i = 0; i < d; ++i) {
            if (!(sol.dphi_cov_norm[i] <= std::sqrt(2.0) * alpha + 1e-9)) step.dphi_bound_ok = false;
            if (!(lambda * sol.phi_l2mu_norm[i] <= std::sqrt(2.0 * lambda) * alpha + 1e-9))
                step.l2mu_bound_ok = false;
        }
        if (!out.empty()) {
            double worst = 0.0;
            std::vector<double> diff(n);
            for (int i = 0; i < d; ++i) {
                const auto& prev = out.back().solution.phi[i];
                for (std::int64_t x = 0; x < n; ++x) diff[x] = prev[x] - sol.phi[i][x];
                worst = std::max(worst, cov_norm_of_gradient(env, diff));
            }
            step.cauchy_from_prev = worst;
        }
        warm = sol.phi;
        out.push_back(std::move(step));
    }
    return out;
}

double corrector_value(const EnvironmentTorus& env, const CorrectorSolution& sol, int axis,
                       const std::vector<std::int64_t>& x) {
    return sol.phi[axis][env.geom.wrap_index(x)] - sol.phi[axis][0];
}

void harmonic_coordinates(const EnvironmentTorus& env, CorrectorSolution& sol) {
    const std::int64_t n = env.sites();
    const int d = env.dim();
    sol.harmonic_residual.assign(d, std::vector<double>(n));
    sol.harmonic_residual_inf.assign(d, 0.0);
    for (int i = 0; i < d; ++i) {
        // (L Phi^i)(x) = V^i(x) - (L chi^i)(x), chi periodic, displacement exact
        const auto& chi = sol.chi[i];
        for (std::int64_t x = 0; x < n; ++x) {
            double lchi = 0.0;
            for (int k = 0; k < env.ndirs(); ++k)
                lchi += env.rate[k][x] * (chi[env.geom.neighbor(x, k)] - chi[x]);
            sol.harmonic_residual[i][x] = env.drift[i][x] - lchi;
        }
        sol.harmonic_residual_inf[i] = kern::max_abs(sol.harmonic_residual[i].data(), n);
    }
}

std::vector<double> effective_covariance(const EnvironmentTorus& env, CorrectorSolution& sol) {
    const std::int64_t n = env.sites();
    const int d = env.dim();
    const int nd = env.ndirs();
    std::vector<double> sigma(std::size_t(d) * d, 0.0);
    std::vector<double> hat_i(n), hat_j(n);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < nd; ++k) {
                const std::int64_t* nb = env.geom.neighbor_table(k);
                const double zi = (dir_axis(k) == i) ? double(dir_sign(k)) : 0.0;
                const double zj = (dir_axis(k) == j) ? double(dir_sign(k)) : 0.0;
                const double* pi = sol.phi[i].data();
                const double* pj = sol.phi[j].data();
                for (std::int64_t x = 0; x < n; ++x) {
                    hat_i[x] = zi - (pi[nb[x]] - pi[x]);
                    hat_j[x] = zj - (pj[nb[x]] - pj[x]);
                }
                acc += kern::weighted_dot(env.rate_sym[k].data(), hat_i.data(), hat_j.data(), n);
            }
            acc /= double(n);
            sigma[std::size_t(i) * d + j] = acc;
            sigma[std::size_t(j) * d + i] = acc;
        }
    }
    for (double v : sigma)
        if (!std::isfinite(v)) throw NumericFailure("effective covariance has non-finite entries");
    sol.sigma2 = sigma;
    sol.sigma2_eigs = symmetric_eigenvalues(sigma, d);
    return sigma;
}

double rho_exponent(int d, double q) {
    if (d < 1) throw InvalidInput("rho exponent: d must be >= 1");
    double denom;
    if (std::isinf(q)) {
        if (d <= 2) throw InvalidInput("rho exponent: q = inf needs d > 2");
        denom = double(d - 2);
    } else {
        if (!(q >= 1.0)) throw InvalidInput("rho exponent: q must be >= 1");
        denom = double(d - 2) + double(d) / q;
    }
    if (!(denom > 0.0)) throw InvalidInput("rho exponent: d - 2 + d/q must be > 0");
    return double(d) / denom;
}

std::vector<SublinearityRow> sublinearity_profile(const EnvironmentTorus& env,
                                                  const CorrectorSolution& sol,
                                                  const std::vector<std::int64_t>& n_grid,
                                                  double q) {
    const int d = env.dim();
    const double rho = rho_exponent(d, q);
    std::vector<SublinearityRow> rows;
    for (std::int64_t n : n_grid) {
        if (n < 1 || 2 * n > env.side())
            throw InvalidGeometry("sublinearity box exceeds half the torus");
        SublinearityRow row;
        row.n = n;
        auto offsets = box_offsets(d, n);
        for (int i = 0; i < d; ++i) {
            double mx = 0.0, pw = 0.0;
            for (const auto& off : offsets) {
                double v = std::fabs(sol.chi[i][env.geom.wrap_index(off)]);
                mx = std::max(mx, v);
                pw += std::pow(v, 2.0 * rho);
            }
            pw = std::pow(pw / double(offsets.size()), 1.0 / (2.0 * rho));
            row.s_inf = std::max(row.s_inf, mx / double(n));
            row.s_2rho = std::max(row.s_2rho, pw / double(n));
        }
        rows.push_back(row);
    }
    return rows;
}

CorrectorSolution solve_corrector(const EnvironmentTorus& env, double lambda, double tol,
                                  std::int64_t max_iter) {
    CorrectorSolution sol = solve_regularized_poisson(env, lambda, tol, max_iter);
    harmonic_coordinates(env, sol);
    effective_covariance(env, sol);
    return sol;
}

}  // namespace cyclewalk
