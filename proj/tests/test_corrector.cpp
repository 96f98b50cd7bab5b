// Corrector solver: dense-factorization oracle, the 1-d harmonic-mean
// corrector formula, Lax-Milgram norm bounds, the Dirichlet-form identity,
// cov-norm form equality on cocycle fields, covariance gauge invariance and
// sublinearity diagnostics.

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cyclewalk/corrector.hpp"
#include "cyclewalk/environment.hpp"
#include "cyclewalk/kernels.hpp"

using namespace cyclewalk;

namespace {

// dense Gaussian elimination with partial pivoting (test-only oracle)
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const double d = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri * n + c] * x[c];
        x[ri] = acc / a[ri * n + ri];
    }
    return x;
}

// conjugate gradient (test-only, for the symmetric-agreement check)
std::vector<double> cg_solve(const ApplyFn& apply, const std::vector<double>& b, double tol) {
    const std::size_t n = b.size();
    std::vector<double> x(n, 0.0), r = b, p = b, ap(n);
    double rs = kern::dot(r.data(), r.data(), n);
    for (int it = 0; it < 100000 && std::sqrt(rs) > tol; ++it) {
        apply(p.data(), ap.data());
        const double alpha = rs / kern::dot(p.data(), ap.data(), n);
        kern::axpy(alpha, p.data(), x.data(), n);
        kern::axpy(-alpha, ap.data(), r.data(), n);
        const double rs_new = kern::dot(r.data(), r.data(), n);
        kern::bicgstab_update_p(r.data(), rs_new / rs, 0.0, ap.data(), p.data(), n);
        rs = rs_new;
    }
    return x;
}

EnvironmentTorus plaquette_env(std::int64_t L, std::uint64_t seed) {
    return sample_environment(preset_plaquette(2, WeightLaw::uniform(0.5, 1.5)), 2, L, seed);
}

EnvironmentTorus conductance_1d(std::int64_t L, std::uint64_t seed) {
    // literal i.i.d. Uniform[1,2] conductances: the reversed two-cycle stays in
    // the catalog at weight zero so the base-0 covering holds
    CycleCatalog cat;
    cat.shapes.emplace_back(1, std::vector<std::vector<std::int64_t>>{{1}, {-1}});
    cat.laws.push_back(WeightLaw::uniform(1.0, 2.0));
    cat.shapes.emplace_back(1, std::vector<std::vector<std::int64_t>>{{-1}, {1}});
    cat.laws.push_back(WeightLaw::constant(0.0));
    return sample_environment(cat, 1, L, seed);
}

}  // namespace

TEST_CASE("alpha: preset values and a scatter-loop oracle") {
    EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 6, 1);
    CHECK(compute_alpha(srw) == doctest::Approx(1.0).epsilon(1e-14));

    CycleCatalog cat;
    cat.shapes.emplace_back(2, std::vector<std::vector<std::int64_t>>{{1, 0}, {-1, 0}});
    cat.laws.push_back(WeightLaw::constant(0.0));
    EnvironmentTorus zero = make_environment(cat, 2, 4, 0,
                                             {std::vector<double>(16, 0.0)});
    CHECK(compute_alpha(zero) == 0.0);

    EnvironmentTorus env = plaquette_env(6, 21);
    // oracle: alpha_i^2 = (1/N) sum_{shape,base} w * sum_{vertices} (v^i)^2
    double best = 0.0;
    for (int i = 0; i < 2; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s)
            for (std::int64_t b = 0; b < env.sites(); ++b) {
                double vs = 0.0;
                for (int j = 0; j < env.catalog.shapes[s].length(); ++j) {
                    double v = double(env.catalog.shapes[s].vertex(j, i));
                    vs += v * v;
                }
                acc += env.weights[s][b] * vs;
            }
        best = std::max(best, acc / double(env.sites()));
    }
    CHECK(compute_alpha(env) == doctest::Approx(std::sqrt(best)).epsilon(1e-12));
}

TEST_CASE("regularized solve: zero drift gives the zero potential exactly") {
    EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 8, 2);
    CorrectorSolution sol = solve_regularized_poisson(srw, 0.37);
    for (int i = 0; i < 2; ++i)
        for (double v : sol.phi[i]) CHECK(v == 0.0);
    CHECK_THROWS_AS(solve_regularized_poisson(srw, 0.0), InvalidInput);
    CHECK_THROWS_AS(solve_regularized_poisson(srw, -1.0), InvalidInput);
}

TEST_CASE("regularized solve matches a dense direct factorization on a 4x4 torus") {
    EnvironmentTorus env = plaquette_env(4, 123);
    const double lambda = 1e-2;
    const std::int64_t n = env.sites();

    std::vector<double> diag;
    ApplyFn apply = torus_operator(env, lambda, diag);
    std::vector<double> a(std::size_t(n) * n, 0.0);
    std::vector<double> e(n, 0.0), col(n);
    for (std::int64_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        apply(e.data(), col.data());
        e[j] = 0.0;
        for (std::int64_t i = 0; i < n; ++i) a[std::size_t(i) * n + j] = col[i];
    }

    CorrectorSolution sol = solve_regularized_poisson(env, lambda, 1e-13);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> b(n);
        for (std::int64_t x = 0; x < n; ++x) b[x] = -env.drift[i][x];
        std::vector<double> exact = dense_solve(a, b);
        for (std::int64_t x = 0; x < n; ++x)
            CHECK(sol.phi[i][x] == doctest::Approx(exact[x]).epsilon(1e-10));
    }
}

TEST_CASE("1-d corrector: increments follow 1/c with the empirical harmonic mean") {
    EnvironmentTorus env = conductance_1d(128, 7);
    auto steps = lambda_continuation(env, {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, 1e-12);
    CorrectorSolution sol = std::move(steps.back().solution);
    effective_covariance(env, sol);

    const std::int64_t L = env.side();
    double inv_sum = 0.0;
    for (std::int64_t x = 0; x < L; ++x) inv_sum += 1.0 / env.rate_sym[0][x];
    const double hm = double(L) / inv_sum;

    // harmonic-coordinate increments: 1 - Dphi = hm / c, constant flux
    for (std::int64_t x = 0; x < L; ++x) {
        const double dphi = sol.phi[0][env.geom.neighbor(x, 0)] - sol.phi[0][x];
        CHECK(1.0 - dphi == doctest::Approx(hm / env.rate_sym[0][x]).epsilon(2e-3));
    }
    CHECK(sol.sigma2[0] == doctest::Approx(2.0 * hm).epsilon(1e-2));
}

TEST_CASE("Lax-Milgram bounds hold at every continuation step") {
    EnvironmentTorus env = plaquette_env(16, 77);
    auto steps = lambda_continuation(env, {1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
    const double alpha = compute_alpha(env);
    for (const auto& s : steps) {
        CHECK(s.dphi_bound_ok);
        CHECK(s.l2mu_bound_ok);
        for (int i = 0; i < 2; ++i) {
            CHECK(s.solution.dphi_cov_norm[i] <= std::sqrt(2.0) * alpha + 1e-9);
            CHECK(s.solution.lambda * s.solution.phi_l2mu_norm[i] <=
                  std::sqrt(2.0 * s.solution.lambda) * alpha + 1e-9);
        }
    }
    // Cauchy differences were recorded for consecutive lambdas
    for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i].cauchy_from_prev >= 0.0);

    SUBCASE("schedule validation") {
        CHECK_THROWS_AS(lambda_continuation(env, {}), InvalidInput);
        CHECK_THROWS_AS(lambda_continuation(env, {1e-2, 1e-1}), InvalidInput);
        CHECK_THROWS_AS(lambda_continuation(env, {1e-2, -1e-3}), InvalidInput);
    }
    SUBCASE("length-one schedule equals the plain solve bit for bit") {
        auto one = lambda_continuation(env, {1e-3});
        CorrectorSolution direct = solve_regularized_poisson(env, 1e-3);
        for (int i = 0; i < 2; ++i)
            for (std::int64_t x = 0; x < env.sites(); ++x)
                CHECK(one[0].solution.phi[i][x] == direct.phi[i][x]);
    }
}

TEST_CASE("Dirichlet form: E(phi,phi) equals ||D phi||_cov^2 on the torus") {
    EnvironmentTorus env = plaquette_env(8, 5);
    RngStream rng(rng_key(55));
    for (int t = 0; t < 5; ++t) {
        std::vector<double> f(env.sites());
        for (auto& v : f) v = rng.next_normal();
        const double lhs = dirichlet_pairing(env, f, f);
        const double rhs = cov_norm_of_gradient(env, f);
        CHECK(lhs == doctest::Approx(rhs * rhs).epsilon(1e-10));
    }
}

TEST_CASE("cov norm: edge and cycle forms") {
    SUBCASE("axis field on unit rates has norm 1") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 6, 2);
        EdgeField psi(srw.ndirs(), std::vector<double>(srw.sites(), 0.0));
        for (int k = 0; k < srw.ndirs(); ++k)
            if (dir_axis(k) == 0)
                std::fill(psi[k].begin(), psi[k].end(), double(dir_sign(k)));
        CovNormForms f = cov_norm_forms(srw, psi);
        CHECK(f.edge == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(f.cycle == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(cov_norm(srw, psi, true) == doctest::Approx(1.0));
    }
    SUBCASE("zero field has norm zero") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 6, 2);
        EdgeField psi(srw.ndirs(), std::vector<double>(srw.sites(), 0.0));
        CHECK(cov_norm(srw, psi, true) == 0.0);
    }
    SUBCASE("gradient fields: forms agree to 1e-12 on a non-symmetric env") {
        EnvironmentTorus env = plaquette_env(8, 6);
        RngStream rng(rng_key(66));
        for (int t = 0; t < 5; ++t) {
            std::vector<double> f(env.sites());
            for (auto& v : f) v = rng.next_normal();
            EdgeField psi = increment_field(env, f);
            CovNormForms forms = cov_norm_forms(env, psi);
            CHECK(std::fabs(forms.edge * forms.edge - forms.cycle * forms.cycle) <=
                  1e-12 * std::max(forms.edge * forms.edge, 1.0));
        }
    }
    SUBCASE("a non-cocycle field trips the consistency guard") {
        EnvironmentTorus env = plaquette_env(8, 6);
        EdgeField psi(env.ndirs(), std::vector<double>(env.sites(), 0.0));
        psi[0][3] = 1.0;  // one-sided bump: reversal symmetry broken
        CHECK_THROWS_AS(cov_norm(env, psi, true), NumericFailure);
    }
}

TEST_CASE("corrector increments satisfy the cycle condition") {
    EnvironmentTorus env = plaquette_env(8, 9);
    CorrectorSolution sol = solve_corrector(env, 1e-4);
    double phimax = 1.0;
    for (int i = 0; i < 2; ++i)
        phimax = std::max(phimax, kern::max_abs(sol.phi[i].data(), sol.phi[i].size()));
    for (int i = 0; i < 2; ++i) {
        for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
            const CycleShape& sh = env.catalog.shapes[s];
            for (std::int64_t b = 0; b < env.sites(); ++b) {
                double acc = 0.0;
                std::int64_t site = b;
                std::vector<std::int64_t> pos = env.geom.coords_of(b);
                for (int j = 0; j < sh.length(); ++j) {
                    const int k = sh.step_dirs()[j];
                    const std::int64_t nxt = env.geom.neighbor(site, k);
                    acc += sol.chi[i][nxt] - sol.chi[i][site];
                    site = nxt;
                }
                CHECK(std::fabs(acc) <= 1e-10 * phimax);
            }
        }
    }
}

TEST_CASE("covariance: gauge invariance and SRW identity") {
    SUBCASE("unit-rate environment gives 2 * identity") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 16, 3);
        CorrectorSolution sol = solve_corrector(srw, 1e-5);
        CHECK(sol.sigma2[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(sol.sigma2[3] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::fabs(sol.sigma2[1]) <= 1e-12);
        CHECK(sol.sigma2_eigs[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("re-gauging phi by a constant leaves sigma^2 unchanged") {
        EnvironmentTorus env = plaquette_env(8, 10);
        CorrectorSolution sol = solve_corrector(env, 1e-3);
        std::vector<double> before = sol.sigma2;
        for (double& v : sol.phi[0]) v += 17.5;  // a gauge bug would shift entries by O(17^2)
        effective_covariance(env, sol);
        for (std::size_t i = 0; i < before.size(); ++i)
            CHECK(std::fabs(sol.sigma2[i] - before[i]) <= 1e-9 * std::fabs(before[0]));
    }
    SUBCASE("plaquette covariance is positive definite") {
        EnvironmentTorus env = plaquette_env(16, 11);
        CorrectorSolution sol = solve_corrector(env, 1e-5);
        CHECK(sol.sigma2_eigs[0] > 0.0);
    }
}

TEST_CASE("nonsymmetric solver agrees with conjugate gradient on symmetric systems") {
    EnvironmentTorus env = sample_environment(preset_nn(2, WeightLaw::uniform(1.0, 2.0)), 2, 8, 13);
    CHECK(env.max_abs_ca() == 0.0);
    const double lambda = 1e-2;
    std::vector<double> diag;
    ApplyFn apply = torus_operator(env, lambda, diag);
    CorrectorSolution sol = solve_regularized_poisson(env, lambda, 1e-13);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> b(env.sites());
        for (std::int64_t x = 0; x < env.sites(); ++x) b[x] = -env.drift[i][x];
        std::vector<double> xc = cg_solve(apply, b, 1e-13);
        for (std::int64_t x = 0; x < env.sites(); ++x)
            CHECK(std::fabs(sol.phi[i][x] - xc[x]) <= 1e-10);
    }
}

TEST_CASE("harmonic coordinates: residual identity") {
    SUBCASE("homogeneous environment: Phi is the position field") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 8, 4);
        CorrectorSolution sol = solve_corrector(srw, 1e-3);
        for (int i = 0; i < 2; ++i) {
            CHECK(sol.harmonic_residual_inf[i] == 0.0);
            for (double v : sol.chi[i]) CHECK(v == 0.0);
        }
    }
    SUBCASE("residual equals the lambda term up to the solver residual") {
        EnvironmentTorus env = plaquette_env(8, 14);
        const double lambda = 1e-4;
        CorrectorSolution sol = solve_corrector(env, lambda, 1e-11);
        for (int i = 0; i < 2; ++i) {
            double mu_phi_max = 0.0;
            for (std::int64_t x = 0; x < env.sites(); ++x) {
                mu_phi_max = std::max(mu_phi_max, env.mu[x] * std::fabs(sol.phi[i][x]));
                // L Phi = -lambda mu phi + solver residual, pointwise
                CHECK(std::fabs(sol.harmonic_residual[i][x] + lambda * env.mu[x] * sol.phi[i][x]) <=
                      sol.solver_residual[i] * (1 + 1e-6) + 1e-12);
            }
            CHECK(sol.harmonic_residual_inf[i] <= lambda * mu_phi_max + sol.solver_residual[i] * (1 + 1e-6) + 1e-12);
        }
    }
    SUBCASE("1-d: constant flux through every edge") {
        EnvironmentTorus env = conductance_1d(64, 19);
        auto steps = lambda_continuation(env, {1e-2, 1e-4, 1e-6}, 1e-12);
        const CorrectorSolution& sol = steps.back().solution;
        std::vector<double> flux(env.sites());
        for (std::int64_t x = 0; x < env.sites(); ++x) {
            const double dphi = sol.phi[0][env.geom.neighbor(x, 0)] - sol.phi[0][x];
            flux[x] = env.rate_sym[0][x] * (1.0 - dphi);
        }
        const double f0 = flux[0];
        for (double f : flux) CHECK(f == doctest::Approx(f0).epsilon(1e-3));
    }
}

TEST_CASE("degenerate weight regimes: heavy tails and near-zero conductances") {
    SUBCASE("pareto tails") {
        EnvironmentTorus env = sample_environment(preset_plaquette(2, WeightLaw::pareto(1.0, 1.5)),
                                                  2, 16, 99);
        CHECK(check_env_invariants(env).all_pass());
        CorrectorSolution sol = solve_corrector(env, 1e-3, 1e-10);
        CHECK(sol.sigma2_eigs[0] > 0.0);
        const double alpha = compute_alpha(env);
        for (int i = 0; i < 2; ++i) CHECK(sol.dphi_cov_norm[i] <= std::sqrt(2.0) * alpha + 1e-9);
    }
    SUBCASE("conductances down to 1e-6") {
        CycleCatalog cat = preset_nn(2, WeightLaw::uniform(1e-6, 1.0));
        CycleCatalog pl = preset_plaquette(2, WeightLaw::uniform(0.0, 0.3));
        for (std::size_t s = 0; s < pl.shapes.size(); ++s) {
            cat.shapes.push_back(pl.shapes[s]);
            cat.laws.push_back(pl.laws[s]);
        }
        EnvironmentTorus env = sample_environment(cat, 2, 12, 100);
        CHECK(env.min_cs() > 0.0);
        CorrectorSolution sol = solve_corrector(env, 1e-2, 1e-10);
        CHECK(sol.sigma2_eigs[0] > 0.0);
        const double vmax = kern::max_abs(env.drift[0].data(), env.drift[0].size());
        CHECK(sol.solver_residual[0] <= 1e-10 * std::max(1.0, vmax));
    }
}

TEST_CASE("three dimensions: solve, covariance and the identity chain") {
    CycleCatalog cat = preset_nn(3, WeightLaw::uniform(0.5, 1.5));
    CycleCatalog pl = preset_plaquette(3, WeightLaw::uniform(0.2, 1.2));
    for (std::size_t s = 0; s < pl.shapes.size(); ++s) {
        cat.shapes.push_back(pl.shapes[s]);
        cat.laws.push_back(pl.laws[s]);
    }
    CHECK(pl.shapes.size() == 24);  // 3 axis pairs x 8 orientations/rotations
    EnvironmentTorus env = sample_environment(cat, 3, 8, 77);
    CHECK(check_env_invariants(env).all_pass());

    CorrectorSolution sol = solve_corrector(env, 1e-3, 1e-11);
    REQUIRE(sol.sigma2.size() == 9);
    CHECK(sol.sigma2_eigs[0] > 0.0);
    // symmetric matrix, Lax-Milgram bounds, cocycle norm-form agreement
    CHECK(sol.sigma2[1] == sol.sigma2[3]);
    CHECK(sol.sigma2[2] == sol.sigma2[6]);
    const double alpha = compute_alpha(env);
    for (int i = 0; i < 3; ++i)
        CHECK(sol.dphi_cov_norm[i] <= std::sqrt(2.0) * alpha + 1e-9);
    EdgeField dphi = increment_field(env, sol.phi[2]);
    CHECK_NOTHROW(cov_norm(env, dphi, true));
}

TEST_CASE("rho exponent and sublinearity profile") {
    CHECK(rho_exponent(2, 1.0) == doctest::Approx(1.0));
    CHECK(rho_exponent(3, 3.0) == doctest::Approx(1.5));
    CHECK(rho_exponent(3, std::numeric_limits<double>::infinity()) == doctest::Approx(3.0));
    CHECK_THROWS_AS(rho_exponent(2, std::numeric_limits<double>::infinity()), InvalidInput);

    SUBCASE("homogeneous environment: identically zero profile") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 16, 5);
        CorrectorSolution sol = solve_corrector(srw, 1e-4);
        auto rows = sublinearity_profile(srw, sol, {2, 4, 8}, 4.0);
        for (const auto& r : rows) {
            CHECK(r.s_inf == 0.0);
            CHECK(r.s_2rho == 0.0);
        }
    }
    SUBCASE("plaquette environment: decreasing trend over the grid") {
        EnvironmentTorus env = plaquette_env(64, 15);
        auto steps = lambda_continuation(env, {1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
        auto rows = sublinearity_profile(env, steps.back().solution, {4, 8, 16}, 4.0);
        CHECK(rows[0].s_inf >= rows[1].s_inf);
        CHECK(rows[1].s_inf >= rows[2].s_inf);
        CHECK(rows[0].s_2rho > 0.0);
    }
    SUBCASE("box exceeding half the torus is rejected") {
        EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 8, 5);
        CorrectorSolution sol = solve_corrector(srw, 1e-3);
        CHECK_THROWS_AS(sublinearity_profile(srw, sol, {5}, 4.0), InvalidGeometry);
    }
}
