// Statistics helpers (KS, chi-square, eigenvalues) and the QFCLT harness:
// covariance identity, calibration of the KS gate, determinism, vanishing
// tables.

#include "doctest.h"

#include <cmath>
#include <vector>

#include "cyclewalk/qfclt.hpp"
#include "cyclewalk/rng.hpp"
#include "cyclewalk/stats.hpp"

using namespace cyclewalk;

TEST_CASE("mean and standard error") {
    MeanStderr m = mean_stderr({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(mean_stderr({}).count == 0);
}

TEST_CASE("kolmogorov survival and incomplete gamma basics") {
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(10.0) <= 1e-12);
    // classic critical point: Q(1.628) is close to 0.01
    CHECK(kolmogorov_survival(1.628) == doctest::Approx(0.01).epsilon(0.05));
    CHECK(gamma_q(0.5, 0.0) == 1.0);
    // dof = 2: the chi-square tail is exactly exp(-x/2)
    for (double x : {0.5, 1.0, 3.0, 7.0})
        CHECK(gamma_q(1.0, x / 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
}

TEST_CASE("KS against the standard normal") {
    SUBCASE("calibration: rejection rate near the level on true Gaussians") {
        int rejects = 0;
        const int reps = 200;
        for (int r = 0; r < reps; ++r) {
            RngStream rng(rng_key(7000, std::uint64_t(r)));
            std::vector<double> xs(400);
            for (auto& v : xs) v = rng.next_normal();
            if (ks_test_standard_normal(xs).p_value < 0.01) ++rejects;
        }
        CHECK(rejects <= 8);  // ~2 expected at the 1% level
    }
    SUBCASE("degenerate samples are rejected hard") {
        std::vector<double> xs(500, 0.3);
        KsResult r = ks_test_standard_normal(xs);
        CHECK(r.statistic > 0.3);
        CHECK(r.p_value < 1e-10);
    }
}

TEST_CASE("chi-square test") {
    std::vector<double> expected = {25.0, 25.0, 25.0, 25.0};
    CHECK(chi_square_test(expected, expected).p_value == doctest::Approx(1.0));
    ChiSquareResult bad = chi_square_test({90.0, 5.0, 3.0, 2.0}, expected);
    CHECK(bad.p_value < 1e-10);
    CHECK(bad.dof == 3);
}

TEST_CASE("symmetric eigenvalues") {
    std::vector<double> m = {2.0, 1.0, 1.0, 2.0};
    auto eig = symmetric_eigenvalues(m, 2);
    CHECK(eig[0] == doctest::Approx(1.0));
    CHECK(eig[1] == doctest::Approx(3.0));

    RngStream rng(rng_key(31));
    std::vector<double> a(9);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            double v = rng.next_normal();
            a[i * 3 + j] = v;
            a[j * 3 + i] = v;
        }
    auto e3 = symmetric_eigenvalues(a, 3);
    CHECK(e3[0] + e3[1] + e3[2] == doctest::Approx(a[0] + a[4] + a[8]).epsilon(1e-10));
}

TEST_CASE("gaussianity test input guards") {
    std::vector<double> samples(50 * 2, 0.0);
    std::vector<double> sigma2 = {1.0, 0.0, 0.0, 1.0};
    CHECK_THROWS_AS(gaussianity_test(samples, 2, sigma2, 1.0, {{1.0, 0.0}}, 0.01), InvalidInput);
    samples.assign(200 * 2, 0.0);
    std::vector<double> singular = {1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(gaussianity_test(samples, 2, singular, 1.0, {{0.0, 1.0}}, 0.01), NumericFailure);
}

namespace {

ExperimentConfig small_experiment(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.catalog = preset_plaquette(2, WeightLaw::uniform(0.5, 1.5));
    cfg.d = 2;
    cfg.L = 16;
    cfg.seed = seed;
    cfg.lambda_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
    cfg.n_grid = {2, 4};
    cfg.replicas = 200;
    cfg.horizon = 0.5;
    cfg.directions = {{1.0, 0.0}, {0.0, 1.0}};
    cfg.eps_grid = {0.02, 0.1};
    cfg.eps_vanish = 0.02;
    cfg.threads = 2;
    cfg.alt_side = 8;
    return cfg;
}

}  // namespace

TEST_CASE("qfclt harness: identities, determinism, sane statistics") {
    ExperimentConfig cfg = small_experiment(5);
    QfcltReport rep = run_qfclt_experiment(cfg);

    // exact identity between the covariance and the cov-norm of v.Phihat
    CHECK(rep.identity_max_rel_err <= 1e-10);
    CHECK(rep.lambda_bounds_ok);
    CHECK(rep.sigma2_eigs[0] > 0.0);
    CHECK(rep.alt_side == 8);
    CHECK(rep.sigma2_alt.size() == 4);

    REQUIRE(rep.scales.size() == 2);
    for (const auto& s : rep.scales) {
        // empirical second-moment matrix is symmetric PSD by construction
        CHECK(s.emp_cov[1] == doctest::Approx(s.emp_cov[2]));
        auto eigs = symmetric_eigenvalues(s.emp_cov, 2);
        CHECK(eigs[0] >= -1e-12);
        CHECK(s.frob_rel_err >= 0.0);
        CHECK(s.ks.size() == 2);
        for (const auto& k : s.ks) CHECK(k.p_value >= 0.0);
        CHECK(s.h1_error.size() == 2);
        CHECK(s.h2.size() == 4);
        CHECK(s.vanish_freq >= 0.0);
        CHECK(s.vanish_freq <= 1.0);
        CHECK(s.mean_jumps > 0.0);
    }
    // truncated compensators shrink as eps grows (same direction, same n)
    for (const auto& s : rep.scales)
        CHECK(s.h2[0].compensator.mean >= s.h2[1].compensator.mean - 1e-12);

    SUBCASE("same config, same report") {
        QfcltReport rep2 = run_qfclt_experiment(cfg);
        CHECK(rep2.sigma2 == rep.sigma2);
        for (std::size_t i = 0; i < rep.scales.size(); ++i) {
            CHECK(rep2.scales[i].emp_cov == rep.scales[i].emp_cov);
            CHECK(rep2.scales[i].vanish_freq == rep.scales[i].vanish_freq);
            CHECK(rep2.scales[i].ks[0].statistic == rep.scales[i].ks[0].statistic);
        }
    }
    SUBCASE("thread count does not change the report") {
        ExperimentConfig cfg1 = cfg;
        cfg1.threads = 1;
        QfcltReport rep1 = run_qfclt_experiment(cfg1);
        CHECK(rep1.sigma2 == rep.sigma2);
        for (std::size_t i = 0; i < rep.scales.size(); ++i)
            CHECK(rep1.scales[i].emp_cov == rep.scales[i].emp_cov);
    }
}

TEST_CASE("qfclt harness: homogeneous environment recovers the simple walk") {
    ExperimentConfig cfg;
    cfg.catalog = preset_srw(2);
    cfg.d = 2;
    cfg.L = 16;
    cfg.seed = 3;
    cfg.lambda_schedule = {1e-2, 1e-4};
    cfg.n_grid = {8};
    cfg.replicas = 2000;
    cfg.horizon = 1.0;
    cfg.directions = {{1.0, 0.0}, {0.0, 1.0}};
    cfg.eps_grid = {0.1};
    cfg.threads = 2;
    cfg.alt_side = 8;
    QfcltReport rep = run_qfclt_experiment(cfg);

    CHECK(rep.sigma2[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(rep.sigma2[3] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(rep.sigma2_alt_rel_diff <= 1e-10);  // homogeneous: no periodization drift
    const auto& s = rep.scales[0];
    // E |X_T|^2 / T = 4: each diagonal entry near 2 within a few mc sigmas
    CHECK(s.emp_cov[0] == doctest::Approx(2.0).epsilon(0.15));
    CHECK(s.emp_cov[3] == doctest::Approx(2.0).epsilon(0.15));
    // Gaussianity at the diffusive scale should not be rejected at 1%
    for (const auto& k : s.ks) CHECK_FALSE(k.rejected);
    // chi = 0: vanishing table is identically zero at any positive threshold
    CHECK(s.vanish_freq == 0.0);
    // H1: the compensator is deterministic 2T, so the error is zero
    for (const auto& h : s.h1_error) CHECK(h.mean <= 1e-10);
}

TEST_CASE("qfclt harness: one dimension ties variance, harmonic mean and sigma2 together") {
    ExperimentConfig cfg;
    CycleCatalog cat;
    cat.shapes.emplace_back(1, std::vector<std::vector<std::int64_t>>{{1}, {-1}});
    cat.laws.push_back(WeightLaw::uniform(1.0, 2.0));
    cat.shapes.emplace_back(1, std::vector<std::vector<std::int64_t>>{{-1}, {1}});
    cat.laws.push_back(WeightLaw::constant(0.0));
    cfg.catalog = cat;
    cfg.d = 1;
    cfg.L = 128;
    cfg.seed = 7;
    cfg.lambda_schedule = {1e-2, 1e-4, 1e-6};
    cfg.n_grid = {8};
    cfg.replicas = 4000;
    cfg.horizon = 1.0;
    cfg.directions = {{1.0}};
    cfg.eps_grid = {0.5};
    cfg.threads = 2;
    cfg.alt_side = 64;
    QfcltReport rep = run_qfclt_experiment(cfg);

    EnvironmentTorus env = sample_environment(cat, 1, 128, 7);
    double inv = 0.0;
    for (std::int64_t x = 0; x < env.side(); ++x) inv += 1.0 / env.rate_sym[0][x];
    const double hm = double(env.side()) / inv;

    CHECK(rep.sigma2[0] == doctest::Approx(2.0 * hm).epsilon(0.01));
    const double emp = rep.scales[0].emp_cov[0];
    // 3 mc sigmas of a second moment over 4000 replicas is roughly 7%
    CHECK(emp == doctest::Approx(rep.sigma2[0]).epsilon(0.07));
}

TEST_CASE("corrector vanishing table") {
    EnvironmentTorus env = sample_environment(preset_plaquette(2, WeightLaw::uniform(0.5, 1.5)),
                                              2, 16, 9);
    auto steps = lambda_continuation(env, {1e-2, 1e-4});
    const CorrectorSolution& sol = steps.back().solution;

    SUBCASE("threshold above the corrector range gives zero frequencies") {
        double chimax = 0.0;
        for (int i = 0; i < 2; ++i)
            for (double v : sol.chi[i]) chimax = std::max(chimax, std::fabs(v));
        auto rows = corrector_vanishing_check(env, sol, {1, 2}, 200, 0.5,
                                              chimax * 1.01, 11, 2);
        for (const auto& r : rows) CHECK(r.freq == 0.0);
    }
    SUBCASE("frequencies live in [0,1] with binomial standard errors") {
        auto rows = corrector_vanishing_check(env, sol, {1, 2, 4}, 200, 0.5, 0.02, 11, 2);
        for (const auto& r : rows) {
            CHECK(r.freq >= 0.0);
            CHECK(r.freq <= 1.0);
            CHECK(r.stderr_ == doctest::Approx(std::sqrt(r.freq * (1 - r.freq) / 200.0)));
        }
        // larger n cannot see larger sup|chi|/n: trend is nonincreasing here
        CHECK(rows[0].freq >= rows[2].freq - rows[0].stderr_ - rows[2].stderr_);
    }
}
