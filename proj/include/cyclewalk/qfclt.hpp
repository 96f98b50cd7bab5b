// qfclt.hpp
// End-to-end invariance-principle experiments: diffusively rescaled endpoint
// covariance against the corrector covariance, per-direction Gaussianity (KS),
// the martingale compensator conditions, and corrector vanishing along paths.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cyclewalk/corrector.hpp"
#include "cyclewalk/environment.hpp"
#include "cyclewalk/stats.hpp"

namespace cyclewalk {

struct ExperimentConfig {
    CycleCatalog catalog;
    int d = 2;
    std::int64_t L = 32;
    std::uint64_t seed = 1;

    std::vector<double> lambda_schedule;  // strictly decreasing
    std::vector<std::int64_t> n_grid;     // diffusive scales
    int replicas = 1000;
    double horizon = 1.0;  // T: trajectories run to n^2 T
    std::vector<std::vector<double>> directions;  // projection vectors v
    double significance = 0.01;
    std::vector<double> eps_grid;  // truncation levels for the H2 diagnostics
    double eps_vanish = 0.1;       // threshold for the corrector-vanishing table
    double solver_tol = 1e-10;
    int threads = 0;               // 0: hardware concurrency
    std::int64_t alt_side = 0;     // second torus side for the covariance proxy; 0: L/2

    void validate() const;
};

struct KsRow {
    int v_index = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    bool rejected = false;
};

struct H2Row {
    int v_index = 0;
    double eps = 0.0;
    MeanStderr compensator;  // truncated compensator at T over replicas
};

struct QfcltPerScale {
    std::int64_t n = 0;
    std::vector<double> emp_mean;  // of X_{n^2 T} / sqrt(n^2 T)
    std::vector<double> emp_cov;   // second-moment matrix, d x d row-major
    double frob_rel_err = 0.0;     // vs corrector sigma^2
    std::vector<KsRow> ks;
    std::vector<MeanStderr> h1_error;  // per direction: |<vM>_T - T v.S2v|
    std::vector<H2Row> h2;
    double vanish_freq = 0.0;  // P(sup_t |chi(X)|/n > eps_vanish)
    double vanish_stderr = 0.0;
    double mean_jumps = 0.0;
};

struct QfcltReport {
    std::vector<double> sigma2;  // d x d
    std::vector<double> sigma2_eigs;
    double alpha = 0.0;
    bool lambda_bounds_ok = true;      // Lax-Milgram bounds at every schedule point
    double final_lambda = 0.0;
    double identity_max_rel_err = 0.0; // v.S2v vs 2||v.Phihat||_cov^2
    std::vector<double> sigma2_alt;    // on the alternate torus side
    std::int64_t alt_side = 0;
    double sigma2_alt_rel_diff = 0.0;
    std::vector<QfcltPerScale> scales;
};

QfcltReport run_qfclt_experiment(const ExperimentConfig& config);

// One-sample KS per configured direction for endpoint samples (flattened d per
// sample) against N(0, T * v.Sigma2 v).
std::vector<KsRow> gaussianity_test(const std::vector<double>& samples, int d,
                                    const std::vector<double>& sigma2, double T,
                                    const std::vector<std::vector<double>>& directions,
                                    double significance);

struct VanishRow {
    std::int64_t n = 0;
    double freq = 0.0;
    double stderr_ = 0.0;
};
std::vector<VanishRow> corrector_vanishing_check(const EnvironmentTorus& env,
                                                 const CorrectorSolution& sol,
                                                 const std::vector<std::int64_t>& n_grid,
                                                 int replicas, double T, double eps,
                                                 std::uint64_t seed, int threads = 0);

}  // namespace cyclewalk
