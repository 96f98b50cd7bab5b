// stats.hpp
// Statistical helpers: moments with standard errors, one-sample KS against the
// standard normal, chi-square goodness of fit, and small symmetric
// eigenproblems.

#pragma once

#include <cstddef>
#include <vector>

namespace cyclewalk {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};
MeanStderr mean_stderr(const std::vector<double>& xs);

double normal_cdf(double x);

struct KsResult {
    double statistic = 0.0;  // sup |F_n - F|
    double p_value = 1.0;    // asymptotic Kolmogorov law
    std::size_t n = 0;
};
// One-sample KS test of xs against the standard normal.
KsResult ks_test_standard_normal(std::vector<double> xs);

// Survival function of the Kolmogorov distribution, Q(lambda).
double kolmogorov_survival(double lambda);

// Regularized incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a).
double gamma_q(double a, double x);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof = 0;
};
// counts vs expected (same length, expected > 0)
ChiSquareResult chi_square_test(const std::vector<double>& counts,
                                const std::vector<double>& expected);

// Eigenvalues of a dense symmetric d x d matrix (row-major), ascending.
std::vector<double> symmetric_eigenvalues(const std::vector<double>& m, int d);

}  // namespace cyclewalk
