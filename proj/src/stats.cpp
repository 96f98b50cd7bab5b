#include "cyclewalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cyclewalk {

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    out.count = xs.size();
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / double(xs.size());
    if (xs.size() < 2) return out;
    double v = 0.0;
    for (double x : xs) v += (x - out.mean) * (x - out.mean);
    v /= double(xs.size() - 1);
    out.stderr_ = std::sqrt(v / double(xs.size()));
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_standard_normal(std::vector<double> xs) {
    KsResult out;
    out.n = xs.size();
    if (xs.empty()) return out;
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = normal_cdf(xs[i]);
        d = std::max(d, std::fabs(double(i + 1) / n - f));
        d = std::max(d, std::fabs(f - double(i) / n));
    }
    out.statistic = d;
    double sn = std::sqrt(n);
    out.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    return out;
}

// ---- regularized incomplete gamma (series + continued fraction) ----

static double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

static double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

ChiSquareResult chi_square_test(const std::vector<double>& counts,
                                const std::vector<double>& expected) {
    if (counts.size() != expected.size() || counts.empty())
        throw std::invalid_argument("chi_square_test: size mismatch");
    ChiSquareResult out;
    out.dof = int(counts.size()) - 1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (expected[i] <= 0.0) throw std::invalid_argument("chi_square_test: expected must be > 0");
        double d = counts[i] - expected[i];
        out.statistic += d * d / expected[i];
    }
    out.p_value = gamma_q(0.5 * out.dof, 0.5 * out.statistic);
    return out;
}

std::vector<double> symmetric_eigenvalues(const std::vector<double>& m, int d) {
    if (int(m.size()) != d * d) throw std::invalid_argument("symmetric_eigenvalues: bad size");
    std::vector<double> a = m;
    auto at = [&](int i, int j) -> double& { return a[std::size_t(i) * d + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                if (std::fabs(at(p, q)) < 1e-300) continue;
                double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < d; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eigs(d);
    for (int i = 0; i < d; ++i) eigs[i] = at(i, i);
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

}  // namespace cyclewalk
