#include "cyclewalk/qfclt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cyclewalk/kernels.hpp"
#include "cyclewalk/walker.hpp"

namespace cyclewalk {

void ExperimentConfig::validate() const {
    if (lambda_schedule.empty()) throw InvalidInput("experiment: empty lambda schedule");
    if (n_grid.empty()) throw InvalidInput("experiment: empty n grid");
    if (replicas < 100) throw InvalidInput("experiment: need at least 100 replicas");
    if (!(horizon > 0.0)) throw InvalidInput("experiment: horizon must be > 0");
    if (directions.empty()) throw InvalidInput("experiment: need at least one direction");
    for (const auto& v : directions)
        if (int(v.size()) != d) throw InvalidInput("experiment: direction has wrong dimension");
}

// static partition of [0, count) over worker threads; results land in
// replica-indexed slots so aggregation order is fixed regardless of threads
template <typename Fn>
static void parallel_replicas(int count, int threads, Fn&& fn) {
    if (threads <= 0) threads = int(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int r = 0; r < count; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                int r = next.fetch_add(1);
                if (r >= count) return;
                fn(r);
            }
        });
    for (auto& th : pool) th.join();
}

namespace {

struct ReplicaOut {
    std::vector<double> endpoint;        // X_{n^2 T} (unwrapped), d entries
    std::vector<double> comp;            // untruncated compensator at T, per direction
    std::vector<double> comp_trunc;      // per direction x eps (direction-major)
    double sup_chi_over_n = 0.0;
    std::int64_t jumps = 0;
};

// streaming replica: one walk to n^2*T accumulating endpoint, compensators and
// the corrector sup along the path
ReplicaOut run_replica(const EnvironmentTorus& env, const std::vector<std::vector<double>>& qdir,
                       const std::vector<std::vector<double>>& qdir_trunc,
                       const std::vector<double>& chi_max, std::int64_t n, double T,
                       std::uint64_t key) {
    const int d = env.dim();
    ReplicaOut out;
    out.endpoint.assign(d, 0.0);
    out.comp.assign(qdir.size(), 0.0);
    out.comp_trunc.assign(qdir_trunc.size(), 0.0);

    RngStream rng(key);
    const double horizon = double(n) * double(n) * T;
    std::vector<std::int64_t> pos(d, 0);
    std::int64_t site = env.geom.wrap_index(pos);
    double t = 0.0;
    out.sup_chi_over_n = chi_max[site] / double(n);

    // the per-site integrand tables already carry the 1/n^2 of the rescaling;
    // the clock integral runs in unscaled time up to n^2 T
    for (;;) {
        StepDraw step = sample_step(env, site, rng);
        const double dt = std::min(step.dt, horizon - t);
        for (std::size_t v = 0; v < qdir.size(); ++v) out.comp[v] += qdir[v][site] * dt;
        for (std::size_t v = 0; v < qdir_trunc.size(); ++v)
            out.comp_trunc[v] += qdir_trunc[v][site] * dt;
        t += step.dt;
        if (t > horizon) break;
        pos[dir_axis(step.dir)] += dir_sign(step.dir);
        site = env.geom.neighbor(site, step.dir);
        out.sup_chi_over_n = std::max(out.sup_chi_over_n, chi_max[site] / double(n));
        if (++out.jumps > (1LL << 40)) throw NumericFailure("qfclt replica: jump-count guard");
    }
    for (int a = 0; a < d; ++a) out.endpoint[a] = double(pos[a]);
    return out;
}

// per-site compensator integrand sum_z c(x,z) (v.Phihat(x,z)/n)^2 with an
// optional truncation at eps (phihat divided by n)
std::vector<double> integrand_table(const EnvironmentTorus& env, const CorrectorSolution& sol,
                                    const std::vector<double>& v, std::int64_t n, double eps) {
    const std::int64_t sites = env.sites();
    const int d = env.dim();
    std::vector<double> q(sites, 0.0);
    const double invn = 1.0 / double(n);
    for (int k = 0; k < env.ndirs(); ++k) {
        const std::int64_t* nb = env.geom.neighbor_table(k);
        const int axis = dir_axis(k);
        const double sgn = double(dir_sign(k));
        for (std::int64_t x = 0; x < sites; ++x) {
            double vphi = 0.0;
            for (int a = 0; a < d; ++a) {
                double hat = ((a == axis) ? sgn : 0.0) - (sol.phi[a][nb[x]] - sol.phi[a][x]);
                vphi += v[a] * hat;
            }
            vphi *= invn;
            if (eps > 0.0 && std::fabs(vphi) <= eps) continue;
            q[x] += env.rate[k][x] * vphi * vphi;
        }
    }
    return q;
}

}  // namespace

std::vector<KsRow> gaussianity_test(const std::vector<double>& samples, int d,
                                    const std::vector<double>& sigma2, double T,
                                    const std::vector<std::vector<double>>& directions,
                                    double significance) {
    if (d < 1 || samples.size() % d != 0) throw InvalidInput("gaussianity: bad sample layout");
    const std::size_t count = samples.size() / d;
    if (count < 100) throw InvalidInput("gaussianity: need at least 100 samples");
    std::vector<KsRow> rows;
    for (std::size_t vi = 0; vi < directions.size(); ++vi) {
        const auto& v = directions[vi];
        double var = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) var += v[i] * sigma2[std::size_t(i) * d + j] * v[j];
        if (!(var > 0.0)) throw NumericFailure("gaussianity: singular covariance projection");
        const double scale = 1.0 / std::sqrt(T * var);
        std::vector<double> z(count);
        for (std::size_t s = 0; s < count; ++s) {
            double dotv = 0.0;
            for (int a = 0; a < d; ++a) dotv += v[a] * samples[s * d + a];
            z[s] = dotv * scale;
        }
        KsResult ks = ks_test_standard_normal(std::move(z));
        KsRow row;
        row.v_index = int(vi);
        row.statistic = ks.statistic;
        row.p_value = ks.p_value;
        row.rejected = ks.p_value < significance;
        rows.push_back(row);
    }
    return rows;
}

std::vector<VanishRow> corrector_vanishing_check(const EnvironmentTorus& env,
                                                 const CorrectorSolution& sol,
                                                 const std::vector<std::int64_t>& n_grid,
                                                 int replicas, double T, double eps,
                                                 std::uint64_t seed, int threads) {
    const std::int64_t sites = env.sites();
    const int d = env.dim();
    std::vector<double> chi_max(sites, 0.0);
    for (std::int64_t x = 0; x < sites; ++x)
        for (int a = 0; a < d; ++a)
            chi_max[x] = std::max(chi_max[x], std::fabs(sol.phi[a][x] - sol.phi[a][0]));

    std::vector<VanishRow> rows;
    for (std::int64_t n : n_grid) {
        std::vector<ReplicaOut> outs(replicas);
        parallel_replicas(replicas, threads, [&](int r) {
            outs[r] = run_replica(env, {}, {}, chi_max, n, T,
                                  rng_key(seed, 0xFADE, std::uint64_t(n), std::uint64_t(r)));
        });
        int exceed = 0;
        for (int r = 0; r < replicas; ++r)
            if (outs[r].sup_chi_over_n > eps) ++exceed;
        VanishRow row;
        row.n = n;
        row.freq = double(exceed) / double(replicas);
        row.stderr_ = std::sqrt(row.freq * (1.0 - row.freq) / double(replicas));
        rows.push_back(row);
    }
    return rows;
}

QfcltReport run_qfclt_experiment(const ExperimentConfig& config) {
    config.validate();
    QfcltReport report;

    EnvironmentTorus env;
    try {
        env = sample_environment(config.catalog, config.d, config.L, config.seed);
    } catch (const std::exception& e) {
        throw NumericFailure(std::string("stage env: ") + e.what());
    }

    CorrectorSolution sol;
    try {
        auto steps = lambda_continuation(env, config.lambda_schedule, config.solver_tol);
        report.lambda_bounds_ok = true;
        for (const auto& s : steps)
            if (!s.dphi_bound_ok || !s.l2mu_bound_ok) report.lambda_bounds_ok = false;
        sol = std::move(steps.back().solution);
        harmonic_coordinates(env, sol);
        effective_covariance(env, sol);
    } catch (const std::exception& e) {
        throw NumericFailure(std::string("stage corrector: ") + e.what());
    }
    report.sigma2 = sol.sigma2;
    report.sigma2_eigs = sol.sigma2_eigs;
    report.alpha = sol.alpha;
    report.final_lambda = sol.lambda;

    const int d = config.d;
    // identity v.S2v = 2 ||v.Phihat||_cov^2 on the basis plus random directions
    {
        std::vector<std::vector<double>> vs;
        for (int i = 0; i < d; ++i) {
            std::vector<double> e(d, 0.0);
            e[i] = 1.0;
            vs.push_back(e);
        }
        RngStream rng(rng_key(config.seed, 0x1DEA));
        for (int t = 0; t < 100; ++t) {
            std::vector<double> v(d);
            double norm = 0.0;
            for (auto& x : v) {
                x = rng.next_normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (auto& x : v) x /= norm;
            vs.push_back(v);
        }
        double worst = 0.0;
        for (const auto& v : vs) {
            double vs2v = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) vs2v += v[i] * report.sigma2[std::size_t(i) * d + j] * v[j];
            // 2 ||v.Phihat||_cov^2 via the direction-major tables
            double acc = 0.0;
            for (int k = 0; k < env.ndirs(); ++k) {
                const std::int64_t* nb = env.geom.neighbor_table(k);
                const int axis = dir_axis(k);
                const double sgn = double(dir_sign(k));
                const double* csym = env.rate_sym[k].data();
                double part = 0.0;
                for (std::int64_t x = 0; x < env.sites(); ++x) {
                    double vphi = 0.0;
                    for (int a = 0; a < d; ++a) {
                        double hat = ((a == axis) ? sgn : 0.0) - (sol.phi[a][nb[x]] - sol.phi[a][x]);
                        vphi += v[a] * hat;
                    }
                    part += csym[x] * vphi * vphi;
                }
                acc += part;
            }
            const double two_cov = acc / double(env.sites());
            worst = std::max(worst, std::fabs(vs2v - two_cov) / std::max({vs2v, two_cov, 1e-300}));
        }
        report.identity_max_rel_err = worst;
    }

    // periodization proxy: covariance on a second torus side
    {
        std::int64_t alt = config.alt_side > 0 ? config.alt_side : config.L / 2;
        alt = std::max(alt, 2 * config.catalog.max_diameter() + 1);
        report.alt_side = alt;
        try {
            EnvironmentTorus env2 = sample_environment(config.catalog, config.d, alt, config.seed);
            auto steps2 = lambda_continuation(env2, config.lambda_schedule, config.solver_tol);
            CorrectorSolution sol2 = std::move(steps2.back().solution);
            effective_covariance(env2, sol2);
            report.sigma2_alt = sol2.sigma2;
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < report.sigma2.size(); ++i) {
                num += (report.sigma2[i] - sol2.sigma2[i]) * (report.sigma2[i] - sol2.sigma2[i]);
                den += report.sigma2[i] * report.sigma2[i];
            }
            report.sigma2_alt_rel_diff = std::sqrt(num / std::max(den, 1e-300));
        } catch (const std::exception& e) {
            throw NumericFailure(std::string("stage alt-covariance: ") + e.what());
        }
    }

    // corrector sup per site for the vanishing table
    std::vector<double> chi_max(env.sites(), 0.0);
    for (std::int64_t x = 0; x < env.sites(); ++x)
        for (int a = 0; a < d; ++a)
            chi_max[x] = std::max(chi_max[x], std::fabs(sol.phi[a][x] - sol.phi[a][0]));

    try {
        for (std::int64_t n : config.n_grid) {
            QfcltPerScale per;
            per.n = n;

            std::vector<std::vector<double>> qdir;
            for (const auto& v : config.directions) qdir.push_back(integrand_table(env, sol, v, n, 0.0));
            std::vector<std::vector<double>> qtrunc;
            for (std::size_t vi = 0; vi < config.directions.size(); ++vi)
                for (double eps : config.eps_grid)
                    qtrunc.push_back(integrand_table(env, sol, config.directions[vi], n, eps));

            std::vector<ReplicaOut> outs(config.replicas);
            parallel_replicas(config.replicas, config.threads, [&](int r) {
                outs[r] = run_replica(env, qdir, qtrunc, chi_max, n, config.horizon,
                                      rng_key(config.seed, 0x8EBA, std::uint64_t(n), std::uint64_t(r)));
            });

            const double T = config.horizon;
            const double scale = 1.0 / std::sqrt(double(n) * double(n) * T);
            per.emp_mean.assign(d, 0.0);
            per.emp_cov.assign(std::size_t(d) * d, 0.0);
            std::vector<double> endpoints(std::size_t(config.replicas) * d);
            double jumps = 0.0;
            for (int r = 0; r < config.replicas; ++r) {
                jumps += double(outs[r].jumps);
                for (int a = 0; a < d; ++a) {
                    const double y = outs[r].endpoint[a] * scale;
                    endpoints[std::size_t(r) * d + a] = outs[r].endpoint[a];
                    per.emp_mean[a] += y;
                    for (int b2 = 0; b2 < d; ++b2)
                        per.emp_cov[std::size_t(a) * d + b2] += y * outs[r].endpoint[b2] * scale;
                }
            }
            per.mean_jumps = jumps / double(config.replicas);
            for (auto& v : per.emp_mean) v /= double(config.replicas);
            for (auto& v : per.emp_cov) v /= double(config.replicas);

            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < per.emp_cov.size(); ++i) {
                num += (per.emp_cov[i] - report.sigma2[i]) * (per.emp_cov[i] - report.sigma2[i]);
                den += report.sigma2[i] * report.sigma2[i];
            }
            per.frob_rel_err = std::sqrt(num / std::max(den, 1e-300));

            per.ks = gaussianity_test(endpoints, d, report.sigma2, double(n) * double(n) * T,
                                      config.directions, config.significance);

            for (std::size_t vi = 0; vi < config.directions.size(); ++vi) {
                const auto& v = config.directions[vi];
                double vs2v = 0.0;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) vs2v += v[i] * report.sigma2[std::size_t(i) * d + j] * v[j];
                std::vector<double> errs(config.replicas);
                for (int r = 0; r < config.replicas; ++r)
                    errs[r] = std::fabs(outs[r].comp[vi] - T * vs2v);
                per.h1_error.push_back(mean_stderr(errs));
            }

            std::size_t ti = 0;
            for (std::size_t vi = 0; vi < config.directions.size(); ++vi) {
                for (double eps : config.eps_grid) {
                    std::vector<double> vals(config.replicas);
                    for (int r = 0; r < config.replicas; ++r) vals[r] = outs[r].comp_trunc[ti];
                    H2Row h2;
                    h2.v_index = int(vi);
                    h2.eps = eps;
                    h2.compensator = mean_stderr(vals);
                    per.h2.push_back(h2);
                    ++ti;
                }
            }

            int exceed = 0;
            for (int r = 0; r < config.replicas; ++r)
                if (outs[r].sup_chi_over_n > config.eps_vanish) ++exceed;
            per.vanish_freq = double(exceed) / double(config.replicas);
            per.vanish_stderr = std::sqrt(per.vanish_freq * (1.0 - per.vanish_freq) /
                                          double(config.replicas));

            report.scales.push_back(std::move(per));
        }
    } catch (const std::exception& e) {
        throw NumericFailure(std::string("stage simulate: ") + e.what());
    }
    return report;
}

}  // namespace cyclewalk
