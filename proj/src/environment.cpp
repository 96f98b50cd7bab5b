#include "cyclewalk/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cyclewalk {

double EnvironmentTorus::min_cs() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& col : rate_sym)
        for (double v : col) m = std::min(m, v);
    return m;
}

double EnvironmentTorus::max_abs_ca() const {
    double m = 0.0;
    for (const auto& col : rate_asym)
        for (double v : col) m = std::max(m, std::fabs(v));
    return m;
}

// Translation table t[x] = index of (x + v) on the torus.
static std::vector<std::int64_t> translate_table(const TorusGeom& g,
                                                 const std::vector<std::int64_t>& v) {
    const std::int64_t n = g.sites();
    std::vector<std::int64_t> t(n);
    for (std::int64_t i = 0; i < n; ++i) t[i] = g.shifted(i, v);
    return t;
}

void assemble_edge_weights(EnvironmentTorus& env) {
    const TorusGeom& g = env.geom;
    const std::int64_t n = g.sites();
    const int d = g.d();
    const int nd = g.ndirs();
    const auto& shapes = env.catalog.shapes;

    // one translation table per distinct tail/vertex offset (x -> x - v)
    std::map<std::vector<std::int64_t>, std::vector<std::int64_t>> tables;
    auto table_for = [&](std::vector<std::int64_t> v) -> const std::vector<std::int64_t>& {
        for (auto& c : v) c = -c;
        auto it = tables.find(v);
        if (it == tables.end()) it = tables.emplace(v, translate_table(g, v)).first;
        return it->second;
    };

    // c(x, x+z_k) = sum over (shape s, step j with direction k) of w_s(x - v_{j-1})
    env.rate.assign(nd, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < shapes.size(); ++s) {
        const CycleShape& sh = shapes[s];
        const double* w = env.weights[s].data();
        for (int j = 0; j < sh.length(); ++j) {
            std::vector<std::int64_t> tail(d);
            for (int a = 0; a < d; ++a) tail[a] = sh.vertex(j, a);
            const auto& tab = table_for(tail);
            double* out = env.rate[sh.step_dirs()[j]].data();
            for (std::int64_t i = 0; i < n; ++i) out[i] += w[tab[i]];
        }
    }

    env.rate_sym.assign(nd, std::vector<double>(n, 0.0));
    env.rate_asym.assign(nd, std::vector<double>(n, 0.0));
    for (int k = 0; k < nd; ++k) {
        const std::int64_t* nb = g.neighbor_table(k);
        const double* fwd = env.rate[k].data();
        const double* bwd = env.rate[dir_opposite(k)].data();
        for (std::int64_t i = 0; i < n; ++i) {
            double back = bwd[nb[i]];  // c(x+z, x)
            env.rate_sym[k][i] = 0.5 * (fwd[i] + back);
            env.rate_asym[k][i] = 0.5 * (fwd[i] - back);
        }
    }

    env.mu.assign(n, 0.0);
    env.nu.assign(n, 0.0);
    env.out_rate.assign(n, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double m = 0.0, v = 0.0, o = 0.0;
        for (int k = 0; k < nd; ++k) {
            m += env.rate_sym[k][i];
            v += 1.0 / env.rate_sym[k][i];
            o += env.rate[k][i];
        }
        env.mu[i] = m;
        env.nu[i] = v;
        env.out_rate[i] = o;
    }

    // mu^(m)(x) = sum_s |gamma_s|^m sum_{v vertex of s} w_s(x - v), vertices distinct
    for (int m = 0; m < 4; ++m) env.mu_moment[m].assign(n, 0.0);
    for (std::size_t s = 0; s < shapes.size(); ++s) {
        const CycleShape& sh = shapes[s];
        const double* w = env.weights[s].data();
        double pow_len[4] = {1.0, double(sh.length()), 0.0, 0.0};
        pow_len[2] = pow_len[1] * pow_len[1];
        pow_len[3] = pow_len[2] * pow_len[1];
        for (int j = 0; j < sh.length(); ++j) {
            std::vector<std::int64_t> vert(d);
            for (int a = 0; a < d; ++a) vert[a] = sh.vertex(j, a);
            const auto& tab = table_for(vert);
            for (int m = 0; m < 4; ++m) {
                double* out = env.mu_moment[m].data();
                const double p = pow_len[m];
                for (std::int64_t i = 0; i < n; ++i) out[i] += p * w[tab[i]];
            }
        }
    }

    env.drift.assign(d, std::vector<double>(n, 0.0));
    for (int a = 0; a < d; ++a)
        for (std::int64_t i = 0; i < n; ++i)
            env.drift[a][i] = env.rate[2 * a][i] - env.rate[2 * a + 1][i];
}

EnvironmentTorus make_environment(const CycleCatalog& catalog, int d, std::int64_t L,
                                  std::uint64_t seed,
                                  std::vector<std::vector<double>> weights) {
    ValidationReport cat_rep = validate_catalog(catalog);
    if (catalog.dim() != d) throw InvalidInput("catalog dimension does not match d");
    if (L < 2 * catalog.max_diameter() + 1)
        throw InvalidGeometry("torus side too small: need L >= 2*max_diameter + 1");
    if (weights.size() != catalog.shapes.size())
        throw InvalidInput("need one weight field per shape");

    EnvironmentTorus env;
    env.geom = TorusGeom(d, L);
    env.catalog = catalog;
    env.seed = seed;
    for (auto& w : weights) {
        if (std::int64_t(w.size()) != env.geom.sites())
            throw InvalidInput("weight field has wrong size");
        for (double v : w)
            if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidLaw("cycle weights must be finite and >= 0");
    }
    env.weights = std::move(weights);
    assemble_edge_weights(env);
    return env;
}

EnvironmentTorus sample_environment(const CycleCatalog& catalog, int d, std::int64_t L,
                                    std::uint64_t seed) {
    ValidationReport cat_rep = validate_catalog(catalog);
    const CheckEntry* ell = cat_rep.find("assembled_ellipticity");
    if (ell && !ell->pass)
        throw InvalidLaw("catalog cannot produce positive symmetrized rates in every direction");
    if (catalog.dim() != d) throw InvalidInput("catalog dimension does not match d");
    if (L < 2 * catalog.max_diameter() + 1)
        throw InvalidGeometry("torus side too small: need L >= 2*max_diameter + 1");

    TorusGeom geom(d, L);
    const std::int64_t n = geom.sites();
    std::vector<std::vector<double>> weights(catalog.shapes.size());
    for (std::size_t s = 0; s < catalog.shapes.size(); ++s) {
        catalog.laws[s].validate();
        weights[s].resize(n);
        for (std::int64_t i = 0; i < n; ++i) {
            RngStream rng(rng_key(seed, std::uint64_t(s), std::uint64_t(i)));
            weights[s][i] = catalog.laws[s].sample(rng);
        }
    }
    return make_environment(catalog, d, L, seed, std::move(weights));
}

const std::vector<std::vector<double>>& local_drift(const EnvironmentTorus& env) {
    if (!env.assembled()) throw InvalidInput("environment not assembled");
    return env.drift;
}

EnvironmentTorus shift_environment(const EnvironmentTorus& env,
                                   const std::vector<std::int64_t>& z) {
    if (int(z.size()) != env.dim()) throw InvalidInput("shift vector has wrong dimension");
    EnvironmentTorus out;
    out.geom = env.geom;
    out.catalog = env.catalog;
    out.seed = env.seed;
    const std::int64_t n = env.sites();
    auto tab = std::vector<std::int64_t>(n);
    for (std::int64_t i = 0; i < n; ++i) tab[i] = env.geom.shifted(i, z);
    out.weights.resize(env.weights.size());
    for (std::size_t s = 0; s < env.weights.size(); ++s) {
        out.weights[s].resize(n);
        for (std::int64_t i = 0; i < n; ++i) out.weights[s][i] = env.weights[s][tab[i]];
    }
    assemble_edge_weights(out);
    return out;
}

ValidationReport check_env_invariants(const EnvironmentTorus& env) {
    if (!env.assembled()) throw InvalidInput("environment not assembled");
    const std::int64_t n = env.sites();
    const int nd = env.ndirs();
    ValidationReport rep;

    {
        CheckEntry e;
        e.name = "rates_nonnegative";
        e.pass = true;
        for (int k = 0; k < nd && e.pass; ++k)
            for (std::int64_t i = 0; i < n; ++i)
                if (env.rate[k][i] < 0.0) {
                    e.pass = false;
                    e.witness = env.rate[k][i];
                    e.worst_site = i;
                    break;
                }
        rep.checks.push_back(e);
    }

    {
        // sum_y c(x,y) == sum_y c(y,x) at every site
        CheckEntry e;
        e.name = "doubly_stochastic";
        double worst = 0.0;
        std::int64_t at = -1;
        for (std::int64_t i = 0; i < n; ++i) {
            double out = 0.0, in = 0.0;
            for (int k = 0; k < nd; ++k) {
                out += env.rate[k][i];
                in += env.rate[dir_opposite(k)][env.geom.neighbor(i, k)];
            }
            double rel = std::fabs(out - in) / std::max({out, in, 1e-300});
            if (rel > worst) {
                worst = rel;
                at = i;
            }
        }
        e.pass = worst <= 1e-12;
        e.witness = worst;
        e.worst_site = at;
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "antisymmetric_dominated";  // |c_a| <= c_s at every directed edge
        double worst = 0.0;
        std::int64_t at = -1;
        for (int k = 0; k < nd; ++k)
            for (std::int64_t i = 0; i < n; ++i) {
                double ex = std::fabs(env.rate_asym[k][i]) - env.rate_sym[k][i];
                if (ex > worst) {
                    worst = ex;
                    at = i;
                }
            }
        e.pass = worst <= 0.0;
        e.witness = worst;
        e.worst_site = at;
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "ellipticity_cs_positive";
        e.witness = env.min_cs();
        e.pass = e.witness > 0.0;
        rep.checks.push_back(e);
    }

    {
        // mu(x) = sum_z c_s(x,x+z) must agree with the out-rate sum_z c(x,x+z)
        CheckEntry e;
        e.name = "mu_equals_out_rate";
        double worst = 0.0;
        std::int64_t at = -1;
        for (std::int64_t i = 0; i < n; ++i) {
            double rel = std::fabs(env.mu[i] - env.out_rate[i]) / std::max(env.mu[i], 1e-300);
            if (rel > worst) {
                worst = rel;
                at = i;
            }
        }
        e.pass = worst <= 1e-12;
        e.witness = worst;
        e.worst_site = at;
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "mu_moments_monotone";  // mu^(1) <= mu^(2) <= mu^(3) pointwise
        double worst = 0.0, scale = 1.0;
        std::int64_t at = -1;
        for (std::int64_t i = 0; i < n; ++i) {
            scale = std::max(scale, env.mu_moment[3][i]);
            for (int m = 1; m < 3; ++m) {
                double ex = env.mu_moment[m][i] - env.mu_moment[m + 1][i];
                if (ex > worst) {
                    worst = ex;
                    at = i;
                }
            }
        }
        e.pass = worst <= 1e-12 * scale;
        e.witness = worst;
        e.worst_site = at;
        rep.checks.push_back(e);
    }

    {
        // mu^(0)(x) >= sum of support infima of strictly-positive shapes covering x
        CheckEntry e;
        e.name = "mu0_lower_bound";
        double bound = 0.0;
        for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s)
            if (env.catalog.laws[s].strictly_positive())
                bound += env.catalog.laws[s].support_infimum() * env.catalog.shapes[s].length();
        double worst = 0.0;
        std::int64_t at = -1;
        for (std::int64_t i = 0; i < n; ++i) {
            double gap = bound - env.mu_moment[0][i];
            if (gap > worst) {
                worst = gap;
                at = i;
            }
        }
        e.pass = worst <= 1e-9 * std::max(1.0, bound);
        e.witness = worst;
        e.worst_site = at;
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "geometry_margin";  // L >= 2*max_diameter + 1
        e.witness = double(env.side() - 2 * env.catalog.max_diameter() - 1);
        e.pass = e.witness >= 0.0;
        rep.checks.push_back(e);
    }

    {
        // symmetric flag, and the theorem direction of the dichotomy:
        // weights supported on cycles of length <= 2 force c_a == 0
        CheckEntry e;
        e.name = "symmetry_dichotomy";
        double maxca = env.max_abs_ca();
        bool long_weighted = false;
        for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
            if (env.catalog.shapes[s].length() <= 2) continue;
            for (double w : env.weights[s])
                if (w > 0.0) {
                    long_weighted = true;
                    break;
                }
            if (long_weighted) break;
        }
        e.pass = long_weighted || maxca == 0.0;
        e.witness = maxca;
        e.detail = std::string(maxca == 0.0 ? "symmetric" : "non-symmetric") +
                   (long_weighted ? ", has weighted cycles longer than 2" : ", weights supported on 2-cycles");
        rep.checks.push_back(e);
    }

    {
        // closed cycles carry no net displacement: sum_x V^i(x) = 0
        CheckEntry e;
        e.name = "drift_sums_to_zero";
        double mu_total = 0.0;
        for (std::int64_t i = 0; i < n; ++i) mu_total += env.mu[i];
        double worst = 0.0;
        for (int a = 0; a < env.dim(); ++a) {
            double s = 0.0;
            for (std::int64_t i = 0; i < n; ++i) s += env.drift[a][i];
            worst = std::max(worst, std::fabs(s));
        }
        e.pass = worst <= 1e-12 * std::max(mu_total, 1.0);
        e.witness = worst;
        rep.checks.push_back(e);
    }

    return rep;
}

}  // namespace cyclewalk
