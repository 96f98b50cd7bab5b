#include "cyclewalk/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyclewalk/kernels.hpp"
#include "cyclewalk/solver.hpp"

namespace cyclewalk {

// ------------------------------------------------------------------ boxes ---

std::int64_t BoxProblem::outer_radius() const { return std::int64_t(std::floor(sigma * double(n) + 1e-12)); }
std::int64_t BoxProblem::inner_radius() const { return std::int64_t(std::floor(sigma_prime * double(n) + 1e-12)); }

double BoxProblem::eta(const std::vector<std::int64_t>& offset) const {
    std::int64_t h = 0;
    for (std::int64_t o : offset) h = std::max(h, std::abs(o));
    const std::int64_t r_out = outer_radius();
    const std::int64_t r_in = inner_radius();
    if (h <= r_in) return 1.0;
    if (h >= r_out) return 0.0;
    return double(r_out - h) / double(r_out - r_in);
}

double BoxProblem::grad_eta_sup() const {
    return 1.0 / double(outer_radius() - inner_radius());
}

void validate_box(const EnvironmentTorus& env, const BoxProblem& box, bool relaxed_inner) {
    if (int(box.center.size()) != env.dim()) throw InvalidInput("box center has wrong dimension");
    if (box.n < 1) throw InvalidGeometry("box scale must be >= 1");
    if (!(box.sigma > box.sigma_prime) || !(box.sigma <= 1.0))
        throw InvalidInput("box needs sigma' < sigma <= 1");
    if (!relaxed_inner && !(box.sigma_prime >= 0.5))
        throw InvalidInput("box needs sigma' >= 1/2");
    if (box.outer_radius() <= box.inner_radius())
        throw InvalidGeometry("box radii collapse: increase n or sigma - sigma'");
    if (2 * box.outer_radius() + 1 > env.side())
        throw InvalidGeometry("box exceeds the torus fundamental domain");
}

InequalityResult make_inequality_result(const std::string& name, double lhs, double rhs,
                                        double constant_used, double abs_slack) {
    InequalityResult r;
    r.check = name;
    r.lhs = lhs;
    r.rhs = rhs;
    r.constant_used = constant_used;
    r.ratio = rhs != 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    r.pass = lhs <= rhs * (1.0 + 1e-9) + abs_slack;
    return r;
}

double space_avg_norm(const std::vector<double>& values, double p) {
    if (values.empty()) return 0.0;
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }
    if (!(p > 0.0)) throw InvalidInput("space_avg_norm: p must be > 0 or inf");
    double s = 0.0;
    for (double v : values) s += std::pow(std::fabs(v), p);
    return std::pow(s / double(values.size()), 1.0 / p);
}

// offset -> lexicographic index within box_offsets(d, radius)
static std::int64_t offset_index(const std::vector<std::int64_t>& o, std::int64_t radius) {
    std::int64_t idx = 0;
    const std::int64_t w = 2 * radius + 1;
    for (std::int64_t c : o) idx = idx * w + (c + radius);
    return idx;
}

static std::int64_t sup_norm(const std::vector<std::int64_t>& o) {
    std::int64_t h = 0;
    for (std::int64_t c : o) h = std::max(h, std::abs(c));
    return h;
}

// values over box_offsets(d, R) restricted to the sub-box of radius r
static std::vector<double> restrict_to_radius(const std::vector<double>& values, int d,
                                              std::int64_t R, std::int64_t r) {
    auto sub = box_offsets(d, r);
    std::vector<double> out;
    out.reserve(sub.size());
    for (const auto& o : sub) out.push_back(values[offset_index(o, R)]);
    return out;
}

// -------------------------------------------------------------- harmonic ---

HarmonicField dirichlet_harmonic(const EnvironmentTorus& env, const BoxProblem& box,
                                 const std::vector<double>& g, double tol) {
    validate_box(env, box, true);
    const int d = env.dim();
    const std::int64_t R = box.outer_radius();
    auto offsets = box_offsets(d, R);
    if (g.size() != offsets.size()) throw InvalidInput("boundary data has wrong size");

    // interior sites (sup-norm < R) are unknowns; the layer at R carries g
    std::vector<std::int64_t> torus_site(offsets.size());
    std::vector<std::int64_t> interior;  // indices into offsets
    std::vector<std::int64_t> unknown_of_offset(offsets.size(), -1);
    std::vector<std::int64_t> center_site(d);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        std::vector<std::int64_t> p(d);
        for (int a = 0; a < d; ++a) p[a] = box.center[a] + offsets[i][a];
        torus_site[i] = env.geom.wrap_index(p);
        if (sup_norm(offsets[i]) < R) {
            unknown_of_offset[i] = std::int64_t(interior.size());
            interior.push_back(std::int64_t(i));
        }
    }

    const std::int64_t m = std::int64_t(interior.size());
    const std::int64_t w = 2 * R + 1;
    std::int64_t stride_last = 1;  // offset index strides per axis
    std::vector<std::int64_t> stride(d);
    for (int a = d - 1; a >= 0; --a) {
        stride[a] = stride_last;
        stride_last *= w;
    }

    std::vector<double> diag(m), b(m, 0.0);
    // neighbor bookkeeping: per unknown, per direction, either an unknown id or -1 (boundary)
    std::vector<std::int64_t> nb_unknown(std::size_t(m) * env.ndirs());
    std::vector<double> nb_rate(std::size_t(m) * env.ndirs());
    for (std::int64_t ui = 0; ui < m; ++ui) {
        const std::int64_t oi = interior[ui];
        const std::int64_t ts = torus_site[oi];
        diag[ui] = env.out_rate[ts];
        for (int k = 0; k < env.ndirs(); ++k) {
            const std::int64_t noff = oi + dir_sign(k) * stride[dir_axis(k)];
            const double c = env.rate[k][ts];
            nb_rate[std::size_t(ui) * env.ndirs() + k] = c;
            const std::int64_t nu = unknown_of_offset[noff];
            nb_unknown[std::size_t(ui) * env.ndirs() + k] = nu;
            if (nu < 0) b[ui] += c * g[noff];  // boundary value moves to the rhs
        }
    }

    const int nd = env.ndirs();
    ApplyFn apply = [&, m, nd](const double* x, double* y) {
        for (std::int64_t i = 0; i < m; ++i) {
            double acc = diag[i] * x[i];
            const std::int64_t* nu = nb_unknown.data() + std::size_t(i) * nd;
            const double* cr = nb_rate.data() + std::size_t(i) * nd;
            for (int k = 0; k < nd; ++k)
                if (nu[k] >= 0) acc -= cr[k] * x[nu[k]];
            y[i] = acc;
        }
    };

    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::fabs(v));
    SolveOptions opts;
    opts.tol_abs = tol * std::max(1.0, gmax);
    std::vector<double> x(m, 0.0);
    SolveResult res = bicgstab_jacobi(apply, diag, b, x, opts);

    HarmonicField hf;
    hf.box = box;
    hf.u = g;
    for (std::int64_t ui = 0; ui < m; ++ui) hf.u[interior[ui]] = x[ui];
    hf.residual_inf = res.residual_inf;
    return hf;
}

std::vector<double> embed_box_field(const EnvironmentTorus& env, const BoxProblem& box,
                                    const std::vector<double>& values) {
    const int d = env.dim();
    const std::int64_t R = box.outer_radius();
    auto offsets = box_offsets(d, R);
    if (values.size() != offsets.size()) throw InvalidInput("box field has wrong size");
    std::vector<double> out(env.sites(), 0.0);
    std::vector<std::int64_t> p(d);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) p[a] = box.center[a] + offsets[i][a];
        out[env.geom.wrap_index(p)] = values[i];
    }
    return out;
}

double cycle_dirichlet_form(const EnvironmentTorus& env, const std::vector<double>& f) {
    const std::int64_t n = env.sites();
    const int d = env.dim();
    double total = 0.0;
    std::vector<std::int64_t> tail(d), head(d);
    for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
        const CycleShape& sh = env.catalog.shapes[s];
        const double* wgt = env.weights[s].data();
        const int len = sh.length();
        for (int j = 0; j < len; ++j) {
            for (int a = 0; a < d; ++a) {
                tail[a] = sh.vertex(j, a);
                head[a] = (j + 1 < len) ? sh.vertex(j + 1, a) : 0;
            }
            // E_gamma(f) = (1/2) sum_edges (f(x)-f(y))^2 summed over bases
            double acc = 0.0;
            for (std::int64_t b = 0; b < n; ++b) {
                double df = f[env.geom.shifted(b, tail)] - f[env.geom.shifted(b, head)];
                acc += wgt[b] * df * df;
            }
            total += 0.5 * acc;
        }
    }
    return total;
}

// --------------------------------------------------------- energy estimate ---

InequalityResult energy_estimate_check(const EnvironmentTorus& env, const HarmonicField& hf,
                                       double p) {
    validate_box(env, hf.box, true);
    const int d = env.dim();
    const std::int64_t R = hf.box.outer_radius();
    auto offsets = box_offsets(d, R);

    // sub/harmonicity where eta > 0 (everything strictly inside the box)
    const std::int64_t w = 2 * R + 1;
    std::vector<std::int64_t> stride(d);
    std::int64_t acc_stride = 1;
    for (int a = d - 1; a >= 0; --a) {
        stride[a] = acc_stride;
        acc_stride *= w;
    }
    double umax = 0.0;
    for (double v : hf.u) umax = std::max(umax, std::fabs(v));
    std::vector<double> eta_vals(offsets.size());
    std::vector<std::int64_t> torus_site(offsets.size());
    std::vector<std::int64_t> pnt(d);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        eta_vals[i] = hf.box.eta(offsets[i]);
        for (int a = 0; a < d; ++a) pnt[a] = hf.box.center[a] + offsets[i][a];
        torus_site[i] = env.geom.wrap_index(pnt);
    }
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (eta_vals[i] <= 0.0) continue;
        const std::int64_t ts = torus_site[i];
        double lu = 0.0;
        for (int k = 0; k < env.ndirs(); ++k) {
            std::int64_t noff = std::int64_t(i) + dir_sign(k) * stride[dir_axis(k)];
            lu += env.rate[k][ts] * (hf.u[noff] - hf.u[i]);
        }
        const double tol = 1e-10 * env.mu[ts] * std::max(1.0, umax);
        const bool harmonic_ok = std::fabs(lu) <= tol;
        const bool subharmonic_ok = hf.u[i] >= -tol && -lu <= tol;
        if (!harmonic_ok && !subharmonic_ok)
            throw InvalidInput("energy estimate: field is neither harmonic nor nonnegative subharmonic on the box");
    }

    // lhs: cycle Dirichlet form of eta*u over all cycles, divided by |B|
    std::vector<double> etau(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) etau[i] = eta_vals[i] * hf.u[i];
    std::vector<double> F = embed_box_field(env, hf.box, etau);
    const double volume = double(offsets.size());
    const double lhs = cycle_dirichlet_form(env, F) / volume;

    // rhs: (5/2) ||mu2||_{p,B} ||grad eta||_inf^2 ||u^2||_{p*,B}
    std::vector<double> mu2_box(offsets.size()), u_sq(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        mu2_box[i] = env.mu_moment[2][torus_site[i]];
        u_sq[i] = hf.u[i] * hf.u[i];
    }
    const double p_star = std::isinf(p) ? 1.0 : p / (p - 1.0);
    if (!std::isinf(p) && !(p >= 1.0)) throw InvalidInput("energy estimate: p must be >= 1");

    // measured sup gradient of eta over edges touching the box (the analytic
    // value is 1/(r_out - r_in); rounding cannot make it larger)
    double grad = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) {
            auto nb = offsets[i];
            nb[a] += 1;
            double e2 = sup_norm(nb) > R ? 0.0 : eta_vals[offset_index(nb, R)];
            grad = std::max(grad, std::fabs(eta_vals[i] - e2));
            nb[a] -= 2;
            if (sup_norm(nb) > R) grad = std::max(grad, eta_vals[i]);
        }
    }

    const double rhs = 2.5 * space_avg_norm(mu2_box, p) * grad * grad * space_avg_norm(u_sq, p_star);
    InequalityResult r = make_inequality_result("energy_estimate", lhs, rhs, 2.5,
                                                1e-30 + 1e-12 * std::fabs(rhs));
    return r;
}

// -------------------------------------------- weighted Sobolev / Poincare ---

InequalityResult weighted_sobolev_check(const EnvironmentTorus& env,
                                        const std::vector<std::int64_t>& center,
                                        std::int64_t radius, const std::vector<double>& u,
                                        double q, double c_gate) {
    const int d = env.dim();
    BoxProblem box;
    box.center = center;
    box.n = radius;
    box.sigma = 1.0;
    box.sigma_prime = 0.0;
    if (2 * radius + 1 > env.side()) throw InvalidGeometry("box exceeds the torus fundamental domain");
    auto offsets = box_offsets(d, radius);
    if (u.size() != offsets.size()) throw InvalidInput("field has wrong size for the box");

    const double rho = rho_exponent(d, q);
    std::vector<double> F = embed_box_field(env, box, u);

    double energy = 0.0;  // sum over undirected edges of c_s (grad u)^2
    for (int k = 0; k < env.ndirs(); ++k)
        energy += kern::gather_diff_sq(env.rate_sym[k].data(), F.data(),
                                       env.geom.neighbor_table(k), env.sites());
    energy *= 0.5;

    std::vector<double> nu_box(offsets.size());
    std::vector<std::int64_t> p(d);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) p[a] = center[a] + offsets[i][a];
        nu_box[i] = env.nu[env.geom.wrap_index(p)];
    }

    const double volume = double(offsets.size());
    const double lhs = std::pow(space_avg_norm(u, 2.0 * rho), 2.0);
    const double base = (double(radius) * double(radius) / volume) *
                        space_avg_norm(nu_box, q) * energy;
    if (c_gate > 0.0)
        return make_inequality_result("weighted_sobolev", lhs, c_gate * base, c_gate);
    InequalityResult r = make_inequality_result("weighted_sobolev", lhs, base, 0.0);
    r.ratio = base > 0.0 ? lhs / base : 0.0;
    r.pass = true;  // report-only: the empirical constant is the ratio
    r.constant_used = r.ratio;
    return r;
}

InequalityResult local_poincare_check(const EnvironmentTorus& env,
                                      const std::vector<std::int64_t>& center,
                                      std::int64_t radius, const std::vector<double>& u,
                                      double q, double c_gate) {
    const int d = env.dim();
    if (2 * radius + 1 > env.side()) throw InvalidGeometry("box exceeds the torus fundamental domain");
    auto offsets = box_offsets(d, radius);
    if (u.size() != offsets.size()) throw InvalidInput("field has wrong size for the box");

    const double rho = rho_exponent(d, q);
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= double(u.size());
    std::vector<double> centered(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) centered[i] = u[i] - mean;

    // energy over edges with both endpoints in the box
    double energy = 0.0;
    std::vector<std::int64_t> p(d);
    std::vector<std::int64_t> site(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) p[a] = center[a] + offsets[i][a];
        site[i] = env.geom.wrap_index(p);
    }
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) {
            auto nb = offsets[i];
            nb[a] += 1;
            if (sup_norm(nb) > radius) continue;
            const std::int64_t j = offset_index(nb, radius);
            const double df = u[j] - u[i];
            energy += env.rate_sym[2 * a][site[i]] * df * df;
        }
    }

    std::vector<double> nu_box(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) nu_box[i] = env.nu[site[i]];

    const double volume = double(offsets.size());
    const double lhs = std::pow(space_avg_norm(centered, 2.0 * rho), 2.0);
    const double base = (double(radius) * double(radius) / volume) *
                        space_avg_norm(nu_box, q) * energy;
    if (c_gate > 0.0)
        return make_inequality_result("local_poincare", lhs, c_gate * base, c_gate);
    InequalityResult r = make_inequality_result("local_poincare", lhs, base, 0.0);
    r.ratio = base > 0.0 ? lhs / base : 0.0;
    r.pass = true;
    r.constant_used = r.ratio;
    return r;
}

// ------------------------------------------------------- lattice constants ---

std::vector<LatticeConstantsRow> lattice_inequality_constants(int d,
                                                              const std::vector<std::int64_t>& n_list,
                                                              int trials, std::uint64_t seed) {
    if (d < 2) throw InvalidInput("lattice constants: d must be >= 2");
    std::vector<LatticeConstantsRow> rows;
    for (std::int64_t n : n_list) {
        LatticeConstantsRow row;
        row.n = n;
        auto offsets = box_offsets(d, n);
        row.volume = double(offsets.size());
        row.volume_ratio = row.volume / std::pow(double(n), d);

        const double p_sob = double(d) / double(d - 1);
        auto sobolev_ratio = [&](const std::vector<double>& u) {
            double grad = 0.0;
            for (std::size_t i = 0; i < offsets.size(); ++i) {
                for (int a = 0; a < d; ++a) {
                    auto nb = offsets[i];
                    nb[a] += 1;
                    double other = sup_norm(nb) > n ? 0.0 : u[offset_index(nb, n)];
                    grad += std::fabs(u[i] - other);
                    nb[a] -= 2;
                    if (sup_norm(nb) > n) grad += std::fabs(u[i]);
                }
            }
            if (grad == 0.0) return 0.0;
            return space_avg_norm(u, p_sob) / ((double(n) / row.volume) * grad);
        };
        auto poincare_ratio = [&](const std::vector<double>& u) {
            double mean = 0.0;
            for (double v : u) mean += v;
            mean /= row.volume;
            std::vector<double> c(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) c[i] = u[i] - mean;
            double grad = 0.0;
            for (std::size_t i = 0; i < offsets.size(); ++i) {
                for (int a = 0; a < d; ++a) {
                    auto nb = offsets[i];
                    nb[a] += 1;
                    if (sup_norm(nb) > n) continue;
                    grad += std::fabs(u[i] - u[offset_index(nb, n)]);
                }
            }
            if (grad == 0.0) return 0.0;
            return space_avg_norm(c, 1.0) / ((double(n) / row.volume) * grad);
        };

        std::vector<double> u(offsets.size(), 0.0);
        u[offset_index(std::vector<std::int64_t>(d, 0), n)] = 1.0;  // center indicator
        row.sobolev_best = sobolev_ratio(u);
        row.poincare_best = poincare_ratio(u);
        RngStream rng(rng_key(seed, std::uint64_t(n)));
        for (int t = 0; t < trials; ++t) {
            for (auto& v : u) v = rng.next_normal();
            row.sobolev_best = std::max(row.sobolev_best, sobolev_ratio(u));
            row.poincare_best = std::max(row.poincare_best, poincare_ratio(u));
        }
        rows.push_back(row);
    }
    return rows;
}

// ------------------------------------------------------------- De Giorgi ---

double de_giorgi_iterate(double f0, double C, double alpha, double beta, double gamma,
                         double sigma, double sigma_prime) {
    if (!(gamma > 1.0)) throw InvalidInput("de giorgi: gamma must be > 1");
    if (!(C > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
        throw InvalidInput("de giorgi: C, alpha, beta must be > 0");
    if (!(sigma > sigma_prime) || !(sigma_prime >= 0.0))
        throw InvalidInput("de giorgi: need sigma > sigma' >= 0");
    if (f0 < 0.0) throw InvalidInput("de giorgi: f0 must be >= 0");
    return std::pow(f0, (gamma - 1.0) / beta) * std::pow(C, 1.0 / beta) *
           std::pow(2.0, (alpha + beta) / (gamma - 1.0) + 1.0) *
           std::pow(sigma - sigma_prime, -alpha / beta);
}

// ------------------------------------------------------ maximal inequality ---

MaximalInequalityResult maximal_inequality_check(const EnvironmentTorus& env,
                                                 const HarmonicField& hf, double p, double q,
                                                 const MaximalConstants& constants) {
    validate_box(env, hf.box, false);
    const int d = env.dim();
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    if (!(inv_p + inv_q < 2.0 / double(d)))
        throw InvalidInput("maximal inequality: moment condition 1/p + 1/q < 2/d fails");
    if (!(constants.c2 > 0.0) || !(constants.c_ws > 0.0))
        throw InvalidInput("maximal inequality: calibrated constants must be positive");

    MaximalInequalityResult out;
    const double rho = rho_exponent(d, q);
    const double p_star = std::isinf(p) ? 1.0 : p / (p - 1.0);
    out.delta = rho / p_star;
    if (!(out.delta > 1.0)) throw InvalidInput("maximal inequality: rho/p* must exceed 1");
    out.delta_star = out.delta / (out.delta - 1.0);
    out.kappa = out.delta_star / 2.0;
    out.gamma = 1.0 + 1.0 / out.delta_star;

    const double c_en = 2.5;
    out.c1 = constants.c2 * 2.0 * constants.c_ws * c_en;
    out.c_max = std::pow(2.0, 4.0 * out.kappa + 3.0) * std::pow(out.c1, out.kappa);

    const std::int64_t R = hf.box.outer_radius();
    const std::int64_t r_in = hf.box.inner_radius();
    auto offsets = box_offsets(d, R);
    std::vector<double> absu(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) absu[i] = std::fabs(hf.u[i]);

    std::vector<double> mu2_box(offsets.size()), nu_box(offsets.size());
    std::vector<std::int64_t> pt(d);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        for (int a = 0; a < d; ++a) pt[a] = hf.box.center[a] + offsets[i][a];
        const std::int64_t ts = env.geom.wrap_index(pt);
        mu2_box[i] = env.mu_moment[2][ts];
        nu_box[i] = env.nu[ts];
    }
    out.moment_product = space_avg_norm(mu2_box, p) * space_avg_norm(nu_box, q);

    // f(l, r) = || (|u| - l)_+^2 ||_{p*, B(r)}
    auto level_norm = [&](double level, std::int64_t r) {
        auto sub = box_offsets(d, r);
        std::vector<double> vals(sub.size());
        for (std::size_t i = 0; i < sub.size(); ++i) {
            double v = std::max(absu[offset_index(sub[i], R)] - level, 0.0);
            vals[i] = v * v;
        }
        return space_avg_norm(vals, p_star);
    };

    const double u_2pstar = space_avg_norm(restrict_to_radius(absu, d, R, R), 2.0 * p_star);
    const double lhs = space_avg_norm(restrict_to_radius(absu, d, R, r_in),
                                      std::numeric_limits<double>::infinity());
    const double rhs = out.c_max *
                       std::pow(out.moment_product /
                                    ((hf.box.sigma - hf.box.sigma_prime) * (hf.box.sigma - hf.box.sigma_prime)),
                                out.kappa) *
                       u_2pstar;
    out.main = make_inequality_result("maximal_inequality", lhs, rhs, out.c_max);

    const double beta = 2.0 / out.delta_star;
    const double c_dg = out.c1 * out.moment_product;
    out.K = de_giorgi_iterate(level_norm(0.0, R), c_dg, 2.0, beta, out.gamma, hf.box.sigma,
                              hf.box.sigma_prime);

    // level-set recursion on the dyadic grid, with effective radii ratios
    out.recursion_ok = true;
    const double span = hf.box.sigma - hf.box.sigma_prime;
    for (int m = 0; m < 8; ++m) {
        const double sig_a = hf.box.sigma_prime + span * std::pow(0.5, m);
        const double sig_b = hf.box.sigma_prime + span * std::pow(0.5, m + 1);
        const std::int64_t ra = std::int64_t(std::floor(sig_a * double(hf.box.n) + 1e-12));
        const std::int64_t rb = std::int64_t(std::floor(sig_b * double(hf.box.n) + 1e-12));
        if (rb >= ra) break;  // integer radii collapsed; stop the grid here
        const double la = out.K * (1.0 - std::pow(0.5, m + 1));
        const double lb = out.K * (1.0 - std::pow(0.5, m + 2));
        const double f_a = level_norm(la, ra);
        const double f_b = level_norm(lb, rb);
        const double eff_a = double(ra) / double(hf.box.n);
        const double eff_b = double(rb) / double(hf.box.n);
        if (lb <= la) continue;  // K == 0: nothing to iterate on
        const double bound = c_dg / (std::pow(eff_a - eff_b, 2.0) * std::pow(lb - la, 2.0 * out.gamma - 2.0)) *
                             std::pow(f_a, out.gamma);
        if (!(f_b <= bound * (1.0 + 1e-9) + 1e-30)) out.recursion_ok = false;
    }

    out.superlevel_empty = true;
    for (const auto& o : box_offsets(d, r_in))
        if (absu[offset_index(o, R)] > out.K) out.superlevel_empty = false;
    return out;
}

// ------------------------------------------------------------- trial fields ---

std::vector<double> random_site_field(const EnvironmentTorus& env, RngStream& rng, int smoothing) {
    const std::int64_t n = env.sites();
    std::vector<double> f(n);
    for (auto& v : f) v = rng.next_normal();
    std::vector<double> g(n);
    for (int s = 0; s < smoothing; ++s) {
        for (std::int64_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < env.ndirs(); ++k)
                acc += env.rate_sym[k][i] * f[env.geom.neighbor(i, k)];
            g[i] = acc / env.mu[i];
        }
        f.swap(g);
    }
    return f;
}

double calibrate_c2(int d, const BoxProblem& box, double p, int trials, std::uint64_t seed) {
    const std::int64_t R = box.outer_radius();
    const std::int64_t r_in = box.inner_radius();
    auto offsets = box_offsets(d, R);
    const double p_star = std::isinf(p) ? 1.0 : p / (p - 1.0);

    auto ratio_of = [&](const std::vector<double>& v) {
        std::vector<double> inner, cut;
        inner.reserve(offsets.size());
        cut.reserve(offsets.size());
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const double ev = box.eta(offsets[i]);
            cut.push_back(ev * v[i] * ev * v[i]);
            if (sup_norm(offsets[i]) <= r_in) inner.push_back(v[i] * v[i]);
        }
        const double num = space_avg_norm(inner, p_star);
        const double den = space_avg_norm(cut, p_star);
        return den > 0.0 ? num / den : 0.0;
    };

    // the inner-box indicator attains the sharp volume-ratio constant
    std::vector<double> v(offsets.size(), 0.0);
    for (std::size_t i = 0; i < offsets.size(); ++i)
        if (sup_norm(offsets[i]) <= r_in) v[i] = 1.0;
    double best = ratio_of(v);
    RngStream rng(rng_key(seed, 0xC2));
    for (int t = 0; t < trials; ++t) {
        for (auto& x : v) x = rng.next_normal();
        best = std::max(best, ratio_of(v));
    }
    return best;
}

double calibrate_c_ws(const EnvironmentTorus& env, const std::vector<std::int64_t>& center,
                      std::int64_t radius, double q, int trials, std::uint64_t seed,
                      const std::vector<std::pair<std::int64_t, std::vector<double>>>& extra) {
    double best = 0.0;
    auto offsets = box_offsets(env.dim(), radius);
    std::vector<double> u(offsets.size());
    RngStream rng(rng_key(seed, 0xC35));
    for (int t = 0; t < trials; ++t) {
        for (auto& v : u) v = rng.next_normal();
        best = std::max(best, weighted_sobolev_check(env, center, radius, u, q).ratio);
    }
    for (const auto& [r, field] : extra)
        best = std::max(best, weighted_sobolev_check(env, center, r, field, q).ratio);
    return best;
}

// ------------------------------------------------- weak sector / H_{-1} ---

InequalityResult weak_sector_check(const EnvironmentTorus& env, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidInput("weak sector: need at least one trial");
    double worst_ratio = -1.0;
    InequalityResult worst;
    for (int t = 0; t < trials; ++t) {
        RngStream rng(rng_key(env.seed, 0x5EC7, std::uint64_t(seed), std::uint64_t(t)));
        const int smooth_xi = int(rng.next_u64() % 3);
        const int smooth_ph = int(rng.next_u64() % 3);
        std::vector<double> xi = random_site_field(env, rng, smooth_xi);
        std::vector<double> ph = random_site_field(env, rng, smooth_ph);
        const double e = std::fabs(dirichlet_pairing(env, xi, ph));
        const double bound = 2.0 * l2mu_norm(env, xi) * l2mu_norm(env, ph);
        InequalityResult r = make_inequality_result("weak_sector", e, bound, 2.0);
        r.witness_site = t;
        const double ratio = bound > 0.0 ? e / bound : 0.0;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = r;
        }
        if (!r.pass) return r;
    }
    return worst;
}

InequalityResult h_minus_one_check(const EnvironmentTorus& env, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidInput("H-1 check: need at least one trial");
    const double alpha = compute_alpha(env);
    const std::int64_t n = env.sites();
    double mu_mean = kern::sum(env.mu.data(), n) / double(n);
    double worst_ratio = -1.0;
    InequalityResult worst;
    for (int t = 0; t < trials; ++t) {
        RngStream rng(rng_key(env.seed, 0xA1F, std::uint64_t(seed), std::uint64_t(t)));
        const int smooth = int(rng.next_u64() % 3);
        std::vector<double> xi = random_site_field(env, rng, smooth);
        const double dxi = cov_norm_of_gradient(env, xi);
        const double xi_max = kern::max_abs(xi.data(), n);
        for (int i = 0; i < env.dim(); ++i) {
            const double pairing = std::fabs(kern::dot(xi.data(), env.drift[i].data(), n)) / double(n);
            const double bound = std::sqrt(2.0) * alpha * dxi;
            // absolute slack absorbs the roundoff of the exactly-cancelling sums
            InequalityResult r = make_inequality_result("h_minus_one", pairing, bound,
                                                        std::sqrt(2.0) * alpha,
                                                        1e-12 * mu_mean * std::max(1.0, xi_max));
            r.witness_site = t;
            const double ratio = bound > 0.0 ? pairing / bound : 0.0;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst = r;
            }
            if (!r.pass) return r;
        }
    }
    return worst;
}

}  // namespace cyclewalk
