// cyclewalk CLI: generate and inspect cycle-weight environments, solve the
// regularized corrector equation, estimate the effective covariance, simulate
// the walk, run the inequality lab, and produce invariance-principle reports.
//
// Exit codes: 0 success, 1 at least one check failed, 2 usage/config error,
// 3 numeric or solver failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cyclewalk/inequalities.hpp"
#include "cyclewalk/io.hpp"
#include "cyclewalk/qfclt.hpp"
#include "cyclewalk/walker.hpp"

using namespace cyclewalk;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fd(double v) { return fmt_double(v); }

std::vector<std::int64_t> parse_int_list(const std::string& spec) {
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t next = spec.find(',', pos);
        out.push_back(std::stoll(spec.substr(pos, next == std::string::npos ? next : next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (out.empty()) throw UsageError("expected a comma-separated integer list: '" + spec + "'");
    return out;
}

ordered_json report_to_json(const ValidationReport& rep) {
    ordered_json checks = ordered_json::array();
    for (const auto& c : rep.checks) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["pass"] = c.pass;
        jc["witness"] = c.witness;
        if (c.worst_site >= 0) jc["worst_site"] = c.worst_site;
        if (!c.detail.empty()) jc["detail"] = c.detail;
        checks.push_back(jc);
    }
    ordered_json j;
    j["checks"] = checks;
    j["all_pass"] = rep.all_pass();
    return j;
}

void print_report(const ValidationReport& rep) {
    for (const auto& c : rep.checks)
        std::printf("  [%s] %-28s witness=%s%s%s\n", c.pass ? "pass" : "FAIL", c.name.c_str(),
                    fd(c.witness).c_str(), c.detail.empty() ? "" : "  ", c.detail.c_str());
}

ordered_json inequality_to_json(const InequalityResult& r) {
    ordered_json j;
    j["check"] = r.check;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["constant"] = r.constant_used;
    j["ratio"] = r.ratio;
    j["pass"] = r.pass;
    if (r.witness_site >= 0) j["witness"] = r.witness_site;
    return j;
}

struct CsvTable {
    std::string text;
    explicit CsvTable(const std::vector<std::string>& header) { text = csv_line(header); }
    void row(const std::vector<std::string>& fields) { text += csv_line(fields); }
};

int cmd_gen_env(const std::string& config_path, std::int64_t seed_flag, int d_flag,
                std::int64_t l_flag, const std::string& out) {
    ordered_json j = parse_json_file(config_path);
    const ordered_json& env_json = j.contains("env") ? j.at("env") : j;
    EnvConfig cfg = env_config_from_json(env_json);
    if (seed_flag >= 0) cfg.seed = std::uint64_t(seed_flag);
    if (d_flag > 0) {
        cfg.d = d_flag;
        cfg.catalog = catalog_from_json(cfg.d, env_json.at("catalog"));
    }
    if (l_flag > 0) cfg.L = l_flag;
    EnvironmentTorus env = sample_environment(cfg.catalog, cfg.d, cfg.L, cfg.seed);
    save_env(env, out);
    std::printf("environment: d=%d L=%lld sites=%lld shapes=%zu seed=%llu -> %s\n", env.dim(),
                (long long)env.side(), (long long)env.sites(), env.catalog.shapes.size(),
                (unsigned long long)env.seed, out.c_str());
    return 0;
}

int cmd_check_env(const std::string& env_path, const std::string& json_out) {
    EnvironmentTorus env = load_env(env_path);
    ValidationReport cat = validate_catalog(env.catalog);
    ValidationReport inv = check_env_invariants(env);
    std::printf("catalog checks:\n");
    print_report(cat);
    std::printf("environment checks:\n");
    print_report(inv);
    if (!json_out.empty()) {
        ordered_json j;
        j["catalog"] = report_to_json(cat);
        j["environment"] = report_to_json(inv);
        atomic_write_file(json_out, j.dump(2) + "\n");
    }
    return (cat.all_pass() && inv.all_pass()) ? 0 : 1;
}

int cmd_solve_corrector(const std::string& env_path, const std::string& schedule_spec, double tol,
                        const std::string& out, const std::string& sublin_csv,
                        const std::string& n_grid_spec, double q) {
    EnvironmentTorus env = load_env(env_path);
    std::vector<double> schedule = parse_lambda_schedule(schedule_spec);
    auto steps = lambda_continuation(env, schedule, tol);
    bool bounds_ok = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        std::printf("lambda=%s  max||Dphi||_cov=%s  bounds=%s  cauchy=%s\n",
                    fd(s.solution.lambda).c_str(),
                    fd(*std::max_element(s.solution.dphi_cov_norm.begin(),
                                         s.solution.dphi_cov_norm.end()))
                        .c_str(),
                    (s.dphi_bound_ok && s.l2mu_bound_ok) ? "ok" : "VIOLATED",
                    i ? fd(s.cauchy_from_prev).c_str() : "-");
        if (!s.dphi_bound_ok || !s.l2mu_bound_ok) bounds_ok = false;
    }
    CorrectorSolution sol = std::move(steps.back().solution);
    harmonic_coordinates(env, sol);
    effective_covariance(env, sol);
    if (!out.empty()) save_solution(env, sol, out);

    if (!sublin_csv.empty()) {
        auto rows = sublinearity_profile(env, sol, parse_int_list(n_grid_spec), q);
        CsvTable t({"n", "S_inf", "S_2rho"});
        for (const auto& r : rows) t.row({std::to_string(r.n), fd(r.s_inf), fd(r.s_2rho)});
        atomic_write_file(sublin_csv, t.text);
    }
    return bounds_ok ? 0 : 1;
}

int cmd_estimate_sigma(const std::string& env_path, const std::string& schedule_spec, double tol,
                       const std::string& json_out, const std::string& csv_out) {
    EnvironmentTorus env = load_env(env_path);
    std::vector<double> schedule = parse_lambda_schedule(schedule_spec);
    auto steps = lambda_continuation(env, schedule, tol);
    bool bounds_ok = true;
    for (const auto& s : steps)
        if (!s.dphi_bound_ok || !s.l2mu_bound_ok) bounds_ok = false;
    CorrectorSolution sol = std::move(steps.back().solution);
    harmonic_coordinates(env, sol);
    effective_covariance(env, sol);

    const int d = env.dim();
    std::printf("sigma2 (lambda=%s):\n", fd(sol.lambda).c_str());
    for (int i = 0; i < d; ++i) {
        std::printf(" ");
        for (int j = 0; j < d; ++j) std::printf(" %s", fd(sol.sigma2[std::size_t(i) * d + j]).c_str());
        std::printf("\n");
    }
    std::printf("eigenvalues:");
    for (double e : sol.sigma2_eigs) std::printf(" %s", fd(e).c_str());
    std::printf("\nalpha=%s\n", fd(sol.alpha).c_str());

    if (!csv_out.empty()) {
        CsvTable t({"i", "j", "value"});
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                t.row({std::to_string(i + 1), std::to_string(j + 1),
                       fd(sol.sigma2[std::size_t(i) * d + j])});
        atomic_write_file(csv_out, t.text);
    }
    if (!json_out.empty()) {
        ordered_json j;
        j["lambda"] = sol.lambda;
        j["alpha"] = sol.alpha;
        j["sigma2"] = sol.sigma2;
        j["eigenvalues"] = sol.sigma2_eigs;
        j["dphi_cov_norm"] = sol.dphi_cov_norm;
        j["phi_l2mu_norm"] = sol.phi_l2mu_norm;
        j["lambda_bounds_ok"] = bounds_ok;
        atomic_write_file(json_out, j.dump(2) + "\n");
    }
    return bounds_ok ? 0 : 1;
}

int cmd_simulate(const std::string& env_path, int replicas, double horizon, std::int64_t seed,
                 const std::string& x0_spec, const std::string& traj_csv,
                 const std::string& json_out) {
    EnvironmentTorus env = load_env(env_path);
    const int d = env.dim();
    std::vector<std::int64_t> x0(d, 0);
    if (!x0_spec.empty()) {
        auto parts = parse_int_list(x0_spec);
        if (int(parts.size()) != d) throw UsageError("--x0 needs exactly d coordinates");
        x0 = parts;
    }

    double sum_jumps = 0.0, sum_sq_disp = 0.0;
    std::vector<double> mean_x(d, 0.0);
    for (int r = 0; r < replicas; ++r) {
        Trajectory traj = simulate_vsrw(env, x0, horizon, rng_key(std::uint64_t(seed), std::uint64_t(r)));
        sum_jumps += double(traj.jumps());
        auto xT = traj.position_at(horizon);
        double sq = 0.0;
        for (int a = 0; a < d; ++a) {
            double dx = double(xT[a] - x0[a]);
            sq += dx * dx;
            mean_x[a] += dx;
        }
        sum_sq_disp += sq;
        if (r == 0 && !traj_csv.empty()) {
            std::vector<std::string> header = {"t"};
            for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a + 1));
            CsvTable t(header);
            std::vector<std::string> row = {fd(0.0)};
            for (int a = 0; a < d; ++a) row.push_back(std::to_string(x0[a]));
            t.row(row);
            for (std::size_t k = 0; k < traj.jumps(); ++k) {
                row.clear();
                row.push_back(fd(traj.times[k]));
                for (int a = 0; a < d; ++a)
                    row.push_back(std::to_string(traj.positions[k * std::size_t(d) + a]));
                t.row(row);
            }
            atomic_write_file(traj_csv, t.text);
        }
    }
    const double mean_jumps = sum_jumps / replicas;
    const double mean_sq = sum_sq_disp / replicas;
    std::printf("replicas=%d horizon=%s mean_jumps=%s mean_sq_displacement=%s\n", replicas,
                fd(horizon).c_str(), fd(mean_jumps).c_str(), fd(mean_sq).c_str());
    if (!json_out.empty()) {
        ordered_json j;
        j["replicas"] = replicas;
        j["horizon"] = horizon;
        j["mean_jumps"] = mean_jumps;
        j["mean_sq_displacement"] = mean_sq;
        for (auto& v : mean_x) v /= replicas;
        j["mean_displacement"] = mean_x;
        atomic_write_file(json_out, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_inequality_lab(const std::string& env_path, double p, double q, std::int64_t n,
                       int instances, int trials, std::int64_t seed, const std::string& csv_out,
                       const std::string& json_out) {
    EnvironmentTorus env = load_env(env_path);
    const int d = env.dim();
    if (d < 2) throw UsageError("inequality-lab needs d >= 2");
    if (2 * n + 1 > env.side()) throw UsageError("box scale n too large for this torus");
    const std::uint64_t sd = std::uint64_t(seed);

    std::vector<InequalityResult> rows;
    auto push = [&](InequalityResult r, std::int64_t instance) {
        r.witness_site = instance;
        rows.push_back(std::move(r));
    };

    push(weak_sector_check(env, trials, sd), -1);
    push(h_minus_one_check(env, trials, sd), -1);

    // empirical weighted Sobolev / local Poincare constants on trial fields
    {
        RngStream rng(rng_key(sd, 0x50B0));
        std::vector<std::int64_t> center(d, env.side() / 2);
        auto offsets = box_offsets(d, n);
        std::vector<double> u(offsets.size());
        double ws_best = 0.0, lp_best = 0.0;
        for (int t = 0; t < trials; ++t) {
            for (auto& v : u) v = rng.next_normal();
            ws_best = std::max(ws_best, weighted_sobolev_check(env, center, n, u, q).ratio);
            lp_best = std::max(lp_best, local_poincare_check(env, center, n, u, q).ratio);
        }
        InequalityResult ws = make_inequality_result("weighted_sobolev_constant", ws_best, ws_best, ws_best);
        InequalityResult lp = make_inequality_result("local_poincare_constant", lp_best, lp_best, lp_best);
        push(ws, -1);
        push(lp, -1);
    }

    BoxProblem box;
    box.center = std::vector<std::int64_t>(d, env.side() / 2);
    box.n = n;
    box.sigma = 1.0;
    box.sigma_prime = 0.5;

    // harmonic instances with random boundary data
    std::vector<HarmonicField> fields;
    auto offsets = box_offsets(d, box.outer_radius());
    for (int inst = 0; inst < instances; ++inst) {
        RngStream rng(rng_key(sd, 0xB0DA, std::uint64_t(inst)));
        std::vector<double> g(offsets.size(), 0.0);
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            std::int64_t h = 0;
            for (auto c : offsets[i]) h = std::max(h, std::abs(c));
            if (h == box.outer_radius()) g[i] = rng.next_uniform(-1.0, 1.0);
        }
        fields.push_back(dirichlet_harmonic(env, box, g));
        push(energy_estimate_check(env, fields.back(), p), inst);
    }

    // calibrated constants, then the maximal pipeline on every instance
    const double c2 = calibrate_c2(d, box, p, trials, sd);
    std::vector<std::pair<std::int64_t, std::vector<double>>> extra;
    const std::int64_t w_out = 2 * box.outer_radius() + 1;
    for (const auto& hf : fields) {
        double umax = 0.0;
        for (double v : hf.u) umax = std::max(umax, std::fabs(v));
        for (int m = 0; m < 4; ++m) {
            const double sig = box.sigma_prime + (box.sigma - box.sigma_prime) * std::pow(0.5, m);
            const std::int64_t r = std::int64_t(std::floor(sig * double(n) + 1e-12));
            BoxProblem level_box = box;
            level_box.sigma = sig;
            auto sub = box_offsets(d, r);
            for (int li = 0; li < 6; ++li) {
                const double level = umax * double(li) / 6.0;
                std::vector<double> f(sub.size());
                for (std::size_t i = 0; i < sub.size(); ++i) {
                    std::int64_t idx = 0;
                    for (auto c : sub[i]) idx = idx * w_out + (c + box.outer_radius());
                    f[i] = level_box.eta(sub[i]) * std::max(std::fabs(hf.u[idx]) - level, 0.0);
                }
                extra.emplace_back(r, std::move(f));
            }
        }
    }
    const double c_ws = calibrate_c_ws(env, box.center, box.outer_radius(), q, trials, sd, extra);

    MaximalConstants consts{c2, c_ws};
    bool recursion_all = true, superlevel_all = true;
    for (int inst = 0; inst < instances; ++inst) {
        MaximalInequalityResult mr = maximal_inequality_check(env, fields[inst], p, q, consts);
        push(mr.main, inst);
        recursion_all = recursion_all && mr.recursion_ok;
        superlevel_all = superlevel_all && mr.superlevel_empty;
    }

    bool all_pass = recursion_all && superlevel_all;
    for (const auto& r : rows) all_pass = all_pass && r.pass;

    if (!csv_out.empty()) {
        CsvTable t({"check", "instance", "lhs", "rhs", "constant", "ratio", "pass"});
        for (const auto& r : rows)
            t.row({r.check, std::to_string(r.witness_site), fd(r.lhs), fd(r.rhs),
                   fd(r.constant_used), fd(r.ratio), r.pass ? "1" : "0"});
        atomic_write_file(csv_out, t.text);
    }
    if (!json_out.empty()) {
        ordered_json j;
        j["constants"] = {{"C2", c2}, {"C_WS", c_ws}, {"C_En", 2.5}, {"calibrated", true}};
        j["note"] = "C2 and C_WS are empirical calibrations from trial fields, not proven bounds";
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows) arr.push_back(inequality_to_json(r));
        j["results"] = arr;
        j["recursion_ok"] = recursion_all;
        j["superlevel_empty"] = superlevel_all;
        j["all_pass"] = all_pass;
        // unweighted lattice constants: |B(n)|, |B(n)|/n^d and best observed
        // Sobolev/Poincare ratios over randomized trials
        ordered_json lat = ordered_json::array();
        for (const auto& row : lattice_inequality_constants(d, {2, 4, 8}, trials, sd))
            lat.push_back({{"n", row.n},
                           {"volume", row.volume},
                           {"volume_ratio", row.volume_ratio},
                           {"sobolev_best", row.sobolev_best},
                           {"poincare_best", row.poincare_best}});
        j["lattice_constants"] = lat;
        atomic_write_file(json_out, j.dump(2) + "\n");
    }
    std::printf("inequality lab: %zu results, C2=%s C_WS=%s, %s\n", rows.size(), fd(c2).c_str(),
                fd(c_ws).c_str(), all_pass ? "all pass" : "FAILURES PRESENT");
    return all_pass ? 0 : 1;
}

int cmd_qfclt_report(const std::string& config_path, std::int64_t seed_flag, int threads,
                     const std::string& out_dir) {
    ordered_json j = parse_json_file(config_path);
    ExperimentConfig cfg = experiment_config_from_json(j);
    if (seed_flag >= 0) cfg.seed = std::uint64_t(seed_flag);
    if (threads > 0) cfg.threads = threads;
    QfcltReport rep = run_qfclt_experiment(cfg);

    const int d = cfg.d;
    ordered_json out;
    out["seed"] = cfg.seed;
    out["L"] = cfg.L;
    out["alt_side"] = rep.alt_side;
    out["alpha"] = rep.alpha;
    out["final_lambda"] = rep.final_lambda;
    out["lambda_bounds_ok"] = rep.lambda_bounds_ok;
    out["sigma2"] = rep.sigma2;
    out["sigma2_eigenvalues"] = rep.sigma2_eigs;
    out["sigma2_alt"] = rep.sigma2_alt;
    out["sigma2_alt_rel_diff"] = rep.sigma2_alt_rel_diff;
    out["identity_max_rel_err"] = rep.identity_max_rel_err;
    ordered_json scales = ordered_json::array();
    for (const auto& s : rep.scales) {
        ordered_json js;
        js["n"] = s.n;
        js["emp_mean"] = s.emp_mean;
        js["emp_cov"] = s.emp_cov;
        js["frob_rel_err"] = s.frob_rel_err;
        js["mean_jumps"] = s.mean_jumps;
        ordered_json ks = ordered_json::array();
        for (const auto& k : s.ks)
            ks.push_back({{"v_index", k.v_index},
                          {"statistic", k.statistic},
                          {"p_value", k.p_value},
                          {"rejected", k.rejected}});
        js["ks"] = ks;
        ordered_json h1 = ordered_json::array();
        for (const auto& h : s.h1_error) h1.push_back({{"mean", h.mean}, {"stderr", h.stderr_}});
        js["h1_error"] = h1;
        ordered_json h2 = ordered_json::array();
        for (const auto& h : s.h2)
            h2.push_back({{"v_index", h.v_index},
                          {"eps", h.eps},
                          {"mean", h.compensator.mean},
                          {"stderr", h.compensator.stderr_}});
        js["h2"] = h2;
        js["vanish_freq"] = s.vanish_freq;
        js["vanish_stderr"] = s.vanish_stderr;
        scales.push_back(js);
    }
    out["scales"] = scales;

    const std::string base = out_dir.empty() ? std::string(".") : out_dir;
    atomic_write_file(base + "/qfclt_report.json", out.dump(2) + "\n");

    std::vector<std::string> cov_header = {"n"};
    for (int i = 0; i < d; ++i)
        for (int jj = 0; jj < d; ++jj)
            cov_header.push_back("cov" + std::to_string(i + 1) + std::to_string(jj + 1));
    cov_header.push_back("frob_err");
    CsvTable cov_csv(cov_header);
    CsvTable ks_csv({"n", "v_index", "ks", "p"});
    CsvTable van_csv({"n", "eps", "exceed_freq", "stderr"});
    for (const auto& s : rep.scales) {
        std::vector<std::string> row = {std::to_string(s.n)};
        for (double v : s.emp_cov) row.push_back(fd(v));
        row.push_back(fd(s.frob_rel_err));
        cov_csv.row(row);
        for (const auto& k : s.ks)
            ks_csv.row({std::to_string(s.n), std::to_string(k.v_index), fd(k.statistic), fd(k.p_value)});
        van_csv.row({std::to_string(s.n), fd(cfg.eps_vanish), fd(s.vanish_freq), fd(s.vanish_stderr)});
    }
    atomic_write_file(base + "/qfclt_covariance.csv", cov_csv.text);
    atomic_write_file(base + "/qfclt_ks.csv", ks_csv.text);
    atomic_write_file(base + "/qfclt_vanish.csv", van_csv.text);

    std::printf("qfclt report written to %s (lambda bounds %s, identity err %s)\n", base.c_str(),
                rep.lambda_bounds_ok ? "ok" : "VIOLATED", fd(rep.identity_max_rel_err).c_str());
    return rep.lambda_bounds_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclewalk: cycle-decomposed random environments, correctors and invariance-principle diagnostics"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-env", "sample an environment and write a snapshot");
    std::string gen_config, gen_out = "env.bin";
    std::int64_t gen_seed = -1, gen_L = -1;
    int gen_d = -1;
    gen->add_option("--config", gen_config, "environment config JSON")->required();
    gen->add_option("--out", gen_out, "snapshot output path");
    gen->add_option("--seed", gen_seed, "seed override");
    gen->add_option("--d", gen_d, "dimension override");
    gen->add_option("--L", gen_L, "torus side override");

    auto* chk = app.add_subcommand("check-env", "validate a stored environment");
    std::string chk_env, chk_json;
    chk->add_option("--env", chk_env, "environment snapshot")->required();
    chk->add_option("--json", chk_json, "write the report as JSON");

    auto* slv = app.add_subcommand("solve-corrector", "lambda continuation for the corrector");
    std::string slv_env, slv_out, slv_schedule = "1e-1:1e-5:5", slv_sublin, slv_ngrid = "4,8,16";
    double slv_tol = 1e-10, slv_q = 4.0;
    slv->add_option("--env", slv_env, "environment snapshot")->required();
    slv->add_option("--lambda-schedule", slv_schedule, "geometric schedule from:to:points");
    slv->add_option("--tol", slv_tol, "solver tolerance");
    slv->add_option("--out", slv_out, "corrector snapshot output");
    slv->add_option("--sublinearity-csv", slv_sublin, "write the sublinearity table");
    slv->add_option("--n-grid", slv_ngrid, "comma-separated box radii for sublinearity");
    slv->add_option("--q", slv_q, "q for the rho exponent");

    auto* sig = app.add_subcommand("estimate-sigma", "effective covariance from the corrector");
    std::string sig_env, sig_json, sig_csv, sig_schedule = "1e-1:1e-5:5";
    double sig_tol = 1e-10;
    sig->add_option("--env", sig_env, "environment snapshot")->required();
    sig->add_option("--lambda-schedule", sig_schedule, "geometric schedule from:to:points");
    sig->add_option("--tol", sig_tol, "solver tolerance");
    sig->add_option("--json", sig_json, "write JSON summary");
    sig->add_option("--csv", sig_csv, "write sigma2 as CSV");

    auto* sim = app.add_subcommand("simulate", "run VSRW replicas");
    std::string sim_env, sim_x0, sim_traj, sim_json;
    int sim_replicas = 100;
    double sim_T = 1.0;
    std::int64_t sim_seed = 1;
    sim->add_option("--env", sim_env, "environment snapshot")->required();
    sim->add_option("--replicas", sim_replicas, "number of replicas");
    sim->add_option("--horizon", sim_T, "time horizon");
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--x0", sim_x0, "start point, comma-separated");
    sim->add_option("--traj-csv", sim_traj, "export the first trajectory as CSV");
    sim->add_option("--json", sim_json, "write summary JSON");

    auto* lab = app.add_subcommand("inequality-lab", "run the inequality checks");
    std::string lab_env, lab_csv, lab_json, lab_p = "4", lab_q = "4";
    std::int64_t lab_n = 8, lab_seed = 1;
    int lab_instances = 10, lab_trials = 200;
    lab->add_option("--env", lab_env, "environment snapshot")->required();
    lab->add_option("--p", lab_p, "moment parameter p (number or inf)");
    lab->add_option("--q", lab_q, "moment parameter q (number or inf)");
    lab->add_option("--n", lab_n, "box scale");
    lab->add_option("--instances", lab_instances, "harmonic instances");
    lab->add_option("--trials", lab_trials, "random trial fields per sweep");
    lab->add_option("--seed", lab_seed, "master seed");
    lab->add_option("--csv", lab_csv, "write per-check CSV");
    lab->add_option("--json", lab_json, "write JSON summary");

    auto* rep = app.add_subcommand("qfclt-report", "end-to-end invariance-principle report");
    std::string rep_config, rep_dir = ".";
    std::int64_t rep_seed = -1;
    int rep_threads = 0;
    rep->add_option("--config", rep_config, "experiment config JSON")->required();
    rep->add_option("--seed", rep_seed, "seed override");
    rep->add_option("--threads", rep_threads, "worker threads");
    rep->add_option("--out-dir", rep_dir, "output directory");

    auto* ver = app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ver->parsed()) {
            std::printf("cyclewalk %s\n", kVersion);
            return 0;
        }
        if (gen->parsed()) return cmd_gen_env(gen_config, gen_seed, gen_d, gen_L, gen_out);
        if (chk->parsed()) return cmd_check_env(chk_env, chk_json);
        if (slv->parsed())
            return cmd_solve_corrector(slv_env, slv_schedule, slv_tol, slv_out, slv_sublin,
                                       slv_ngrid, slv_q);
        if (sig->parsed()) return cmd_estimate_sigma(sig_env, sig_schedule, sig_tol, sig_json, sig_csv);
        if (sim->parsed())
            return cmd_simulate(sim_env, sim_replicas, sim_T, sim_seed, sim_x0, sim_traj, sim_json);
        if (lab->parsed()) {
            double p = lab_p == "inf" ? std::numeric_limits<double>::infinity() : std::stod(lab_p);
            double q = lab_q == "inf" ? std::numeric_limits<double>::infinity() : std::stod(lab_q);
            return cmd_inequality_lab(lab_env, p, q, lab_n, lab_instances, lab_trials, lab_seed,
                                      lab_csv, lab_json);
        }
        if (rep->parsed()) return cmd_qfclt_report(rep_config, rep_seed, rep_threads, rep_dir);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const SolverFailure& e) {
        std::fprintf(stderr, "solver failure: %s (best residual %g)\n", e.what(), e.best_residual);
        return 3;
    } catch (const NumericFailure& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
