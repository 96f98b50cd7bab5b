#include "cyclewalk/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace cyclewalk {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    bool need = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!need) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ",";
        out += csv_escape(fields[i]);
    }
    out += "\r\n";
    return out;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("cannot open for writing: " + tmp);
        f.write(content.data(), std::streamsize(content.size()));
        if (!f) throw UsageError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw UsageError("atomic rename failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ordered_json parse_json_file(const std::string& path) {
    std::string text = read_file(path);
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("JSON parse error in " + path + ": " + e.what());
    }
}

double moment_param_from_json(const ordered_json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw UsageError("field '" + key + "': expected a number or \"inf\"");
    }
    return v.get<double>();
}

WeightLaw law_from_json(const ordered_json& j) {
    if (!j.contains("kind")) throw UsageError("law: missing field 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    auto need = [&](const char* key) -> double {
        if (!j.contains(key)) throw UsageError("law '" + kind + "': missing field '" + key + "'");
        return j.at(key).get<double>();
    };
    WeightLaw law;
    if (kind == "constant") law = WeightLaw::constant(need("value"));
    else if (kind == "uniform") law = WeightLaw::uniform(need("low"), need("high"));
    else if (kind == "pareto") law = WeightLaw::pareto(need("scale"), need("tail"));
    else if (kind == "lognormal") law = WeightLaw::lognormal(need("location"), need("scale"));
    else throw UsageError("law: unknown kind '" + kind + "'");
    law.validate();
    return law;
}

ordered_json law_to_json(const WeightLaw& law) {
    ordered_json j;
    j["kind"] = law.kind_name();
    switch (law.kind) {
        case LawKind::constant: j["value"] = law.a; break;
        case LawKind::uniform: j["low"] = law.a; j["high"] = law.b; break;
        case LawKind::pareto: j["scale"] = law.a; j["tail"] = law.b; break;
        case LawKind::lognormal: j["location"] = law.a; j["scale"] = law.b; break;
    }
    return j;
}

CycleCatalog catalog_from_json(int d, const ordered_json& j) {
    CycleCatalog cat;
    if (j.contains("presets")) {
        for (const auto& p : j.at("presets")) {
            const std::string name = p.at("name").get<std::string>();
            CycleCatalog part;
            if (name == "srw") {
                part = preset_srw(d);
            } else if (name == "nn") {
                part = preset_nn(d, law_from_json(p.at("law")));
            } else if (name == "plaquette") {
                part = preset_plaquette(d, law_from_json(p.at("law")));
            } else {
                throw UsageError("catalog: unknown preset '" + name + "'");
            }
            for (std::size_t s = 0; s < part.shapes.size(); ++s) {
                cat.shapes.push_back(part.shapes[s]);
                cat.laws.push_back(part.laws[s]);
            }
        }
    }
    if (j.contains("shapes")) {
        for (const auto& s : j.at("shapes")) {
            std::vector<std::vector<std::int64_t>> steps;
            for (const auto& st : s.at("steps")) {
                std::vector<std::int64_t> v;
                for (const auto& c : st) v.push_back(c.get<std::int64_t>());
                steps.push_back(std::move(v));
            }
            try {
                cat.shapes.emplace_back(d, steps);
            } catch (const InvalidShape& e) {
                throw UsageError(std::string("catalog shape: ") + e.what());
            }
            cat.laws.push_back(law_from_json(s.at("law")));
        }
    }
    if (cat.shapes.empty()) throw UsageError("catalog: no presets or shapes given");
    return cat;
}

ordered_json catalog_to_json(const CycleCatalog& catalog) {
    ordered_json shapes = ordered_json::array();
    for (std::size_t s = 0; s < catalog.shapes.size(); ++s) {
        ordered_json js;
        ordered_json steps = ordered_json::array();
        for (const auto& st : catalog.shapes[s].steps_as_vectors()) steps.push_back(st);
        js["steps"] = steps;
        js["law"] = law_to_json(catalog.laws[s]);
        shapes.push_back(js);
    }
    ordered_json j;
    j["shapes"] = shapes;
    return j;
}

EnvConfig env_config_from_json(const ordered_json& j) {
    EnvConfig cfg;
    if (!j.contains("d")) throw UsageError("env config: missing field 'd'");
    if (!j.contains("L")) throw UsageError("env config: missing field 'L'");
    cfg.d = j.at("d").get<int>();
    cfg.L = j.at("L").get<std::int64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (!j.contains("catalog")) throw UsageError("env config: missing field 'catalog'");
    cfg.catalog = catalog_from_json(cfg.d, j.at("catalog"));
    return cfg;
}

// ------------------------------------------------------------- snapshots ---

static void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
static std::uint64_t read_u64_le(const std::string& s, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(s[at + i])) << (8 * i);
    return v;
}

static void append_f64_le(std::string& out, const double* data, std::size_t count) {
    static_assert(sizeof(double) == 8);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], 8);
        append_u64_le(out, bits);
    }
}
static void read_f64_le(const std::string& s, std::size_t at, double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = read_u64_le(s, at + 8 * i);
        std::memcpy(&data[i], &bits, 8);
    }
}

static const char kEnvMagic[9] = "CYWKENV1";
static const char kSolMagic[9] = "CYWKSOL1";

void save_env(const EnvironmentTorus& env, const std::string& path) {
    ordered_json header;
    header["format"] = "cyclewalk-env";
    header["version"] = 1;
    header["d"] = env.dim();
    header["L"] = env.side();
    header["seed"] = env.seed;
    header["catalog"] = catalog_to_json(env.catalog);
    std::string htext = header.dump();

    std::string out(kEnvMagic, 8);
    append_u64_le(out, htext.size());
    out += htext;
    for (const auto& w : env.weights) append_f64_le(out, w.data(), w.size());
    atomic_write_file(path, out);
}

EnvironmentTorus load_env(const std::string& path) {
    std::string s = read_file(path);
    if (s.size() < 16 || std::memcmp(s.data(), kEnvMagic, 8) != 0)
        throw UsageError("not an environment snapshot: " + path);
    std::uint64_t hlen = read_u64_le(s, 8);
    if (16 + hlen > s.size()) throw UsageError("truncated environment snapshot: " + path);
    ordered_json header;
    try {
        header = ordered_json::parse(s.substr(16, hlen));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("snapshot header parse error: " + std::string(e.what()));
    }
    if (header.value("version", 0) != 1)
        throw UsageError("unsupported snapshot version in " + path);
    const int d = header.at("d").get<int>();
    const std::int64_t L = header.at("L").get<std::int64_t>();
    const std::uint64_t seed = header.at("seed").get<std::uint64_t>();
    CycleCatalog cat = catalog_from_json(d, header.at("catalog"));

    TorusGeom geom(d, L);
    const std::size_t n = std::size_t(geom.sites());
    const std::size_t need = 16 + hlen + cat.shapes.size() * n * 8;
    if (s.size() != need) throw UsageError("environment snapshot has wrong payload size: " + path);
    std::vector<std::vector<double>> weights(cat.shapes.size(), std::vector<double>(n));
    std::size_t at = 16 + hlen;
    for (auto& w : weights) {
        read_f64_le(s, at, w.data(), n);
        at += n * 8;
    }
    return make_environment(cat, d, L, seed, std::move(weights));
}

void save_solution(const EnvironmentTorus& env, const CorrectorSolution& sol,
                   const std::string& path) {
    ordered_json header;
    header["format"] = "cyclewalk-corrector";
    header["version"] = 1;
    header["d"] = env.dim();
    header["L"] = env.side();
    header["lambda"] = sol.lambda;
    header["alpha"] = sol.alpha;
    header["dphi_cov_norm"] = sol.dphi_cov_norm;
    header["phi_l2mu_norm"] = sol.phi_l2mu_norm;
    header["solver_residual"] = sol.solver_residual;
    header["sigma2"] = sol.sigma2;
    header["sigma2_eigenvalues"] = sol.sigma2_eigs;
    header["harmonic_residual_inf"] = sol.harmonic_residual_inf;
    std::string htext = header.dump();

    std::string out(kSolMagic, 8);
    append_u64_le(out, htext.size());
    out += htext;
    for (const auto& phi : sol.phi) append_f64_le(out, phi.data(), phi.size());
    atomic_write_file(path, out);
}

CorrectorSolution load_solution(const EnvironmentTorus& env, const std::string& path) {
    std::string s = read_file(path);
    if (s.size() < 16 || std::memcmp(s.data(), kSolMagic, 8) != 0)
        throw UsageError("not a corrector snapshot: " + path);
    std::uint64_t hlen = read_u64_le(s, 8);
    if (16 + hlen > s.size()) throw UsageError("truncated corrector snapshot: " + path);
    ordered_json header;
    try {
        header = ordered_json::parse(s.substr(16, hlen));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("snapshot header parse error: " + std::string(e.what()));
    }
    if (header.value("version", 0) != 1) throw UsageError("unsupported snapshot version in " + path);
    if (header.at("d").get<int>() != env.dim() || header.at("L").get<std::int64_t>() != env.side())
        throw UsageError("corrector snapshot does not match the environment geometry");

    CorrectorSolution sol;
    sol.lambda = header.at("lambda").get<double>();
    sol.alpha = header.at("alpha").get<double>();
    sol.dphi_cov_norm = header.at("dphi_cov_norm").get<std::vector<double>>();
    sol.phi_l2mu_norm = header.at("phi_l2mu_norm").get<std::vector<double>>();
    sol.solver_residual = header.at("solver_residual").get<std::vector<double>>();
    sol.sigma2 = header.at("sigma2").get<std::vector<double>>();
    sol.sigma2_eigs = header.at("sigma2_eigenvalues").get<std::vector<double>>();
    sol.harmonic_residual_inf = header.at("harmonic_residual_inf").get<std::vector<double>>();

    const int d = env.dim();
    const std::size_t n = std::size_t(env.sites());
    if (s.size() != 16 + hlen + std::size_t(d) * n * 8)
        throw UsageError("corrector snapshot has wrong payload size: " + path);
    sol.phi.assign(d, std::vector<double>(n));
    std::size_t at = 16 + hlen;
    for (auto& phi : sol.phi) {
        read_f64_le(s, at, phi.data(), n);
        at += n * 8;
    }
    sol.chi.assign(d, {});
    for (int i = 0; i < d; ++i) {
        sol.chi[i] = sol.phi[i];
        const double base = sol.phi[i][0];
        for (double& v : sol.chi[i]) v -= base;
    }
    return sol;
}

std::vector<double> parse_lambda_schedule(const std::string& spec) {
    // "from:to:points", geometric
    double from = 0.0, to = 0.0;
    int points = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &from, &to, &points) != 3)
        throw UsageError("lambda schedule: expected from:to:points, got '" + spec + "'");
    if (!(from > 0.0) || !(to > 0.0) || !(to < from) || points < 1)
        throw UsageError("lambda schedule: need from > to > 0 and points >= 1");
    std::vector<double> out;
    if (points == 1) {
        out.push_back(from);
        return out;
    }
    const double ratio = std::pow(to / from, 1.0 / double(points - 1));
    double v = from;
    for (int i = 0; i < points; ++i) {
        out.push_back(i + 1 == points ? to : v);
        v *= ratio;
    }
    return out;
}

std::vector<double> lambda_schedule_from_json(const ordered_json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_string()) return parse_lambda_schedule(j.get<std::string>());
    if (j.is_object()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.17g:%.17g:%d", j.at("from").get<double>(),
                      j.at("to").get<double>(), j.at("points").get<int>());
        return parse_lambda_schedule(buf);
    }
    throw UsageError("lambda_schedule: expected array, string or {from,to,points}");
}

ExperimentConfig experiment_config_from_json(const ordered_json& j) {
    ExperimentConfig cfg;
    if (!j.contains("env")) throw UsageError("experiment config: missing field 'env'");
    EnvConfig env = env_config_from_json(j.at("env"));
    cfg.catalog = env.catalog;
    cfg.d = env.d;
    cfg.L = env.L;
    cfg.seed = env.seed;
    cfg.lambda_schedule = j.contains("lambda_schedule")
                              ? lambda_schedule_from_json(j.at("lambda_schedule"))
                              : parse_lambda_schedule("1e-1:1e-5:5");
    if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
    else cfg.n_grid = {4, 8, 16};
    if (j.contains("replicas")) cfg.replicas = j.at("replicas").get<int>();
    if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<double>();
    if (j.contains("directions"))
        cfg.directions = j.at("directions").get<std::vector<std::vector<double>>>();
    else {
        for (int i = 0; i < cfg.d; ++i) {
            std::vector<double> e(cfg.d, 0.0);
            e[i] = 1.0;
            cfg.directions.push_back(e);
        }
    }
    if (j.contains("significance")) cfg.significance = j.at("significance").get<double>();
    if (j.contains("eps_grid")) cfg.eps_grid = j.at("eps_grid").get<std::vector<double>>();
    else cfg.eps_grid = {0.05, 0.1, 0.2};
    if (j.contains("eps_vanish")) cfg.eps_vanish = j.at("eps_vanish").get<double>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("alt_side")) cfg.alt_side = j.at("alt_side").get<std::int64_t>();
    if (j.contains("solver_tol")) cfg.solver_tol = j.at("solver_tol").get<double>();
    return cfg;
}

}  // namespace cyclewalk
