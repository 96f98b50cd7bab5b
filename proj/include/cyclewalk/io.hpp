// io.hpp
// Config parsing (JSON), environment / corrector snapshots (JSON header plus
// raw little-endian float64 sections), CSV emission with RFC 4180 quoting, and
// atomic file writes.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cyclewalk/corrector.hpp"
#include "cyclewalk/environment.hpp"
#include "cyclewalk/qfclt.hpp"

#include "json.hpp"

namespace cyclewalk {

using ordered_json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

// strict double formatting used in every CSV/JSON so identical runs produce
// byte-identical report files
std::string fmt_double(double v);

std::string csv_escape(const std::string& field);
std::string csv_line(const std::vector<std::string>& fields);

void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

ordered_json parse_json_file(const std::string& path);

// "inf" <-> infinity sentinel for the moment parameters p, q
double moment_param_from_json(const ordered_json& j, const std::string& key, double fallback);

WeightLaw law_from_json(const ordered_json& j);
ordered_json law_to_json(const WeightLaw& law);

CycleCatalog catalog_from_json(int d, const ordered_json& j);
ordered_json catalog_to_json(const CycleCatalog& catalog);

struct EnvConfig {
    int d = 2;
    std::int64_t L = 16;
    std::uint64_t seed = 1;
    CycleCatalog catalog;
};
EnvConfig env_config_from_json(const ordered_json& j);

// environment snapshot: magic, u64 header length, header JSON, then one
// row-major little-endian float64 weight field per shape
void save_env(const EnvironmentTorus& env, const std::string& path);
EnvironmentTorus load_env(const std::string& path);

// corrector snapshot: JSON header (lambda, norms, sigma2, residuals) plus the
// phi fields as raw little-endian float64
void save_solution(const EnvironmentTorus& env, const CorrectorSolution& sol,
                   const std::string& path);
CorrectorSolution load_solution(const EnvironmentTorus& env, const std::string& path);

// lambda schedule: geometric "from:to:points" or an explicit JSON array
std::vector<double> parse_lambda_schedule(const std::string& spec);
std::vector<double> lambda_schedule_from_json(const ordered_json& j);

ExperimentConfig experiment_config_from_json(const ordered_json& j);

}  // namespace cyclewalk
