// environment.hpp
// Sampled cycle-weight fields on a torus and every derived quantity: directed
// edge rates assembled from the cycle superposition, their symmetric and
// antisymmetric parts, the site measures mu / nu / mu^(k) and the local drift.
//
// Assembly is a per-site gather over a fixed (shape, tail-vertex) list, so the
// result is translation-covariant bit for bit: shifting the weight fields and
// reassembling equals index-shifting the assembled tables.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "cyclewalk/cycles.hpp"
#include "cyclewalk/lattice.hpp"

namespace cyclewalk {

struct EnvironmentTorus {
    TorusGeom geom{1, 1};
    CycleCatalog catalog;
    std::uint64_t seed = 0;

    // sampled cycle weights, one field per shape (row-major sites, axis 0 slowest)
    std::vector<std::vector<double>> weights;

    // assembled, direction-major tables of length geom.sites()
    std::vector<std::vector<double>> rate;       // c(x, x+z_k)
    std::vector<std::vector<double>> rate_sym;   // c_s
    std::vector<std::vector<double>> rate_asym;  // c_a

    std::vector<double> mu;        // sum_z c_s(x, x+z)
    std::vector<double> nu;        // sum_z 1/c_s(x, x+z)
    std::array<std::vector<double>, 4> mu_moment;  // mu^(0..3)
    std::vector<double> out_rate;  // sum_z c(x, x+z), the walker's jump rate
    std::vector<std::vector<double>> drift;        // axis-major local drift V^i

    int dim() const { return geom.d(); }
    std::int64_t side() const { return geom.side(); }
    std::int64_t sites() const { return geom.sites(); }
    int ndirs() const { return geom.ndirs(); }

    double c(std::int64_t site, int dir) const { return rate[dir][site]; }
    double cs(std::int64_t site, int dir) const { return rate_sym[dir][site]; }

    bool assembled() const { return !rate.empty(); }
    double min_cs() const;
    double max_abs_ca() const;
};

// Draw weights per (shape, base site) from the shape's law using streams keyed
// by (seed, shape index, site index), then assemble. Requires
// L >= 2*max_diameter + 1 (no cycle self-wraps) and per-direction assembled
// ellipticity of the catalog (no direction can end up with zero rate a.s.).
EnvironmentTorus sample_environment(const CycleCatalog& catalog, int d, std::int64_t L,
                                    std::uint64_t seed);

// Build an environment from externally supplied weight fields.
EnvironmentTorus make_environment(const CycleCatalog& catalog, int d, std::int64_t L,
                                  std::uint64_t seed,
                                  std::vector<std::vector<double>> weights);

// (Re)compute every assembled field from env.weights.
void assemble_edge_weights(EnvironmentTorus& env);

// Local drift V^i(x) = sum_z c(x, x+z) z^i, one field per axis.
const std::vector<std::vector<double>>& local_drift(const EnvironmentTorus& env);

// Environment with all fields translated by z: c'(x, y) = c(x+z, y+z) exactly.
EnvironmentTorus shift_environment(const EnvironmentTorus& env,
                                   const std::vector<std::int64_t>& z);

// Structural identities of the assembled environment: double stochasticity,
// |c_a| <= c_s, ellipticity, measure consistency, moment monotonicity,
// drift cancellation, the symmetry flag.
ValidationReport check_env_invariants(const EnvironmentTorus& env);

}  // namespace cyclewalk
