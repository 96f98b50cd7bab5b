// Environment model: shape validation, neighbor covering, edge-weight
// assembly against an independent scatter-loop oracle, structural identities,
// shift covariance and sampling determinism.

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "cyclewalk/environment.hpp"

using namespace cyclewalk;

namespace {

std::vector<std::int64_t> step(int d, int axis, int sign) {
    std::vector<std::int64_t> s(d, 0);
    s[axis] = sign;
    return s;
}

CycleShape plaquette_shape(int d = 2) {
    return CycleShape(d, {step(d, 0, +1), step(d, 1, +1), step(d, 0, -1), step(d, 1, -1)});
}

// Independent oracle: scatter over every (shape, base, step) triple, walking
// the cycle vertex by vertex, into a (site, dir) -> rate map.
std::map<std::pair<std::int64_t, int>, double> assemble_oracle(const EnvironmentTorus& env) {
    std::map<std::pair<std::int64_t, int>, double> c;
    for (std::size_t s = 0; s < env.catalog.shapes.size(); ++s) {
        const CycleShape& sh = env.catalog.shapes[s];
        for (std::int64_t b = 0; b < env.sites(); ++b) {
            const double w = env.weights[s][b];
            std::vector<std::int64_t> pos = env.geom.coords_of(b);
            std::int64_t site = b;
            for (int j = 0; j < sh.length(); ++j) {
                const int k = sh.step_dirs()[j];
                c[{site, k}] += w;
                pos[dir_axis(k)] += dir_sign(k);
                site = env.geom.wrap_index(pos);
            }
        }
    }
    return c;
}

double max_rel_assembly_diff(const EnvironmentTorus& env) {
    auto oracle = assemble_oracle(env);
    double worst = 0.0;
    for (std::int64_t x = 0; x < env.sites(); ++x) {
        for (int k = 0; k < env.ndirs(); ++k) {
            auto it = oracle.find({x, k});
            const double expect = it == oracle.end() ? 0.0 : it->second;
            const double got = env.rate[k][x];
            worst = std::max(worst, std::fabs(got - expect) / std::max({expect, got, 1.0}));
        }
    }
    return worst;
}

EnvironmentTorus mixed_env(int d, std::int64_t L, std::uint64_t seed) {
    CycleCatalog cat = preset_nn(d, WeightLaw::uniform(0.5, 1.5));
    if (d >= 2) {
        CycleCatalog pl = preset_plaquette(d, WeightLaw::uniform(0.2, 1.2));
        for (std::size_t s = 0; s < pl.shapes.size(); ++s) {
            cat.shapes.push_back(pl.shapes[s]);
            cat.laws.push_back(pl.laws[s]);
        }
    }
    return sample_environment(cat, d, L, seed);
}

}  // namespace

TEST_CASE("cycle shapes: construction enforces the structural invariants") {
    CHECK_NOTHROW(CycleShape(2, {step(2, 0, 1), step(2, 0, -1)}));
    CHECK_NOTHROW(plaquette_shape());
    // not a unit vector
    CHECK_THROWS_AS(CycleShape(2, {{1, 1}, {-1, -1}}), InvalidShape);
    CHECK_THROWS_AS(CycleShape(2, {{2, 0}, {-2, 0}}), InvalidShape);
    // too short
    CHECK_THROWS_AS(CycleShape(2, {step(2, 0, 1)}), InvalidShape);
    // does not close
    CHECK_THROWS_AS(CycleShape(2, {step(2, 0, 1), step(2, 1, 1)}), InvalidShape);
    // revisits an intermediate vertex (out and back through the same site)
    CHECK_THROWS_AS(CycleShape(2, {step(2, 0, 1), step(2, 0, -1), step(2, 0, 1), step(2, 0, -1)}),
                    InvalidShape);
    CHECK(plaquette_shape().length() == 4);
    CHECK(plaquette_shape().diameter() == 1);
}

TEST_CASE("validate_catalog: covering of the neighbor set") {
    SUBCASE("all four 2-cycles cover both axes") {
        CycleCatalog cat = preset_nn(2, WeightLaw::constant(1.0));
        ValidationReport rep = validate_catalog(cat);
        CHECK(rep.find("covering")->pass);
        CHECK(covering_directions(cat).size() == 4);
    }
    SUBCASE("a single plaquette and its reversal cover only the positive axes") {
        CycleCatalog cat;
        cat.shapes.push_back(plaquette_shape());
        cat.shapes.emplace_back(
             2, std::vector<std::vector<std::int64_t>>{step(2, 1, +1), step(2, 0, +1),
                                                       step(2, 1, -1), step(2, 0, -1)});
        cat.laws.assign(2, WeightLaw::constant(1.0));
        ValidationReport rep = validate_catalog(cat);
        CHECK_FALSE(rep.find("covering")->pass);
        auto dirs = covering_directions(cat);
        // frozen expected covering set: {+e1, +e2}
        std::set<int> got(dirs.begin(), dirs.end());
        CHECK(got == std::set<int>{dir_index(0, +1), dir_index(1, +1)});
    }
    SUBCASE("four rotations of the plaquette plus four of its reversal cover") {
        CycleCatalog cat = preset_plaquette(2, WeightLaw::constant(1.0));
        CHECK(cat.shapes.size() == 8);
        CHECK(validate_catalog(cat).find("covering")->pass);
    }
    SUBCASE("empty catalog is rejected") {
        CycleCatalog cat;
        CHECK_THROWS_AS(validate_catalog(cat), InvalidInput);
    }
    SUBCASE("one axis only fails assembled ellipticity") {
        CycleCatalog cat;
        cat.shapes.emplace_back(2, std::vector<std::vector<std::int64_t>>{step(2, 0, 1), step(2, 0, -1)});
        cat.laws.push_back(WeightLaw::constant(1.0));
        ValidationReport rep = validate_catalog(cat);
        CHECK_FALSE(rep.find("assembled_ellipticity")->pass);
        CHECK_THROWS_AS(sample_environment(cat, 2, 8, 1), InvalidLaw);
    }
}

TEST_CASE("srw preset: unit rates, mu = 2d, every edge carried once") {
    EnvironmentTorus env = sample_environment(preset_srw(2), 2, 4, 9);
    for (int k = 0; k < env.ndirs(); ++k)
        for (std::int64_t x = 0; x < env.sites(); ++x) CHECK(env.rate[k][x] == 1.0);
    for (std::int64_t x = 0; x < env.sites(); ++x) CHECK(env.mu[x] == 4.0);
    CHECK(env.max_abs_ca() == 0.0);
    // a zero-weight direction in the law kills the ellipticity check
    CycleCatalog degenerate = preset_nn(2, WeightLaw::constant(0.0));
    EnvironmentTorus dead = make_environment(degenerate, 2, 4, 1,
                                             std::vector<std::vector<double>>(4, std::vector<double>(16, 0.0)));
    CHECK_FALSE(check_env_invariants(dead).find("ellipticity_cs_positive")->pass);
}

TEST_CASE("sampling is deterministic per (catalog, d, L, seed)") {
    CycleCatalog cat = preset_nn(2, WeightLaw::pareto(1.0, 3.0));
    EnvironmentTorus a = sample_environment(cat, 2, 6, 12345);
    EnvironmentTorus b = sample_environment(cat, 2, 6, 12345);
    for (std::size_t s = 0; s < a.weights.size(); ++s)
        for (std::size_t i = 0; i < a.weights[s].size(); ++i)
            CHECK(a.weights[s][i] == b.weights[s][i]);  // byte-identical
    EnvironmentTorus c = sample_environment(cat, 2, 6, 54321);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.weights[0].size(); ++i)
        if (a.weights[0][i] != c.weights[0][i]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("assembly: single plaquette carried at one base only") {
    CycleCatalog cat;
    cat.shapes.push_back(plaquette_shape());
    cat.laws.push_back(WeightLaw::constant(1.0));
    TorusGeom geom(2, 8);
    std::vector<std::vector<double>> w(1, std::vector<double>(geom.sites(), 0.0));
    w[0][geom.wrap_index({0, 0})] = 1.0;
    EnvironmentTorus env = make_environment(cat, 2, 8, 0, std::move(w));

    auto site = [&](std::int64_t x, std::int64_t y) { return env.geom.wrap_index({x, y}); };
    CHECK(env.rate[dir_index(0, +1)][site(0, 0)] == 1.0);  // (0,0) -> e1
    CHECK(env.rate[dir_index(1, +1)][site(1, 0)] == 1.0);  // e1 -> e1+e2
    CHECK(env.rate[dir_index(0, -1)][site(1, 1)] == 1.0);  // e1+e2 -> e2
    CHECK(env.rate[dir_index(1, -1)][site(0, 1)] == 1.0);  // e2 -> 0
    double total = 0.0;
    for (int k = 0; k < env.ndirs(); ++k)
        for (std::int64_t x = 0; x < env.sites(); ++x) total += env.rate[k][x];
    CHECK(total == 4.0);  // exactly the four cycle edges

    // the drift example: one outgoing edge per visited vertex
    CHECK(env.drift[0][site(0, 0)] == 1.0);
    CHECK(env.drift[1][site(0, 0)] == 0.0);
    CHECK(env.drift[1][site(1, 0)] == 1.0);
    CHECK(env.drift[0][site(1, 1)] == -1.0);
    CHECK(env.drift[1][site(0, 1)] == -1.0);
}

TEST_CASE("assembly equals the brute-force oracle on every small test env") {
    CHECK(max_rel_assembly_diff(mixed_env(2, 6, 7)) <= 1e-13);
    CHECK(max_rel_assembly_diff(mixed_env(2, 8, 17)) <= 1e-13);
    CHECK(max_rel_assembly_diff(mixed_env(1, 8, 3)) <= 1e-13);
    CHECK(max_rel_assembly_diff(mixed_env(3, 5, 23)) <= 1e-13);
    CHECK(max_rel_assembly_diff(sample_environment(preset_plaquette(2, WeightLaw::lognormal(0.0, 0.5)),
                                                   2, 4, 99)) <= 1e-13);
}

TEST_CASE("environment invariants hold on random environments") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        EnvironmentTorus env = mixed_env(2, 8, seed);
        ValidationReport rep = check_env_invariants(env);
        for (const auto& c : rep.checks) {
            INFO("check ", c.name, " witness ", c.witness);
            CHECK(c.pass);
        }
        CHECK(rep.find("doubly_stochastic")->witness <= 1e-12);
    }
}

TEST_CASE("local drift: homogeneous cancellation and torus sum zero") {
    EnvironmentTorus srw = sample_environment(preset_srw(2), 2, 6, 5);
    for (int a = 0; a < 2; ++a)
        for (std::int64_t x = 0; x < srw.sites(); ++x) CHECK(srw.drift[a][x] == 0.0);

    EnvironmentTorus env = mixed_env(2, 8, 31);
    double mu_total = 0.0;
    for (std::int64_t x = 0; x < env.sites(); ++x) mu_total += env.mu[x];
    for (int a = 0; a < 2; ++a) {
        double s = 0.0;
        for (std::int64_t x = 0; x < env.sites(); ++x) s += env.drift[a][x];
        CHECK(std::fabs(s) <= 1e-12 * mu_total);
    }
}

TEST_CASE("shift covariance is exact") {
    EnvironmentTorus env = mixed_env(2, 8, 77);
    SUBCASE("zero shift is the identity") {
        EnvironmentTorus z = shift_environment(env, {0, 0});
        for (int k = 0; k < env.ndirs(); ++k)
            for (std::int64_t x = 0; x < env.sites(); ++x) CHECK(z.rate[k][x] == env.rate[k][x]);
    }
    SUBCASE("full-period shift is the identity") {
        EnvironmentTorus z = shift_environment(env, {env.side(), 0});
        for (int k = 0; k < env.ndirs(); ++k)
            for (std::int64_t x = 0; x < env.sites(); ++x) CHECK(z.rate[k][x] == env.rate[k][x]);
    }
    SUBCASE("unit shift equals the index-shifted table bit for bit") {
        EnvironmentTorus z = shift_environment(env, {1, 0});
        for (int k = 0; k < env.ndirs(); ++k)
            for (std::int64_t x = 0; x < env.sites(); ++x) {
                std::int64_t xs = env.geom.shifted(x, {1, 0});
                CHECK(z.rate[k][x] == env.rate[k][xs]);
                CHECK(z.mu[x] == env.mu[xs]);
                CHECK(z.mu_moment[2][x] == env.mu_moment[2][xs]);
            }
    }
}

TEST_CASE("mu moments: ordering and coverage lower bound") {
    EnvironmentTorus env = mixed_env(2, 8, 41);
    for (std::int64_t x = 0; x < env.sites(); ++x) {
        CHECK(env.mu_moment[1][x] <= env.mu_moment[2][x] * (1 + 1e-12));
        CHECK(env.mu_moment[2][x] <= env.mu_moment[3][x] * (1 + 1e-12));
        CHECK(env.mu_moment[0][x] > 0.0);
    }
}

TEST_CASE("symmetry dichotomy on generic environments") {
    EnvironmentTorus sym = sample_environment(preset_nn(2, WeightLaw::uniform(1.0, 2.0)), 2, 6, 8);
    CHECK(sym.max_abs_ca() == 0.0);
    EnvironmentTorus asym = sample_environment(preset_plaquette(2, WeightLaw::uniform(0.5, 1.5)), 2, 6, 8);
    CHECK(asym.max_abs_ca() > 0.0);
    // |c_a| <= c_s at every directed edge, exactly
    for (int k = 0; k < asym.ndirs(); ++k)
        for (std::int64_t x = 0; x < asym.sites(); ++x)
            CHECK(std::fabs(asym.rate_asym[k][x]) <= asym.rate_sym[k][x]);
}

namespace {

// rectangle perimeter cycle: k steps along axis a, m along axis b, and back
CycleShape rectangle_shape(int d, int a, int b, int k, int m) {
    std::vector<std::vector<std::int64_t>> steps;
    for (int i = 0; i < k; ++i) steps.push_back(step(d, a, +1));
    for (int i = 0; i < m; ++i) steps.push_back(step(d, b, +1));
    for (int i = 0; i < k; ++i) steps.push_back(step(d, a, -1));
    for (int i = 0; i < m; ++i) steps.push_back(step(d, b, -1));
    return CycleShape(d, steps);
}

}  // namespace

TEST_CASE("random long-cycle catalogs: oracle, identities, moment fields") {
    RngStream rng(rng_key(6060));
    for (int trial = 0; trial < 3; ++trial) {
        CycleCatalog cat = preset_nn(2, WeightLaw::uniform(0.5, 1.5));
        for (int s = 0; s < 3; ++s) {
            const int k = 1 + int(rng.next_u64() % 3);
            const int m = 1 + int(rng.next_u64() % 3);
            cat.shapes.push_back(rectangle_shape(2, 0, 1, k, m));
            cat.laws.push_back(WeightLaw::uniform(0.1, 1.1));
        }
        const std::int64_t L = 2 * cat.max_diameter() + 1 + std::int64_t(rng.next_u64() % 3);
        EnvironmentTorus env = sample_environment(cat, 2, L, 4000 + trial);

        CHECK(max_rel_assembly_diff(env) <= 1e-13);
        ValidationReport rep = check_env_invariants(env);
        for (const auto& c : rep.checks) {
            INFO("check ", c.name);
            CHECK(c.pass);
        }

        // mu^(k) against a direct scatter over (shape, base, vertex) triples
        for (int mom = 0; mom < 4; ++mom) {
            std::vector<double> oracle(env.sites(), 0.0);
            for (std::size_t s = 0; s < cat.shapes.size(); ++s) {
                const CycleShape& sh = cat.shapes[s];
                const double lp = std::pow(double(sh.length()), mom);
                for (std::int64_t bse = 0; bse < env.sites(); ++bse) {
                    auto base = env.geom.coords_of(bse);
                    for (int j = 0; j < sh.length(); ++j) {
                        std::vector<std::int64_t> v = base;
                        for (int a = 0; a < 2; ++a) v[a] += sh.vertex(j, a);
                        oracle[env.geom.wrap_index(v)] += env.weights[s][bse] * lp;
                    }
                }
            }
            for (std::int64_t x = 0; x < env.sites(); ++x)
                CHECK(env.mu_moment[mom][x] ==
                      doctest::Approx(oracle[x]).epsilon(1e-12));
        }
    }
}

TEST_CASE("geometry guard: torus must fit the catalog") {
    CycleCatalog cat = preset_plaquette(2, WeightLaw::constant(1.0));
    CHECK_THROWS_AS(sample_environment(cat, 2, 2, 1), InvalidGeometry);
    CHECK_NOTHROW(sample_environment(cat, 2, 3, 1));
}
