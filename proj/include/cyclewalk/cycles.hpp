// cycles.hpp
// Oriented nearest-neighbor cycle shapes based at the origin, the weight laws
// attached to them, and catalog-level validation (closedness, covering of the
// neighbor set, ellipticity per direction).

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cyclewalk/rng.hpp"

namespace cyclewalk {

struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& m) : std::runtime_error(m) {}
};
struct InvalidShape : InvalidInput {
    explicit InvalidShape(const std::string& m) : InvalidInput(m) {}
};
struct InvalidGeometry : InvalidInput {
    explicit InvalidGeometry(const std::string& m) : InvalidInput(m) {}
};
struct InvalidLaw : InvalidInput {
    explicit InvalidLaw(const std::string& m) : InvalidInput(m) {}
};
struct NumericFailure : std::runtime_error {
    explicit NumericFailure(const std::string& m) : std::runtime_error(m) {}
};

// A closed oriented nearest-neighbor path based at the origin.
// Vertices v_0 = 0, v_j = v_{j-1} + step_j, v_n = 0; intermediate vertices
// mutually distinct and distinct from 0; length n >= 2.
class CycleShape {
public:
    // steps given as unit lattice vectors
    CycleShape(int d, const std::vector<std::vector<std::int64_t>>& steps);

    int dim() const { return d_; }
    int length() const { return int(dirs_.size()); }
    std::int64_t diameter() const { return diameter_; }
    const std::vector<int>& step_dirs() const { return dirs_; }

    // vertices v_0..v_{n-1} (the closing v_n = v_0 omitted), flattened d per vertex
    const std::vector<std::int64_t>& vertices() const { return verts_; }
    std::int64_t vertex(int j, int axis) const { return verts_[std::size_t(j) * d_ + axis]; }

    std::vector<std::vector<std::int64_t>> steps_as_vectors() const;

private:
    int d_;
    std::vector<int> dirs_;
    std::vector<std::int64_t> verts_;
    std::int64_t diameter_ = 0;
};

enum class LawKind { constant, uniform, pareto, lognormal };

struct WeightLaw {
    LawKind kind = LawKind::constant;
    double a = 1.0;  // constant value | uniform low | pareto scale | lognormal location
    double b = 0.0;  // uniform high | pareto tail index | lognormal scale

    static WeightLaw constant(double v) { return {LawKind::constant, v, 0.0}; }
    static WeightLaw uniform(double lo, double hi) { return {LawKind::uniform, lo, hi}; }
    static WeightLaw pareto(double scale, double tail) { return {LawKind::pareto, scale, tail}; }
    static WeightLaw lognormal(double loc, double scale) { return {LawKind::lognormal, loc, scale}; }

    void validate() const;          // throws InvalidLaw if support not in [0, inf)
    double support_infimum() const; // inf of the support
    bool strictly_positive() const { return support_infimum() > 0.0; }
    bool almost_surely_positive() const;  // P(w > 0) = 1 (weaker than strictly_positive)
    double sample(RngStream& rng) const;
    std::string kind_name() const;
};

struct CycleCatalog {
    std::vector<CycleShape> shapes;
    std::vector<WeightLaw> laws;  // one per shape

    int dim() const { return shapes.empty() ? 0 : shapes.front().dim(); }
    std::int64_t max_diameter() const;
};

// Shipped presets.
CycleCatalog preset_nn(int d, const WeightLaw& law);            // all 2d two-cycles, one law
CycleCatalog preset_srw(int d);                                 // two-cycles: weight 1 on +e_a shapes, 0 on -e_a
CycleCatalog preset_plaquette(int d, const WeightLaw& law);     // 4 rotations x 2 orientations per axis pair

struct CheckEntry {
    std::string name;
    bool pass = true;
    double witness = 0.0;       // numeric witness (violation magnitude, count, ...)
    std::int64_t worst_site = -1;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckEntry> checks;
    bool all_pass() const;
    const CheckEntry* find(const std::string& name) const;
};

// Catalog-level checks: per-shape structure, the neighbor covering set of
// base-0 cycles, and per-direction assembled ellipticity (every direction
// receives weight from some translate of a strictly-positive-law shape).
ValidationReport validate_catalog(const CycleCatalog& catalog);

// The covering set {x : (0,x) or (x,0) lies on some base-0 shape}, as direction
// indices.
std::vector<int> covering_directions(const CycleCatalog& catalog);

}  // namespace cyclewalk
