#include "cyclewalk/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cyclewalk/lattice.hpp"

namespace cyclewalk {

CycleShape::CycleShape(int d, const std::vector<std::vector<std::int64_t>>& steps) : d_(d) {
    if (d < 1) throw InvalidShape("cycle shape: dimension must be >= 1");
    if (steps.size() < 2) throw InvalidShape("cycle shape: length must be >= 2");
    dirs_.reserve(steps.size());
    std::vector<std::int64_t> v(d, 0);
    verts_.reserve(steps.size() * d);
    std::set<std::vector<std::int64_t>> seen;
    seen.insert(v);
    verts_.insert(verts_.end(), v.begin(), v.end());
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const auto& s = steps[j];
        if (int(s.size()) != d) throw InvalidShape("cycle shape: step has wrong dimension");
        int axis = -1, sign = 0;
        for (int a = 0; a < d; ++a) {
            if (s[a] == 0) continue;
            if (s[a] != 1 && s[a] != -1) throw InvalidShape("cycle shape: step is not a unit vector");
            if (axis >= 0) throw InvalidShape("cycle shape: step is not a unit vector");
            axis = a;
            sign = int(s[a]);
        }
        if (axis < 0) throw InvalidShape("cycle shape: zero step");
        dirs_.push_back(dir_index(axis, sign));
        v[axis] += sign;
        bool last = (j + 1 == steps.size());
        if (last) {
            for (int a = 0; a < d; ++a)
                if (v[a] != 0) throw InvalidShape("cycle shape: steps do not close");
        } else {
            if (!seen.insert(v).second)
                throw InvalidShape("cycle shape: intermediate vertices must be distinct");
            verts_.insert(verts_.end(), v.begin(), v.end());
            std::int64_t sup = 0;
            for (int a = 0; a < d; ++a) sup = std::max(sup, std::abs(v[a]));
            diameter_ = std::max(diameter_, sup);
        }
    }
}

std::vector<std::vector<std::int64_t>> CycleShape::steps_as_vectors() const {
    std::vector<std::vector<std::int64_t>> out;
    out.reserve(dirs_.size());
    for (int k : dirs_) {
        std::vector<std::int64_t> s(d_, 0);
        s[dir_axis(k)] = dir_sign(k);
        out.push_back(std::move(s));
    }
    return out;
}

void WeightLaw::validate() const {
    switch (kind) {
        case LawKind::constant:
            if (a < 0.0) throw InvalidLaw("constant law: value must be >= 0");
            break;
        case LawKind::uniform:
            if (a < 0.0 || b < a) throw InvalidLaw("uniform law: need 0 <= low <= high");
            break;
        case LawKind::pareto:
            if (a <= 0.0 || b <= 0.0) throw InvalidLaw("pareto law: scale and tail index must be > 0");
            break;
        case LawKind::lognormal:
            if (b < 0.0) throw InvalidLaw("lognormal law: scale must be >= 0");
            break;
    }
}

double WeightLaw::support_infimum() const {
    switch (kind) {
        case LawKind::constant: return a;
        case LawKind::uniform: return a;
        case LawKind::pareto: return a;
        case LawKind::lognormal: return b == 0.0 ? std::exp(a) : 0.0;
    }
    return 0.0;
}

bool WeightLaw::almost_surely_positive() const {
    switch (kind) {
        case LawKind::constant: return a > 0.0;
        case LawKind::uniform: return b > 0.0;  // an atom at 0 needs low = high = 0
        case LawKind::pareto: return true;
        case LawKind::lognormal: return true;
    }
    return false;
}

double WeightLaw::sample(RngStream& rng) const {
    switch (kind) {
        case LawKind::constant: return a;
        case LawKind::uniform: return rng.next_uniform(a, b);
        case LawKind::pareto: return a * std::pow(rng.next_u01(), -1.0 / b);
        case LawKind::lognormal: return std::exp(a + b * rng.next_normal());
    }
    return 0.0;
}

std::string WeightLaw::kind_name() const {
    switch (kind) {
        case LawKind::constant: return "constant";
        case LawKind::uniform: return "uniform";
        case LawKind::pareto: return "pareto";
        case LawKind::lognormal: return "lognormal";
    }
    return "?";
}

std::int64_t CycleCatalog::max_diameter() const {
    std::int64_t m = 0;
    for (const auto& s : shapes) m = std::max(m, s.diameter());
    return m;
}

CycleCatalog preset_nn(int d, const WeightLaw& law) {
    CycleCatalog cat;
    for (int a = 0; a < d; ++a) {
        for (int sign : {+1, -1}) {
            std::vector<std::int64_t> step(d, 0);
            step[a] = sign;
            std::vector<std::int64_t> back(d, 0);
            back[a] = -sign;
            cat.shapes.emplace_back(d, std::vector<std::vector<std::int64_t>>{step, back});
            cat.laws.push_back(law);
        }
    }
    return cat;
}

CycleCatalog preset_srw(int d) {
    // Unit edge weights: each undirected edge carried once, by the
    // positively-oriented two-cycle based at its tail. The reversed shapes
    // stay in the catalog (weight 0) so the base-0 covering holds.
    CycleCatalog cat = preset_nn(d, WeightLaw::constant(0.0));
    for (std::size_t s = 0; s < cat.shapes.size(); ++s)
        if (dir_sign(cat.shapes[s].step_dirs()[0]) > 0) cat.laws[s] = WeightLaw::constant(1.0);
    return cat;
}

CycleCatalog preset_plaquette(int d, const WeightLaw& law) {
    if (d < 2) throw InvalidInput("plaquette preset needs d >= 2");
    CycleCatalog cat;
    auto unit = [d](int axis, int sign) {
        std::vector<std::int64_t> s(d, 0);
        s[axis] = sign;
        return s;
    };
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            // orientation a->b and its reversal, re-based at each of the 4 corners
            std::vector<std::vector<std::int64_t>> fwd = {unit(a, +1), unit(b, +1), unit(a, -1), unit(b, -1)};
            std::vector<std::vector<std::int64_t>> rev = {unit(b, +1), unit(a, +1), unit(b, -1), unit(a, -1)};
            for (const auto& base : {fwd, rev}) {
                for (int r = 0; r < 4; ++r) {
                    std::vector<std::vector<std::int64_t>> rot;
                    for (int j = 0; j < 4; ++j) rot.push_back(base[(r + j) % 4]);
                    cat.shapes.emplace_back(d, rot);
                    cat.laws.push_back(law);
                }
            }
        }
    }
    return cat;
}

bool ValidationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const CheckEntry* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<int> covering_directions(const CycleCatalog& catalog) {
    std::set<int> dirs;
    const int d = catalog.dim();
    for (const auto& shape : catalog.shapes) {
        const int n = shape.length();
        for (int j = 0; j < n; ++j) {
            // edge (v_{j-1} -> v_j) with v_n = v_0 = 0; record it if it touches 0
            auto at = [&](int idx, int axis) { return idx == n ? 0 : shape.vertex(idx, axis); };
            bool from_zero = true, to_zero = true;
            for (int a = 0; a < d; ++a) {
                if (at(j, a) != 0) from_zero = false;
                if (at(j + 1, a) != 0) to_zero = false;
            }
            if (from_zero) dirs.insert(shape.step_dirs()[j]);                 // (0, x): x = step
            if (to_zero) dirs.insert(dir_opposite(shape.step_dirs()[j]));     // (x, 0): x = -step
        }
    }
    return std::vector<int>(dirs.begin(), dirs.end());
}

ValidationReport validate_catalog(const CycleCatalog& catalog) {
    if (catalog.shapes.empty()) throw InvalidInput("catalog is empty");
    if (catalog.laws.size() != catalog.shapes.size())
        throw InvalidInput("catalog needs one law per shape");
    const int d = catalog.dim();
    ValidationReport rep;

    for (std::size_t s = 0; s < catalog.shapes.size(); ++s) {
        if (catalog.shapes[s].dim() != d) throw InvalidShape("catalog mixes dimensions");
        catalog.laws[s].validate();
        CheckEntry e;
        e.name = "shape_" + std::to_string(s) + "_structure";
        e.pass = true;  // construction already enforces closed/unit/distinct/length>=2
        e.witness = catalog.shapes[s].length();
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "covering";
        auto dirs = covering_directions(catalog);
        e.pass = int(dirs.size()) == 2 * d;
        e.witness = double(dirs.size());
        std::string miss;
        for (int k = 0; k < 2 * d; ++k)
            if (std::find(dirs.begin(), dirs.end(), k) == dirs.end())
                miss += (miss.empty() ? "" : " ") + std::string(dir_sign(k) > 0 ? "+" : "-") + "e" + std::to_string(dir_axis(k) + 1);
        e.detail = e.pass ? "all 2d neighbors hit by base-0 cycles" : "missing: " + miss;
        rep.checks.push_back(e);
    }

    {
        // every direction must receive weight from some translate of an
        // a.s.-positive-law shape, else some symmetrized rate can vanish
        CheckEntry e;
        e.name = "assembled_ellipticity";
        std::set<int> served;
        for (std::size_t s = 0; s < catalog.shapes.size(); ++s) {
            if (!catalog.laws[s].almost_surely_positive()) continue;
            for (int k : catalog.shapes[s].step_dirs()) {
                served.insert(k);
                served.insert(dir_opposite(k));  // c_s symmetrizes the reverse edge
            }
        }
        e.pass = int(served.size()) == 2 * d;
        e.witness = double(served.size());
        rep.checks.push_back(e);
    }

    {
        CheckEntry e;
        e.name = "max_diameter";
        e.pass = true;
        e.witness = double(catalog.max_diameter());
        rep.checks.push_back(e);
    }
    return rep;
}

}  // namespace cyclewalk
