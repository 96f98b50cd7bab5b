// lattice.hpp
// Discrete torus geometry: site indexing (row-major, axis 0 slowest),
// direction encoding, neighbor tables and sup-norm boxes.

#pragma once

#include <cstdint>
#include <vector>

namespace cyclewalk {

// Direction k in [0, 2d): axis k/2, sign +1 for even k, -1 for odd k.
inline int dir_axis(int k) { return k >> 1; }
inline int dir_sign(int k) { return (k & 1) ? -1 : +1; }
inline int dir_opposite(int k) { return k ^ 1; }
inline int dir_index(int axis, int sign) { return 2 * axis + (sign < 0 ? 1 : 0); }

class TorusGeom {
public:
    TorusGeom(int d, std::int64_t L);

    int d() const { return d_; }
    std::int64_t side() const { return L_; }
    std::int64_t sites() const { return n_sites_; }
    int ndirs() const { return 2 * d_; }

    // site index <-> coordinates in [0,L)^d
    std::int64_t index_of(const std::vector<std::int64_t>& x) const;
    std::vector<std::int64_t> coords_of(std::int64_t idx) const;

    // wrap an arbitrary lattice point onto the torus
    std::int64_t wrap_index(const std::vector<std::int64_t>& x) const;

    std::int64_t neighbor(std::int64_t site, int dir) const { return nbr_[std::size_t(dir) * n_sites_ + site]; }
    const std::int64_t* neighbor_table(int dir) const { return nbr_.data() + std::size_t(dir) * n_sites_; }

    // site shifted by an arbitrary displacement (componentwise wrap)
    std::int64_t shifted(std::int64_t site, const std::vector<std::int64_t>& z) const;

private:
    int d_;
    std::int64_t L_;
    std::int64_t n_sites_;
    std::vector<std::int64_t> nbr_;  // direction-major, ndirs x n_sites
};

// All integer points with sup-norm distance <= radius from the origin,
// in lexicographic order. (2*radius+1)^d points.
std::vector<std::vector<std::int64_t>> box_offsets(int d, std::int64_t radius);

inline double box_volume(int d, std::int64_t radius) {
    double v = 1.0;
    for (int a = 0; a < d; ++a) v *= double(2 * radius + 1);
    return v;
}

}  // namespace cyclewalk
