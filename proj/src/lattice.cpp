#include "cyclewalk/lattice.hpp"

#include <stdexcept>

namespace cyclewalk {

TorusGeom::TorusGeom(int d, std::int64_t L) : d_(d), L_(L) {
    if (d < 1) throw std::invalid_argument("torus dimension must be >= 1");
    if (L < 1) throw std::invalid_argument("torus side must be >= 1");
    n_sites_ = 1;
    for (int a = 0; a < d; ++a) {
        if (n_sites_ > (std::int64_t(1) << 40) / L) throw std::invalid_argument("torus too large");
        n_sites_ *= L;
    }
    nbr_.resize(std::size_t(2 * d) * n_sites_);
    std::vector<std::int64_t> x(d, 0);
    for (std::int64_t i = 0; i < n_sites_; ++i) {
        for (int k = 0; k < 2 * d; ++k) {
            int a = dir_axis(k);
            std::int64_t old = x[a];
            x[a] = (old + dir_sign(k) + L_) % L_;
            nbr_[std::size_t(k) * n_sites_ + i] = index_of(x);
            x[a] = old;
        }
        // advance coords (axis d-1 fastest)
        for (int a = d - 1; a >= 0; --a) {
            if (++x[a] < L_) break;
            x[a] = 0;
        }
    }
}

std::int64_t TorusGeom::index_of(const std::vector<std::int64_t>& x) const {
    std::int64_t idx = 0;
    for (int a = 0; a < d_; ++a) idx = idx * L_ + x[a];
    return idx;
}

std::vector<std::int64_t> TorusGeom::coords_of(std::int64_t idx) const {
    std::vector<std::int64_t> x(d_);
    for (int a = d_ - 1; a >= 0; --a) {
        x[a] = idx % L_;
        idx /= L_;
    }
    return x;
}

std::int64_t TorusGeom::wrap_index(const std::vector<std::int64_t>& x) const {
    std::int64_t idx = 0;
    for (int a = 0; a < d_; ++a) {
        std::int64_t c = x[a] % L_;
        if (c < 0) c += L_;
        idx = idx * L_ + c;
    }
    return idx;
}

std::int64_t TorusGeom::shifted(std::int64_t site, const std::vector<std::int64_t>& z) const {
    std::vector<std::int64_t> x = coords_of(site);
    for (int a = 0; a < d_; ++a) x[a] += z[a];
    return wrap_index(x);
}

std::vector<std::vector<std::int64_t>> box_offsets(int d, std::int64_t radius) {
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> x(d, -radius);
    for (;;) {
        out.push_back(x);
        int a = d - 1;
        for (; a >= 0; --a) {
            if (++x[a] <= radius) break;
            x[a] = -radius;
        }
        if (a < 0) break;
    }
    return out;
}

}  // namespace cyclewalk
