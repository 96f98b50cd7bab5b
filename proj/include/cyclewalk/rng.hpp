// rng.hpp
// Counter-based keyed random streams (splitmix64). A stream is fully
// determined by its key, so draws are reproducible independent of iteration
// order and worker count. Keys are derived by folding integer labels
// (seed, shape index, site index, replica index, ...) into the state.

#pragma once

#include <cmath>
#include <cstdint>

namespace cyclewalk {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// key = fold(seed, a, b, ...) — order-sensitive label hashing.
inline std::uint64_t rng_key(std::uint64_t seed) { return splitmix64(seed ^ 0x632be59bd9b4e019ULL); }
template <typename... Rest>
inline std::uint64_t rng_key(std::uint64_t seed, std::uint64_t a, Rest... rest) {
    return rng_key(splitmix64(seed ^ (a + 0x9e3779b97f4a7c15ULL)), rest...);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform in (0,1), clamped away from the endpoints
    double next_u01() {
        const double inv53 = 1.0 / 9007199254740992.0;  // 2^-53
        double u = double(next_u64() >> 11) * inv53;
        if (u <= 0.0) u = std::ldexp(1.0, -53);
        if (u >= 1.0) u = 1.0 - std::ldexp(1.0, -53);
        return u;
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

    // standard normal via Box-Muller (uses two uniforms per pair, caches one)
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_u01();
        double u2 = next_u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double next_exponential(double rate) { return -std::log(next_u01()) / rate; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cyclewalk
