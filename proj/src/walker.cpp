#include "cyclewalk/walker.hpp"

#include <algorithm>
#include <cmath>

namespace cyclewalk {

std::vector<std::int64_t> Trajectory::position_at(double t) const {
    if (t < 0.0 || t > horizon) throw InvalidInput("trajectory: time out of range");
    std::size_t k = std::size_t(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    if (k == 0) return x0;
    std::vector<std::int64_t> x(d);
    for (int a = 0; a < d; ++a) x[a] = positions[(k - 1) * d + a];
    return x;
}

StepDraw sample_step(const EnvironmentTorus& env, std::int64_t site, RngStream& rng) {
    const double total = env.out_rate[site];
    if (!(total > 0.0)) throw InvalidInput("vsrw: site with zero total rate");
    StepDraw out;
    out.dt = rng.next_exponential(total);
    double u = rng.next_u01() * total;
    const int nd = env.ndirs();
    double acc = 0.0;
    out.dir = -1;
    for (int k = 0; k < nd; ++k) {
        acc += env.rate[k][site];
        if (u <= acc) {
            out.dir = k;
            break;
        }
    }
    if (out.dir < 0) {  // rounding spill: take the last direction with positive rate
        for (int k = nd - 1; k >= 0; --k)
            if (env.rate[k][site] > 0.0) {
                out.dir = k;
                break;
            }
    }
    return out;
}

Trajectory simulate_vsrw(const EnvironmentTorus& env, const std::vector<std::int64_t>& x0,
                         double horizon, std::uint64_t seed, std::int64_t max_jumps) {
    if (!(horizon > 0.0)) throw InvalidInput("vsrw: horizon must be > 0");
    if (int(x0.size()) != env.dim()) throw InvalidInput("vsrw: start point has wrong dimension");
    if (env.min_cs() <= 0.0) throw InvalidInput("vsrw: environment is not elliptic");

    Trajectory traj;
    traj.d = env.dim();
    traj.horizon = horizon;
    traj.seed = seed;
    traj.x0 = x0;

    RngStream rng(rng_key(seed));
    std::vector<std::int64_t> pos = x0;
    std::int64_t site = env.geom.wrap_index(pos);
    double t = 0.0;
    std::int64_t count = 0;
    for (;;) {
        StepDraw step = sample_step(env, site, rng);
        t += step.dt;
        if (t > horizon) break;
        pos[dir_axis(step.dir)] += dir_sign(step.dir);
        site = env.geom.neighbor(site, step.dir);
        traj.times.push_back(t);
        traj.positions.insert(traj.positions.end(), pos.begin(), pos.end());
        if (++count > max_jumps) throw NumericFailure("vsrw: jump-count guard exceeded");
    }
    return traj;
}

RescaledPath::RescaledPath(const Trajectory& traj, std::int64_t n) : traj_(&traj), n_(n) {
    if (n < 1) throw InvalidInput("rescale: n must be >= 1");
}

std::vector<double> RescaledPath::at(double t) const {
    double s = double(n_ * n_) * t;
    if (t < 0.0 || s > traj_->horizon) throw InvalidInput("rescale: time beyond trajectory horizon");
    auto x = traj_->position_at(s);
    std::vector<double> out(x.size());
    for (std::size_t a = 0; a < x.size(); ++a) out[a] = double(x[a]) / double(n_);
    return out;
}

std::vector<double> martingale_path(const EnvironmentTorus& env, const Trajectory& traj,
                                    const CorrectorSolution& sol) {
    const int d = traj.d;
    std::vector<double> out;
    out.reserve((traj.jumps() + 1) * d);
    std::vector<std::int64_t> pos = traj.x0;
    auto push = [&]() {
        std::int64_t site = env.geom.wrap_index(pos);
        for (int a = 0; a < d; ++a)
            out.push_back(double(pos[a]) - (sol.phi[a][site] - sol.phi[a][0]));
    };
    push();
    for (std::size_t k = 0; k < traj.jumps(); ++k) {
        for (int a = 0; a < d; ++a) pos[a] = traj.positions[k * d + a];
        push();
    }
    return out;
}

CompensatorPath::CompensatorPath(const EnvironmentTorus& env, const Trajectory& traj,
                                 const CorrectorSolution& sol, const std::vector<double>& v,
                                 std::int64_t n, double eps) {
    if (int(v.size()) != env.dim()) throw InvalidInput("compensator: direction has wrong dimension");
    if (n < 1) throw InvalidInput("compensator: n must be >= 1");
    n_ = n;
    horizon_ = traj.horizon;
    const int d = env.dim();
    const int nd = env.ndirs();
    const std::int64_t sites = env.sites();

    // per-site integrand sum_z c(x,z) (v.Phihat(x,z)/n)^2 with the eps cut
    std::vector<double> q(sites, 0.0);
    const double invn = 1.0 / double(n);
    for (int k = 0; k < nd; ++k) {
        const std::int64_t* nb = env.geom.neighbor_table(k);
        const double zi = double(dir_sign(k));
        const int axis = dir_axis(k);
        for (std::int64_t x = 0; x < sites; ++x) {
            double vphi = 0.0;
            for (int a = 0; a < d; ++a) {
                double hat = ((a == axis) ? zi : 0.0) - (sol.phi[a][nb[x]] - sol.phi[a][x]);
                vphi += v[a] * hat;
            }
            vphi *= invn;
            if (eps > 0.0 && std::fabs(vphi) <= eps) continue;
            q[x] += env.rate[k][x] * vphi * vphi;
        }
    }

    const std::size_t J = traj.jumps();
    start_.resize(J + 1);
    rate_.resize(J + 1);
    cum_.resize(J + 1);
    start_[0] = 0.0;
    cum_[0] = 0.0;
    std::vector<std::int64_t> pos = traj.x0;
    std::int64_t site = env.geom.wrap_index(pos);
    rate_[0] = q[site];
    for (std::size_t k = 0; k < J; ++k) {
        start_[k + 1] = traj.times[k];
        cum_[k + 1] = cum_[k] + rate_[k] * (start_[k + 1] - start_[k]);
        for (int a = 0; a < d; ++a) pos[a] = traj.positions[k * d + a];
        site = env.geom.wrap_index(pos);
        rate_[k + 1] = q[site];
    }
}

double CompensatorPath::max_time() const { return horizon_ / double(n_ * n_); }

double CompensatorPath::at(double t) const {
    double s = double(n_ * n_) * t;
    if (t < 0.0 || s > horizon_) throw InvalidInput("compensator: time beyond trajectory horizon");
    std::size_t k = std::size_t(std::upper_bound(start_.begin(), start_.end(), s) - start_.begin());
    if (k == 0) return 0.0;
    --k;
    return cum_[k] + rate_[k] * (s - start_[k]);
}

double environment_occupation(const EnvironmentTorus& env, const Trajectory& traj,
                              const std::vector<double>& f, double T) {
    if (T <= 0.0 || T > traj.horizon) throw InvalidInput("occupation: time out of range");
    if (std::int64_t(f.size()) != env.sites()) throw InvalidInput("occupation: field has wrong size");
    const int d = traj.d;
    double acc = 0.0;
    double prev = 0.0;
    std::vector<std::int64_t> pos = traj.x0;
    std::int64_t site = env.geom.wrap_index(pos);
    for (std::size_t k = 0; k < traj.jumps(); ++k) {
        double tk = traj.times[k];
        if (tk >= T) break;
        acc += f[site] * (tk - prev);
        prev = tk;
        for (int a = 0; a < d; ++a) pos[a] = traj.positions[k * d + a];
        site = env.geom.wrap_index(pos);
    }
    acc += f[site] * (T - prev);
    return acc / T;
}

}  // namespace cyclewalk
