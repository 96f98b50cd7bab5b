// walker.hpp
// Variable-speed random walk in a fixed environment: exponential holding time
// with the site's total rate, jump law c(x,.)/mu(x), unwrapped integer
// positions. Rescaling, martingale/compensator functionals and occupation
// averages along a stored trajectory.

#pragma once

#include <cstdint>
#include <vector>

#include "cyclewalk/corrector.hpp"
#include "cyclewalk/environment.hpp"
#include "cyclewalk/rng.hpp"

namespace cyclewalk {

struct Trajectory {
    int d = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> x0;         // start, unwrapped
    std::vector<double> times;            // jump epochs in (0, horizon]
    std::vector<std::int64_t> positions;  // flattened d per jump, unwrapped

    std::size_t jumps() const { return times.size(); }
    // right-continuous position at time t in [0, horizon]
    std::vector<std::int64_t> position_at(double t) const;
};

// One holding interval + jump draw out of `site`; shared by the trajectory
// simulator and the streaming replica runners.
struct StepDraw {
    double dt = 0.0;
    int dir = 0;
};
StepDraw sample_step(const EnvironmentTorus& env, std::int64_t site, RngStream& rng);

Trajectory simulate_vsrw(const EnvironmentTorus& env, const std::vector<std::int64_t>& x0,
                         double horizon, std::uint64_t seed,
                         std::int64_t max_jumps = 1LL << 40);

// Diffusive rescaling evaluator X^(n)_t = X_{n^2 t} / n.
class RescaledPath {
public:
    RescaledPath(const Trajectory& traj, std::int64_t n);
    double max_time() const { return traj_->horizon / double(n_ * n_); }
    std::vector<double> at(double t) const;  // throws InvalidInput past max_time

private:
    const Trajectory* traj_;
    std::int64_t n_;
};

// M_t = Phi(X_t) = X_t - chi(X_t) at t = 0 and every jump epoch; flattened d
// per event, unwrapped coordinates with periodic corrector lookup.
std::vector<double> martingale_path(const EnvironmentTorus& env, const Trajectory& traj,
                                    const CorrectorSolution& sol);

// Compensator of v.M^(n): piecewise-linear cumulative
//   t |-> int_0^{n^2 t} sum_z c(X_s, X_s+z) (v.Phihat(X_s,z)/n)^2
//                       [1 when |v.Phihat/n| > eps] ds,
// evaluated exactly between jump epochs. eps = 0 disables the truncation.
class CompensatorPath {
public:
    CompensatorPath(const EnvironmentTorus& env, const Trajectory& traj,
                    const CorrectorSolution& sol, const std::vector<double>& v,
                    std::int64_t n, double eps = 0.0);
    double max_time() const;
    double at(double t) const;

private:
    std::int64_t n_;
    std::vector<double> start_;  // interval start epochs (unscaled clock)
    std::vector<double> rate_;   // integrand on each interval
    std::vector<double> cum_;    // cumulative at interval starts
    double horizon_;
};

// (1/T) int_0^T f(X_s mod L) ds from the holding intervals; f is a per-site field.
double environment_occupation(const EnvironmentTorus& env, const Trajectory& traj,
                              const std::vector<double>& f, double T);

}  // namespace cyclewalk
