#pragma once

#include <cstdint>
#include <vector>

#include "dualbound/pontryagin.hpp"

namespace dualbound {

struct HopfConfig {
    int n_t = 200;
    int max_iters = 100;      // gradient-ascent iterations per restart
    double eta = 0.1;         // initial step size; halved while the objective drops
    double fd_step = 1e-4;    // relative step for gradients and shooting Jacobians
    int restarts = 3;
    double init_stddev = 0.5; // p0 ~ N(grad g(x0), 0.25 I)
    Integrator integrator = Integrator::rk4;
    Quadrature quadrature = Quadrature::right;
    double constraint_tol = 1e-6; // sup-norm feasibility for pinned coordinates
    double grad_tol = 1e-4;       // first-order stop for the ascent
    int max_backtracks = 40;
    int newton_iters = 50;
    double diverge_norm = 1e8;
    std::uint64_t seed = 0;
    std::uint64_t sample_index = 0; // keys the restart initializations
};

struct HopfResult {
    double value = 0.0;
    Vec p0;
    std::vector<double> objective_trace; // best-so-far after each ascent iteration
    bool feasible = false;
};

// Integrate the characteristic system x' = dH/dp, p' = -dH/dx from (x0, p0).
Trajectory hamiltonian_ivp(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg);

// The dual objective J(p0).  For indicator conjugates returns -inf when the
// pinned coordinates of p(T) miss their targets by more than constraint_tol.
double hopf_objective(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg);

// Central differences of the indicator-free objective, step fd_step*(1+|p0|).
Vec objective_gradient(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg);

/* Maximize J over p0.  Smooth conjugates: multi-restart gradient ascent with
 * backtracking, keeping the best value ever evaluated.  Fully pinned
 * conjugates: damped Newton shooting on p0.  Mixed: ascent in the free
 * coordinates with re-projection onto the constraint manifold by shooting
 * around every evaluation. */
HopfResult solve_hopf(const PathwiseContext& ctx, const HopfConfig& cfg);

} // namespace dualbound
