#pragma once

#include "dualbound/hamiltonian.hpp"

namespace dualbound {

enum class Integrator { euler, rk4 };
enum class Quadrature { right, left };

struct Trajectory {
    Mat x; // (n_t+1) x d
    Mat p; // (n_t+1) x d
    Mat u; // (n_t+1) x k
    Vec t; // n_t+1 grid times
};

struct SweepConfig {
    int n_t = 200;
    int max_iters = 200;
    double alpha = 0.5;   // damping on the control update
    double eps = 1e-6;    // sup-norm stopping threshold on the state grid
    // rk4 keeps the high oscillator modes of w phase-accurate; with plain Euler
    // each mode lags half a step and the <z, dw> sum rectifies the lag into an
    // O(n_modes * dt) bias of the value.  Left-endpoint cost pairs with the
    // dynamics step and lands below the continuum value, preserving the bound.
    Integrator integrator = Integrator::rk4;
    Quadrature quadrature = Quadrature::left;
    double diverge_norm = 1e8;
};

struct SweepResult {
    Trajectory traj;
    double value = 0.0;
    int iterations = 0;
    double sup_diff = 0.0;
    bool converged = false;
};

// Forward state sweep under a fixed control grid; throws DivergedPath when the
// guard trips.  u has n_t+1 rows (the last one is unused by Euler stepping).
Mat forward_sweep(const PathwiseContext& ctx, const SweepConfig& cfg, const Mat& u);

// Backward costate sweep at fixed state/control grids; row n_t is grad g(x_T).
Mat backward_sweep(const PathwiseContext& ctx, const SweepConfig& cfg, const Mat& x, const Mat& u);

// Damped successive-approximation solve of the pathwise two-point problem.
SweepResult solve_path(const PathwiseContext& ctx, const SweepConfig& cfg);

// Riemann sum of the effective running cost plus terminal cost.  The right
// rule sums nodes 1..n_t; left sums 0..n_t-1.
double pathwise_value(const PathwiseContext& ctx, const Trajectory& traj,
                      Quadrature quadrature = Quadrature::right);

} // namespace dualbound
