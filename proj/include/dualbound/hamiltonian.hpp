#pragma once

#include <functional>
#include <string>

#include "dualbound/noise.hpp"
#include "dualbound/problem.hpp"

namespace dualbound {

/* The martingale model supplies z(t,x) in R^{d'} (z = grad V^T sigma for the
 * exact choice) and, when it can, the Jacobian d z / d x (rows indexed by the
 * noise coordinate) and the x-gradient of the trace term
 * 0.5 Tr(sigma(x) Jz(t,x)).  Missing callbacks fall back to central
 * differences inside the kernel. */
struct MartingaleModel {
    std::string name = "custom";
    std::function<Vec(double, const Vec&)> z;
    std::function<Mat(double, const Vec&)> z_jac;
    std::function<Vec(double, const Vec&)> trace_grad;
};

MartingaleModel zero_model(int noise_dim);

struct PathwiseContext {
    const ControlProblem* problem = nullptr;
    const MartingaleModel* model = nullptr;
    NoisePath path;
};

struct MinHam {
    Vec u;
    double value;
};

struct HamGrad {
    Vec dp; // d/dp of the minimized Hamiltonian = effective drift at u*
    Vec dx; // d/dx at fixed u = u*
    Vec u;
};

/* Core evaluators take the smoothed-noise derivative as an argument so that
 * solvers can feed precomputed grid values; the PathwiseContext overloads
 * below evaluate w_dot(t) themselves. */
Vec effective_drift_w(const ControlProblem& pb, const MartingaleModel& model,
                      double t, const Vec& x, const Vec& u, const Vec& wdot);
double effective_cost_w(const ControlProblem& pb, const MartingaleModel& model,
                        double t, const Vec& x, const Vec& u, const Vec& wdot);
double hamiltonian_at_w(const ControlProblem& pb, const MartingaleModel& model,
                        double t, const Vec& x, const Vec& u, const Vec& p, const Vec& wdot);
MinHam min_hamiltonian_w(const ControlProblem& pb, const MartingaleModel& model,
                         double t, const Vec& x, const Vec& p, const Vec& wdot);
HamGrad grad_min_hamiltonian_w(const ControlProblem& pb, const MartingaleModel& model,
                               double t, const Vec& x, const Vec& p, const Vec& wdot);
// d/dx of the Hamiltonian at fixed u
Vec hamiltonian_grad_x_w(const ControlProblem& pb, const MartingaleModel& model,
                         double t, const Vec& x, const Vec& u, const Vec& p, const Vec& wdot);

Vec effective_drift(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u);
double effective_cost(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u);
double hamiltonian_at(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u, const Vec& p);
MinHam min_hamiltonian(const PathwiseContext& ctx, double t, const Vec& x, const Vec& p);
HamGrad grad_min_hamiltonian(const PathwiseContext& ctx, double t, const Vec& x, const Vec& p);

// Jacobian of z with analytic-or-FD dispatch, exposed for reuse and tests.
Mat model_z_jacobian(const MartingaleModel& model, double t, const Vec& x);

} // namespace dualbound
