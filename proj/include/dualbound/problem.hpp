#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace dualbound {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ConjugateEval {
    double value;
    Vec grad;
};

// Terminal costs come in two shapes.  A smooth g has a smooth convex conjugate
// g* with an honest gradient.  An affine piece g(x) = <gamma, x> (possibly only
// in some coordinates) conjugates to an indicator pinning those coordinates of
// p to gamma; any remaining coordinates keep a smooth 1-d conjugate, carried by
// free_part (value +inf outside its domain).
struct SmoothConjugate {
    std::function<ConjugateEval(const Vec&)> eval;
};

struct AffineIndicatorConjugate {
    Vec target;                   // pinned value per constrained coordinate
    std::vector<bool> constrained;
    std::function<ConjugateEval(const Vec&)> free_part; // may be null
};

using Conjugate = std::variant<SmoothConjugate, AffineIndicatorConjugate>;

struct ControlBox {
    Vec lo, hi;
};

struct InnerMin {
    Vec u;
    double value; // min over u of <p, b(x,u)> + r(x,u)
};

struct ControlProblem {
    std::string name;
    int state_dim = 0;
    int noise_dim = 0;
    int control_dim = 0;
    double horizon = 1.0;
    Vec x0; // canonical initial state; runners may override

    std::function<Vec(const Vec&, const Vec&)> drift;            // b(x,u)
    std::function<Mat(const Vec&)> diffusion;                    // sigma(x), d x d'
    std::function<double(const Vec&, const Vec&)> running_cost;  // r(x,u)
    std::function<double(const Vec&)> terminal_cost;             // g(x)
    std::function<Vec(const Vec&)> terminal_grad;                // grad g
    Conjugate conjugate;
    std::function<InnerMin(const Vec&, const Vec&)> inner_minimizer;
    std::optional<ControlBox> control_box;
    std::function<Vec(const Vec&)> strat_correction;             // (grad sigma : sigma)(x)

    /* Optional analytic derivative contractions; null means the Hamiltonian
     * kernel falls back to central differences.
     *   drift_grad_contract(x,u,p)     = d/dx <p, b(x,u)>
     *   running_cost_grad_x(x,u)       = d/dx r(x,u)
     *   diffusion_grad_contract(x,q,v) = d/dx (q^T sigma(x) v)
     *   strat_grad_contract(x,p)       = d/dx <p, (grad sigma : sigma)(x)>
     *   diffusion_jac(x)[k]            = d sigma / d x_k (null for constant sigma) */
    std::function<Vec(const Vec&, const Vec&, const Vec&)> drift_grad_contract;
    std::function<Vec(const Vec&, const Vec&)> running_cost_grad_x;
    std::function<Vec(const Vec&, const Vec&, const Vec&)> diffusion_grad_contract;
    std::function<Vec(const Vec&, const Vec&)> strat_grad_contract;
    std::function<std::vector<Mat>(const Vec&)> diffusion_jac;
};

Vec clamp_to_box(const Vec& u, const std::optional<ControlBox>& box);

// Benchmarks.  make_lq: b = 2u, sigma = sqrt(2) I, r = |u|^2,
// g = (x'Ax + 1)/2 with A = diag(1, 4/25, 4, ..., 4).
// make_ou: b = Ax + Bu, sigma = B, r = |u|^2/2, g = <1, x>,
// A = -I + 0.12, B = I + 0.1 (constants added to every entry).
// make_aiyagari: 2-d income/assets model, scalar consumption control,
// T = 0.1, control box [1e-3, 1e3].
// make_zero: b = r = 0, sigma = 0, LQ terminal cost; value is g(x0) exactly.
ControlProblem make_lq(int d);
ControlProblem make_ou(int d);
ControlProblem make_aiyagari();
ControlProblem make_zero(int d);

ControlProblem make_problem(const std::string& name, int d);

// diag(1, 4/25, 4, 4, ...) truncated to d entries
Vec lq_a_diagonal(int d);

} // namespace dualbound
