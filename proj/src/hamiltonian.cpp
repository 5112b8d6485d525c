#include "dualbound/hamiltonian.hpp"

#include "dualbound/numdiff.hpp"

namespace dualbound {

MartingaleModel zero_model(int noise_dim) {
    MartingaleModel m;
    m.name = "zero";
    m.z = [noise_dim](double, const Vec&) -> Vec { return Vec::Zero(noise_dim); };
    m.z_jac = [noise_dim](double, const Vec& x) -> Mat {
        return Mat::Zero(noise_dim, x.size());
    };
    m.trace_grad = [](double, const Vec& x) -> Vec { return Vec::Zero(x.size()); };
    return m;
}

Mat model_z_jacobian(const MartingaleModel& model, double t, const Vec& x) {
    if (model.z_jac) return model.z_jac(t, x);
    return fd_jacobian([&](const Vec& y) { return model.z(t, y); }, x);
}

namespace {

// 0.5 * Tr(sigma(x) Jz(t,x)) with Jz of shape d' x d
double half_trace_sigma_jz(const ControlProblem& pb, const MartingaleModel& model,
                           double t, const Vec& x) {
    const Mat sigma = pb.diffusion(x);
    const Mat jz = model_z_jacobian(model, t, x);
    return 0.5 * sigma.cwiseProduct(jz.transpose()).sum();
}

Vec trace_term_grad(const ControlProblem& pb, const MartingaleModel& model,
                    double t, const Vec& x) {
    if (model.trace_grad) return model.trace_grad(t, x);
    return fd_gradient([&](const Vec& y) { return half_trace_sigma_jz(pb, model, t, y); }, x);
}

} // namespace

Vec effective_drift_w(const ControlProblem& pb, const MartingaleModel& model,
                      double t, const Vec& x, const Vec& u, const Vec& wdot) {
    (void)model;
    (void)t;
    return pb.drift(x, u) - 0.5 * pb.strat_correction(x) + pb.diffusion(x) * wdot;
}

double effective_cost_w(const ControlProblem& pb, const MartingaleModel& model,
                        double t, const Vec& x, const Vec& u, const Vec& wdot) {
    return pb.running_cost(x, u) - model.z(t, x).dot(wdot) + half_trace_sigma_jz(pb, model, t, x);
}

double hamiltonian_at_w(const ControlProblem& pb, const MartingaleModel& model,
                        double t, const Vec& x, const Vec& u, const Vec& p, const Vec& wdot) {
    return p.dot(effective_drift_w(pb, model, t, x, u, wdot)) +
           effective_cost_w(pb, model, t, x, u, wdot);
}

MinHam min_hamiltonian_w(const ControlProblem& pb, const MartingaleModel& model,
                         double t, const Vec& x, const Vec& p, const Vec& wdot) {
    InnerMin inner = pb.inner_minimizer(x, p);
    // inner.value covers <p, b(x,u*)> + r(x,u*); add the u-independent terms.
    double value = inner.value + p.dot(pb.diffusion(x) * wdot - 0.5 * pb.strat_correction(x)) -
                   model.z(t, x).dot(wdot) + half_trace_sigma_jz(pb, model, t, x);
    return MinHam{std::move(inner.u), value};
}

Vec hamiltonian_grad_x_w(const ControlProblem& pb, const MartingaleModel& model,
                         double t, const Vec& x, const Vec& u, const Vec& p, const Vec& wdot) {
    Vec dx;
    if (pb.drift_grad_contract) {
        dx = pb.drift_grad_contract(x, u, p);
    } else {
        dx = fd_gradient([&](const Vec& y) { return p.dot(pb.drift(y, u)); }, x);
    }
    if (pb.running_cost_grad_x) {
        dx += pb.running_cost_grad_x(x, u);
    } else {
        dx += fd_gradient([&](const Vec& y) { return pb.running_cost(y, u); }, x);
    }
    if (pb.diffusion_grad_contract) {
        dx += pb.diffusion_grad_contract(x, p, wdot);
    } else {
        dx += fd_gradient([&](const Vec& y) { return p.dot(pb.diffusion(y) * wdot); }, x);
    }
    if (pb.strat_grad_contract) {
        dx -= 0.5 * pb.strat_grad_contract(x, p);
    } else {
        dx -= 0.5 * fd_gradient([&](const Vec& y) { return p.dot(pb.strat_correction(y)); }, x);
    }
    dx -= model_z_jacobian(model, t, x).transpose() * wdot;
    dx += trace_term_grad(pb, model, t, x);
    return dx;
}

HamGrad grad_min_hamiltonian_w(const ControlProblem& pb, const MartingaleModel& model,
                               double t, const Vec& x, const Vec& p, const Vec& wdot) {
    InnerMin inner = pb.inner_minimizer(x, p);
    HamGrad g;
    g.dp = effective_drift_w(pb, model, t, x, inner.u, wdot);
    g.dx = hamiltonian_grad_x_w(pb, model, t, x, inner.u, p, wdot);
    g.u = std::move(inner.u);
    return g;
}

Vec effective_drift(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u) {
    return effective_drift_w(*ctx.problem, *ctx.model, t, x, u, w_dot(ctx.path, t));
}

double effective_cost(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u) {
    return effective_cost_w(*ctx.problem, *ctx.model, t, x, u, w_dot(ctx.path, t));
}

double hamiltonian_at(const PathwiseContext& ctx, double t, const Vec& x, const Vec& u, const Vec& p) {
    return hamiltonian_at_w(*ctx.problem, *ctx.model, t, x, u, p, w_dot(ctx.path, t));
}

MinHam min_hamiltonian(const PathwiseContext& ctx, double t, const Vec& x, const Vec& p) {
    return min_hamiltonian_w(*ctx.problem, *ctx.model, t, x, p, w_dot(ctx.path, t));
}

HamGrad grad_min_hamiltonian(const PathwiseContext& ctx, double t, const Vec& x, const Vec& p) {
    return grad_min_hamiltonian_w(*ctx.problem, *ctx.model, t, x, p, w_dot(ctx.path, t));
}

} // namespace dualbound
