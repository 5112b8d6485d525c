#include "dualbound/pontryagin.hpp"

#include <cmath>

#include "dualbound/errors.hpp"

namespace dualbound {

namespace {

void check_state(const Vec& x, int step, double guard) {
    const double norm = x.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(norm) || norm > guard) throw DivergedPath(step, norm);
}

Mat forward_sweep_table(const PathwiseContext& ctx, const SweepConfig& cfg,
                        const WdotTable& wt, const Mat& u) {
    const ControlProblem& pb = *ctx.problem;
    const MartingaleModel& model = *ctx.model;
    const int n = cfg.n_t;
    const double dt = pb.horizon / n;
    Mat x(n + 1, pb.state_dim);
    x.row(0) = pb.x0.transpose();
    Vec xi = pb.x0;
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const Vec ui = u.row(i).transpose();
        if (cfg.integrator == Integrator::euler) {
            xi += dt * effective_drift_w(pb, model, t, xi, ui, wt.at(2 * i));
        } else {
            const Vec un = u.row(i + 1).transpose();
            const Vec uh = 0.5 * (ui + un);
            Vec k1 = effective_drift_w(pb, model, t, xi, ui, wt.at(2 * i));
            Vec k2 = effective_drift_w(pb, model, t + 0.5 * dt, xi + 0.5 * dt * k1, uh, wt.at(2 * i + 1));
            Vec k3 = effective_drift_w(pb, model, t + 0.5 * dt, xi + 0.5 * dt * k2, uh, wt.at(2 * i + 1));
            Vec k4 = effective_drift_w(pb, model, t + dt, xi + dt * k3, un, wt.at(2 * i + 2));
            xi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        check_state(xi, i + 1, cfg.diverge_norm);
        x.row(i + 1) = xi.transpose();
    }
    return x;
}

Mat backward_sweep_table(const PathwiseContext& ctx, const SweepConfig& cfg,
                         const WdotTable& wt, const Mat& x, const Mat& u) {
    const ControlProblem& pb = *ctx.problem;
    const MartingaleModel& model = *ctx.model;
    const int n = cfg.n_t;
    const double dt = pb.horizon / n;
    Mat p(n + 1, pb.state_dim);
    Vec pi = pb.terminal_grad(x.row(n).transpose());
    p.row(n) = pi.transpose();
    for (int i = n - 1; i >= 0; --i) {
        const double t1 = (i + 1) * dt;
        const Vec x1 = x.row(i + 1).transpose();
        const Vec u1 = u.row(i + 1).transpose();
        if (cfg.integrator == Integrator::euler) {
            pi += dt * hamiltonian_grad_x_w(pb, model, t1, x1, u1, pi, wt.at(2 * i + 2));
        } else {
            // integrate dp/dt = -dH/dx from t_{i+1} down to t_i
            const Vec x0 = x.row(i).transpose();
            const Vec u0 = u.row(i).transpose();
            const Vec xh = 0.5 * (x0 + x1);
            const Vec uh = 0.5 * (u0 + u1);
            const double th = t1 - 0.5 * dt;
            Vec k1 = hamiltonian_grad_x_w(pb, model, t1, x1, u1, pi, wt.at(2 * i + 2));
            Vec k2 = hamiltonian_grad_x_w(pb, model, th, xh, uh, pi + 0.5 * dt * k1, wt.at(2 * i + 1));
            Vec k3 = hamiltonian_grad_x_w(pb, model, th, xh, uh, pi + 0.5 * dt * k2, wt.at(2 * i + 1));
            Vec k4 = hamiltonian_grad_x_w(pb, model, t1 - dt, x0, u0, pi + dt * k3, wt.at(2 * i));
            pi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        check_state(pi, i, cfg.diverge_norm);
        p.row(i) = pi.transpose();
    }
    return p;
}

double pathwise_value_table(const PathwiseContext& ctx, const WdotTable& wt,
                            const Trajectory& traj, Quadrature quadrature) {
    const ControlProblem& pb = *ctx.problem;
    const MartingaleModel& model = *ctx.model;
    const int n = static_cast<int>(traj.x.rows()) - 1;
    const double dt = pb.horizon / n;
    const int lo = (quadrature == Quadrature::right) ? 1 : 0;
    const int hi = (quadrature == Quadrature::right) ? n : n - 1;
    double sum = 0.0;
    for (int i = lo; i <= hi; ++i) {
        sum += effective_cost_w(pb, model, traj.t(i), traj.x.row(i).transpose(),
                                traj.u.row(i).transpose(), wt.at(2 * i));
    }
    return sum * dt + pb.terminal_cost(traj.x.row(n).transpose());
}

} // namespace

Mat forward_sweep(const PathwiseContext& ctx, const SweepConfig& cfg, const Mat& u) {
    return forward_sweep_table(ctx, cfg, build_wdot_table(ctx.path, cfg.n_t), u);
}

Mat backward_sweep(const PathwiseContext& ctx, const SweepConfig& cfg, const Mat& x, const Mat& u) {
    return backward_sweep_table(ctx, cfg, build_wdot_table(ctx.path, cfg.n_t), x, u);
}

double pathwise_value(const PathwiseContext& ctx, const Trajectory& traj, Quadrature quadrature) {
    const int n = static_cast<int>(traj.x.rows()) - 1;
    return pathwise_value_table(ctx, build_wdot_table(ctx.path, n), traj, quadrature);
}

SweepResult solve_path(const PathwiseContext& ctx, const SweepConfig& cfg) {
    const ControlProblem& pb = *ctx.problem;
    const MartingaleModel& model = *ctx.model;
    const int n = cfg.n_t;
    const double dt = pb.horizon / n;
    const WdotTable wt = build_wdot_table(ctx.path, n);

    Trajectory traj;
    traj.t = Vec::LinSpaced(n + 1, 0.0, pb.horizon);
    for (int i = 0; i <= n; ++i) traj.t(i) = i * dt;

    Mat u = Mat::Zero(n + 1, pb.control_dim);
    if (pb.control_box) {
        const Vec clamped = clamp_to_box(Vec::Zero(pb.control_dim), pb.control_box);
        u = clamped.transpose().replicate(n + 1, 1);
    }
    Mat x = forward_sweep_table(ctx, cfg, wt, u);
    Mat p = backward_sweep_table(ctx, cfg, wt, x, u);

    int iters = 0;
    double sup_diff = 0.0;
    bool converged = false;
    for (int l = 0; l < cfg.max_iters; ++l) {
        ++iters;
        for (int i = 0; i <= n; ++i) {
            MinHam mh = min_hamiltonian_w(pb, model, traj.t(i), x.row(i).transpose(),
                                          p.row(i).transpose(), wt.at(2 * i));
            u.row(i) = (cfg.alpha * mh.u + (1.0 - cfg.alpha) * u.row(i).transpose()).transpose();
        }
        Mat x_new = forward_sweep_table(ctx, cfg, wt, u);
        p = backward_sweep_table(ctx, cfg, wt, x_new, u);
        sup_diff = (x_new - x).lpNorm<Eigen::Infinity>();
        x = std::move(x_new);
        if (sup_diff <= cfg.eps) {
            converged = true;
            break;
        }
    }

    traj.x = std::move(x);
    traj.p = std::move(p);
    traj.u = std::move(u);
    SweepResult res;
    res.value = pathwise_value_table(ctx, wt, traj, cfg.quadrature);
    res.traj = std::move(traj);
    res.iterations = iters;
    res.sup_diff = sup_diff;
    res.converged = converged;
    return res;
}

} // namespace dualbound
