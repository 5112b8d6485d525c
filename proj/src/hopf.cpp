#include "dualbound/hopf.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "dualbound/errors.hpp"
#include "dualbound/rng.hpp"

namespace dualbound {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct IvpEval {
    double objective = kNegInf;
    Vec p_terminal;
    bool diverged = false;
    bool feasible = true;
};

void guard(const Vec& v, int step, double limit) {
    const double norm = v.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(norm) || norm > limit) throw DivergedPath(step, norm);
}

/* One integration of the characteristic system with the objective quadrature
 * accumulated at the grid nodes.  traj_out, when non-null, receives the full
 * grids (then control values are stored as well). */
IvpEval hopf_eval(const PathwiseContext& ctx, const WdotTable& wt, const Vec& p0,
                  const HopfConfig& cfg, bool include_indicator, Trajectory* traj_out) {
    const ControlProblem& pb = *ctx.problem;
    const MartingaleModel& model = *ctx.model;
    const int n = cfg.n_t;
    const double dt = pb.horizon / n;

    IvpEval out;
    Vec x = pb.x0;
    Vec p = p0;
    double quad = 0.0;

    if (traj_out) {
        traj_out->x.resize(n + 1, pb.state_dim);
        traj_out->p.resize(n + 1, pb.state_dim);
        traj_out->u.resize(n + 1, pb.control_dim);
        traj_out->t.resize(n + 1);
    }

    const bool right = cfg.quadrature == Quadrature::right;
    try {
        for (int i = 0; i <= n; ++i) {
            const double t = i * dt;
            HamGrad g = grad_min_hamiltonian_w(pb, model, t, x, p, wt.at(2 * i));
            const bool in_quad = right ? (i >= 1) : (i <= n - 1);
            if (in_quad) {
                MinHam mh = min_hamiltonian_w(pb, model, t, x, p, wt.at(2 * i));
                quad += mh.value - x.dot(g.dx);
            }
            if (traj_out) {
                traj_out->x.row(i) = x.transpose();
                traj_out->p.row(i) = p.transpose();
                traj_out->u.row(i) = g.u.transpose();
                traj_out->t(i) = t;
            }
            if (i == n) break;

            if (cfg.integrator == Integrator::euler) {
                x += dt * g.dp;
                p -= dt * g.dx;
            } else {
                const double th = t + 0.5 * dt;
                HamGrad g2 = grad_min_hamiltonian_w(pb, model, th, x + 0.5 * dt * g.dp,
                                                    p - 0.5 * dt * g.dx, wt.at(2 * i + 1));
                HamGrad g3 = grad_min_hamiltonian_w(pb, model, th, x + 0.5 * dt * g2.dp,
                                                    p - 0.5 * dt * g2.dx, wt.at(2 * i + 1));
                HamGrad g4 = grad_min_hamiltonian_w(pb, model, t + dt, x + dt * g3.dp,
                                                    p - dt * g3.dx, wt.at(2 * i + 2));
                x += dt / 6.0 * (g.dp + 2.0 * g2.dp + 2.0 * g3.dp + g4.dp);
                p -= dt / 6.0 * (g.dx + 2.0 * g2.dx + 2.0 * g3.dx + g4.dx);
            }
            guard(x, i + 1, cfg.diverge_norm);
            guard(p, i + 1, cfg.diverge_norm);
        }
    } catch (const DivergedPath&) {
        out.diverged = true;
        out.feasible = false;
        return out;
    }

    out.p_terminal = p;
    double terminal = 0.0;
    if (const auto* smooth = std::get_if<SmoothConjugate>(&pb.conjugate)) {
        terminal = -smooth->eval(p).value;
    } else {
        const auto& ind = std::get<AffineIndicatorConjugate>(pb.conjugate);
        if (include_indicator) {
            for (int i = 0; i < pb.state_dim; ++i) {
                if (ind.constrained[i] && std::abs(p(i) - ind.target(i)) > cfg.constraint_tol) {
                    out.feasible = false;
                    return out;
                }
            }
        }
        if (ind.free_part) terminal = -ind.free_part(p).value;
    }
    if (!std::isfinite(terminal)) {
        out.feasible = false;
        return out;
    }
    out.objective = pb.x0.dot(p0) + terminal + quad * dt;
    return out;
}

// residual of the pinned coordinates after integrating from p0
Vec shooting_residual(const PathwiseContext& ctx, const WdotTable& wt, const Vec& p0,
                      const HopfConfig& cfg, const std::vector<int>& pinned, bool& diverged) {
    IvpEval ev = hopf_eval(ctx, wt, p0, cfg, false, nullptr);
    diverged = ev.diverged;
    Vec r(pinned.size());
    if (ev.diverged) {
        r.setConstant(std::numeric_limits<double>::infinity());
        return r;
    }
    const auto& ind = std::get<AffineIndicatorConjugate>(ctx.problem->conjugate);
    for (size_t k = 0; k < pinned.size(); ++k)
        r(k) = ev.p_terminal(pinned[k]) - ind.target(pinned[k]);
    return r;
}

/* Damped Newton with finite-difference Jacobian on the pinned coordinates of
 * p0.  Returns true when the sup-norm residual meets constraint_tol. */
bool shoot(const PathwiseContext& ctx, const WdotTable& wt, Vec& p0,
           const HopfConfig& cfg, const std::vector<int>& pinned) {
    const int m = static_cast<int>(pinned.size());
    bool diverged = false;
    Vec r = shooting_residual(ctx, wt, p0, cfg, pinned, diverged);
    for (int it = 0; it < cfg.newton_iters; ++it) {
        if (!diverged && r.lpNorm<Eigen::Infinity>() <= cfg.constraint_tol) return true;
        if (diverged) return false;
        const double h = cfg.fd_step * (1.0 + p0.norm());
        Mat jac(m, m);
        for (int k = 0; k < m; ++k) {
            Vec pp = p0, pm = p0;
            pp(pinned[k]) += h;
            pm(pinned[k]) -= h;
            bool divp = false, divm = false;
            Vec rp = shooting_residual(ctx, wt, pp, cfg, pinned, divp);
            Vec rm = shooting_residual(ctx, wt, pm, cfg, pinned, divm);
            if (divp || divm) return false;
            jac.col(k) = (rp - rm) / (2.0 * h);
        }
        Vec step = jac.colPivHouseholderQr().solve(r);
        if (!step.allFinite()) return false;
        double lambda = 1.0;
        const double base = r.norm();
        bool accepted = false;
        for (int bt = 0; bt < 12; ++bt) {
            Vec cand = p0;
            for (int k = 0; k < m; ++k) cand(pinned[k]) -= lambda * step(k);
            bool div_c = false;
            Vec rc = shooting_residual(ctx, wt, cand, cfg, pinned, div_c);
            if (!div_c && (rc.norm() < base || rc.lpNorm<Eigen::Infinity>() <= cfg.constraint_tol)) {
                p0 = cand;
                r = rc;
                diverged = false;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) return false;
    }
    return r.lpNorm<Eigen::Infinity>() <= cfg.constraint_tol;
}

struct BestTracker {
    double value = kNegInf;
    Vec p0;
    void offer(double v, const Vec& p) {
        if (v > value) {
            value = v;
            p0 = p;
        }
    }
};

} // namespace

Trajectory hamiltonian_ivp(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg) {
    const WdotTable wt = build_wdot_table(ctx.path, cfg.n_t);
    Trajectory traj;
    IvpEval ev = hopf_eval(ctx, wt, p0, cfg, false, &traj);
    if (ev.diverged) throw DivergedPath(-1, std::numeric_limits<double>::infinity());
    return traj;
}

double hopf_objective(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg) {
    const WdotTable wt = build_wdot_table(ctx.path, cfg.n_t);
    return hopf_eval(ctx, wt, p0, cfg, true, nullptr).objective;
}

Vec objective_gradient(const PathwiseContext& ctx, const Vec& p0, const HopfConfig& cfg) {
    const WdotTable wt = build_wdot_table(ctx.path, cfg.n_t);
    const double h = cfg.fd_step * (1.0 + p0.norm());
    Vec g(p0.size());
    for (int j = 0; j < p0.size(); ++j) {
        Vec pp = p0, pm = p0;
        pp(j) += h;
        pm(j) -= h;
        const double fp = hopf_eval(ctx, wt, pp, cfg, false, nullptr).objective;
        const double fm = hopf_eval(ctx, wt, pm, cfg, false, nullptr).objective;
        g(j) = (fp - fm) / (2.0 * h);
    }
    return g;
}

HopfResult solve_hopf(const PathwiseContext& ctx, const HopfConfig& cfg) {
    const ControlProblem& pb = *ctx.problem;
    const WdotTable wt = build_wdot_table(ctx.path, cfg.n_t);
    const int d = pb.state_dim;

    HopfResult result;
    BestTracker best;

    std::vector<int> pinned, free_coords;
    if (const auto* ind = std::get_if<AffineIndicatorConjugate>(&pb.conjugate)) {
        for (int i = 0; i < d; ++i)
            (ind->constrained[i] ? pinned : free_coords).push_back(i);
    } else {
        for (int i = 0; i < d; ++i) free_coords.push_back(i);
    }

    const Vec g0 = pb.terminal_grad(pb.x0);

    // Fully pinned conjugate: pure shooting, no outer ascent.
    if (!pinned.empty() && free_coords.empty()) {
        const auto& ind = std::get<AffineIndicatorConjugate>(pb.conjugate);
        Vec p0 = ind.target;
        if (shoot(ctx, wt, p0, cfg, pinned)) {
            IvpEval ev = hopf_eval(ctx, wt, p0, cfg, true, nullptr);
            if (ev.feasible) {
                best.offer(ev.objective, p0);
                result.feasible = true;
            }
        }
        result.value = best.value;
        result.p0 = result.feasible ? best.p0 : p0;
        result.objective_trace.push_back(best.value);
        return result;
    }

    // Evaluate the objective on the feasible set: shooting first when some
    // coordinates are pinned, then the (indicator-free) objective.
    auto eval_feasible = [&](Vec& p0) -> double {
        if (!pinned.empty() && !shoot(ctx, wt, p0, cfg, pinned)) return kNegInf;
        IvpEval ev = hopf_eval(ctx, wt, p0, cfg, false, nullptr);
        if (ev.diverged || !ev.feasible) return kNegInf;
        return ev.objective;
    };

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Crng rng(cfg.seed, cfg.sample_index, 7000 + static_cast<std::uint64_t>(restart));
        // Restart 0 starts at the transversality guess itself; later restarts
        // jitter it, redrawing when the draw lands outside the effective
        // domain (e.g. where the conjugate's free part is infinite).
        Vec p0;
        double cur = kNegInf;
        const int draws = restart == 0 ? 1 : 8;
        for (int attempt = 0; attempt < draws && !std::isfinite(cur); ++attempt) {
            p0 = g0;
            if (restart > 0)
                for (int j : free_coords) p0(j) += cfg.init_stddev * rng.normal();
            if (const auto* ind = std::get_if<AffineIndicatorConjugate>(&pb.conjugate))
                for (int j : pinned) p0(j) = ind->target(j);
            cur = eval_feasible(p0);
        }
        if (std::isfinite(cur)) {
            best.offer(cur, p0);
            result.feasible = true;
        }
        for (int it = 0; it < cfg.max_iters; ++it) {
            if (!std::isfinite(cur)) break;
            // gradient in the free coordinates, along the constraint manifold
            const double h = cfg.fd_step * (1.0 + p0.norm());
            Vec grad = Vec::Zero(d);
            bool grad_ok = true;
            for (int j : free_coords) {
                Vec pp = p0, pm = p0;
                pp(j) += h;
                pm(j) -= h;
                const double fp = eval_feasible(pp);
                const double fm = eval_feasible(pm);
                if (!std::isfinite(fp) || !std::isfinite(fm)) {
                    grad_ok = false;
                    break;
                }
                grad(j) = (fp - fm) / (2.0 * h);
                best.offer(fp, pp);
                best.offer(fm, pm);
            }
            if (!grad_ok) break;
            if (grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) break;

            double step = cfg.eta;
            bool improved = false;
            for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
                Vec cand = p0 + step * grad;
                const double v = eval_feasible(cand);
                if (std::isfinite(v)) best.offer(v, cand);
                if (v > cur) {
                    p0 = cand;
                    cur = v;
                    result.feasible = true;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            result.objective_trace.push_back(best.value);
            if (!improved) break;
        }
        result.objective_trace.push_back(best.value);
    }

    result.value = best.value;
    result.p0 = result.feasible ? best.p0 : g0;
    return result;
}

} // namespace dualbound
