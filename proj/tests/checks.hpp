#pragma once

// Shared numeric checks used by both the unit tests and the acceptance gate,
// so the two binaries agree on what "gradients match" etc. means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dualbound/hamiltonian.hpp"
#include "dualbound/hopf.hpp"
#include "dualbound/noise.hpp"
#include "dualbound/primal.hpp"
#include "dualbound/problem.hpp"

namespace checks {

using dualbound::Vec;

// Small deterministic generator for test-local draws (not the library RNG).
struct TestRng {
    std::uint64_t s;
    explicit TestRng(std::uint64_t seed) : s(seed * 2654435761u + 1) {}
    double uniform() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(s >> 11) / 9007199254740992.0;
    }
    double normal() {
        double a = std::max(uniform(), 1e-300), b = uniform();
        return std::sqrt(-2.0 * std::log(a)) * std::cos(6.283185307179586 * b);
    }
};

struct GradCheckResult {
    int tested = 0;
    int excluded = 0;
    double worst_dx = 0.0;
    double worst_dp = 0.0;
};

// Central-difference verification of the minimized-Hamiltonian gradients on
// random (t, x, p) points.  Points whose clamped minimizer sits on the control
// box boundary are excluded (the envelope derivative can kink there).
inline GradCheckResult gradient_check(const dualbound::ControlProblem& pb,
                                      const dualbound::MartingaleModel& model, int n_points,
                                      std::uint64_t seed) {
    using namespace dualbound;
    GradCheckResult res;
    auto path = sample_coeffs(16, pb.noise_dim, pb.horizon, seed, 0);
    TestRng rng(seed + 17);
    const bool positive_state = pb.name == "aiyagari";
    for (int k = 0; k < n_points; ++k) {
        double t = rng.uniform() * pb.horizon;
        Vec x = pb.x0;
        for (int j = 0; j < pb.state_dim; ++j) x(j) += 0.6 * rng.normal();
        if (positive_state)
            for (int j = 0; j < pb.state_dim; ++j) x(j) = std::abs(x(j)) + 0.2;
        Vec p(pb.state_dim);
        for (int j = 0; j < pb.state_dim; ++j) p(j) = rng.normal();
        if (positive_state) p(pb.state_dim - 1) = -std::abs(p(pb.state_dim - 1)) - 0.2;
        Vec wd = w_dot(path, t);

        auto g = grad_min_hamiltonian_w(pb, model, t, x, p, wd);
        bool on_boundary = false;
        if (pb.control_box)
            for (int j = 0; j < pb.control_dim; ++j) {
                double lo = pb.control_box->lo(j), hi = pb.control_box->hi(j);
                double tol = 1e-7 * (1.0 + std::abs(lo) + std::abs(hi));
                if (g.u(j) - lo < tol || hi - g.u(j) < tol) on_boundary = true;
            }
        if (on_boundary) {
            ++res.excluded;
            continue;
        }
        ++res.tested;

        auto val = [&](const Vec& xx, const Vec& pp) {
            return min_hamiltonian_w(pb, model, t, xx, pp, wd).value;
        };
        for (int j = 0; j < pb.state_dim; ++j) {
            double hx = 1e-5 * (1.0 + std::abs(x(j)));
            Vec xp = x, xm = x;
            xp(j) += hx;
            xm(j) -= hx;
            double fd = (val(xp, p) - val(xm, p)) / (2 * hx);
            double sc = std::max({std::abs(fd), std::abs(g.dx(j)), 1e-6});
            res.worst_dx = std::max(res.worst_dx, std::abs(fd - g.dx(j)) / sc);

            double hp = 1e-5 * (1.0 + std::abs(p(j)));
            Vec pp2 = p, pm = p;
            pp2(j) += hp;
            pm(j) -= hp;
            double fdp = (val(x, pp2) - val(x, pm)) / (2 * hp);
            double scp = std::max({std::abs(fdp), std::abs(g.dp(j)), 1e-6});
            res.worst_dp = std::max(res.worst_dp, std::abs(fdp - g.dp(j)) / scp);
        }
    }
    return res;
}

// Worst relative deviation of objective_gradient from an independent central
// difference taken at a 40x finer step.
inline double ascent_gradient_check(const dualbound::PathwiseContext& ctx,
                                    const dualbound::HopfConfig& cfg, int n_points,
                                    std::uint64_t seed) {
    using namespace dualbound;
    TestRng rng(seed);
    const int d = ctx.problem->state_dim;
    double worst = 0.0;
    for (int k = 0; k < n_points; ++k) {
        Vec p0(d);
        for (int j = 0; j < d; ++j) p0(j) = rng.normal();
        if (ctx.problem->name == "aiyagari") p0(d - 1) = -1.0;
        Vec g = objective_gradient(ctx, p0, cfg);
        for (int j = 0; j < d; ++j) {
            if (ctx.problem->name == "aiyagari" && j == d - 1) continue;
            double h = cfg.fd_step / 40.0 * (1.0 + std::abs(p0(j)));
            Vec pp = p0, pm = p0;
            pp(j) += h;
            pm(j) -= h;
            double fd = (hopf_objective(ctx, pp, cfg) - hopf_objective(ctx, pm, cfg)) / (2 * h);
            double sc = std::max({std::abs(fd), std::abs(g(j)), 1e-6});
            worst = std::max(worst, std::abs(fd - g(j)) / sc);
        }
    }
    return worst;
}

// sup_p <x,p> - g*(p) recovered by backtracking gradient ascent on the
// conjugate; returns the worst |g** - g| over random points.
inline double biconjugation_worst(const dualbound::ControlProblem& pb, int n_points,
                                  std::uint64_t seed) {
    using namespace dualbound;
    const auto& sc = std::get<SmoothConjugate>(pb.conjugate);
    TestRng rng(seed);
    const int d = pb.state_dim;
    double worst = 0.0;
    for (int k = 0; k < n_points; ++k) {
        Vec x(d);
        for (int j = 0; j < d; ++j) x(j) = 4.0 * rng.uniform() - 2.0;
        Vec p = Vec::Zero(d);
        double best = -1e300, eta = 1.0;
        for (int it = 0; it < 400; ++it) {
            auto ev = sc.eval(p);
            double obj = x.dot(p) - ev.value;
            Vec grad = x - ev.grad;
            best = std::max(best, obj);
            Vec cand = p + eta * grad;
            double obj2 = x.dot(cand) - sc.eval(cand).value;
            if (obj2 >= obj) {
                p = cand;
                eta *= 1.2;
            } else {
                eta *= 0.5;
            }
            if (grad.norm() < 1e-12) break;
        }
        worst = std::max(worst, std::abs(best - pb.terminal_cost(x)));
    }
    return worst;
}

// Fenchel-Young equality g(x) + g*(grad g(x)) = <x, grad g(x)>, handling both
// conjugate shapes; returns the worst absolute defect over random points.
inline double fenchel_young_worst(const dualbound::ControlProblem& pb, int n_points,
                                  std::uint64_t seed) {
    using namespace dualbound;
    TestRng rng(seed);
    const int d = pb.state_dim;
    double worst = 0.0;
    for (int k = 0; k < n_points; ++k) {
        Vec x = pb.x0;
        for (int j = 0; j < d; ++j) x(j) += rng.normal();
        if (pb.name == "aiyagari")
            for (int j = 0; j < d; ++j) x(j) = std::abs(x(j)) + 0.1;
        Vec p = pb.terminal_grad(x);
        double conj = 0.0;
        if (const auto* smooth = std::get_if<SmoothConjugate>(&pb.conjugate)) {
            conj = smooth->eval(p).value;
        } else {
            const auto& ind = std::get<AffineIndicatorConjugate>(pb.conjugate);
            int ti = 0;
            for (int j = 0; j < d; ++j)
                if (ind.constrained[j]) {
                    if (std::abs(p(j) - ind.target(ti)) > 1e-12) return 1e300;
                    ++ti;
                }
            if (ind.free_part) conj = ind.free_part(p).value;
        }
        worst = std::max(worst, std::abs(pb.terminal_cost(x) + conj - x.dot(p)));
    }
    return worst;
}

// 1-d numeric sup_x { p x - g1(x) } by golden-section, for checking the free
// part of an affine-indicator conjugate against an independent optimizer.
inline double golden_sup(const std::function<double(double)>& f, double a, double b) {
    const double gr = 0.6180339887498949;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    for (int it = 0; it < 300; ++it) {
        if (f(c1) < f(c2)) {
            a = c1;
            c1 = c2;
            c2 = a + gr * (b - a);
        } else {
            b = c2;
            c2 = c1;
            c1 = b - gr * (b - a);
        }
    }
    return f(0.5 * (a + b));
}

// Truncated-series variance of the smoothed noise at time t on unit horizon.
inline double kl_truncated_variance(int n, double t) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
        double om = (i + 0.5) * M_PI;
        double s = std::sin(om * t);
        v += 2.0 / (om * om) * s * s;
    }
    return v;
}

// results.csv with the wall_time_s column removed (it is the one legitimately
// run-dependent field).
inline std::string csv_without_walltime(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.rfind(',');
        out << line.substr(0, pos) << '\n';
    }
    return out.str();
}

inline int count_lines(const std::string& text) {
    return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace checks
