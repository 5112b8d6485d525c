#include "dualbound/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualbound {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Vec clamp_to_box(const Vec& u, const std::optional<ControlBox>& box) {
    if (!box) return u;
    return u.cwiseMax(box->lo).cwiseMin(box->hi);
}

Vec lq_a_diagonal(int d) {
    Vec a = Vec::Constant(d, 4.0);
    a(0) = 1.0;
    if (d > 1) a(1) = 4.0 / 25.0;
    return a;
}

ControlProblem make_lq(int d) {
    if (d < 1) throw std::invalid_argument("make_lq: d must be positive");
    ControlProblem pb;
    pb.name = "lq";
    pb.state_dim = pb.noise_dim = pb.control_dim = d;
    pb.horizon = 1.0;
    pb.x0 = Vec::Zero(d);

    const Vec a = lq_a_diagonal(d);
    const Mat sigma = M_SQRT2 * Mat::Identity(d, d);

    pb.drift = [](const Vec&, const Vec& u) -> Vec { return 2.0 * u; };
    pb.diffusion = [sigma](const Vec&) -> Mat { return sigma; };
    pb.running_cost = [](const Vec&, const Vec& u) { return u.squaredNorm(); };
    pb.terminal_cost = [a](const Vec& x) { return 0.5 * (x.dot(a.cwiseProduct(x)) + 1.0); };
    pb.terminal_grad = [a](const Vec& x) -> Vec { return a.cwiseProduct(x); };
    pb.conjugate = SmoothConjugate{[a](const Vec& p) {
        return ConjugateEval{0.5 * p.dot(p.cwiseQuotient(a)) - 0.5, p.cwiseQuotient(a)};
    }};
    pb.inner_minimizer = [](const Vec&, const Vec& p) {
        return InnerMin{-p, -p.squaredNorm()};
    };
    pb.strat_correction = [d](const Vec&) -> Vec { return Vec::Zero(d); };
    pb.drift_grad_contract = [d](const Vec&, const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.running_cost_grad_x = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.diffusion_grad_contract = [d](const Vec&, const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.strat_grad_contract = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    return pb;
}

ControlProblem make_ou(int d) {
    if (d < 1) throw std::invalid_argument("make_ou: d must be positive");
    ControlProblem pb;
    pb.name = "ou";
    pb.state_dim = pb.noise_dim = pb.control_dim = d;
    pb.horizon = 1.0;
    pb.x0 = Vec::Ones(d);

    const Mat a = Mat::Constant(d, d, 0.12) - Mat::Identity(d, d);
    const Mat b = Mat::Constant(d, d, 0.10) + Mat::Identity(d, d);
    const Vec gamma = Vec::Ones(d);

    pb.drift = [a, b](const Vec& x, const Vec& u) -> Vec { return a * x + b * u; };
    pb.diffusion = [b](const Vec&) -> Mat { return b; };
    pb.running_cost = [](const Vec&, const Vec& u) { return 0.5 * u.squaredNorm(); };
    pb.terminal_cost = [gamma](const Vec& x) { return gamma.dot(x); };
    pb.terminal_grad = [gamma](const Vec&) -> Vec { return gamma; };
    pb.conjugate = AffineIndicatorConjugate{gamma, std::vector<bool>(d, true), nullptr};
    pb.inner_minimizer = [a, b](const Vec& x, const Vec& p) {
        Vec bp = b.transpose() * p;
        return InnerMin{-bp, p.dot(a * x) - 0.5 * bp.squaredNorm()};
    };
    pb.strat_correction = [d](const Vec&) -> Vec { return Vec::Zero(d); };
    pb.drift_grad_contract = [a](const Vec&, const Vec&, const Vec& p) -> Vec {
        return a.transpose() * p;
    };
    pb.running_cost_grad_x = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.diffusion_grad_contract = [d](const Vec&, const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.strat_grad_contract = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    return pb;
}

namespace {

// r_bar(z) = 0.04 (z - 1.1) e^{0.2 z} - 1 + 0.95 z
double aiyagari_rbar(double z) {
    return 0.04 * (z - 1.1) * std::exp(0.2 * z) - 1.0 + 0.95 * z;
}

double aiyagari_rbar_prime(double z) {
    return (0.04 + 0.008 * (z - 1.1)) * std::exp(0.2 * z) + 0.95;
}

} // namespace

ControlProblem make_aiyagari() {
    ControlProblem pb;
    pb.name = "aiyagari";
    pb.state_dim = 2;
    pb.noise_dim = 2;
    pb.control_dim = 1;
    pb.horizon = 0.1;
    pb.x0 = (Vec(2) << 1.0, 0.5).finished();

    const double u_lo = 1e-3, u_hi = 1e3;
    pb.control_box = ControlBox{Vec::Constant(1, u_lo), Vec::Constant(1, u_hi)};

    pb.drift = [](const Vec& x, const Vec& u) -> Vec {
        return (Vec(2) << 1.0 - x(0), 0.95 * x(0) - u(0)).finished();
    };
    pb.diffusion = [](const Vec& x) -> Mat {
        Mat s = Mat::Zero(2, 2);
        s(0, 0) = 1.0;
        s(1, 1) = 0.1 * x(1);
        return s;
    };
    pb.running_cost = [](const Vec& x, const Vec& u) {
        return -std::log(u(0)) + aiyagari_rbar(x(0));
    };
    // g(x) = 0.2 e^{0.2 x1} - x2
    pb.terminal_cost = [](const Vec& x) { return 0.2 * std::exp(0.2 * x(0)) - x(1); };
    pb.terminal_grad = [](const Vec& x) -> Vec {
        return (Vec(2) << 0.04 * std::exp(0.2 * x(0)), -1.0).finished();
    };
    // Separable conjugate: coordinate 2 is pinned to -1; coordinate 1 carries
    // g1*(p1) = 5 p1 ln(25 p1) - 5 p1 for p1 > 0, 0 at p1 = 0, +inf below.
    AffineIndicatorConjugate conj;
    conj.target = (Vec(2) << 0.0, -1.0).finished();
    conj.constrained = {false, true};
    conj.free_part = [](const Vec& p) -> ConjugateEval {
        Vec grad = Vec::Zero(2);
        const double p1 = p(0);
        if (p1 < 0.0) return {kInf, grad};
        if (p1 == 0.0) return {0.0, grad};
        grad(0) = 5.0 * std::log(25.0 * p1);
        return {5.0 * p1 * std::log(25.0 * p1) - 5.0 * p1, grad};
    };
    pb.conjugate = std::move(conj);

    pb.inner_minimizer = [u_lo, u_hi](const Vec& x, const Vec& p) {
        const double p2 = p(1);
        double u = (p2 < 0.0) ? std::clamp(-1.0 / p2, u_lo, u_hi) : u_hi;
        double value = p(0) * (1.0 - x(0)) + p2 * (0.95 * x(0) - u) - std::log(u) +
                       aiyagari_rbar(x(0));
        return InnerMin{Vec::Constant(1, u), value};
    };
    // (grad sigma : sigma)_2 = (d sigma22 / d x2) sigma22 = 0.1 * 0.1 x2
    pb.strat_correction = [](const Vec& x) -> Vec {
        return (Vec(2) << 0.0, 0.01 * x(1)).finished();
    };

    pb.drift_grad_contract = [](const Vec&, const Vec&, const Vec& p) -> Vec {
        return (Vec(2) << -p(0) + 0.95 * p(1), 0.0).finished();
    };
    pb.running_cost_grad_x = [](const Vec& x, const Vec&) -> Vec {
        return (Vec(2) << aiyagari_rbar_prime(x(0)), 0.0).finished();
    };
    pb.diffusion_grad_contract = [](const Vec&, const Vec& q, const Vec& v) -> Vec {
        return (Vec(2) << 0.0, 0.1 * q(1) * v(1)).finished();
    };
    pb.strat_grad_contract = [](const Vec&, const Vec& p) -> Vec {
        return (Vec(2) << 0.0, 0.01 * p(1)).finished();
    };
    pb.diffusion_jac = [](const Vec&) {
        std::vector<Mat> jac(2, Mat::Zero(2, 2));
        jac[1](1, 1) = 0.1;
        return jac;
    };
    return pb;
}

ControlProblem make_zero(int d) {
    ControlProblem pb = make_lq(d);
    pb.name = "zero";
    pb.drift = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
    pb.diffusion = [d](const Vec&) -> Mat { return Mat::Zero(d, d); };
    pb.running_cost = [](const Vec&, const Vec&) { return 0.0; };
    pb.inner_minimizer = [d](const Vec&, const Vec&) {
        return InnerMin{Vec::Zero(d), 0.0};
    };
    return pb;
}

ControlProblem make_problem(const std::string& name, int d) {
    if (name == "lq") return make_lq(d);
    if (name == "ou") return make_ou(d);
    if (name == "aiyagari") {
        if (d != 0 && d != 2) throw std::invalid_argument("aiyagari is 2-dimensional");
        return make_aiyagari();
    }
    if (name == "zero") return make_zero(d);
    throw std::invalid_argument("unknown problem '" + name + "'");
}

} // namespace dualbound
