#include <cmath>
#include <variant>

#include "checks.hpp"
#include "doctest.h"
#include "dualbound/problem.hpp"

using namespace dualbound;

TEST_SUITE("problem") {
    TEST_CASE("quadratic benchmark coefficients") {
        auto pb = make_lq(5);
        CHECK(pb.state_dim == 5);
        CHECK(pb.noise_dim == 5);
        CHECK(pb.control_dim == 5);
        CHECK(pb.horizon == 1.0);
        CHECK(pb.x0.cwiseAbs().maxCoeff() == 0.0);

        Vec a = lq_a_diagonal(5);
        CHECK(a(0) == 1.0);
        CHECK(a(1) == doctest::Approx(0.16).epsilon(1e-15));
        CHECK(a(2) == 4.0);
        CHECK(a(3) == 4.0);
        CHECK(a(4) == 4.0);

        Vec x = Vec::LinSpaced(5, -1.0, 1.0);
        Vec u = Vec::Constant(5, 0.3);
        CHECK((pb.drift(x, u) - 2.0 * u).cwiseAbs().maxCoeff() == 0.0);
        Mat sig = pb.diffusion(x);
        CHECK((sig - std::sqrt(2.0) * Mat::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(pb.running_cost(x, u) == doctest::Approx(u.squaredNorm()).epsilon(1e-15));
        double g = 0.5 * (x.dot(a.asDiagonal() * x) + 1.0);
        CHECK(pb.terminal_cost(x) == doctest::Approx(g).epsilon(1e-15));
        CHECK((pb.terminal_grad(x) - a.asDiagonal() * x).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(pb.strat_correction(x).cwiseAbs().maxCoeff() == 0.0);

        // inner minimum of <p, 2u> + |u|^2 is u = -p inside the box
        Vec p = (Vec(5) << 0.4, -1.0, 2.0, 0.0, -0.7).finished();
        auto im = pb.inner_minimizer(x, p);
        CHECK((im.u + p).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(im.value == doctest::Approx(-p.squaredNorm()).epsilon(1e-14));
        // and clamps to the box when the unconstrained argmin leaves it
        REQUIRE(pb.control_box);
        Vec pbig = Vec::Zero(5);
        pbig(2) = -15.0;
        auto imc = pb.inner_minimizer(x, pbig);
        CHECK(imc.u(2) == pb.control_box->hi(2));
        double by_hand = pbig(2) * 2.0 * imc.u(2) + imc.u.squaredNorm();
        CHECK(imc.value == doctest::Approx(by_hand).epsilon(1e-14));
    }

    TEST_CASE("mean-reverting benchmark coefficients") {
        const int d = 3;
        auto pb = make_ou(d);
        CHECK(pb.x0 == Vec::Ones(d));
        Vec ones = Vec::Ones(d);
        // A = 0.12 * ones - I and B = 0.10 * ones + I act on the ones vector
        // through their row sums
        Vec u = Vec::Zero(d);
        CHECK((pb.drift(ones, u) - (0.12 * d - 1.0) * ones).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((pb.diffusion(ones) * ones - (1.0 + 0.10 * d) * ones).cwiseAbs().maxCoeff() < 1e-14);
        Vec x = (Vec(3) << 0.2, -1.0, 0.5).finished();
        Vec uu = (Vec(3) << 1.0, 0.0, -2.0).finished();
        CHECK(pb.running_cost(x, uu) == doctest::Approx(0.5 * uu.squaredNorm()).epsilon(1e-15));
        CHECK(pb.terminal_cost(x) == doctest::Approx(x.sum()).epsilon(1e-15));
        CHECK_FALSE(pb.control_box);

        // inner minimum of <p, Ax + Bu> + |u|^2/2 at u = -B^T p
        Vec p = (Vec(3) << 0.3, -0.2, 1.1).finished();
        Mat A = Mat::Constant(d, d, 0.12) - Mat::Identity(d, d);
        Mat B = Mat::Constant(d, d, 0.10) + Mat::Identity(d, d);
        auto im = pb.inner_minimizer(x, p);
        CHECK((im.u + B.transpose() * p).cwiseAbs().maxCoeff() < 1e-14);
        double want = p.dot(A * x) - 0.5 * (B.transpose() * p).squaredNorm();
        CHECK(im.value == doctest::Approx(want).epsilon(1e-13));

        // terminal cost is affine, so every coordinate of p is pinned
        const auto& conj = std::get<AffineIndicatorConjugate>(pb.conjugate);
        CHECK(conj.target == Vec::Ones(d));
        for (bool c : conj.constrained) CHECK(c);
        CHECK_FALSE(conj.free_part);
    }

    TEST_CASE("consumption benchmark coefficients") {
        auto pb = make_aiyagari();
        CHECK(pb.state_dim == 2);
        CHECK(pb.control_dim == 1);
        CHECK(pb.horizon == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(pb.x0(0) == 1.0);
        CHECK(pb.x0(1) == 0.5);
        REQUIRE(pb.control_box);
        CHECK(pb.control_box->lo(0) == 1e-3);
        CHECK(pb.control_box->hi(0) == 1e3);

        Vec x = (Vec(2) << 1.3, 0.8).finished();
        Vec u = Vec::Constant(1, 0.6);
        Vec b = pb.drift(x, u);
        CHECK(b(0) == doctest::Approx(1.0 - 1.3).epsilon(1e-15));
        CHECK(b(1) == doctest::Approx(0.95 * 1.3 - 0.6).epsilon(1e-15));
        Mat s = pb.diffusion(x);
        CHECK(s(0, 0) == 1.0);
        CHECK(s(1, 1) == doctest::Approx(0.1 * 0.8).epsilon(1e-15));
        CHECK(s(0, 1) == 0.0);
        CHECK(s(1, 0) == 0.0);
        double rbar = 0.04 * (1.3 - 1.1) * std::exp(0.2 * 1.3) - 1.0 + 0.95 * 1.3;
        CHECK(pb.running_cost(x, u) == doctest::Approx(-std::log(0.6) + rbar).epsilon(1e-14));
        CHECK(pb.terminal_cost(x) ==
              doctest::Approx(0.2 * std::exp(0.2 * 1.3) - 0.8).epsilon(1e-14));
        // sigma depends on the state, so the drift correction is nonzero
        CHECK(pb.strat_correction(x)(1) == doctest::Approx(0.01 * 0.8).epsilon(1e-15));
        CHECK(pb.strat_correction(x)(0) == 0.0);

        // consumption inner minimum: u* = -1/p2 clamped into the box
        Vec p = (Vec(2) << 0.5, -2.0).finished();
        auto im = pb.inner_minimizer(x, p);
        CHECK(im.u(0) == doctest::Approx(0.5).epsilon(1e-14));
        double want = p(0) * (1.0 - x(0)) + p(1) * (0.95 * x(0) - 0.5) - std::log(0.5) + rbar;
        CHECK(im.value == doctest::Approx(want).epsilon(1e-13));
        Vec pplus = (Vec(2) << 0.0, 3.0).finished();  // p2 >= 0 pushes u to the cap
        CHECK(pb.inner_minimizer(x, pplus).u(0) == 1e3);
    }

    TEST_CASE("zero debug problem has no dynamics and no cost") {
        auto pb = make_zero(3);
        Vec x = (Vec(3) << 1.0, -2.0, 0.5).finished();
        Vec u = Vec::Ones(3);
        CHECK(pb.drift(x, u).cwiseAbs().maxCoeff() == 0.0);
        CHECK(pb.diffusion(x).cwiseAbs().maxCoeff() == 0.0);
        CHECK(pb.running_cost(x, u) == 0.0);
        CHECK(pb.terminal_cost(x) > 0.0);  // keeps the quadratic terminal cost
    }

    TEST_CASE("factory dispatch and argument validation") {
        CHECK(make_problem("lq", 4).state_dim == 4);
        CHECK(make_problem("ou", 2).name == "ou");
        CHECK(make_problem("aiyagari", 2).name == "aiyagari");
        CHECK(make_problem("zero", 2).name == "zero");
        CHECK_THROWS(make_problem("nope", 2));
        CHECK_THROWS(make_problem("aiyagari", 3));
        CHECK_THROWS(make_problem("lq", 0));
    }

    TEST_CASE("box clamping") {
        ControlBox box{Vec::Constant(2, -1.0), Vec::Constant(2, 2.0)};
        Vec u = (Vec(2) << -3.0, 0.5).finished();
        Vec c = clamp_to_box(u, box);
        CHECK(c(0) == -1.0);
        CHECK(c(1) == 0.5);
        CHECK(clamp_to_box(u, std::nullopt) == u);
    }

    TEST_CASE("quadratic conjugate closed form") {
        auto pb = make_lq(2);
        const auto& sc = std::get<SmoothConjugate>(pb.conjugate);
        Vec a = lq_a_diagonal(2);
        Vec p = (Vec(2) << 0.3, -1.1).finished();
        auto ev = sc.eval(p);
        // g*(p) = p' A^{-1} p / 2 - 1/2 for g = (x'Ax + 1)/2
        double want = 0.5 * (p(0) * p(0) / a(0) + p(1) * p(1) / a(1)) - 0.5;
        CHECK(ev.value == doctest::Approx(want).epsilon(1e-14));
        CHECK(ev.grad(0) == doctest::Approx(p(0) / a(0)).epsilon(1e-14));
        CHECK(ev.grad(1) == doctest::Approx(p(1) / a(1)).epsilon(1e-14));
    }

    TEST_CASE("Fenchel-Young equality at p = grad g(x)") {
        for (const char* name : {"lq", "ou", "aiyagari"}) {
            auto pb = make_problem(name, 2);
            INFO("problem ", name);
            CHECK(checks::fenchel_young_worst(pb, 20, 31) < 1e-8);
        }
    }

    TEST_CASE("numeric biconjugation recovers the terminal cost") {
        for (int d : {2, 3}) {
            auto pb = make_lq(d);
            CHECK(checks::biconjugation_worst(pb, 20, 7 + d) < 1e-6);
        }
    }

    TEST_CASE("consumption terminal conjugate matches an independent 1-d sup") {
        auto pb = make_aiyagari();
        const auto& conj = std::get<AffineIndicatorConjugate>(pb.conjugate);
        CHECK(conj.constrained == std::vector<bool>{false, true});
        CHECK(conj.target(1) == -1.0);
        REQUIRE(conj.free_part);
        for (double p1 : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0}) {
            Vec p = (Vec(2) << p1, -1.0).finished();
            double code = conj.free_part(p).value;
            double sup = checks::golden_sup(
                [p1](double x1) { return p1 * x1 - 0.2 * std::exp(0.2 * x1); }, -2000.0, 2000.0);
            INFO("p1=", p1);
            CHECK(std::abs(code - sup) < 1e-6);
            // closed form 5 p ln(25 p) - 5 p as a second witness
            CHECK(code == doctest::Approx(5.0 * p1 * std::log(25.0 * p1) - 5.0 * p1)
                              .epsilon(1e-12));
        }
        // negative first coordinate is outside the domain
        Vec pneg = (Vec(2) << -0.1, -1.0).finished();
        CHECK(std::isinf(conj.free_part(pneg).value));
    }
}
