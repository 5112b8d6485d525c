#include <cmath>

#include "checks.hpp"
#include "doctest.h"
#include "dualbound/reference.hpp"
#include "dualbound/primal.hpp"

using namespace dualbound;

namespace {

// Independent recomputation of the quadratic benchmark's value at the start:
// V(0, 0) = 1/2 + (1/2) sum_i ln(1 + 2 a_i).
double lq_origin_value(int d) {
    Vec a = lq_a_diagonal(d);
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += std::log(1.0 + 2.0 * a(i));
    return 0.5 + 0.5 * acc;
}

// Independent recomputation of the mean-reverting benchmark along the ones
// direction (the all-ones vector is an eigenvector of both matrices):
//   V(0, s * ones) = s d e^{la} - d lb^2 (e^{2 la} - 1) / (4 la),
// with la = 0.12 d - 1 and lb = 1 + 0.1 d.
double ou_ones_value(int d, double s) {
    double la = 0.12 * d - 1.0, lb = 1.0 + 0.1 * d;
    return s * d * std::exp(la) - d * lb * lb * (std::exp(2.0 * la) - 1.0) / (4.0 * la);
}

}  // namespace

TEST_SUITE("reference") {
    TEST_CASE("quadratic value at the origin, frozen digits") {
        CHECK(lq_value(2, 0.0, Vec::Zero(2)) == doctest::Approx(1.1881220126331946).epsilon(1e-12));
        CHECK(lq_value(3, 0.0, Vec::Zero(3)) == doctest::Approx(2.2867343013013044).epsilon(1e-12));
        CHECK(lq_value(5, 0.0, Vec::Zero(5)) == doctest::Approx(4.4839588786375240).epsilon(1e-12));
        for (int d : {1, 2, 3, 5, 10})
            CHECK(lq_value(d, 0.0, Vec::Zero(d)) == doctest::Approx(lq_origin_value(d)).epsilon(1e-13));
    }

    TEST_CASE("quadratic value solves its dynamic-programming equation") {
        // V_t - |grad V|^2 + lap V = 0 with V(T, x) = (x'Ax + 1)/2; a centered
        // finite-difference residual at random interior points must vanish.
        const int d = 3;
        checks::TestRng rng(3);
        for (int k = 0; k < 25; ++k) {
            double t = 0.1 + 0.8 * rng.uniform();
            Vec x(d);
            for (int j = 0; j < d; ++j) x(j) = 1.5 * rng.normal();
            const double ht = 1e-6, hx = 1e-4;
            double vt = (lq_value(d, t + ht, x) - lq_value(d, t - ht, x)) / (2 * ht);
            double grad2 = 0.0, lap = 0.0;
            double v0 = lq_value(d, t, x);
            for (int j = 0; j < d; ++j) {
                Vec xp = x, xm = x;
                xp(j) += hx;
                xm(j) -= hx;
                double vp = lq_value(d, t, xp), vm = lq_value(d, t, xm);
                double g = (vp - vm) / (2 * hx);
                grad2 += g * g;
                lap += (vp - 2 * v0 + vm) / (hx * hx);
            }
            CHECK(std::abs(vt - grad2 + lap) < 1e-4 * (1.0 + std::abs(vt)));
        }
        // terminal slice equals the terminal cost
        Vec x = (Vec(3) << 0.5, -1.0, 2.0).finished();
        auto pb = make_lq(3);
        CHECK(lq_value(3, 1.0, x) == doctest::Approx(pb.terminal_cost(x)).epsilon(1e-13));
    }

    TEST_CASE("quadratic oracle passes its own Monte Carlo cross-check") {
        auto ref = lq_reference(2, Vec::Zero(2));
        CHECK(ref.kind == "closed-form");
        CHECK(ref.value == doctest::Approx(1.1881220126331946).epsilon(1e-12));
    }

    TEST_CASE("mean-reverting value matches the independent exponential formula") {
        const double frozen[4] = {0.19517058, 0.15204764, -0.52031059, -12.37720712};
        const int dims[4] = {2, 3, 5, 10};
        for (int i = 0; i < 4; ++i) {
            int d = dims[i];
            auto v = ou_reference(d, Vec::Ones(d));
            CHECK(v.kind == "closed-form");
            CHECK(v.value == doctest::Approx(ou_ones_value(d, 1.0)).epsilon(1e-10));
            CHECK(v.value == doctest::Approx(frozen[i]).epsilon(2e-7));
        }
        // starting from the origin only the constant term survives
        auto v0 = ou_reference(3, Vec::Zero(3));
        CHECK(v0.value == doctest::Approx(ou_ones_value(3, 0.0)).epsilon(1e-10));
        // the value is affine in the start point along the ones direction
        auto v2 = ou_reference(3, 2.0 * Vec::Ones(3));
        auto v1 = ou_reference(3, Vec::Ones(3));
        CHECK(v2.value - v0.value == doctest::Approx(2.0 * (v1.value - v0.value)).epsilon(1e-9));
    }

    TEST_CASE("consumption benchmark table and closed form agree") {
        struct Row {
            double z, a, want;
        };
        const Row rows[] = {{1.0, 0.5, -0.2557}, {1.0, 1.0, -0.7557}, {1.0, 1.5, -1.2557},
                            {0.25, 1.0, -0.7897}, {0.75, 1.0, -0.7676}, {1.25, 1.0, -0.7432}};
        for (const auto& r : rows) {
            Vec x0 = (Vec(2) << r.z, r.a).finished();
            auto ref = aiyagari_reference(x0);
            CHECK(ref.kind == "tabulated");
            INFO("state (", r.z, ",", r.a, ")");
            CHECK(ref.value == doctest::Approx(r.want).epsilon(1e-12));
            CHECK(std::abs(aiyagari_closed_form(r.z, r.a) - r.want) < 5e-5);
        }
        // the value is affine in the asset coordinate with slope -1
        double d1 = aiyagari_closed_form(1.0, 1.5) - aiyagari_closed_form(1.0, 0.5);
        CHECK(d1 == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK_THROWS_AS((void)aiyagari_reference((Vec(2) << 0.1, 0.1).finished()), OracleError);
    }

    TEST_CASE("reference dispatch by problem") {
        auto lq = make_problem("lq", 2);
        auto r1 = reference_for(lq, lq.x0);
        REQUIRE(r1);
        CHECK(r1->kind == "closed-form");

        auto ai = make_problem("aiyagari", 2);
        auto r2 = reference_for(ai, (Vec(2) << 0.6, 0.6).finished());
        REQUIRE(r2);  // off-table states fall back to the closed form
        CHECK(r2->kind == "closed-form");

        auto z = make_problem("zero", 3);
        auto r3 = reference_for(z, z.x0);
        REQUIRE(r3);
        CHECK(r3->kind == "exact");
        CHECK(r3->value == doctest::Approx(z.terminal_cost(z.x0)).epsilon(1e-15));

        ControlProblem custom = make_lq(2);
        custom.name = "custom";
        CHECK_FALSE(reference_for(custom, custom.x0));
    }

    TEST_CASE("grid oracle is exact on the zero problem") {
        auto pb = make_zero(1);
        pb.x0 = Vec::Constant(1, 0.25);
        auto zm = zero_model(1);
        NoisePath quiet;
        quiet.coeffs = Eigen::MatrixXd::Zero(4, 1);
        quiet.horizon = 1.0;
        PathwiseContext ctx{&pb, &zm, quiet};
        auto v = dp_oracle_1d(ctx, {-1.0, 1.0, 201}, {-1.0, 1.0, 21}, 20);
        CHECK(v.value == doctest::Approx(pb.terminal_cost(pb.x0)).epsilon(1e-12));
        CHECK(v.kind == "dp-grid");
    }

    TEST_CASE("grid oracle approaches the deterministic solution") {
        auto pb = make_lq(1);
        pb.x0 = Vec::Ones(1);
        auto zm = zero_model(1);
        NoisePath quiet;
        quiet.coeffs = Eigen::MatrixXd::Zero(4, 1);
        quiet.horizon = 1.0;
        PathwiseContext ctx{&pb, &zm, quiet};
        auto v = dp_oracle_1d(ctx, {-8.0, 8.0, 1601}, {-8.0, 8.0, 801}, 200);
        INFO("dp=", v.value, " err_est=", v.error_estimate);
        CHECK(std::abs(v.value - 2.0 / 3.0) <= 4.0 * v.error_estimate);
        CHECK(v.error_estimate < 1e-3);
    }

    TEST_CASE("grid oracle refuses states that escape the grid") {
        auto pb = make_lq(1);
        pb.x0 = Vec::Ones(1);
        auto zm = zero_model(1);
        NoisePath quiet;
        quiet.coeffs = Eigen::MatrixXd::Zero(4, 1);
        quiet.horizon = 1.0;
        PathwiseContext ctx{&pb, &zm, quiet};
        // the start point is outside this grid
        CHECK_THROWS_AS((void)dp_oracle_1d(ctx, {-0.05, 0.05, 11}, {-1.0, 1.0, 11}, 10),
                        OracleError);
        // reachable set under the control box leaves this tight grid
        CHECK_THROWS_AS((void)dp_oracle_1d(ctx, {0.9, 1.1, 21}, {-8.0, 8.0, 41}, 10), OracleError);
    }
}
