#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualbound/estimator.hpp"
#include "dualbound/hamiltonian.hpp"
#include "dualbound/problem.hpp"

namespace dualbound {

struct FeedbackControl {
    std::string name;
    std::function<Vec(double, const Vec&)> u;
};

// Euler-Maruyama estimate of the cost of a feedback control, i.e. an upper
// bound on the value at x0. Brownian increments are drawn directly (no mode
// expansion), keyed by (seed, path index); running cost uses the left
// endpoint. Paths that blow up are dropped; more than 1% dropped raises
// EstimatorFailure.
BoundEstimate simulate_upper_bound(const ControlProblem& problem, const FeedbackControl& control,
                                   const Vec& x0, int m_paths, int n_t, std::uint64_t seed,
                                   int workers = 1);

// Means of the same estimator on a ladder of step counts, driven by one shared
// fine Brownian path per sample (increments aggregated onto coarser grids), so
// differences between levels isolate time-discretisation error from Monte
// Carlo noise. Every entry of n_list must divide the last (finest) entry.
std::vector<double> upper_bound_refinement_means(const ControlProblem& problem,
                                                 const FeedbackControl& control, const Vec& x0,
                                                 int m_paths, const std::vector<int>& n_list,
                                                 std::uint64_t seed);

struct AnalyticModel {
    MartingaleModel model;
    FeedbackControl control;
};

// Exact value-gradient model (z = sigma^T grad V) and optimal feedback for the
// problems with closed-form solutions ("lq", "ou").
AnalyticModel analytic_model(const std::string& problem_name, int d);

// Polynomial-in-space, piecewise-linear-in-time value surrogate fitted by
// backward least squares on simulated driftless paths.
struct RegressionModel {
    int d = 0;
    int degree = 3;
    int n_steps = 20;  // time intervals; coeffs has n_steps+1 rows
    double horizon = 1.0;
    Eigen::MatrixXi exponents;  // n_basis x d, total degree <= degree
    Mat coeffs;                 // (n_steps+1) x n_basis
};

// All multi-indices in d variables with total degree <= degree, in a fixed
// deterministic order.
Eigen::MatrixXi polynomial_exponents(int d, int degree);

double regression_value(const RegressionModel& rm, double t, const Vec& x);
Vec regression_value_grad(const RegressionModel& rm, double t, const Vec& x);
Mat regression_value_hess(const RegressionModel& rm, double t, const Vec& x);

RegressionModel fit_regression_model(const ControlProblem& problem, const Vec& x0, int degree,
                                     int m_paths, int n_steps, std::uint64_t seed, double dither);

MartingaleModel regression_z(const RegressionModel& rm, const ControlProblem& problem);
FeedbackControl regression_control(const RegressionModel& rm, const ControlProblem& problem);

void save_regression(const RegressionModel& rm, const std::string& path);
RegressionModel load_regression(const std::string& path);

// Adds a fixed sinusoidal bump field to z: z'_j = z_j + amplitude *
// sin(<a_j, x> + phi_j) with hardcoded wavevectors/phases, for studying how
// the lower bound degrades away from the optimal model.
MartingaleModel perturbed_model(const MartingaleModel& base, double amplitude, int state_dim,
                                int noise_dim);

}  // namespace dualbound
