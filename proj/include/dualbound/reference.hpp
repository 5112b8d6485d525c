#pragma once

#include <optional>
#include <string>

#include "dualbound/hamiltonian.hpp"
#include "dualbound/problem.hpp"

namespace dualbound {

struct OracleValue {
    double value = 0.0;
    double error_estimate = 0.0;
    std::string kind;  // "closed-form", "tabulated", "dp-grid", "exact"
};

// Closed-form value of the quadratic benchmark at (t, x).
double lq_value(int d, double t, const Vec& x);

// Closed form cross-checked against a 10^6-draw exponential-moment Monte
// Carlo estimate (fixed seed); disagreement beyond 3 standard errors raises
// OracleError.
OracleValue lq_reference(int d, const Vec& x0);

OracleValue ou_reference(int d, const Vec& x0);

// Semi-analytic value for the consumption benchmark at any state: the value
// is affine in the second coordinate and the first follows a linear SDE, so
// the expectation reduces to Gaussian moments integrated in time.
double aiyagari_closed_form(double z0, double a0);

// Lookup of the six benchmark states; unknown states raise OracleError.
OracleValue aiyagari_reference(const Vec& x0);

// Best available reference for the problem at x0, if any.
std::optional<OracleValue> reference_for(const ControlProblem& problem, const Vec& x0);

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int points = 0;
};

// Backward dynamic programming on a (time, state, control) grid for 1-d
// problems: forward-Euler dynamics with the running cost charged at the left
// node of each step, terminal layer = g. error_estimate is the difference
// against a half-resolution solve. Raises OracleError when the reachable set
// escapes the state grid.
OracleValue dp_oracle_1d(const PathwiseContext& ctx, const GridSpec& xg, const GridSpec& ug,
                         int n_t);

}  // namespace dualbound
