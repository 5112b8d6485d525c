#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace dualbound {

/* Smoothed Brownian motion: a sine-basis Karhunen-Loeve expansion truncated at
 * n modes.  On the unit interval
 *     w^(j)(s)    = sum_i sqrt(2)/((i+1/2) pi) * xi_ij * sin((i+1/2) pi s)
 * and a horizon T is handled by Brownian scaling, w_T(t) = sqrt(T) w(t/T),
 * so the derivative picks up a 1/sqrt(T). */
struct NoisePath {
    Eigen::MatrixXd coeffs; // n x noise_dim, iid standard normal
    double horizon = 1.0;

    int modes() const { return static_cast<int>(coeffs.rows()); }
    int dims() const { return static_cast<int>(coeffs.cols()); }
};

// Deterministic in (seed, sample_index): the same pair always yields the same
// coefficient matrix, regardless of which thread asks.
NoisePath sample_coeffs(int n, int noise_dim, double horizon,
                        std::uint64_t seed, std::uint64_t sample_index);

// w(t) and its time derivative; t must lie in [0, horizon].
Eigen::VectorXd w_value(const NoisePath& path, double t);
Eigen::VectorXd w_dot(const NoisePath& path, double t);

// w_dot precomputed on the half-step grid t_j = j*T/(2*n_t), j = 0..2*n_t.
// Solvers index this table instead of re-summing the series at every stage.
struct WdotTable {
    std::vector<Eigen::VectorXd> vals;
    double horizon = 1.0;
    int n_t = 0;

    const Eigen::VectorXd& at(int half_index) const { return vals[half_index]; }
    const Eigen::VectorXd& node(int i) const { return vals[2 * i]; }
};

WdotTable build_wdot_table(const NoisePath& path, int n_t);

} // namespace dualbound
