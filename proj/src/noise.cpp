#include "dualbound/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "dualbound/rng.hpp"

namespace dualbound {

NoisePath sample_coeffs(int n, int noise_dim, double horizon,
                        std::uint64_t seed, std::uint64_t sample_index) {
    if (n < 1 || noise_dim < 1) throw std::invalid_argument("sample_coeffs: n and noise_dim must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_coeffs: horizon must be positive");
    NoisePath path;
    path.horizon = horizon;
    path.coeffs.resize(n, noise_dim);
    Crng rng(seed, sample_index);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < noise_dim; ++j) path.coeffs(i, j) = rng.normal();
    return path;
}

namespace {

double unit_time(const NoisePath& path, double t, const char* who) {
    const double slack = 1e-9 * (1.0 + path.horizon);
    if (t < -slack || t > path.horizon + slack)
        throw std::domain_error(std::string(who) + ": t outside [0, horizon]");
    double s = t / path.horizon;
    if (s < 0.0) s = 0.0;
    if (s > 1.0) s = 1.0;
    return s;
}

} // namespace

Eigen::VectorXd w_value(const NoisePath& path, double t) {
    const double s = unit_time(path, t, "w_value");
    const int n = path.modes();
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) {
        const double freq = (i + 0.5) * M_PI;
        a(i) = M_SQRT2 / freq * std::sin(freq * s);
    }
    return std::sqrt(path.horizon) * (path.coeffs.transpose() * a);
}

Eigen::VectorXd w_dot(const NoisePath& path, double t) {
    const double s = unit_time(path, t, "w_dot");
    const int n = path.modes();
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) {
        const double freq = (i + 0.5) * M_PI;
        a(i) = M_SQRT2 * std::cos(freq * s);
    }
    return (path.coeffs.transpose() * a) / std::sqrt(path.horizon);
}

WdotTable build_wdot_table(const NoisePath& path, int n_t) {
    if (n_t < 1) throw std::invalid_argument("build_wdot_table: n_t must be positive");
    WdotTable table;
    table.horizon = path.horizon;
    table.n_t = n_t;
    table.vals.reserve(2 * n_t + 1);
    const double half_dt = path.horizon / (2.0 * n_t);
    for (int j = 0; j <= 2 * n_t; ++j) table.vals.push_back(w_dot(path, j * half_dt));
    return table;
}

} // namespace dualbound
