#include "dualbound/primal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "dualbound/errors.hpp"
#include "dualbound/rng.hpp"

namespace dualbound {

namespace {

constexpr double kStateGuard = 1e8;

bool finite_vec(const Vec& v) { return v.allFinite(); }

double integer_power(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

double monomial(const Vec& x, const Eigen::MatrixXi& e, int b) {
    double r = 1.0;
    for (int i = 0; i < x.size(); ++i) r *= integer_power(x[i], e(b, i));
    return r;
}

double monomial_d(const Vec& x, const Eigen::MatrixXi& e, int b, int j) {
    const int ej = e(b, j);
    if (ej == 0) return 0.0;
    double r = static_cast<double>(ej) * integer_power(x[j], ej - 1);
    for (int i = 0; i < x.size(); ++i)
        if (i != j) r *= integer_power(x[i], e(b, i));
    return r;
}

double monomial_dd(const Vec& x, const Eigen::MatrixXi& e, int b, int j, int k) {
    if (j == k) {
        const int ej = e(b, j);
        if (ej < 2) return 0.0;
        double r = static_cast<double>(ej) * (ej - 1) * integer_power(x[j], ej - 2);
        for (int i = 0; i < x.size(); ++i)
            if (i != j) r *= integer_power(x[i], e(b, i));
        return r;
    }
    const int ej = e(b, j), ek = e(b, k);
    if (ej == 0 || ek == 0) return 0.0;
    double r = static_cast<double>(ej) * ek * integer_power(x[j], ej - 1) *
               integer_power(x[k], ek - 1);
    for (int i = 0; i < x.size(); ++i)
        if (i != j && i != k) r *= integer_power(x[i], e(b, i));
    return r;
}

// (row_lo, theta): piecewise-linear time interpolation weights for the
// coefficient rows, with t clamped into [0, horizon].
std::pair<int, double> time_weights(const RegressionModel& rm, double t) {
    const double s = std::clamp(t / rm.horizon, 0.0, 1.0) * rm.n_steps;
    int k = std::min(static_cast<int>(std::floor(s)), rm.n_steps - 1);
    return {k, s - k};
}

double value_with_row(const Eigen::MatrixXi& e, const Vec& c, const Vec& x) {
    double v = 0.0;
    for (int b = 0; b < e.rows(); ++b) v += c[b] * monomial(x, e, b);
    return v;
}

Vec grad_with_row(const Eigen::MatrixXi& e, const Vec& c, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    for (int b = 0; b < e.rows(); ++b)
        for (int j = 0; j < x.size(); ++j) g[j] += c[b] * monomial_d(x, e, b, j);
    return g;
}

Vec fit_row(const Mat& phi, const Vec& y) {
    Eigen::ColPivHouseholderQR<Mat> qr(phi);
    if (qr.rank() == phi.cols()) return qr.solve(y);
    // Rank-deficient design (e.g. degenerate path cloud): fall back to a
    // lightly ridged normal system instead of an arbitrary pseudo-solution.
    Mat ata = phi.transpose() * phi;
    const double lambda = 1e-8 * (ata.trace() / phi.cols() + 1.0);
    ata.diagonal().array() += lambda;
    return ata.ldlt().solve(phi.transpose() * y);
}

}  // namespace

BoundEstimate simulate_upper_bound(const ControlProblem& problem, const FeedbackControl& control,
                                   const Vec& x0, int m_paths, int n_t, std::uint64_t seed,
                                   int workers) {
    if (m_paths < 2) throw std::invalid_argument("simulate_upper_bound: need m_paths >= 2");
    if (n_t < 1) throw std::invalid_argument("simulate_upper_bound: need n_t >= 1");
    const auto t_begin = std::chrono::steady_clock::now();
    const double dt = problem.horizon / n_t;
    const double sqrt_dt = std::sqrt(dt);

    std::vector<double> slot(static_cast<std::size_t>(m_paths), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(m_paths), 0);

    auto run_one = [&](int idx) {
        Crng rng(seed, static_cast<std::uint64_t>(idx) + 1, 0xE);
        Vec x = x0;
        double cost = 0.0;
        for (int k = 0; k < n_t; ++k) {
            const double t = k * dt;
            Vec u = control.u(t, x);
            if (problem.control_box) u = clamp_to_box(u, *problem.control_box);
            if (!finite_vec(u)) return;
            cost += problem.running_cost(x, u) * dt;
            const Vec xi = rng.normal_vector(problem.noise_dim);
            x += problem.drift(x, u) * dt + problem.diffusion(x) * (sqrt_dt * xi);
            if (!finite_vec(x) || x.cwiseAbs().maxCoeff() > kStateGuard) return;
        }
        cost += problem.terminal_cost(x);
        if (!std::isfinite(cost)) return;
        slot[static_cast<std::size_t>(idx)] = cost;
        ok[static_cast<std::size_t>(idx)] = 1;
    };
    parallel_for(m_paths, std::max(1, workers), run_one);

    std::vector<double> kept;
    kept.reserve(static_cast<std::size_t>(m_paths));
    for (int i = 0; i < m_paths; ++i)
        if (ok[static_cast<std::size_t>(i)]) kept.push_back(slot[static_cast<std::size_t>(i)]);
    const int excluded = m_paths - static_cast<int>(kept.size());
    if (static_cast<double>(excluded) > 0.01 * m_paths)
        throw EstimatorFailure(excluded, m_paths, 1);

    const SampleStats st = confidence_interval(kept);
    BoundEstimate out;
    out.method = "primal";
    out.mean = st.mean;
    out.half_width = st.half_width;
    out.samples = m_paths;
    out.excluded = excluded;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return out;
}

std::vector<double> upper_bound_refinement_means(const ControlProblem& problem,
                                                 const FeedbackControl& control, const Vec& x0,
                                                 int m_paths, const std::vector<int>& n_list,
                                                 std::uint64_t seed) {
    if (n_list.empty()) throw std::invalid_argument("refinement: empty step-count list");
    const int n_max = n_list.back();
    for (int n : n_list) {
        if (n < 1 || n_max % n != 0)
            throw std::invalid_argument("refinement: every step count must divide the finest");
    }
    const int levels = static_cast<int>(n_list.size());
    const double horizon = problem.horizon;
    std::vector<std::vector<double>> vals(static_cast<std::size_t>(levels));
    int dropped = 0;

    for (int idx = 0; idx < m_paths; ++idx) {
        Crng rng(seed, static_cast<std::uint64_t>(idx) + 1, 0xC);
        Mat dw(n_max, problem.noise_dim);
        const double sdt = std::sqrt(horizon / n_max);
        for (int r = 0; r < n_max; ++r)
            for (int c = 0; c < problem.noise_dim; ++c) dw(r, c) = sdt * rng.normal();

        std::vector<double> per_level(static_cast<std::size_t>(levels));
        bool good = true;
        for (int l = 0; l < levels && good; ++l) {
            const int n = n_list[static_cast<std::size_t>(l)];
            const int stride = n_max / n;
            const double dt = horizon / n;
            Vec x = x0;
            double cost = 0.0;
            for (int k = 0; k < n; ++k) {
                Vec u = control.u(k * dt, x);
                if (problem.control_box) u = clamp_to_box(u, *problem.control_box);
                cost += problem.running_cost(x, u) * dt;
                Vec inc = Vec::Zero(problem.noise_dim);
                for (int r = k * stride; r < (k + 1) * stride; ++r) inc += dw.row(r).transpose();
                x += problem.drift(x, u) * dt + problem.diffusion(x) * inc;
                if (!finite_vec(x) || x.cwiseAbs().maxCoeff() > kStateGuard) {
                    good = false;
                    break;
                }
            }
            if (!good) break;
            per_level[static_cast<std::size_t>(l)] = cost + problem.terminal_cost(x);
        }
        if (!good) {
            ++dropped;
            continue;
        }
        for (int l = 0; l < levels; ++l)
            vals[static_cast<std::size_t>(l)].push_back(per_level[static_cast<std::size_t>(l)]);
    }
    if (static_cast<double>(dropped) > 0.01 * m_paths) throw EstimatorFailure(dropped, m_paths, 1);

    std::vector<double> means(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) {
        auto& v = vals[static_cast<std::size_t>(l)];
        if (v.size() < 2) throw EstimatorFailure(dropped, m_paths, 1);
        means[static_cast<std::size_t>(l)] = pairwise_sum(v) / static_cast<double>(v.size());
    }
    return means;
}

AnalyticModel analytic_model(const std::string& problem_name, int d) {
    AnalyticModel out;
    if (problem_name == "lq") {
        const Vec a = lq_a_diagonal(d);
        const double horizon = 1.0;
        // grad V(t,x) = A (I + 2 tau A)^{-1} x with tau = T - t.
        auto cdiag = [a, horizon](double t) -> Vec {
            const double tau = horizon - t;
            return a.array() / (1.0 + 2.0 * tau * a.array());
        };
        out.model.name = "analytic";
        out.model.z = [cdiag](double t, const Vec& x) -> Vec {
            return std::sqrt(2.0) * (cdiag(t).asDiagonal() * x);
        };
        out.model.z_jac = [cdiag, d](double t, const Vec&) -> Mat {
            Mat j = Mat::Zero(d, d);
            j.diagonal() = std::sqrt(2.0) * cdiag(t);
            return j;
        };
        out.model.trace_grad = [d](double, const Vec&) -> Vec { return Vec::Zero(d); };
        out.control.name = "analytic";
        out.control.u = [cdiag](double t, const Vec& x) -> Vec {
            return -(cdiag(t).asDiagonal() * x);
        };
        return out;
    }
    if (problem_name == "ou") {
        const double la = 0.12 * d - 1.0;
        const double lb = 1.0 + 0.1 * d;
        const double horizon = 1.0;
        out.model.name = "analytic";
        out.model.z = [la, lb, horizon, d](double t, const Vec&) -> Vec {
            return Vec::Constant(d, lb * std::exp(la * (horizon - t)));
        };
        out.model.z_jac = [d](double, const Vec&) -> Mat { return Mat::Zero(d, d); };
        out.model.trace_grad = [d](double, const Vec&) -> Vec { return Vec::Zero(d); };
        out.control.name = "analytic";
        out.control.u = [la, lb, horizon, d](double t, const Vec&) -> Vec {
            return Vec::Constant(d, -lb * std::exp(la * (horizon - t)));
        };
        return out;
    }
    throw std::invalid_argument("analytic_model: no closed form for problem '" + problem_name +
                                "'");
}

Eigen::MatrixXi polynomial_exponents(int d, int degree) {
    if (d < 1 || degree < 0) throw std::invalid_argument("polynomial_exponents: bad arguments");
    std::vector<std::vector<int>> rows;
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    // Depth-first over coordinates, budget = remaining total degree.
    std::function<void(int, int)> rec = [&](int coord, int budget) {
        if (coord == d) {
            rows.push_back(cur);
            return;
        }
        for (int e = 0; e <= budget; ++e) {
            cur[static_cast<std::size_t>(coord)] = e;
            rec(coord + 1, budget - e);
        }
        cur[static_cast<std::size_t>(coord)] = 0;
    };
    rec(0, degree);
    Eigen::MatrixXi out(static_cast<int>(rows.size()), d);
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < d; ++c) out(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return out;
}

double regression_value(const RegressionModel& rm, double t, const Vec& x) {
    auto [k, th] = time_weights(rm, t);
    const Vec c = (1.0 - th) * rm.coeffs.row(k).transpose() + th * rm.coeffs.row(k + 1).transpose();
    return value_with_row(rm.exponents, c, x);
}

Vec regression_value_grad(const RegressionModel& rm, double t, const Vec& x) {
    auto [k, th] = time_weights(rm, t);
    const Vec c = (1.0 - th) * rm.coeffs.row(k).transpose() + th * rm.coeffs.row(k + 1).transpose();
    return grad_with_row(rm.exponents, c, x);
}

Mat regression_value_hess(const RegressionModel& rm, double t, const Vec& x) {
    auto [k, th] = time_weights(rm, t);
    const Vec c = (1.0 - th) * rm.coeffs.row(k).transpose() + th * rm.coeffs.row(k + 1).transpose();
    Mat h = Mat::Zero(rm.d, rm.d);
    for (int b = 0; b < rm.exponents.rows(); ++b)
        for (int i = 0; i < rm.d; ++i)
            for (int j = 0; j <= i; ++j) h(i, j) += c[b] * monomial_dd(x, rm.exponents, b, i, j);
    for (int i = 0; i < rm.d; ++i)
        for (int j = i + 1; j < rm.d; ++j) h(i, j) = h(j, i);
    return h;
}

RegressionModel fit_regression_model(const ControlProblem& problem, const Vec& x0, int degree,
                                     int m_paths, int n_steps, std::uint64_t seed, double dither) {
    const int d = problem.state_dim;
    RegressionModel rm;
    rm.d = d;
    rm.degree = degree;
    rm.n_steps = n_steps;
    rm.horizon = problem.horizon;
    rm.exponents = polynomial_exponents(d, degree);
    const int nb = static_cast<int>(rm.exponents.rows());
    if (m_paths < 2 * nb)
        throw std::invalid_argument("fit_regression_model: too few paths for the basis size");
    rm.coeffs = Mat::Zero(n_steps + 1, nb);

    const double dt = problem.horizon / n_steps;
    const double sdt = std::sqrt(dt);

    // Driftless simulation; initial states are dithered so the design matrix
    // has full column rank at t = 0.
    std::vector<Mat> xs(static_cast<std::size_t>(n_steps + 1),
                        Mat(m_paths, d));
    for (int m = 0; m < m_paths; ++m) {
        Crng rng(seed, static_cast<std::uint64_t>(m) + 1, 0xF1);
        Vec x = x0 + dither * rng.normal_vector(d);
        xs[0].row(m) = x.transpose();
        for (int k = 0; k < n_steps; ++k) {
            x += problem.diffusion(x) * (sdt * rng.normal_vector(problem.noise_dim));
            xs[static_cast<std::size_t>(k) + 1].row(m) = x.transpose();
        }
    }

    auto design = [&](const Mat& pts) -> Mat {
        Mat phi(pts.rows(), nb);
        for (int m = 0; m < pts.rows(); ++m) {
            const Vec x = pts.row(m).transpose();
            for (int b = 0; b < nb; ++b) phi(m, b) = monomial(x, rm.exponents, b);
        }
        return phi;
    };

    // Terminal slice: fit the terminal cost itself.
    {
        Vec y(m_paths);
        for (int m = 0; m < m_paths; ++m)
            y[m] = problem.terminal_cost(xs[static_cast<std::size_t>(n_steps)].row(m).transpose());
        const Mat phi = design(xs[static_cast<std::size_t>(n_steps)]);
        rm.coeffs.row(n_steps) = fit_row(phi, y).transpose();
    }

    // Backward induction: continuation value plus one explicit step of the
    // minimised drift/cost term evaluated with the later slice's gradient.
    Vec cont(m_paths);
    {
        const Mat phi = design(xs[static_cast<std::size_t>(n_steps)]);
        cont = phi * rm.coeffs.row(n_steps).transpose();
    }
    for (int k = n_steps - 1; k >= 0; --k) {
        const Vec c_next = rm.coeffs.row(k + 1).transpose();
        Vec y(m_paths);
        for (int m = 0; m < m_paths; ++m) {
            const Vec x = xs[static_cast<std::size_t>(k)].row(m).transpose();
            const Vec p = grad_with_row(rm.exponents, c_next, x);
            y[m] = cont[m] + dt * problem.inner_minimizer(x, p).value;
        }
        const Mat phi = design(xs[static_cast<std::size_t>(k)]);
        rm.coeffs.row(k) = fit_row(phi, y).transpose();
        cont = phi * rm.coeffs.row(k).transpose();
    }
    return rm;
}

MartingaleModel regression_z(const RegressionModel& rm, const ControlProblem& problem) {
    auto pb = std::make_shared<ControlProblem>(problem);
    MartingaleModel m;
    m.name = "regression";
    m.z = [rm, pb](double t, const Vec& x) -> Vec {
        return pb->diffusion(x).transpose() * regression_value_grad(rm, t, x);
    };
    m.z_jac = [rm, pb](double t, const Vec& x) -> Mat {
        const Mat sig = pb->diffusion(x);
        Mat j = sig.transpose() * regression_value_hess(rm, t, x);
        if (pb->diffusion_jac) {
            // State-dependent diffusion contributes (d sigma / d x_k)^T grad V.
            const Vec g = regression_value_grad(rm, t, x);
            const auto djac = pb->diffusion_jac(x);
            for (int k = 0; k < static_cast<int>(djac.size()); ++k)
                j.col(k) += djac[static_cast<std::size_t>(k)].transpose() * g;
        }
        return j;
    };
    return m;
}

FeedbackControl regression_control(const RegressionModel& rm, const ControlProblem& problem) {
    auto pb = std::make_shared<ControlProblem>(problem);
    FeedbackControl c;
    c.name = "regression";
    c.u = [rm, pb](double t, const Vec& x) -> Vec {
        return pb->inner_minimizer(x, regression_value_grad(rm, t, x)).u;
    };
    return c;
}

void save_regression(const RegressionModel& rm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_regression: cannot open " + path);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", rm.horizon);
    out << "horizon " << buf << "\n";
    for (int k = 0; k <= rm.n_steps; ++k)
        for (int b = 0; b < rm.exponents.rows(); ++b) {
            out << k;
            for (int c = 0; c < rm.d; ++c) out << ' ' << rm.exponents(b, c);
            std::snprintf(buf, sizeof(buf), "%.17g", rm.coeffs(k, b));
            out << ' ' << buf << "\n";
        }
    if (!out) throw std::runtime_error("save_regression: write failed for " + path);
}

RegressionModel load_regression(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_regression: cannot open " + path);
    std::string tag;
    double horizon = 0.0;
    if (!(in >> tag >> horizon) || tag != "horizon")
        throw std::runtime_error("load_regression: missing horizon line in " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line);  // rest of the horizon line
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_regression: no coefficient rows in " + path);
    const int cols = static_cast<int>(rows[0].size());
    if (cols < 3) throw std::runtime_error("load_regression: malformed row in " + path);
    const int d = cols - 2;
    int n_steps = 0;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols)
            throw std::runtime_error("load_regression: ragged rows in " + path);
        n_steps = std::max(n_steps, static_cast<int>(std::lround(r[0])));
    }
    const std::size_t per_slice = rows.size() / static_cast<std::size_t>(n_steps + 1);
    if (per_slice * static_cast<std::size_t>(n_steps + 1) != rows.size())
        throw std::runtime_error("load_regression: inconsistent slice sizes in " + path);

    RegressionModel rm;
    rm.d = d;
    rm.n_steps = n_steps;
    rm.horizon = horizon;
    const int nb = static_cast<int>(per_slice);
    rm.exponents = Eigen::MatrixXi::Zero(nb, d);
    rm.coeffs = Mat::Zero(n_steps + 1, nb);
    int degree = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int k = static_cast<int>(std::lround(rows[i][0]));
        const int b = static_cast<int>(i % per_slice);
        int total = 0;
        for (int c = 0; c < d; ++c) {
            const int e = static_cast<int>(std::lround(rows[i][static_cast<std::size_t>(c) + 1]));
            if (k == 0)
                rm.exponents(b, c) = e;
            else if (rm.exponents(b, c) != e)
                throw std::runtime_error("load_regression: exponent blocks differ in " + path);
            total += e;
        }
        degree = std::max(degree, total);
        rm.coeffs(k, b) = rows[i].back();
    }
    rm.degree = degree;
    return rm;
}

MartingaleModel perturbed_model(const MartingaleModel& base, double amplitude, int state_dim,
                                int noise_dim) {
    // Fixed bump field: wavevectors and phases come from a hardcoded key so
    // every run perturbs the model the same way.
    Crng rng(0x5eedf1e1dULL, 0, 0);
    Mat a(noise_dim, state_dim);
    for (int r = 0; r < noise_dim; ++r)
        for (int c = 0; c < state_dim; ++c) a(r, c) = rng.normal();
    Vec phi(noise_dim);
    for (int r = 0; r < noise_dim; ++r) phi[r] = 2.0 * M_PI * rng.uniform();

    MartingaleModel m;
    m.name = "perturbed";
    auto base_z = base.z;
    m.z = [base_z, a, phi, amplitude](double t, const Vec& x) -> Vec {
        Vec out = base_z(t, x);
        out += amplitude * (a * x + phi).array().sin().matrix();
        return out;
    };
    if (base.z_jac) {
        auto base_jac = base.z_jac;
        m.z_jac = [base_jac, a, phi, amplitude](double t, const Vec& x) -> Mat {
            Mat j = base_jac(t, x);
            const Vec c = (a * x + phi).array().cos().matrix();
            j += amplitude * (c.asDiagonal() * a);
            return j;
        };
    }
    return m;
}

}  // namespace dualbound
