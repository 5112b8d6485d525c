#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "dualbound/problem.hpp"

namespace dualbound {

struct RunConfig {
    std::string problem = "lq";
    int d = 2;
    std::optional<Vec> x0;  // explicit start point ("x0=0.5,1"); presets "zeros"/"ones"
    std::optional<std::array<double, 3>> x0_sweep;  // first coordinate, "start:step:end"
    std::string method = "all";                     // pontryagin | hopf | primal | all
    std::string model = "zero";  // analytic | regression | zero | perturbed(amplitude)
    double perturb_amplitude = 0.0;
    int m_samples = 500;  // M
    int n_modes = 32;     // n
    int n_t = 200;        // N_T
    int n_iter = 200;     // N_iter (pathwise sweep iterations)
    int n_opt = 100;      // N_opt (ascent iterations)
    int restarts = 3;
    double alpha = 0.5;
    double eta = 0.1;
    double eps = 1e-6;
    double fd_step = 1e-4;
    std::uint64_t seed = 0;
    int m_up = 131072;  // M_up
    int n_t_up = 400;   // N_T_up
    int degree = 3;
    int m_reg = 20000;
    int n_reg = 20;
    double dither = 0.5;
    std::string integrator = "default";  // default | euler | rk4 (both solvers)
    std::string quadrature = "default";  // default (sweep left, hopf right) | right | left
    int workers = 1;                     // 0 = hardware concurrency
    std::string output_dir = ".";
};

// Flat key=value text, '#' comments; unknown keys and malformed values are
// rejected with the offending line. DUALBOUND_<KEY> environment variables
// override file values.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Normalized key=value dump of a parsed config (what `check` prints).
std::string describe_config(const RunConfig& cfg);

// Executes the configured estimates, writing results.csv and report.txt under
// output_dir. Returns 0 on success, 2 on estimator failure (partial CSV is
// kept).
int run_config(const RunConfig& cfg);

}  // namespace dualbound
