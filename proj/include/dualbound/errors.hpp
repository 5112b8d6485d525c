#pragma once

#include <stdexcept>
#include <string>

namespace dualbound {

// A forward sweep or Hamiltonian IVP left the sane region (|x|_inf above the
// divergence guard, or a non-finite entry). Carries the offending step.
class DivergedPath : public std::runtime_error {
public:
    DivergedPath(int step, double norm)
        : std::runtime_error("trajectory diverged at step " + std::to_string(step) +
                             " (inf-norm " + std::to_string(norm) + ")"),
          step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Too many paths were excluded for the Monte Carlo average to be trustworthy.
class EstimatorFailure : public std::runtime_error {
public:
    EstimatorFailure(int excluded, int total, int limit_pct = 5)
        : std::runtime_error("estimator failure: " + std::to_string(excluded) + " of " +
                             std::to_string(total) + " paths excluded (limit " +
                             std::to_string(limit_pct) + "%)"),
          excluded_(excluded), total_(total) {}
    int excluded() const { return excluded_; }
    int total() const { return total_; }

private:
    int excluded_;
    int total_;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class OracleError : public std::runtime_error {
public:
    explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dualbound
