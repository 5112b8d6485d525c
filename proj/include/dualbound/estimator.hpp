#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "dualbound/hopf.hpp"
#include "dualbound/pontryagin.hpp"

namespace dualbound {

// Sum with pairwise (cascade) splitting so results do not depend on
// accumulation order and rounding error stays O(log n).
double pairwise_sum(std::span<const double> xs);

struct SampleStats {
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 * stderr
    double stddev = 0.0;
};

// Mean and 95% normal-approximation half width. Throws std::invalid_argument
// for fewer than two samples.
SampleStats confidence_interval(std::span<const double> values);

struct BoundEstimate {
    std::string method;  // "pontryagin", "hopf", "primal"
    double mean = 0.0;
    double half_width = 0.0;
    int samples = 0;   // total paths attempted
    int excluded = 0;  // diverged / non-converged / infeasible paths
    double wall_time_s = 0.0;
};

enum class DualMethod { pontryagin, hopf };

struct DualRunConfig {
    SweepConfig sweep;
    HopfConfig hopf;
    int workers = 1;
};

// Monte Carlo lower bound: averages the pathwise dual value over M independent
// noise expansions keyed by (seed, path index). Diverged or unconverged paths
// are dropped from the average; more than 5% dropped raises EstimatorFailure.
// The result is identical for any worker count.
BoundEstimate dual_lower_bound(const ControlProblem& problem, const MartingaleModel& model,
                               DualMethod method, int m_samples, int n_modes,
                               std::uint64_t seed, const DualRunConfig& cfg);

struct GapReport {
    double interval_lo = 0.0;   // lower.mean - lower.half_width
    double interval_hi = 0.0;   // upper.mean + upper.half_width
    double gap = 0.0;           // upper.mean - lower.mean
    double relative_gap = 0.0;  // gap / max(|upper.mean|, 1e-12)
    std::optional<double> reference;
    bool contains_reference = false;
};

GapReport gap_report(const BoundEstimate& lower, const BoundEstimate& upper,
                     std::optional<double> reference);

// Runs fn(i) for i in [0, n) on `workers` threads. fn must not throw.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace dualbound
