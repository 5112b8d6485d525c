#include "dualbound/estimator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "dualbound/errors.hpp"
#include "dualbound/noise.hpp"

namespace dualbound {

double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

SampleStats confidence_interval(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("confidence_interval: need at least 2 samples");
    const double mean = pairwise_sum(values) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    SampleStats out;
    out.mean = mean;
    out.stddev = sd;
    out.half_width = 1.96 * sd / std::sqrt(static_cast<double>(n));
    return out;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto drain = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int k = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(k));
    for (int w = 0; w < k; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
}

BoundEstimate dual_lower_bound(const ControlProblem& problem, const MartingaleModel& model,
                               DualMethod method, int m_samples, int n_modes,
                               std::uint64_t seed, const DualRunConfig& cfg) {
    if (m_samples < 2) throw std::invalid_argument("dual_lower_bound: need m_samples >= 2");
    const auto t_begin = std::chrono::steady_clock::now();

    // One slot per path index: values land in fixed positions, so the
    // reduction order (and hence the result) is independent of scheduling.
    std::vector<double> slot(static_cast<std::size_t>(m_samples), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(m_samples), 0);

    auto solve_one = [&](int idx) {
        const std::uint64_t sample_index = static_cast<std::uint64_t>(idx) + 1;
        NoisePath path = sample_coeffs(n_modes, problem.noise_dim, problem.horizon, seed, sample_index);
        PathwiseContext ctx{&problem, &model, std::move(path)};
        try {
            if (method == DualMethod::pontryagin) {
                SweepResult r = solve_path(ctx, cfg.sweep);
                if (r.converged && std::isfinite(r.value)) {
                    slot[static_cast<std::size_t>(idx)] = r.value;
                    ok[static_cast<std::size_t>(idx)] = 1;
                }
            } else {
                HopfConfig hc = cfg.hopf;
                hc.seed = seed;
                hc.sample_index = sample_index;
                HopfResult r = solve_hopf(ctx, hc);
                if (r.feasible && std::isfinite(r.value)) {
                    slot[static_cast<std::size_t>(idx)] = r.value;
                    ok[static_cast<std::size_t>(idx)] = 1;
                }
            }
        } catch (const DivergedPath&) {
            // excluded below
        }
    };
    parallel_for(m_samples, std::max(1, cfg.workers), solve_one);

    std::vector<double> kept;
    kept.reserve(static_cast<std::size_t>(m_samples));
    for (int i = 0; i < m_samples; ++i)
        if (ok[static_cast<std::size_t>(i)]) kept.push_back(slot[static_cast<std::size_t>(i)]);
    const int excluded = m_samples - static_cast<int>(kept.size());
    if (static_cast<double>(excluded) > 0.05 * m_samples)
        throw EstimatorFailure(excluded, m_samples, 5);

    const SampleStats st = confidence_interval(kept);
    BoundEstimate out;
    out.method = (method == DualMethod::pontryagin) ? "pontryagin" : "hopf";
    out.mean = st.mean;
    out.half_width = st.half_width;
    out.samples = m_samples;
    out.excluded = excluded;
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    return out;
}

GapReport gap_report(const BoundEstimate& lower, const BoundEstimate& upper,
                     std::optional<double> reference) {
    GapReport g;
    g.interval_lo = lower.mean - lower.half_width;
    g.interval_hi = upper.mean + upper.half_width;
    g.gap = upper.mean - lower.mean;
    g.relative_gap = g.gap / std::max(std::abs(upper.mean), 1e-12);
    g.reference = reference;
    if (reference)
        g.contains_reference = (*reference >= g.interval_lo && *reference <= g.interval_hi);
    return g;
}

}  // namespace dualbound
