#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace dualbound {

/* Counter-based generator: the state is derived from (seed, stream, substream)
 * by strong 64-bit mixing, so any (seed, sample index) pair addresses its own
 * reproducible stream no matter which worker thread consumes it or in what
 * order.  The step/finalize pair is splitmix64, which passes BigCrush and is
 * plenty for Monte Carlo averaging. */
class Crng {
public:
    explicit Crng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) {
        state_ = mix(seed + 0x9e3779b97f4a7c15ULL);
        state_ = mix(state_ ^ mix(stream + 0xbf58476d1ce4e5b9ULL));
        state_ = mix(state_ ^ mix(substream + 0x94d049bb133111ebULL));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on (0,1): 53-bit mantissa, offset so 0 is unreachable
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; second member of each pair is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd normal_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace dualbound
