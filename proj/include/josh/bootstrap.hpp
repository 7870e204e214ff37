#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "josh/hash.hpp"
#include "josh/parallel.hpp"

namespace josh {

struct BootstrapOptions {
    std::size_t resamples = 10000;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct BootstrapResult {
    double observed_difference = 0.0;  // mean(a) - mean(b)
    std::size_t losses = 0;            // resamples where the observed winner did not win
    std::size_t resamples = 0;
    double p_value = 1.0;
};

namespace detail {

// Each resample draws from its own stream, so the result does not depend on
// how resamples are split across workers.
class ResampleStream {
public:
    ResampleStream(std::uint64_t seed, std::size_t index) : state_(splitmix64(seed ^ splitmix64(index))) {}
    std::size_t below(std::size_t n) {
        state_ += 0x9e3779b97f4a7c15ULL;
        const std::uint64_t r = splitmix64(state_);
        return static_cast<std::size_t>((static_cast<unsigned __int128>(r) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

/// Paired bootstrap on per-conversation scores. The statistic is the mean
/// difference; p is the share of resamples in which the observed winner does
/// not come out ahead. No observed difference gives p = 1.
inline BootstrapResult paired_bootstrap(std::span<const double> a, std::span<const double> b,
                                        BootstrapOptions opt = {}) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_bootstrap: score lists differ in length");
    if (a.empty()) throw std::invalid_argument("paired_bootstrap: no scores");
    if (opt.resamples < 1000) throw std::invalid_argument("paired_bootstrap: need at least 1000 resamples");
    const std::size_t n = a.size();
    std::vector<double> diff(n);
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = a[i] - b[i];
        observed += diff[i];
    }
    observed /= static_cast<double>(n);

    BootstrapResult out;
    out.observed_difference = observed;
    out.resamples = opt.resamples;
    if (observed == 0.0) {
        out.losses = opt.resamples;
        out.p_value = 1.0;
        return out;
    }
    const bool a_wins = observed > 0.0;
    std::vector<char> lost(opt.resamples, 0);
    parallel_for(opt.resamples, opt.workers, [&](std::size_t r) {
        detail::ResampleStream rng(opt.seed, r);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += diff[rng.below(n)];
        lost[r] = a_wins ? !(s > 0.0) : !(s < 0.0);
    });
    for (char l : lost) out.losses += static_cast<std::size_t>(l);
    out.p_value = static_cast<double>(out.losses) / static_cast<double>(opt.resamples);
    return out;
}

}  // namespace josh
