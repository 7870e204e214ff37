#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "josh/lowess.hpp"

namespace josh {

struct StabilityCurve {
    std::vector<double> x;         // number of conversations, from 1
    std::vector<double> raw;       // across-run std of the running mean reward
    std::vector<double> smoothed;  // lowess of raw
    std::size_t runs = 0;
};

/// For each prefix length n, every run's mean reward over its first n
/// conversations, then the population standard deviation across runs.
inline StabilityCurve stability_curve(const std::vector<std::vector<double>>& per_run_rewards,
                                      LowessOptions smoothing = {}) {
    if (per_run_rewards.size() < 2) throw std::invalid_argument("stability_curve: need at least two runs");
    const std::size_t n = per_run_rewards.front().size();
    for (const auto& r : per_run_rewards)
        if (r.size() != n) throw std::invalid_argument("stability_curve: runs differ in length");
    if (n < 2) throw std::invalid_argument("stability_curve: need at least two conversations");

    const auto runs = per_run_rewards.size();
    StabilityCurve c;
    c.runs = runs;
    std::vector<double> sums(runs, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        std::vector<double> running(runs);
        for (std::size_t r = 0; r < runs; ++r) {
            sums[r] += per_run_rewards[r][i];
            running[r] = sums[r] / static_cast<double>(i + 1);
            mean += running[r];
        }
        mean /= static_cast<double>(runs);
        double var = 0.0;
        for (double v : running) var += (v - mean) * (v - mean);
        c.x.push_back(static_cast<double>(i + 1));
        c.raw.push_back(std::sqrt(var / static_cast<double>(runs)));
    }
    c.smoothed = lowess(c.x, c.raw, smoothing);
    return c;
}

}  // namespace josh
