#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mvjd::stats {

double mean(std::span<const double> x);
double sample_sd(std::span<const double> x);
double standard_error(std::span<const double> x);

// least-squares slope of y against t
double ols_slope(std::span<const double> t, std::span<const double> y);

struct MannKendall {
    long long s = 0;
    double z = 0.0;  // normal score with continuity correction
};

// Trend test statistic; positive z indicates an increasing trend.
MannKendall mann_kendall(std::span<const double> series);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double half_width() const { return 0.5 * (hi - lo); }
};

// Percentile bootstrap over replica indices: `statistic` maps a resampled
// index set to a scalar. Deterministic given the seed.
Interval bootstrap_percentile(int n_replicas, int n_resamples, double level,
                              const std::function<double(std::span<const int>)>& statistic,
                              std::uint64_t seed);

} // namespace mvjd::stats
