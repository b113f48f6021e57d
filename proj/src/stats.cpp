#include "mvjd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvjd/rng.hpp"

namespace mvjd::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("sample_sd: need >= 2 values");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double standard_error(std::span<const double> x) {
    return sample_sd(x) / std::sqrt(static_cast<double>(x.size()));
}

double ols_slope(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size() || t.size() < 2) {
        throw std::invalid_argument("ols_slope: need matched inputs of size >= 2");
    }
    const double tm = mean(t);
    const double ym = mean(y);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        num += (t[i] - tm) * (y[i] - ym);
        den += (t[i] - tm) * (t[i] - tm);
    }
    if (den == 0.0) throw std::invalid_argument("ols_slope: degenerate abscissae");
    return num / den;
}

MannKendall mann_kendall(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 3) throw std::invalid_argument("mann_kendall: need >= 3 points");
    MannKendall mk;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = series[j] - series[i];
            if (d > 0.0) ++mk.s;
            else if (d < 0.0) --mk.s;
        }
    }
    const double var = static_cast<double>(n) * (n - 1.0) * (2.0 * n + 5.0) / 18.0;
    if (mk.s > 0) mk.z = (static_cast<double>(mk.s) - 1.0) / std::sqrt(var);
    else if (mk.s < 0) mk.z = (static_cast<double>(mk.s) + 1.0) / std::sqrt(var);
    else mk.z = 0.0;
    return mk;
}

Interval bootstrap_percentile(int n_replicas, int n_resamples, double level,
                              const std::function<double(std::span<const int>)>& statistic,
                              std::uint64_t seed) {
    if (n_replicas < 2) throw std::invalid_argument("bootstrap: need >= 2 replicas");
    Rng rng(derive_stream_key(seed, 0, StreamRole::Bootstrap, 0, 0));
    std::vector<double> stats(n_resamples);
    std::vector<int> idx(n_replicas);
    for (int b = 0; b < n_resamples; ++b) {
        for (int i = 0; i < n_replicas; ++i) {
            idx[i] = static_cast<int>(rng.uniform() * n_replicas);
            if (idx[i] >= n_replicas) idx[i] = n_replicas - 1;
        }
        stats[b] = statistic(idx);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 0.5 * (1.0 - level);
    auto at_quantile = [&](double q) {
        const double pos = q * (n_resamples - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min<std::size_t>(lo + 1, n_resamples - 1);
        const double w = pos - static_cast<double>(lo);
        return stats[lo] * (1.0 - w) + stats[hi] * w;
    };
    return {at_quantile(alpha), at_quantile(1.0 - alpha)};
}

} // namespace mvjd::stats
