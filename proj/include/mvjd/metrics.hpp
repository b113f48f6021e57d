#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mvjd/model.hpp"
#include "mvjd/rates.hpp"

namespace mvjd::metrics {

enum class W1Method { SortedEqual, QuantileGeneral };

struct W1Result {
    double value = 0.0;
    W1Method method = W1Method::SortedEqual;
};

// Exact 1-d Wasserstein-1 between empirical measures: mean sorted gap for
// equal sizes, piecewise-constant quantile-function integral over the merged
// quantile grid otherwise.
W1Result w1_exact_1d(const model::EmpiricalMeasure& a, const model::EmpiricalMeasure& b);

struct OuterW1Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n_replicas = 0;
    bool stderr_defined = false;  // false with fewer than 2 replicas
};

// Synchronous-common-noise estimator of the outer Wasserstein distance:
// averages the inner W1 across replica pairs that share one common-noise
// realization. Upper bound in expectation, labelled as such by callers.
OuterW1Estimate outer_w1(
    std::span<const std::pair<model::EmpiricalMeasure, model::EmpiricalMeasure>> pairs);

// Two-sample Kolmogorov-Smirnov statistic, sup-norm of the empirical CDF
// difference on the merged grid.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Compactly supported smooth bump with analytic first and second derivatives;
// vanishes with its derivatives outside [center - width, center + width].
struct TestFunction {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> snapshots;  // positions per snapshot
    std::vector<double> mean_running_sup;        // mean over particles of sup_{s<=t} |X_s|
    // common-noise component at the final time under the linear part of the
    // drift (exact superposition for a = 0); shared by every particle
    double final_common = 0.0;
};

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> mean_abs;
    std::vector<double> mean_sup;
};

MomentSeries moment_track(const Trajectory& traj);

// Weak-form residual of the measure-valued dynamics: per consecutive
// snapshot pair,
//   r_t = mu_{t+dt}(phi) - mu_t(phi) - dt [ mu_t(phi' b(.,mu_t))
//         + avg_j I_nu(x_j) + avg_j I_nu0(x_j) ],
// where I_nu(x) = int [phi(x+sigma z) - phi(x) - sigma phi'(x) z 1{|z|<=1}] nu(dz)
// is evaluated by adaptive quadrature and cached on a dense grid. The
// remaining term is a martingale increment, so the across-replica
// standardized mean of the window sum must be statistically zero.
class SfpeEvaluator {
public:
    SfpeEvaluator(const TestFunction& phi, const model::DriftSpec& drift,
                  const rates::CouplingScales& scales);
    ~SfpeEvaluator();
    SfpeEvaluator(SfpeEvaluator&&) noexcept;

    // per-step residuals for snapshots spaced by traj.dt
    std::vector<double> residuals(const Trajectory& traj) const;
    double window_sum(const Trajectory& traj) const;

    // generator integral lookup (interpolated), exposed for tests
    double jump_term_idio(double x) const;
    double jump_term_common(double x) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> sfpe_residual(const Trajectory& traj, const TestFunction& phi,
                                  const model::DriftSpec& drift,
                                  const rates::CouplingScales& scales);

} // namespace mvjd::metrics
