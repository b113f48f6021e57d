#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

// Concrete drift family
//   b(x, mu) = -kappa x + a sin(omega x) + lambda3 int g dmu
// with a 1-Lipschitz bounded interaction kernel g (default tanh). The
// partial-dissipativity constants are derivable in closed form for this
// family, and the measure-Lipschitz bound holds with constant exactly
// lambda3 by Kantorovich-Rubinstein duality.

namespace mvjd::model {

struct EmpiricalMeasure {
    std::vector<double> points;  // uniform weights 1/n

    std::size_t size() const { return points.size(); }
    double mean_abs() const {
        double s = 0.0;
        for (double x : points) s += std::fabs(x);
        return s / static_cast<double>(points.size());
    }
};

struct DriftSpec {
    double kappa = 1.0;    // linear dissipation; audits accept any sign
    double a = 0.0;        // perturbation amplitude
    double omega = 1.0;    // perturbation frequency
    double lambda3 = 0.0;  // interaction strength
    std::function<double(double)> kernel;  // empty => tanh (fast path)

    double base(double x) const { return -kappa * x + a * std::sin(omega * x); }
    double kernel_eval(double y) const { return kernel ? kernel(y) : std::tanh(y); }

    // b(x, mu) with the interaction term already averaged
    double eval(double x, double mean_kernel) const {
        return base(x) + lambda3 * mean_kernel;
    }

    double kernel_mean(std::span<const double> points) const {
        if (points.empty()) throw std::invalid_argument("drift: empty measure");
        double s = 0.0;
        if (!kernel) {
            for (double y : points) s += std::tanh(y);
        } else {
            for (double y : points) s += kernel(y);
        }
        return s / static_cast<double>(points.size());
    }
};

inline double eval_drift(const DriftSpec& spec, double x, const EmpiricalMeasure& mu) {
    return spec.eval(x, spec.kernel_mean(mu.points));
}

} // namespace mvjd::model
