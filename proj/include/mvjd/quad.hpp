#pragma once

#include <functional>
#include <stdexcept>

namespace mvjd {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

// Adaptive Gauss-Kronrod 7-15 on [a, b]. Stops when the summed error
// estimate drops below max(abs_tol, rel_tol * |value|).
QuadResult gk_adaptive(const std::function<double(double)>& f, double a, double b,
                       double abs_tol = 1e-12, double rel_tol = 1e-12,
                       int max_intervals = 2000);

// Like gk_adaptive but throws QuadratureError when non-convergent.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12);

} // namespace mvjd
