#include "mvjd/rates.hpp"

#include <algorithm>
#include <cmath>

#include "mvjd/quad.hpp"

namespace mvjd::rates {

void CouplingScales::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
        throw std::invalid_argument("scales: lambda1, lambda2, lambda3 must be >= 0");
    }
    if (!(ell0 >= 1.0)) {
        throw std::invalid_argument("scales.ell0: must be >= 1");
    }
    if (sigma == 0.0 || sigma0 == 0.0) {
        throw std::invalid_argument("scales: sigma and sigma0 must be nonzero");
    }
    if (!(theta > 0.0) || !(theta < 1.0)) {
        throw std::invalid_argument("scales.theta: must lie in (0,1)");
    }
    levy.validate();
    levy0.validate();
}

namespace {

double sigma_weight(const CouplingScales& s) {
    return std::pow(std::fabs(s.sigma), s.levy.alpha) +
           std::pow(std::fabs(s.sigma0), s.levy0.alpha);
}

} // namespace

double stable_C1(const CouplingScales& s) {
    const double a = s.levy.alpha;
    const double b = s.levy0.alpha;
    const double two_l0 = 2.0 * s.ell0;
    const double c_theta =
        std::min(std::pow(two_l0, s.theta - a), std::pow(two_l0, s.theta - b));
    const double m = std::min(std::pow(2.0, a - 1.0) * s.levy.c / (2.0 - a),
                              std::pow(2.0, b - 1.0) * s.levy0.c / (2.0 - b));
    return c_theta * m;
}

double f_sigma_bound(const CouplingScales& s, double r) {
    if (!(r >= 0.0) || r > 2.0 * s.ell0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("f_sigma_bound: r must lie in [0, 2 ell0]");
    }
    return stable_C1(s) * sigma_weight(s) * std::pow(r, 2.0 - s.theta);
}

double truncated_jump_energy(const CouplingScales& s, double r) {
    // sigma^2 * 2c int_0^{r/(2|sigma|)} z^{1-alpha} dz, closed form per noise
    const double a = s.levy.alpha;
    const double b = s.levy0.alpha;
    const double ta = r / (2.0 * std::fabs(s.sigma));
    const double tb = r / (2.0 * std::fabs(s.sigma0));
    const double ea =
        s.sigma * s.sigma * 2.0 * s.levy.c * std::pow(ta, 2.0 - a) / (2.0 - a);
    const double eb =
        s.sigma0 * s.sigma0 * 2.0 * s.levy0.c * std::pow(tb, 2.0 - b) / (2.0 - b);
    return ea + eb;
}

double g_star(const CouplingScales& s, double r) {
    if (!(r >= 0.0) || r > 2.0 * s.ell0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("g_star: r must lie in [0, 2 ell0]");
    }
    if (r == 0.0) return 0.0;
    return s.lambda1 * std::pow(r, s.theta) / (stable_C1(s) * s.theta * sigma_weight(s));
}

double g_star_prime(const CouplingScales& s, double r) {
    return s.lambda1 * std::pow(r, s.theta - 1.0) / (stable_C1(s) * sigma_weight(s));
}

double g_star_quadrature_generic(const std::function<double(double)>& F,
                                 double lambda1, double r) {
    if (r <= 0.0) return 0.0;
    // Head panel [0, h]: the integrand s/F(s) behaves as a power law near 0;
    // estimate the exponent from two samples and integrate it in closed form.
    const double h = std::min(r, r * 1e-6);
    const double Fh = F(h);
    const double Fh2 = F(0.5 * h);
    if (!(Fh > 0.0) || !(Fh2 > 0.0)) {
        throw QuadratureError("g_star quadrature: F must be positive near 0");
    }
    const double p = std::log2(Fh / Fh2);  // F ~ C s^p near 0
    const double theta_eff = 2.0 - p;
    if (!(theta_eff > 0.0)) {
        throw QuadratureError(
            "g_star quadrature: s/F(s) is non-integrable near 0 (exponent " +
            std::to_string(theta_eff - 1.0) + ")");
    }
    const double head = h * h / (Fh * theta_eff);
    double tail = 0.0;
    if (r > h) {
        tail = integrate([&](double u) { return u / F(u); }, h, r, 1e-14, 5e-13);
    }
    return lambda1 * (head + tail);
}

double g_star_quadrature(const CouplingScales& s, double r) {
    if (!(r >= 0.0) || r > 2.0 * s.ell0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("g_star_quadrature: r must lie in [0, 2 ell0]");
    }
    return g_star_quadrature_generic([&](double u) { return f_sigma_bound(s, u); },
                                     s.lambda1, r);
}

ShapeCheckReport shape_check_generic(const std::function<double(double)>& g1,
                                     const std::function<double(double)>& g2,
                                     const std::function<double(double)>& g3,
                                     const std::function<double(double)>& g4,
                                     double r_lo, double r_hi, int grid_points) {
    ShapeCheckReport rep;
    const double tol = 1e-12;
    const double log_lo = std::log(r_lo);
    const double log_hi = std::log(r_hi);
    for (int k = 0; k < grid_points; ++k) {
        const double t = grid_points == 1 ? 1.0
                                          : static_cast<double>(k) / (grid_points - 1);
        const double r = std::exp(log_lo + t * (log_hi - log_lo));
        int order = 0;
        if (!(g1(r) > 0.0)) order = 1;
        else if (g2(r) > tol) order = 2;
        else if (g3(r) < -tol) order = 3;
        else if (g4(r) > tol) order = 4;
        if (order != 0) {
            rep.pass = false;
            rep.first_violation_r = r;
            rep.violated_order = order;
            return rep;
        }
    }
    return rep;
}

ShapeCheckReport g_star_shape_check(const CouplingScales& s, int grid_points) {
    // g* = A r^theta: all four derivative signs follow from theta in (0,1];
    // evaluated exactly rather than differenced.
    const double A = s.lambda1 / (stable_C1(s) * s.theta * sigma_weight(s));
    const double th = s.theta;
    auto d1 = [&](double r) { return A * th * std::pow(r, th - 1.0); };
    auto d2 = [&](double r) { return A * th * (th - 1.0) * std::pow(r, th - 2.0); };
    auto d3 = [&](double r) {
        return A * th * (th - 1.0) * (th - 2.0) * std::pow(r, th - 3.0);
    };
    auto d4 = [&](double r) {
        return A * th * (th - 1.0) * (th - 2.0) * (th - 3.0) * std::pow(r, th - 4.0);
    };
    return shape_check_generic(d1, d2, d3, d4, 2.0 * s.ell0 * 1e-6, 2.0 * s.ell0,
                               grid_points);
}

DistanceFunction DistanceFunction::build(const CouplingScales& s, int log_nodes,
                                         int linear_nodes) {
    s.validate();
    DistanceFunction d;
    d.ell0_ = s.ell0;
    d.scales_ = s;
    const double r_max = 2.0 * s.ell0;
    const double r_switch = 0.02 * r_max;
    const double r_min = r_max * 1e-9;

    d.nodes_.push_back(0.0);
    const double lmin = std::log(r_min);
    const double lmax = std::log(r_switch);
    for (int k = 0; k <= log_nodes; ++k) {
        d.nodes_.push_back(std::exp(lmin + (lmax - lmin) * k / log_nodes));
    }
    for (int k = 1; k <= linear_nodes; ++k) {
        d.nodes_.push_back(r_switch + (r_max - r_switch) * k / linear_nodes);
    }
    d.nodes_.back() = r_max;

    auto integrand = [&](double u) { return std::exp(-g_star(s, u)); };
    d.values_.resize(d.nodes_.size());
    d.slopes_.resize(d.nodes_.size());
    d.values_[0] = 0.0;
    d.slopes_[0] = 1.0;  // e^(-g*(0)) = 1
    for (std::size_t i = 1; i < d.nodes_.size(); ++i) {
        d.values_[i] = d.values_[i - 1] +
                       integrate(integrand, d.nodes_[i - 1], d.nodes_[i], 1e-13, 1e-12);
        d.slopes_[i] = integrand(d.nodes_[i]);
    }
    d.f_at_2ell0_ = d.values_.back();
    d.f_prime_at_2ell0_ = d.slopes_.back();
    return d;
}

double DistanceFunction::f(double r) const {
    if (r <= 0.0) return 0.0;
    const double r_max = 2.0 * ell0_;
    if (r >= r_max) return f_at_2ell0_ + f_prime_at_2ell0_ * (r - r_max);
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    const std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
    const std::size_t lo = hi - 1;
    const double h = nodes_[hi] - nodes_[lo];
    const double t = (r - nodes_[lo]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    // cubic Hermite with exact endpoint slopes
    return (2.0 * t3 - 3.0 * t2 + 1.0) * values_[lo] +
           (t3 - 2.0 * t2 + t) * h * slopes_[lo] +
           (-2.0 * t3 + 3.0 * t2) * values_[hi] + (t3 - t2) * h * slopes_[hi];
}

double DistanceFunction::f_prime(double r) const {
    if (r < 0.0) r = 0.0;
    if (r >= 2.0 * ell0_) return f_prime_at_2ell0_;
    return std::exp(-g_star(scales_, r));
}

double DistanceFunction::f_second(double r) const {
    if (r <= 0.0 || r >= 2.0 * ell0_) return 0.0;
    return -g_star_prime(scales_, r) * std::exp(-g_star(scales_, r));
}

RateReport contraction_rates(const CouplingScales& s) {
    s.validate();
    RateReport rep;
    rep.C1 = stable_C1(s);
    rep.degenerate = s.lambda1 == 0.0 || s.lambda2 == 0.0;
    if (s.lambda1 == 0.0) {
        rep.Lambda1 = 0.0;
        rep.Lambda2 = 0.0;
    } else {
        rep.Lambda1 = g_star(s, 2.0 * s.ell0);
        rep.Lambda2 = g_star(s, s.ell0);
    }
    rep.lambda_star = std::min(s.lambda1 * std::exp(-rep.Lambda2),
                               s.lambda2 * std::exp(-rep.Lambda1));
    rep.lambda0 = rep.lambda_star - s.lambda3 * std::exp(rep.Lambda1);
    rep.lambda3_max = rep.lambda_star * std::exp(-rep.Lambda1);
    rep.contraction_ok = rep.lambda0 > 0.0;
    return rep;
}

double psi(const CouplingScales& s, const DistanceFunction& d, double r) {
    if (r < 0.0) throw std::invalid_argument("psi: r must be >= 0");
    const bool inside = r <= s.ell0;
    double val = d.f_prime(r) * ((inside ? (s.lambda1 + s.lambda2) * r : 0.0) -
                                 s.lambda2 * r);
    if (inside && r > 0.0) val += 2.0 * d.f_second(r) * f_sigma_bound(s, r);
    return val;
}

double cutoff(double eps, double r) {
    if (!(eps > 0.0)) throw std::invalid_argument("cutoff: eps must be > 0");
    if (r < 0.0) throw std::invalid_argument("cutoff: r must be >= 0");
    if (r <= eps) return 0.0;
    if (r >= 2.0 * eps) return 1.0;
    const double t = (r - eps) / eps;
    return ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
}

double reflection_scalar_from_mean(double eps, double mean_abs_gap) {
    return 1.0 - 2.0 * cutoff(eps, mean_abs_gap);
}

double reflection_scalar(double eps, std::span<const double> gaps) {
    if (gaps.empty()) throw std::invalid_argument("reflection_scalar: empty gap vector");
    double sum = 0.0;
    for (double g : gaps) sum += std::fabs(g);
    return reflection_scalar_from_mean(eps, sum / static_cast<double>(gaps.size()));
}

double moment_bound_estimate(const CouplingScales& s, double b_at_zero,
                             double expected_V0) {
    if (!(s.lambda2 > s.lambda3)) {
        throw std::invalid_argument(
            "moment_bound_estimate: requires lambda2 > lambda3");
    }
    const auto mi = levy::integrability_moments(s.levy);
    const auto m0 = levy::integrability_moments(s.levy0);
    const double noise = std::fabs(s.sigma) * mi.tail_first_moment +
                         std::fabs(s.sigma0) * m0.tail_first_moment +
                         0.5 * s.sigma * s.sigma * mi.small_second_moment +
                         0.5 * s.sigma0 * s.sigma0 * m0.small_second_moment;
    const double c1 = noise + s.lambda2 + (s.lambda1 + s.lambda2) * s.ell0 +
                      std::fabs(b_at_zero);
    return expected_V0 + c1 / (s.lambda2 - s.lambda3);
}

} // namespace mvjd::rates
