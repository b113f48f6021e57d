#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mvjd/levy.hpp"

// Analytic machinery of the coupling construction for two symmetric stable
// noises: the small-jump variance bound F, the concavity generator g*, the
// concave distance f, the contraction rate chain, the smoothstep cut-off,
// and the scalar reflection factor.

namespace mvjd::rates {

struct CouplingScales {
    double lambda1 = 1.0;   // local expansion allowance
    double lambda2 = 1.0;   // long-range dissipation rate
    double lambda3 = 0.0;   // measure-Lipschitz constant of the drift
    double ell0 = 1.0;      // dissipation radius, >= 1
    double sigma = 1.0;     // idiosyncratic noise coefficient, != 0
    double sigma0 = 1.0;    // common noise coefficient, != 0
    double theta = 0.5;     // exponent of the F bound, in (0,1)
    levy::StableLevySpec levy;    // idiosyncratic measure (index alpha)
    levy::StableLevySpec levy0;   // common measure (index beta)

    void validate() const;
};

struct RateReport {
    double C1 = 0.0;
    double Lambda1 = 0.0;      // g*(2 ell0)
    double Lambda2 = 0.0;      // g*(ell0)
    double lambda_star = 0.0;  // min(l1 e^-L2, l2 e^-L1)
    double lambda0 = 0.0;      // lambda* - l3 e^L1
    double lambda3_max = 0.0;  // lambda* e^-L1
    bool contraction_ok = false;  // lambda0 > 0
    bool degenerate = false;      // lambda1 = 0 or lambda2 = 0
};

// Scale constant of the closed-form F bound:
//   C1 = C_theta * min(2^(a-1) c_* / (2-a), 2^(b-1) c^* / (2-b)),
//   C_theta = min((2 l0)^(theta-a), (2 l0)^(theta-b)).
double stable_C1(const CouplingScales& s);

// F(r) = C1 (|sigma|^alpha + |sigma0|^beta) r^(2-theta) on [0, 2 ell0];
// rejects r outside the domain.
double f_sigma_bound(const CouplingScales& s, double r);

// Truncated second-moment functional the F bound must stay below:
//   sigma^2 int_{|z| < r/(2|sigma|)} z^2 nu(dz) + same for the common noise.
double truncated_jump_energy(const CouplingScales& s, double r);

// g*(r) = lambda1 r^theta / (C1 theta (|sigma|^alpha + |sigma0|^beta)),
// the closed form of lambda1 int_0^r s / F(s) ds.
double g_star(const CouplingScales& s, double r);
double g_star_prime(const CouplingScales& s, double r);

// Quadrature route: lambda1 int_0^r s/F(s) ds with an adaptive GK tail and a
// power-law closed form on the singular head panel. F defaults to
// f_sigma_bound; a custom integrand_F exercises the generic path. Reports
// divergence when s/F is non-integrable near 0.
double g_star_quadrature(const CouplingScales& s, double r);
double g_star_quadrature_generic(const std::function<double(double)>& F,
                                 double lambda1, double r);

struct ShapeCheckReport {
    bool pass = true;
    double first_violation_r = 0.0;
    int violated_order = 0;  // 1..4, derivative order of the first failure
};

// Sign conditions g' > 0, g'' <= 0, g''' >= 0, g'''' <= 0 on a log-spaced
// grid of (0, 2 ell0], exact derivatives in stable mode.
ShapeCheckReport g_star_shape_check(const CouplingScales& s, int grid_points = 1024);
ShapeCheckReport shape_check_generic(const std::function<double(double)>& g1,
                                     const std::function<double(double)>& g2,
                                     const std::function<double(double)>& g3,
                                     const std::function<double(double)>& g4,
                                     double r_lo, double r_hi, int grid_points);

// f(r) = int_0^r e^(-g*(s)) ds on [0, 2 ell0], affine beyond with slope
// f'(2 ell0) = e^(-g*(2 ell0)). Values are tabulated by panel-wise
// quadrature on log-plus-linear nodes and interpolated with cubic Hermite
// segments whose endpoint slopes are the exact f' = e^(-g*); the exposed
// derivatives are analytic, not differenced.
class DistanceFunction {
public:
    static DistanceFunction build(const CouplingScales& s, int log_nodes = 2048,
                                  int linear_nodes = 8192);

    double f(double r) const;
    double f_prime(double r) const;   // e^(-g*(r)) for r <= 2 ell0, constant after
    double f_second(double r) const;  // -g*'(r) e^(-g*(r)), 0 beyond 2 ell0

    double ell0() const { return ell0_; }
    double f_at_2ell0() const { return f_at_2ell0_; }
    double f_prime_at_2ell0() const { return f_prime_at_2ell0_; }

private:
    std::vector<double> nodes_;
    std::vector<double> values_;
    std::vector<double> slopes_;
    double ell0_ = 1.0;
    double f_at_2ell0_ = 0.0;
    double f_prime_at_2ell0_ = 0.0;
    CouplingScales scales_;
};

RateReport contraction_rates(const CouplingScales& s);

// psi(r) = f'(r)((l1+l2) r 1{r<=l0} - l2 r) + 2 f''(r) F(r) 1{r<=l0};
// satisfies psi(r) <= -lambda* r for all r >= 0.
double psi(const CouplingScales& s, const DistanceFunction& d, double r);

// Quintic smoothstep cut-off: 0 on [0, eps], 1 on [2 eps, inf),
// 6 s^5 - 15 s^4 + 10 s^3 with s = (r - eps)/eps in between; C^2 at the seams.
double cutoff(double eps, double r);

// Pi_{eps,1} = 1 - 2 h_eps(mean |z_i|); +1 when the copies coincide within
// eps on average, -1 when the mean gap is at least 2 eps.
double reflection_scalar(double eps, std::span<const double> gaps);
double reflection_scalar_from_mean(double eps, double mean_abs_gap);

// Explicit constant chain of the uniform-in-time first-moment bound:
//   sup_t E|X_t| <= E V(X_0) + c1 / (lambda2 - lambda3),
// with c1 assembled from the noise moment integrals, the dissipation
// constants and |b(0, delta_0)|. Requires lambda2 > lambda3.
double moment_bound_estimate(const CouplingScales& s, double b_at_zero,
                             double expected_V0);

} // namespace mvjd::rates
