#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "mvjd/experiments.hpp"

namespace mvjd::exp {

namespace {

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

} // namespace

CheckResult check_rates(const RatesOutcome& o, const ExperimentConfig& cfg) {
    CheckResult res;
    res.detail = fmt("lambda0 = %.7g, quadrature agreement = %.3g", o.report.lambda0,
                     o.quad_rel_err);
    if (o.quad_rel_err > 1e-10) {
        res.detail += " [quadrature disagrees with closed form]";
        return res;
    }
    if (cfg.require_contraction && !o.report.contraction_ok) {
        res.detail += " [no contraction guarantee]";
        return res;
    }
    res.pass = true;
    return res;
}

CheckResult check_audit(const AuditOutcome& o) {
    CheckResult res;
    res.pass = o.pass;
    res.detail = fmt("h1 max excess = %.3g (witness x=%.4g y=%.4g), h2 max ratio = %.6g",
                     o.h1.max_excess, o.h1.witness_x, o.h1.witness_y, o.h2.max_ratio);
    return res;
}

CheckResult check_contraction(const ContractionOutcome& o, const ExperimentConfig& cfg) {
    CheckResult res;
    if (o.fit.degenerate) {
        res.pass = true;
        res.detail = "fit skipped (signal at floor from the start)";
        return res;
    }
    const auto rates = rates::contraction_rates(cfg.scales);
    const double half = o.fit.rate_ci.half_width();
    const bool decreasing = o.fit.mk_z < -1.645;
    const bool rate_ok = !rates.contraction_ok || o.fit.rate >= rates.lambda0 - half;
    res.pass = decreasing && rate_ok;
    res.detail = fmt("fitted rate = %.4g (CI half-width %.3g) vs lambda0 = %.4g; MK z = %.2f",
                     o.fit.rate, half, rates.lambda0, o.fit.mk_z);
    if (!rates.contraction_ok) res.detail += " [no contraction guarantee regime]";
    return res;
}

CheckResult check_poc(const PocOutcome& o) {
    CheckResult res;
    res.pass = o.strictly_decreasing && o.end_cis_disjoint;
    res.detail = "means:";
    for (std::size_t j = 0; j < o.ns.size(); ++j) {
        res.detail += fmt(" n=%d: %.5g [%.5g, %.5g]", o.ns[j], o.mean_diff[j], o.ci[j].lo,
                          o.ci[j].hi);
    }
    if (!o.strictly_decreasing) res.detail += " [not strictly decreasing]";
    if (!o.end_cis_disjoint) res.detail += " [end CIs overlap]";
    return res;
}

CheckResult check_marginal(const MarginalOutcome& o) {
    CheckResult res;
    res.pass = o.pass;
    res.detail = fmt("KS = %.5g vs 1%% critical %.5g (pooled m = %zu)", o.ks, o.critical,
                     o.pooled_m);
    if (o.control_ks) res.detail += fmt(", control KS = %.5g", *o.control_ks);
    return res;
}

CheckResult check_coupled_decay(const CoupledDecayOutcome& o, const ExperimentConfig& cfg) {
    CheckResult res;
    const bool signs_ok = o.diagnostics.sign_violations == 0;
    if (o.fit.degenerate) {
        res.pass = signs_ok;
        res.detail = fmt("fit skipped (zero initial gap or immediate floor); "
                         "sign violations = %lld",
                         o.diagnostics.sign_violations);
        return res;
    }
    const auto rates = rates::contraction_rates(cfg.scales);
    const double half = o.fit.rate_ci.half_width();
    const bool rate_ok = !rates.contraction_ok || o.fit.rate >= rates.lambda0 - half;
    const bool floor_ok = o.fit.floor <= 0.05;
    res.pass = rate_ok && floor_ok && signs_ok;
    res.detail =
        fmt("fitted rate = %.4g (CI half-width %.3g) vs lambda0 = %.4g; floor = %.4g; "
            "reflected = %lld, sign violations = %lld, mixed common = %lld",
            o.fit.rate, half, rates.lambda0, o.fit.floor, o.diagnostics.reflected_events,
            o.diagnostics.sign_violations, o.diagnostics.mixed_common_events);
    return res;
}

CheckResult check_sfpe(const SfpeOutcome& o) {
    CheckResult res;
    res.pass = !o.per_phi.empty();
    res.detail = "standardized residuals:";
    for (const auto& phi : o.per_phi) {
        res.detail += fmt(" c=%.3g: %.3f", phi.center, phi.standardized);
        if (!(std::fabs(phi.standardized) < 3.0)) res.pass = false;
    }
    return res;
}

CheckResult check_moments(const MomentsOutcome& o) {
    CheckResult res;
    const bool no_trend = o.mk_z_tail <= 1.645;
    const bool bounded = o.max_mean_abs <= 10.0 * o.value_near_t5;
    res.pass = no_trend && bounded;
    res.detail = fmt("tail MK z = %.3f, max mean|X| = %.4g vs value near t=5 %.4g "
                     "(bound estimate %.4g)",
                     o.mk_z_tail, o.max_mean_abs, o.value_near_t5, o.bound_estimate);
    return res;
}

} // namespace mvjd::exp
