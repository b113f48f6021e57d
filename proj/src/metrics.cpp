#include "mvjd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvjd/quad.hpp"

namespace mvjd::metrics {

W1Result w1_exact_1d(const model::EmpiricalMeasure& a, const model::EmpiricalMeasure& b) {
    if (a.points.empty() || b.points.empty()) {
        throw std::invalid_argument("w1_exact_1d: measures must be nonempty");
    }
    std::vector<double> sa = a.points;
    std::vector<double> sb = b.points;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    W1Result out;
    const std::size_t na = sa.size();
    const std::size_t nb = sb.size();
    if (na == nb) {
        out.method = W1Method::SortedEqual;
        double s = 0.0;
        for (std::size_t i = 0; i < na; ++i) s += std::fabs(sa[i] - sb[i]);
        out.value = s / static_cast<double>(na);
        return out;
    }
    // Piecewise-constant integral of |F_a^{-1} - F_b^{-1}| over the merged
    // quantile grid; boundaries compared in integer arithmetic to keep ties
    // exact.
    out.method = W1Method::QuantileGeneral;
    std::size_t ia = 0, ib = 0;
    double u_prev = 0.0;
    double total = 0.0;
    while (ia < na && ib < nb) {
        const unsigned long long lhs = (ia + 1) * static_cast<unsigned long long>(nb);
        const unsigned long long rhs = (ib + 1) * static_cast<unsigned long long>(na);
        const double u_next = static_cast<double>(std::min(lhs, rhs)) /
                              static_cast<double>(na * nb);
        total += (u_next - u_prev) * std::fabs(sa[ia] - sb[ib]);
        if (lhs <= rhs) ++ia;
        if (rhs <= lhs) ++ib;
        u_prev = u_next;
    }
    out.value = total;
    return out;
}

OuterW1Estimate outer_w1(
    std::span<const std::pair<model::EmpiricalMeasure, model::EmpiricalMeasure>> pairs) {
    OuterW1Estimate est;
    est.n_replicas = static_cast<int>(pairs.size());
    if (pairs.empty()) return est;
    std::vector<double> inner(pairs.size());
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        inner[r] = w1_exact_1d(pairs[r].first, pairs[r].second).value;
    }
    double mean = 0.0;
    for (double v : inner) mean += v;
    mean /= static_cast<double>(inner.size());
    est.mean = mean;
    if (inner.size() >= 2) {
        double ss = 0.0;
        for (double v : inner) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(inner.size() - 1));
        est.stderr_ = sd / std::sqrt(static_cast<double>(inner.size()));
        est.stderr_defined = true;
    }
    return est;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_statistic: samples must be nonempty");
    }
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    // the CDF difference changes only at data values, and the loop records it
    // right after each distinct value is processed
    while (ia < sa.size() && ib < sb.size()) {
        const double v = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] == v) ++ia;
        while (ib < sb.size() && sb[ib] == v) ++ib;
        d = std::max(d, std::fabs(ia / na - ib / nb));
    }
    return std::min(d, 1.0);
}

double TestFunction::value(double x) const {
    const double u = (x - center) / width;
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return amplitude * std::exp(1.0 - 1.0 / q);
}

double TestFunction::d1(double x) const {
    const double u = (x - center) / width;
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    const double phi = amplitude * std::exp(1.0 - 1.0 / q);
    return phi * (-2.0 * u / (q * q)) / width;
}

double TestFunction::d2(double x) const {
    const double u = (x - center) / width;
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    const double q2 = q * q;
    const double phi = amplitude * std::exp(1.0 - 1.0 / q);
    const double term = 4.0 * u * u / (q2 * q2) - 2.0 / q2 - 8.0 * u * u / (q2 * q);
    return phi * term / (width * width);
}

MomentSeries moment_track(const Trajectory& traj) {
    MomentSeries out;
    out.times = traj.times;
    out.mean_abs.reserve(traj.snapshots.size());
    for (const auto& snap : traj.snapshots) {
        double s = 0.0;
        for (double x : snap) s += std::fabs(x);
        out.mean_abs.push_back(s / static_cast<double>(snap.size()));
    }
    out.mean_sup = traj.mean_running_sup;
    return out;
}

// ---------------------------------------------------------------------------
// SFPE residual

namespace {

// I_nu(x) for a symmetric stable measure: by symmetry the |z|<=1 compensator
// vanishes, leaving
//   int_0^inf [phi(x+s z) + phi(x-s z) - 2 phi(x)] c z^{-1-alpha} dz
// with s the noise coefficient. Head panel by second-order Taylor, analytic
// power tail beyond the reach of the support.
double jump_integral(const TestFunction& phi, double sigma,
                     const levy::StableLevySpec& nu, double x) {
    if (nu.c == 0.0) return 0.0;
    const double s = std::fabs(sigma);
    const double reach = (std::fabs(x - phi.center) + phi.width) / s;
    const double z_head = std::min(1e-6, 0.1 * reach);
    const double phix = phi.value(x);
    double head = 0.0;
    if (z_head > 0.0) {
        head = phi.d2(x) * s * s * nu.c * std::pow(z_head, 2.0 - nu.alpha) /
               (2.0 - nu.alpha);
    }
    auto f = [&](double z) {
        return (phi.value(x + s * z) + phi.value(x - s * z) - 2.0 * phix) * nu.c *
               std::pow(z, -1.0 - nu.alpha);
    };
    const double body = integrate(f, z_head, reach, 1e-10, 1e-8);
    // beyond reach: phi(x +- s z) = 0, only the -2 phi(x) term survives
    const double tail = -2.0 * phix * nu.c * std::pow(reach, -nu.alpha) / nu.alpha;
    return head + body + tail;
}

struct InterpTable {
    double x_lo = 0.0;
    double inv_h = 0.0;
    std::vector<double> values;

    double eval(double x) const {
        if (values.empty()) return 0.0;
        const double t = (x - x_lo) * inv_h;
        if (t <= 0.0 || t >= static_cast<double>(values.size() - 1)) return 0.0;
        const std::size_t i = static_cast<std::size_t>(t);
        const double w = t - static_cast<double>(i);
        return values[i] * (1.0 - w) + values[i + 1] * w;
    }
};

InterpTable build_table(const TestFunction& phi, double sigma,
                        const levy::StableLevySpec& nu) {
    InterpTable tbl;
    const double span = 64.0;
    const double h = 1.0 / 64.0;
    tbl.x_lo = phi.center - span;
    tbl.inv_h = 1.0 / h;
    const std::size_t n = static_cast<std::size_t>(2.0 * span / h) + 1;
    tbl.values.resize(n);
    if (nu.c == 0.0 || phi.amplitude == 0.0) return tbl;
    for (std::size_t i = 0; i < n; ++i) {
        tbl.values[i] = jump_integral(phi, sigma, nu, tbl.x_lo + h * static_cast<double>(i));
    }
    // the table edges sit far outside the support; zero there keeps eval()
    // continuous with the out-of-range branch
    tbl.values.front() = 0.0;
    tbl.values.back() = 0.0;
    return tbl;
}

} // namespace

struct SfpeEvaluator::Impl {
    TestFunction phi;
    model::DriftSpec drift;
    rates::CouplingScales scales;
    InterpTable idio;
    InterpTable common;
};

SfpeEvaluator::SfpeEvaluator(const TestFunction& phi, const model::DriftSpec& drift,
                             const rates::CouplingScales& scales)
    : impl_(std::make_unique<Impl>()) {
    impl_->phi = phi;
    impl_->drift = drift;
    impl_->scales = scales;
    impl_->idio = build_table(phi, scales.sigma, scales.levy);
    impl_->common = build_table(phi, scales.sigma0, scales.levy0);
}

SfpeEvaluator::~SfpeEvaluator() = default;
SfpeEvaluator::SfpeEvaluator(SfpeEvaluator&&) noexcept = default;

double SfpeEvaluator::jump_term_idio(double x) const { return impl_->idio.eval(x); }
double SfpeEvaluator::jump_term_common(double x) const { return impl_->common.eval(x); }

std::vector<double> SfpeEvaluator::residuals(const Trajectory& traj) const {
    if (traj.snapshots.size() < 2) {
        throw std::invalid_argument("sfpe residual: need at least 2 snapshots");
    }
    const auto& phi = impl_->phi;
    const auto& drift = impl_->drift;
    std::vector<double> out;
    out.reserve(traj.snapshots.size() - 1);
    auto mu_phi = [&](const std::vector<double>& pts) {
        double s = 0.0;
        for (double x : pts) s += phi.value(x);
        return s / static_cast<double>(pts.size());
    };
    for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
        const auto& cur = traj.snapshots[k];
        const auto& nxt = traj.snapshots[k + 1];
        const double dt = traj.times[k + 1] - traj.times[k];
        const double mean_kernel =
            drift.lambda3 != 0.0 ? drift.kernel_mean(cur) : 0.0;
        double fv = 0.0;
        for (double x : cur) {
            fv += phi.d1(x) * drift.eval(x, mean_kernel);
            fv += impl_->idio.eval(x);
            fv += impl_->common.eval(x);
        }
        fv /= static_cast<double>(cur.size());
        out.push_back(mu_phi(nxt) - mu_phi(cur) - dt * fv);
    }
    return out;
}

double SfpeEvaluator::window_sum(const Trajectory& traj) const {
    double s = 0.0;
    for (double r : residuals(traj)) s += r;
    return s;
}

std::vector<double> sfpe_residual(const Trajectory& traj, const TestFunction& phi,
                                  const model::DriftSpec& drift,
                                  const rates::CouplingScales& scales) {
    return SfpeEvaluator(phi, drift, scales).residuals(traj);
}

} // namespace mvjd::metrics
