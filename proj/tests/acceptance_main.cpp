// Acceptance suite: runs every verification criterion at its stated
// tolerance and prints one pass/fail line per criterion. Exit code 0 iff all
// criteria hold.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mvjd/experiments.hpp"
#include "mvjd/levy.hpp"
#include "mvjd/metrics.hpp"
#include "mvjd/rates.hpp"
#include "mvjd/rng.hpp"
#include "mvjd/sim.hpp"

using namespace mvjd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmtf(const char* format, ...) {
    char buf[1024];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome criterion_rate_chain() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Rates);
    const auto o = exp::run_rates(cfg);
    const struct {
        const char* name;
        double got;
        double want;
    } values[] = {
        {"Lambda1", o.report.Lambda1, 1.0},
        {"Lambda2", o.report.Lambda2, 0.7071068},
        {"lambda_star", o.report.lambda_star, 0.3678794},
        {"lambda0", o.report.lambda0, 0.2319657},
        {"lambda3_max", o.report.lambda3_max, 0.1353353},
    };
    Outcome out;
    out.pass = true;
    for (const auto& v : values) {
        if (std::fabs(v.got - v.want) > 1e-6) {
            out.pass = false;
            out.detail += fmtf("%s = %.9g != %.7g; ", v.name, v.got, v.want);
        }
    }
    if (o.quad_rel_err > 1e-10) {
        out.pass = false;
        out.detail += fmtf("quadrature relative error %.3g > 1e-10; ", o.quad_rel_err);
    }
    if (out.pass) {
        out.detail = fmtf("lambda0 = %.7f, quadrature agreement %.2g", o.report.lambda0,
                          o.quad_rel_err);
    }
    return out;
}

Outcome criterion_w1_oracle() {
    Rng rng(derive_stream_key(20240811, 0, StreamRole::Generic, 0, 100));
    Outcome out;
    out.pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 8.0);
        std::vector<double> a(n), b(n);
        for (auto& x : a) x = 10.0 * rng.normal();
        for (auto& x : b) x = 10.0 * rng.normal();
        const double lib = metrics::w1_exact_1d({a}, {b}).value;

        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) cost += std::fabs(a[i] - b[idx[i]]);
            best = std::min(best, cost);
        } while (std::next_permutation(idx.begin(), idx.end()));
        best /= static_cast<double>(n);

        worst = std::max(worst, std::fabs(lib - best));
        if (std::fabs(lib - best) > 1e-12 * std::max(1.0, best)) {
            out.pass = false;
            out.detail = fmtf("instance %d: exact %.17g vs oracle %.17g", trial, lib, best);
            return out;
        }
    }
    out.detail = fmtf("1000 instances, max |difference| = %.3g", worst);
    return out;
}

Outcome criterion_distance_function() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Rates);
    const auto& s = cfg.scales;
    const auto d = rates::DistanceFunction::build(s);
    const auto rep = rates::contraction_rates(s);
    Outcome out;
    out.pass = true;

    const double f2 = d.f(2.0);
    const double f2_expected = 4.0 - 8.0 / std::exp(1.0);
    if (std::fabs(f2 - f2_expected) > 1e-6) {
        out.pass = false;
        out.detail += fmtf("f(2) = %.9g != %.9g; ", f2, f2_expected);
    }

    for (int k = 0; k <= 4000; ++k) {
        const double r = 10.0 * s.ell0 * k / 4000.0;
        const double fr = d.f(r);
        if (fr > r * (1.0 + 1e-12) + 1e-15 ||
            fr < d.f_prime_at_2ell0() * r * (1.0 - 1e-12) - 1e-15) {
            out.pass = false;
            out.detail += fmtf("f envelope violated at r = %.6g; ", r);
            break;
        }
        if (d.f_second(r) > 1e-15) {
            out.pass = false;
            out.detail += fmtf("f'' > 0 at r = %.6g; ", r);
            break;
        }
        if (rates::psi(s, d, r) > -rep.lambda_star * r * (1.0 - 1e-9) + 1e-12) {
            out.pass = false;
            out.detail += fmtf("psi envelope violated at r = %.6g; ", r);
            break;
        }
    }

    for (const double eps : {1e-3, 0.1}) {
        for (int k = 0; k <= 5000; ++k) {
            const double r = 6.0 * eps * k / 5000.0;
            if ((1.0 - rates::cutoff(eps, r)) * r > 2.0 * eps * (1.0 + 1e-12)) {
                out.pass = false;
                out.detail += fmtf("(1-h)r > 2eps at eps = %g, r = %.6g; ", eps, r);
                break;
            }
        }
        if ((1.0 - rates::cutoff(eps, 2.0 * eps)) * (2.0 * eps) != 0.0) {
            out.pass = false;
            out.detail += fmtf("(1-h)(2eps) != 0 at eps = %g; ", eps);
        }
    }

    const auto shape = rates::g_star_shape_check(s, 2000);
    if (!shape.pass) {
        out.pass = false;
        out.detail += fmtf("g* sign condition %d violated at r = %.6g; ",
                           shape.violated_order, shape.first_violation_r);
    }
    if (out.pass) {
        out.detail = fmtf("f(2) = %.8f, envelopes and sign conditions hold on dense grids",
                          f2);
    }
    return out;
}

Outcome criterion_contraction() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Contraction);
    const auto o = exp::run_contraction(cfg);
    const auto check = exp::check_contraction(o, cfg);
    Outcome out{check.pass, check.detail};
    if (o.fit.degenerate) {
        out.pass = false;
        out.detail += " [unexpected degenerate fit]";
    }
    return out;
}

Outcome criterion_coupled_decay() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::CoupledDecay);
    const auto o = exp::run_coupled_decay(cfg);
    const auto check = exp::check_coupled_decay(o, cfg);
    Outcome out{check.pass, check.detail};
    if (o.fit.degenerate) {
        out.pass = false;
        out.detail += " [unexpected degenerate fit]";
    }
    return out;
}

Outcome criterion_poc() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Poc);
    const auto o = exp::run_poc(cfg);
    const auto check = exp::check_poc(o);
    return {check.pass, check.detail};
}

Outcome criterion_marginal() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Marginal);
    const auto o = exp::run_marginal(cfg);
    Outcome out;
    out.pass = o.pass && o.pooled_m >= 10000;
    out.detail = fmtf("KS = %.5g vs critical %.5g at pooled m = %zu", o.ks, o.critical,
                      o.pooled_m);
    return out;
}

Outcome criterion_moments() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Moments);
    const auto o = exp::run_moments(cfg);
    const auto check = exp::check_moments(o);
    return {check.pass, check.detail};
}

Outcome criterion_sfpe() {
    const auto cfg = exp::preset_paper_example(exp::ExperimentKind::Sfpe);
    const auto o = exp::run_sfpe(cfg);
    const auto check = exp::check_sfpe(o);
    Outcome out{check.pass, check.detail};
    if (o.per_phi.size() != 3) out.pass = false;
    return out;
}

Outcome criterion_levy_calibration() {
    Outcome out;
    out.pass = true;
    const levy::StableLevySpec spec{1.5, 1.0, 0.01, levy::SmallJumpMode::Gaussian};
    const double rate = levy::tail_rate(spec);
    const int n = 100000;

    // count: one horizon with expected count n
    const double horizon = n / rate;
    const auto stream = levy::generate_stream(
        spec, horizon, Rng(derive_stream_key(20240811, 0, StreamRole::CommonJumps, 9, 0)));
    const double count = static_cast<double>(stream.events.size());
    if (std::fabs(count - n) > 3.0 * std::sqrt(static_cast<double>(n))) {
        out.pass = false;
        out.detail += fmtf("count %.0f outside 3 sigma of %d; ", count, n);
    }

    // magnitude tail law and sign symmetry on the same events
    std::vector<double> mags;
    mags.reserve(stream.events.size());
    double sign_sum = 0.0;
    for (const auto& e : stream.events) {
        mags.push_back(std::fabs(e.size));
        sign_sum += e.size > 0.0 ? 1.0 : -1.0;
    }
    std::sort(mags.begin(), mags.end());
    const double m = static_cast<double>(mags.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        const double cdf = 1.0 - std::pow(mags[i] / spec.delta, -spec.alpha);
        ks = std::max(ks, std::fabs(cdf - static_cast<double>(i) / m));
        ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / m - cdf));
    }
    if (ks >= 1.628 / std::sqrt(m)) {
        out.pass = false;
        out.detail += fmtf("magnitude KS %.4g >= %.4g; ", ks, 1.628 / std::sqrt(m));
    }
    if (std::fabs(sign_sum / m) >= 3.0 / std::sqrt(m)) {
        out.pass = false;
        out.detail += fmtf("sign mean %.4g >= %.4g; ", sign_sum / m, 3.0 / std::sqrt(m));
    }
    if (out.pass) {
        out.detail = fmtf("count %.0f (target %d), magnitude KS %.4g, sign mean %.2g",
                          count, n, ks, sign_sum / m);
    }
    return out;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        double limit_seconds;  // <= 0: no stated limit
    };
    const std::vector<Criterion> criteria = {
        {1, "rate chain matches the closed-form example", criterion_rate_chain, 1.0},
        {2, "W1 equals the permutation-assignment oracle", criterion_w1_oracle, 10.0},
        {3, "distance-function envelopes and sign conditions", criterion_distance_function,
         5.0},
        {4, "outer-W1 contraction at the reported rate", criterion_contraction, 600.0},
        {5, "coupled mean-gap decay, floor and sign preservation",
         criterion_coupled_decay, 600.0},
        {6, "finite-time propagation of chaos across the n grid", criterion_poc, 600.0},
        {7, "coupling preserves the interacting-system marginal", criterion_marginal,
         300.0},
        {8, "uniform-in-time first-moment boundedness", criterion_moments, 0.0},
        {9, "weak-form residual of the measure-valued dynamics", criterion_sfpe, 300.0},
        {10, "jump engine calibration at 1e5 samples", criterion_levy_calibration, 30.0},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const double t0 = now_seconds();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double elapsed = now_seconds() - t0;
        if (c.limit_seconds > 0.0 && elapsed > c.limit_seconds) {
            out.pass = false;
            out.detail += fmtf(" [runtime %.1fs over the %.0fs limit]", elapsed,
                               c.limit_seconds);
        }
        std::printf("[%s] criterion %2d: %s (%s) [%.1fs]\n", out.pass ? "PASS" : "FAIL",
                    c.id, c.name, out.detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
