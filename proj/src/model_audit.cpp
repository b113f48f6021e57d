#include "mvjd/model_audit.hpp"

#include <cmath>

#include "mvjd/metrics.hpp"
#include "mvjd/rng.hpp"

namespace mvjd::model {

H1AuditReport audit_h1(const DriftSpec& spec, double ell0, double lambda1,
                       double lambda2, int n_pairs, double box, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("audit_h1: n_pairs must be >= 1");
    Rng rng(derive_stream_key(seed, 0, StreamRole::Audit, 1, 0));
    // the measure argument cancels in b(x,mu) - b(y,mu); evaluate the base part
    H1AuditReport rep;
    rep.pairs = n_pairs;
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_pairs; ++k) {
        const double x = box * (2.0 * rng.uniform() - 1.0);
        const double y = box * (2.0 * rng.uniform() - 1.0);
        const double d = x - y;
        if (d == 0.0) continue;
        const double lhs = d * (spec.base(x) - spec.base(y));
        const double d2 = d * d;
        const double rhs =
            (std::fabs(d) <= ell0 ? (lambda1 + lambda2) * d2 : 0.0) - lambda2 * d2;
        const double excess = lhs - rhs;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.witness_x = x;
            rep.witness_y = y;
        }
    }
    rep.pass = rep.max_excess <= 1e-12;
    return rep;
}

H2AuditReport audit_h2(const DriftSpec& spec, int n_trials, std::uint64_t seed) {
    if (n_trials < 1) throw std::invalid_argument("audit_h2: n_trials must be >= 1");
    Rng rng(derive_stream_key(seed, 0, StreamRole::Audit, 2, 0));
    H2AuditReport rep;
    rep.trials = n_trials;
    EmpiricalMeasure mu, mubar;
    for (int k = 0; k < n_trials; ++k) {
        const int na = 1 + static_cast<int>(rng.uniform() * 64.0);
        const int nb = 1 + static_cast<int>(rng.uniform() * 64.0);
        mu.points.resize(na);
        mubar.points.resize(nb);
        for (auto& p : mu.points) p = 4.0 * rng.normal();
        for (auto& p : mubar.points) p = 4.0 * rng.normal();
        const double x = 4.0 * rng.normal();
        const double w1 = metrics::w1_exact_1d(mu, mubar).value;
        if (w1 < 1e-14) {
            ++rep.skipped;
            continue;
        }
        const double diff =
            std::fabs(eval_drift(spec, x, mu) - eval_drift(spec, x, mubar));
        rep.max_ratio = std::max(rep.max_ratio, diff / w1);
    }
    rep.pass = rep.max_ratio <= spec.lambda3 * (1.0 + 1e-9);
    return rep;
}

} // namespace mvjd::model
