#include <doctest.h>

#include <cmath>

#include "mvjd/metrics.hpp"
#include "mvjd/model.hpp"
#include "mvjd/model_audit.hpp"
#include "mvjd/rng.hpp"

using namespace mvjd;
using namespace mvjd::model;

TEST_CASE("drift evaluation against the empirical measure") {
    DriftSpec spec{1.0, 0.0, 1.0, 0.05, nullptr};
    CHECK(eval_drift(spec, 1.0, {{0.0}}) == doctest::Approx(-1.0).epsilon(1e-15));

    DriftSpec spec2{1.0, 0.0, 1.0, 0.1, nullptr};
    CHECK(eval_drift(spec2, 0.0, {{1.0, -1.0}}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(eval_drift(spec2, 0.0, {{1.0}}) ==
          doctest::Approx(0.1 * std::tanh(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(eval_drift(spec2, 0.0, {{}}), std::invalid_argument);
}

TEST_CASE("drift interaction term: permutation invariance and homogeneity in lambda3") {
    Rng rng(derive_stream_key(3, 0, StreamRole::Generic, 0, 7));
    for (int trial = 0; trial < 100; ++trial) {
        EmpiricalMeasure mu;
        mu.points.resize(9);
        for (auto& p : mu.points) p = 3.0 * rng.normal();
        const double x = rng.normal();
        DriftSpec d1{1.0, 0.2, 2.0, 0.07, nullptr};
        const double v = eval_drift(d1, x, mu);
        EmpiricalMeasure perm = mu;
        std::rotate(perm.points.begin(), perm.points.begin() + 4, perm.points.end());
        CHECK(eval_drift(d1, x, perm) == doctest::Approx(v).epsilon(1e-15));

        DriftSpec d2 = d1;
        d2.lambda3 = 2.0 * d1.lambda3;
        const double base = d1.base(x);
        CHECK(eval_drift(d2, x, mu) - base ==
              doctest::Approx(2.0 * (v - base)).epsilon(1e-12));
    }
}

TEST_CASE("H1 audit: pure dissipation, sine perturbation, anti-dissipative control") {
    DriftSpec linear{1.0, 0.0, 1.0, 0.05, nullptr};
    CHECK(audit_h1(linear, 1.0, 0.1, 1.0, 20000, 10.0, 1).pass);

    // kappa = 1, a = 0.3, omega = 2: |sin 2x - sin 2y| <= min(2|x-y|, 2)
    // gives lambda2 = 1 - 0.6/ell0 and lambda1 = 1.2 at ell0 = 1
    DriftSpec sine{1.0, 0.3, 2.0, 0.05, nullptr};
    CHECK(audit_h1(sine, 1.0, 1.2, 0.4, 20000, 10.0, 1).pass);

    DriftSpec anti{-1.0, 0.0, 1.0, 0.05, nullptr};
    const auto rep = audit_h1(anti, 1.0, 1.0, 1.0, 20000, 10.0, 1);
    CHECK(!rep.pass);
    CHECK(rep.max_excess > 0.0);
    const double d = rep.witness_x - rep.witness_y;
    const double lhs = d * (anti.base(rep.witness_x) - anti.base(rep.witness_y));
    const double rhs = (std::fabs(d) <= 1.0 ? 2.0 * d * d : 0.0) - d * d;
    CHECK(lhs - rhs == doctest::Approx(rep.max_excess));
}

TEST_CASE("H2 audit: tanh kernel attains lambda3, doubled kernel fails") {
    DriftSpec spec{1.0, 0.0, 1.0, 0.05, nullptr};
    const auto rep = audit_h2(spec, 100000, 1);
    CHECK(rep.pass);
    CHECK(rep.max_ratio <= 0.05 * (1.0 + 1e-9));
    CHECK(rep.max_ratio > 0.01);  // the bound is actually approached

    DriftSpec doubled{1.0, 0.0, 1.0, 0.05,
                      [](double y) { return 2.0 * std::tanh(y); }};
    const auto rep2 = audit_h2(doubled, 20000, 1);
    CHECK(!rep2.pass);
    CHECK(rep2.max_ratio > 0.05);
    CHECK(rep2.max_ratio <= 0.1 * (1.0 + 1e-9));
}

TEST_CASE("translation with a clamped-identity kernel attains the bound exactly") {
    DriftSpec clamp{1.0, 0.0, 1.0, 0.05, [](double y) {
                        return std::clamp(y, -100.0, 100.0);
                    }};
    EmpiricalMeasure mu{{-1.0, 0.3, 2.0, 4.5}};
    EmpiricalMeasure shifted = mu;
    const double c = 0.75;
    for (auto& p : shifted.points) p += c;
    const double w1 = metrics::w1_exact_1d(mu, shifted).value;
    CHECK(w1 == doctest::Approx(c).epsilon(1e-15));
    const double diff = std::fabs(eval_drift(clamp, 0.0, mu) - eval_drift(clamp, 0.0, shifted));
    CHECK(diff / w1 == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("combined drift bound in state and measure") {
    // (x-y)(b(x,mu)-b(y,mubar)) <= L (|x-y| + W1(mu,mubar)) |x-y| with L = lambda3
    // for the dissipative family
    Rng rng(derive_stream_key(17, 0, StreamRole::Generic, 0, 9));
    for (const double a : {0.0, 0.3}) {
        DriftSpec spec{1.0, a, 2.0, 0.05, nullptr};
        for (int trial = 0; trial < 5000; ++trial) {
            EmpiricalMeasure mu, mubar;
            mu.points.resize(6);
            mubar.points.resize(6);
            for (auto& p : mu.points) p = 2.0 * rng.normal();
            for (auto& p : mubar.points) p = 2.0 * rng.normal();
            const double x = 4.0 * rng.normal();
            const double y = 4.0 * rng.normal();
            const double w1 = metrics::w1_exact_1d(mu, mubar).value;
            const double lhs =
                (x - y) * (eval_drift(spec, x, mu) - eval_drift(spec, y, mubar));
            const double rhs =
                spec.lambda3 * (std::fabs(x - y) + w1) * std::fabs(x - y);
            CHECK(lhs <= rhs + 1e-12);
        }
    }
}
