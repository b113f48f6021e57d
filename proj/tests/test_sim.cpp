#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mvjd/sim.hpp"

using namespace mvjd;
using namespace mvjd::sim;

namespace {

rates::CouplingScales example_scales(double lambda3 = 0.05) {
    rates::CouplingScales s;
    s.lambda1 = 1.0;
    s.lambda2 = 1.0;
    s.lambda3 = lambda3;
    s.ell0 = 1.0;
    s.sigma = 1.0;
    s.sigma0 = 1.0;
    s.theta = 0.5;
    s.levy = {1.5, 1.0, 0.01, levy::SmallJumpMode::Gaussian};
    s.levy0 = {1.5, 1.0, 0.01, levy::SmallJumpMode::Gaussian};
    return s;
}

rates::CouplingScales silent_scales(double lambda3 = 0.0) {
    auto s = example_scales(lambda3);
    s.levy.c = 0.0;
    s.levy0.c = 0.0;
    return s;
}

SimConfig base_config(const rates::CouplingScales& scales, int n, double horizon) {
    SimConfig cfg;
    cfg.n_particles = n;
    cfg.dt = 1e-2;
    cfg.horizon = horizon;
    cfg.eps = 0.1;
    cfg.scales = scales;
    cfg.drift = {1.0, 0.0, 1.0, scales.lambda3, nullptr};
    cfg.seed = 7;
    cfg.initial = InitialLaw::point(0.0);
    cfg.snapshot_cadence = 0.1;
    return cfg;
}

} // namespace

TEST_CASE("initial law quantiles and parsing") {
    CHECK(InitialLaw::point(2.0).quantile(0.3) == 2.0);
    const auto g = InitialLaw::gaussian(1.0, 2.0);
    CHECK(g.quantile(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.quantile(0.975) == doctest::Approx(1.0 + 2.0 * 1.959963984540054).epsilon(1e-9));
    const auto tp = InitialLaw::two_point(-1.0, 3.0, 0.25);
    CHECK(tp.quantile(0.5) == -1.0);
    CHECK(tp.quantile(0.8) == 3.0);

    const auto parsed = InitialLaw::parse("gaussian:0.5:1.5");
    CHECK(parsed.kind == InitialLawKind::Gaussian);
    CHECK(parsed.p2 == 1.5);
    CHECK(InitialLaw::parse(parsed.to_string()).p2 == 1.5);
    CHECK_THROWS_AS(InitialLaw::parse("triangle:1:2"), std::invalid_argument);
    CHECK_THROWS_AS(InitialLaw::parse("gaussian:1"), std::invalid_argument);
}

TEST_CASE("interacting Euler window") {
    const auto scales = silent_scales();
    model::DriftSpec drift{1.0, 0.0, 1.0, 0.0, nullptr};

    SystemState st{0.0, {1.0}};
    const auto next = step_interacting(st, 0.1, {{}}, {}, {}, 0.0, drift, scales);
    CHECK(next.positions[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(next.time == doctest::Approx(0.1));

    // single common jump shifts every particle, spread unchanged
    model::DriftSpec no_drift{0.0, 0.0, 1.0, 0.0, nullptr};
    SystemState st2{0.0, {-1.0, 0.5, 2.0}};
    const auto next2 =
        step_interacting(st2, 0.1, {{}, {}, {}}, {2.0}, {}, 0.0, no_drift, scales);
    CHECK(next2.positions[0] == doctest::Approx(1.0));
    CHECK(next2.positions[1] == doctest::Approx(2.5));
    CHECK(next2.positions[2] == doctest::Approx(4.0));

    SystemState st3{0.0, {0.0, 2.0}};
    const auto next3 = step_interacting(st3, 0.01, {{}, {}}, {}, {}, 0.0, drift, scales);
    CHECK(next3.positions[0] == doctest::Approx(0.0));
    CHECK(next3.positions[1] == doctest::Approx(1.98).epsilon(1e-15));
}

TEST_CASE("coupled window: reflection arithmetic of the gap") {
    const auto scales = silent_scales();
    model::DriftSpec no_drift{0.0, 0.0, 1.0, 0.0, nullptr};
    const double eps = 0.1;

    // gap 4, idio jump below the threshold |gap|/(2 sigma) = 2: reflected with Pi = -1
    CoupledState st{0.0, {4.0}, {0.0}};
    CoupledDiagnostics diag;
    auto next = step_coupled(st, 0.01, {{0.005, 0, 1.5}}, {}, 0.0, no_drift, scales, eps,
                             &diag);
    CHECK(next.primal[0] == doctest::Approx(5.5));
    CHECK(next.coupled[0] == doctest::Approx(-1.5));
    CHECK(next.gaps()[0] == doctest::Approx(7.0));
    CHECK(diag.reflected_events == 1);
    CHECK(diag.sign_violations == 0);

    next = step_coupled(st, 0.01, {{0.005, 0, -1.5}}, {}, 0.0, no_drift, scales, eps,
                        nullptr);
    CHECK(next.gaps()[0] == doctest::Approx(1.0));

    // jump at or above the threshold: synchronous, gap unchanged
    next = step_coupled(st, 0.01, {{0.005, 0, 3.0}}, {}, 0.0, no_drift, scales, eps,
                        nullptr);
    CHECK(next.primal[0] == doctest::Approx(7.0));
    CHECK(next.coupled[0] == doctest::Approx(3.0));
    CHECK(next.gaps()[0] == doctest::Approx(4.0));

    // coalesced pair: every branch synchronous, gaps stay zero
    CoupledState zero{0.0, {1.0, -2.0}, {1.0, -2.0}};
    next = step_coupled(zero, 0.01, {{0.002, 0, 0.7}, {0.004, -1, 1.3}}, {}, 0.0,
                        no_drift, scales, eps, nullptr);
    CHECK(next.gaps()[0] == 0.0);
    CHECK(next.gaps()[1] == 0.0);
    CHECK(next.primal[0] == next.coupled[0]);
}

TEST_CASE("flow with no noise and point start stays at the fixed point") {
    auto cfg = base_config(silent_scales(), 8, 1.0);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 0);
    const auto traj = simulate_flow(cfg, common, 0, 0);
    for (const auto& snap : traj.snapshots) {
        for (double x : snap) CHECK(x == 0.0);
    }
    CHECK(traj.mean_running_sup.back() == 0.0);
}

TEST_CASE("zero-noise decay follows the deterministic flow") {
    auto cfg = base_config(silent_scales(), 4, 1.0);
    cfg.initial = InitialLaw::point(1.0);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 0);
    const auto traj = simulate_flow(cfg, common, 0, 0);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double steps = std::llround(traj.times[k] / cfg.dt);
        const double euler = std::pow(1.0 - cfg.dt, steps);
        double mean_abs = 0.0;
        for (double x : traj.snapshots[k]) mean_abs += std::fabs(x);
        mean_abs /= 4.0;
        CHECK(mean_abs == doctest::Approx(euler).epsilon(1e-12));
        CHECK(mean_abs == doctest::Approx(std::exp(-traj.times[k])).epsilon(0.01));
    }
}

TEST_CASE("stationary first moment stays below the explicit bound chain") {
    // pure idiosyncratic stable noise, long horizon
    auto cfg = base_config(example_scales(0.05), 64, 20.0);
    cfg.scales.levy0.c = 0.0;  // common noise off
    cfg.initial = InitialLaw::point(0.0);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 11);
    const auto traj = simulate_flow(cfg, common, 11, 0);
    const double bound = rates::moment_bound_estimate(cfg.scales, 0.0, 1.0);
    // second half of the horizon: stabilized below the bound
    for (std::size_t k = traj.times.size() / 2; k < traj.times.size(); ++k) {
        double mean_abs = 0.0;
        for (double x : traj.snapshots[k]) mean_abs += std::fabs(x);
        mean_abs /= static_cast<double>(traj.snapshots[k].size());
        CHECK(mean_abs < bound);
    }
}

TEST_CASE("flow determinism") {
    auto cfg = base_config(example_scales(0.05), 16, 0.5);
    cfg.initial = InitialLaw::gaussian(0.0, 1.0);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 3);
    const auto a = simulate_flow(cfg, common, 3, 0);
    const auto b = simulate_flow(cfg, common, 3, 0);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        for (std::size_t i = 0; i < a.snapshots[k].size(); ++i) {
            CHECK(a.snapshots[k][i] == b.snapshots[k][i]);
        }
    }
}

TEST_CASE("common-noise equivariance of the pure-linear fixture") {
    auto cfg = base_config(example_scales(0.0), 8, 0.5);
    cfg.drift.lambda3 = 0.0;
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 1);
    std::vector<double> x0(8, 0.5);
    std::vector<double> shifted(8, 1.5);
    const auto a = simulate_flow(cfg, common, 1, 0, x0);
    const auto b = simulate_flow(cfg, common, 1, 0, shifted);
    // the shift flows through the Euler drift: c_k = c_0 (1 - kappa dt)^k
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double steps = std::llround(a.times[k] / cfg.dt);
        const double c = std::pow(1.0 - cfg.dt, steps);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(b.snapshots[k][i] - a.snapshots[k][i] == doctest::Approx(c).epsilon(1e-10));
        }
    }
}

TEST_CASE("exchangeability: permuting particles and their substreams") {
    auto cfg = base_config(example_scales(0.05), 6, 0.3);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 2);
    std::vector<double> x0{-1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
    const std::vector<int> perm{3, 0, 5, 1, 4, 2};
    std::vector<double> x0p(6);
    for (int i = 0; i < 6; ++i) x0p[i] = x0[static_cast<std::size_t>(perm[i])];

    const auto a = simulate_flow(cfg, common, 2, 0, x0);
    const auto b = simulate_flow(cfg, common, 2, 0, x0p, perm);
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        for (int i = 0; i < 6; ++i) {
            CHECK(b.snapshots[k][static_cast<std::size_t>(i)] ==
                  a.snapshots[k][static_cast<std::size_t>(perm[i])]);
        }
    }
}

TEST_CASE("coupled run with identical laws stays coalesced") {
    auto cfg = base_config(example_scales(0.05), 8, 0.5);
    cfg.initial = InitialLaw::gaussian(0.0, 1.0);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 4);
    const auto run = simulate_coupled(cfg, cfg.initial, cfg.initial, common, 4);
    for (double g : run.mean_abs_gap) CHECK(g == 0.0);
    CHECK(run.diagnostics.sign_violations == 0);
}

TEST_CASE("saturated cut-off degenerates to the synchronous coupling") {
    // eps far above every gap: Pi = 1, jumps cancel in the gap, and with
    // lambda3 = 0 the gap contracts by the exact Euler drift factor
    auto cfg = base_config(example_scales(0.0), 4, 0.5);
    cfg.eps = 1e6;
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 5);
    const auto run = simulate_coupled(cfg, InitialLaw::point(0.0), InitialLaw::point(2.0),
                                      common, 5);
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        const double steps = std::llround(run.times[k] / cfg.dt);
        CHECK(run.mean_abs_gap[k] ==
              doctest::Approx(2.0 * std::pow(1.0 - cfg.dt, steps)).epsilon(1e-10));
    }
    // the size-threshold branch still fires, but with Pi = 1 it is
    // synchronous in effect and can never flip a gap
    CHECK(run.diagnostics.sign_violations == 0);
}

TEST_CASE("reflected events preserve the gap sign") {
    auto cfg = base_config(example_scales(0.05), 16, 2.0);
    cfg.scales.levy.mode = levy::SmallJumpMode::Drop;
    cfg.scales.levy0.mode = levy::SmallJumpMode::Drop;
    cfg.eps = 1e-3;
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 6);
    const auto run = simulate_coupled(cfg, InitialLaw::point(0.0), InitialLaw::point(2.0),
                                      common, 6);
    CHECK(run.diagnostics.reflected_events > 0);
    CHECK(run.diagnostics.sign_violations == 0);
    CHECK(run.mean_abs_gap.back() < run.mean_abs_gap.front());
}

TEST_CASE("common-noise component: exact superposition under the linear drift") {
    // with an inert interaction the reduced positions x - Q must not depend
    // on the common path at all
    auto cfg = base_config(example_scales(0.0), 8, 0.5);
    cfg.initial = InitialLaw::gaussian(0.0, 1.0);
    const auto common1 = make_common_path(cfg.scales, cfg.horizon, cfg.dt, 999, 0);
    const auto common2 = make_common_path(cfg.scales, cfg.horizon, cfg.dt, 1000, 0);
    const auto a = simulate_flow(cfg, common1, 0, 0);
    const auto b = simulate_flow(cfg, common2, 0, 0);
    CHECK(a.final_common != b.final_common);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(a.snapshots.back()[i] - a.final_common ==
              doctest::Approx(b.snapshots.back()[i] - b.final_common).epsilon(1e-10));
    }

    // a coalesced coupled pair applies the common noise synchronously, so its
    // per-particle component matches the plain-flow scalar
    const auto run = simulate_coupled(cfg, cfg.initial, cfg.initial, common1, 0);
    for (double c : run.final_common_coupled) {
        CHECK(c == doctest::Approx(a.final_common).epsilon(1e-12));
    }
}

TEST_CASE("coupled running sup is stable across the cut-off scale") {
    // the uniform-moment bound is independent of eps: the empirical mean of
    // the per-particle running sup must agree across eps within Monte Carlo
    // resolution
    std::vector<double> levels;
    std::vector<double> spreads;
    for (const double eps : {1e-1, 1e-2, 1e-3}) {
        auto cfg = base_config(example_scales(0.05), 32, 2.0);
        cfg.eps = eps;
        std::vector<double> sups;
        for (std::uint64_t r = 0; r < 12; ++r) {
            const auto common =
                make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, r);
            const auto run = simulate_coupled(cfg, InitialLaw::point(0.0),
                                              InitialLaw::point(2.0), common, r);
            sups.push_back(run.coupled_mean_running_sup.back());
        }
        double m = 0.0, ss = 0.0;
        for (double v : sups) m += v;
        m /= static_cast<double>(sups.size());
        for (double v : sups) ss += (v - m) * (v - m);
        levels.push_back(m);
        spreads.push_back(std::sqrt(ss / (sups.size() - 1.0) / sups.size()));
    }
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        const double se = std::hypot(spreads[i], spreads[i + 1]);
        CHECK(std::fabs(levels[i] - levels[i + 1]) < 4.0 * se);
    }
}

TEST_CASE("blow-up guard raises a structured diagnostic") {
    auto cfg = base_config(silent_scales(), 4, 8.0);
    cfg.drift = {-4.0, 0.0, 1.0, 0.0, nullptr};  // anti-dissipative fixture
    cfg.initial = InitialLaw::point(1e9);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 7);
    CHECK_THROWS_AS(simulate_flow(cfg, common, 7, 0), BlowUpError);
}

TEST_CASE("non-interacting block against the reference approximation") {
    // lambda3 = 0: the measure argument is inert and the paired systems coincide
    auto cfg = base_config(example_scales(0.0), 8, 0.5);
    const auto common = make_common_path(cfg.scales, cfg.horizon, cfg.dt, cfg.seed, 8);
    const auto run = simulate_noninteracting_block(cfg, 8, 64, common, 8);
    for (double d : run.mean_abs_diff) CHECK(d == 0.0);

    // the block serving as its own reference collapses the pair exactly
    auto cfg2 = base_config(example_scales(0.05), 8, 0.5);
    const auto run2 = simulate_noninteracting_block(cfg2, 8, 8, common, 8);
    for (double d : run2.mean_abs_diff) CHECK(d == 0.0);

    CHECK_THROWS_AS(simulate_noninteracting_block(cfg2, 8, 32, common, 8),
                    std::invalid_argument);

    // with interaction on, the drift mismatch produces a nonzero gap
    const auto run3 = simulate_noninteracting_block(cfg2, 8, 64, common, 8);
    CHECK(run3.mean_abs_diff.back() > 0.0);
}

TEST_CASE("sim config validation") {
    auto cfg = base_config(example_scales(), 8, 1.0);
    cfg.dt = 0.05;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("sim.dt"),
                         std::invalid_argument);
    cfg = base_config(example_scales(), 1, 1.0);
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("n_particles"),
                         std::invalid_argument);
    cfg = base_config(example_scales(), 8, 1.0);
    cfg.horizon = 0.1234567;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("horizon"),
                         std::invalid_argument);
}
