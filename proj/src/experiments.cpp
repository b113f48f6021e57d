#include "mvjd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "mvjd/metrics.hpp"
#include "mvjd/output.hpp"
#include "mvjd/sim.hpp"

namespace mvjd::exp {

void parallel_replicas(int threads, int n_replicas, const std::function<void(int)>& fn) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads = std::min(threads, n_replicas);
    if (threads <= 1) {
        for (int r = 0; r < n_replicas; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= n_replicas) return;
            try {
                fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void ReplicaSeries::finalize() {
    const std::size_t nt = times.size();
    mean.assign(nt, 0.0);
    stderr_.assign(nt, 0.0);
    const std::size_t nr = per_replica.size();
    for (std::size_t k = 0; k < nt; ++k) {
        double m = 0.0;
        for (const auto& rep : per_replica) m += rep[k];
        m /= static_cast<double>(nr);
        mean[k] = m;
        if (nr >= 2) {
            double ss = 0.0;
            for (const auto& rep : per_replica) ss += (rep[k] - m) * (rep[k] - m);
            stderr_[k] = std::sqrt(ss / static_cast<double>(nr - 1)) /
                         std::sqrt(static_cast<double>(nr));
        }
    }
}

DecayFit fit_decay(const ReplicaSeries& series, double burn_in, std::uint64_t seed,
                   const std::vector<double>& floor_series) {
    DecayFit fit;
    const std::size_t nt = series.times.size();
    if (nt < 4 || series.mean.size() != nt) {
        fit.degenerate = true;
        return fit;
    }
    if (!floor_series.empty() && floor_series.size() != nt) {
        throw std::invalid_argument("fit_decay: floor series length mismatch");
    }
    // Reported Monte Carlo floor: heavy-tail excursions inflate the late-time
    // mean, so the plateau level is the median over replicas and over the
    // last quarter of the horizon (of the control when one is supplied).
    std::vector<double> tail;
    if (floor_series.empty()) {
        for (std::size_t k = 3 * nt / 4; k < nt; ++k) {
            for (const auto& rep : series.per_replica) tail.push_back(rep[k]);
        }
    } else {
        tail.assign(floor_series.begin() + static_cast<long>(3 * nt / 4),
                    floor_series.end());
    }
    std::sort(tail.begin(), tail.end());
    fit.floor = tail[tail.size() / 2];

    std::size_t b = 0;
    while (b < nt && series.times[b] < burn_in - 1e-12) ++b;
    // contiguous stretch where the mean exceeds 3x the floor; the fit stops
    // at the first crossing so the floor regime never enters the regression
    std::size_t e = b;
    while (e < nt && series.mean[e] > 0.0 &&
           series.mean[e] >
               3.0 * (floor_series.empty() ? fit.floor : floor_series[e])) {
        ++e;
    }
    fit.window_begin = static_cast<int>(b);
    fit.window_end = static_cast<int>(e);
    // trend score over the whole post-burn-in series, not just the fit window
    if (nt - b >= 3) {
        fit.mk_z =
            stats::mann_kendall(std::span<const double>(series.mean).subspan(b, nt - b)).z;
    }
    if (e - b < 6) {
        fit.degenerate = true;
        return fit;
    }
    std::vector<double> ts(series.times.begin() + static_cast<long>(b),
                           series.times.begin() + static_cast<long>(e));
    std::vector<double> logs(e - b);
    for (std::size_t k = b; k < e; ++k) logs[k - b] = std::log(series.mean[k]);
    fit.rate = -stats::ols_slope(ts, logs);

    const int nr = static_cast<int>(series.per_replica.size());
    if (nr >= 2) {
        fit.rate_ci = stats::bootstrap_percentile(
            nr, 400, 0.95,
            [&](std::span<const int> idx) {
                std::vector<double> lg(e - b);
                for (std::size_t k = b; k < e; ++k) {
                    double m = 0.0;
                    for (int r : idx) m += series.per_replica[static_cast<std::size_t>(r)][k];
                    m /= static_cast<double>(idx.size());
                    lg[k - b] = std::log(std::max(m, 1e-300));
                }
                return -stats::ols_slope(ts, lg);
            },
            seed);
    } else {
        fit.rate_ci = {fit.rate, fit.rate};
    }
    return fit;
}

namespace {

std::vector<CsvRow> series_rows(const ReplicaSeries& series, const std::string& metric) {
    std::vector<CsvRow> rows;
    rows.reserve(series.times.size() * (series.per_replica.size() + 2));
    for (std::size_t r = 0; r < series.per_replica.size(); ++r) {
        for (std::size_t k = 0; k < series.times.size(); ++k) {
            rows.push_back({series.times[k], static_cast<long long>(r), metric,
                            series.per_replica[r][k]});
        }
    }
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        rows.push_back({series.times[k], -1, metric + "_mean", series.mean[k]});
        rows.push_back({series.times[k], -1, metric + "_stderr", series.stderr_[k]});
    }
    return rows;
}

std::vector<double> comonotone_uniforms(const ExperimentConfig& cfg, int replica, int n) {
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream_key(cfg.seed, static_cast<std::uint64_t>(replica),
                                  StreamRole::Initial, 0, static_cast<std::uint64_t>(i)));
        u[static_cast<std::size_t>(i)] = rng.uniform();
    }
    return u;
}

} // namespace

RatesOutcome run_rates(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    RatesOutcome outcome;
    outcome.report = rates::contraction_rates(cfg.scales);
    outcome.quad_Lambda1 = rates::g_star_quadrature(cfg.scales, 2.0 * cfg.scales.ell0);
    outcome.quad_Lambda2 = rates::g_star_quadrature(cfg.scales, cfg.scales.ell0);
    const double d1 = std::fabs(outcome.quad_Lambda1 - outcome.report.Lambda1);
    const double d2 = std::fabs(outcome.quad_Lambda2 - outcome.report.Lambda2);
    const double scale = std::max(1e-300, std::fabs(outcome.report.Lambda1));
    outcome.quad_rel_err = std::max(d1, d2) / scale;

    const auto& rep = outcome.report;
    out.write_rows("rates.csv",
                   {{0, -1, "C1", rep.C1},
                    {0, -1, "Lambda1", rep.Lambda1},
                    {0, -1, "Lambda2", rep.Lambda2},
                    {0, -1, "lambda_star", rep.lambda_star},
                    {0, -1, "lambda0", rep.lambda0},
                    {0, -1, "lambda3_max", rep.lambda3_max},
                    {0, -1, "contraction_ok", rep.contraction_ok ? 1.0 : 0.0},
                    {0, -1, "degenerate", rep.degenerate ? 1.0 : 0.0},
                    {0, -1, "quad_rel_err", outcome.quad_rel_err}});
    out.finish();
    return outcome;
}

AuditOutcome run_audit(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    AuditOutcome outcome;
    outcome.h1 = model::audit_h1(cfg.drift, cfg.scales.ell0, cfg.scales.lambda1,
                                 cfg.scales.lambda2, cfg.audit_pairs, cfg.audit_box,
                                 cfg.seed);
    outcome.h2 = model::audit_h2(cfg.drift, cfg.audit_trials, cfg.seed);
    outcome.pass = outcome.h1.pass && outcome.h2.pass;
    out.write_rows("audit.csv",
                   {{0, -1, "h1_max_excess", outcome.h1.max_excess},
                    {0, -1, "h1_pass", outcome.h1.pass ? 1.0 : 0.0},
                    {0, -1, "h1_witness_x", outcome.h1.witness_x},
                    {0, -1, "h1_witness_y", outcome.h1.witness_y},
                    {0, -1, "h2_max_ratio", outcome.h2.max_ratio},
                    {0, -1, "h2_pass", outcome.h2.pass ? 1.0 : 0.0}});
    out.finish();
    return outcome;
}

ContractionOutcome run_contraction(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    ContractionOutcome outcome;
    const int R = cfg.replicas;
    outcome.w1.per_replica.assign(static_cast<std::size_t>(R), {});
    outcome.control.per_replica.assign(static_cast<std::size_t>(R), {});

    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        const int n = cfg.n_particles;
        const auto u = comonotone_uniforms(cfg, r, n);
        std::vector<double> x0a(u.size()), x0b(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            x0a[i] = cfg.initial.quantile(u[i]);
            x0b[i] = cfg.initial2.quantile(u[i]);
        }
        const auto sc = cfg.sim_config();
        const auto ta = sim::simulate_flow(sc, common, static_cast<std::uint64_t>(r), 0,
                                           std::move(x0a));
        const auto tb = sim::simulate_flow(sc, common, static_cast<std::uint64_t>(r), 1,
                                           std::move(x0b));
        // identical-laws control pair on the same common path: measures the
        // estimator's Monte Carlo floor as a function of time
        const auto tc = sim::simulate_flow(sc, common, static_cast<std::uint64_t>(r), 2);
        const auto td = sim::simulate_flow(sc, common, static_cast<std::uint64_t>(r), 3);
        std::vector<double> w1(ta.times.size());
        std::vector<double> ctrl(ta.times.size());
        model::EmpiricalMeasure ma, mb;
        for (std::size_t k = 0; k < ta.times.size(); ++k) {
            ma.points = ta.snapshots[k];
            mb.points = tb.snapshots[k];
            w1[k] = metrics::w1_exact_1d(ma, mb).value;
            ma.points = tc.snapshots[k];
            mb.points = td.snapshots[k];
            ctrl[k] = metrics::w1_exact_1d(ma, mb).value;
        }
        outcome.w1.per_replica[static_cast<std::size_t>(r)] = std::move(w1);
        outcome.control.per_replica[static_cast<std::size_t>(r)] = std::move(ctrl);
        if (r == 0) {
            outcome.w1.times = ta.times;
            outcome.control.times = ta.times;
        }
    });

    outcome.w1.finalize();
    outcome.control.finalize();
    // floor series: per-time median across control replicas (the control mean
    // is inflated by heavy-tail W1 excursions and would truncate the window)
    std::vector<double> floor_series(outcome.control.times.size());
    {
        std::vector<double> column(static_cast<std::size_t>(R));
        for (std::size_t k = 0; k < floor_series.size(); ++k) {
            for (int r = 0; r < R; ++r) {
                column[static_cast<std::size_t>(r)] =
                    outcome.control.per_replica[static_cast<std::size_t>(r)][k];
            }
            std::nth_element(column.begin(), column.begin() + R / 2, column.end());
            floor_series[k] = column[static_cast<std::size_t>(R / 2)];
        }
    }
    outcome.fit = fit_decay(outcome.w1, cfg.fit_burn_in, cfg.seed, floor_series);
    // labelled as an upper bound: the estimator averages the inner W1 under
    // the synchronous common-noise coupling
    out.write_rows("w1_series.csv", series_rows(outcome.w1, "w1_upper"));
    out.write_rows("w1_floor.csv", series_rows(outcome.control, "w1_floor"));
    out.write_rows("summary.csv",
                   {{cfg.horizon, -1, "fit_rate", outcome.fit.rate},
                    {cfg.horizon, -1, "fit_rate_ci_lo", outcome.fit.rate_ci.lo},
                    {cfg.horizon, -1, "fit_rate_ci_hi", outcome.fit.rate_ci.hi},
                    {cfg.horizon, -1, "floor", outcome.fit.floor},
                    {cfg.horizon, -1, "mk_z", outcome.fit.mk_z},
                    {cfg.horizon, -1, "degenerate_fit", outcome.fit.degenerate ? 1.0 : 0.0}});
    out.finish();
    return outcome;
}

PocOutcome run_poc(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    PocOutcome outcome;
    outcome.ns = cfg.n_grid;
    const int R = cfg.replicas;
    const std::size_t ng = cfg.n_grid.size();
    std::vector<std::vector<double>> diffs(ng,
                                           std::vector<double>(static_cast<std::size_t>(R)));
    std::vector<std::vector<double>> phis(ng,
                                          std::vector<double>(static_cast<std::size_t>(R)));

    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        const auto sc = cfg.sim_config();
        for (std::size_t j = 0; j < ng; ++j) {
            const auto run = sim::simulate_noninteracting_block(
                sc, cfg.n_grid[j], cfg.n_ref, common, static_cast<std::uint64_t>(r));
            std::size_t best = 0;
            for (std::size_t k = 1; k < run.times.size(); ++k) {
                if (std::fabs(run.times[k] - cfg.t_eval) <
                    std::fabs(run.times[best] - cfg.t_eval)) {
                    best = k;
                }
            }
            diffs[j][static_cast<std::size_t>(r)] = run.mean_abs_diff[best];
            phis[j][static_cast<std::size_t>(r)] = run.phi_gap[best];
        }
    });

    auto bootstrap_mean = [&](const std::vector<double>& values, std::uint64_t salt) {
        return R >= 2 ? stats::bootstrap_percentile(
                            R, 1000, 0.95,
                            [&](std::span<const int> idx) {
                                double m = 0.0;
                                for (int i : idx) m += values[static_cast<std::size_t>(i)];
                                return m / static_cast<double>(idx.size());
                            },
                            cfg.seed + salt)
                      : stats::Interval{values[0], values[0]};
    };

    std::vector<CsvRow> rows;
    for (std::size_t j = 0; j < ng; ++j) {
        outcome.mean_diff.push_back(stats::mean(diffs[j]));
        outcome.ci.push_back(bootstrap_mean(diffs[j], j));
        outcome.mean_phi.push_back(stats::mean(phis[j]));
        outcome.phi_ci.push_back(bootstrap_mean(phis[j], 100 + j));
        const std::string metric = "absdiff_n" + std::to_string(cfg.n_grid[j]);
        const std::string phi_metric = "phi_n" + std::to_string(cfg.n_grid[j]);
        for (int r = 0; r < R; ++r) {
            rows.push_back({cfg.t_eval, r, metric, diffs[j][static_cast<std::size_t>(r)]});
            rows.push_back({cfg.t_eval, r, phi_metric, phis[j][static_cast<std::size_t>(r)]});
        }
        rows.push_back({cfg.t_eval, -1, metric + "_mean", outcome.mean_diff[j]});
        rows.push_back({cfg.t_eval, -1, metric + "_ci_lo", outcome.ci[j].lo});
        rows.push_back({cfg.t_eval, -1, metric + "_ci_hi", outcome.ci[j].hi});
        rows.push_back({cfg.t_eval, -1, phi_metric + "_mean", outcome.mean_phi[j]});
        rows.push_back({cfg.t_eval, -1, phi_metric + "_ci_lo", outcome.phi_ci[j].lo});
        rows.push_back({cfg.t_eval, -1, phi_metric + "_ci_hi", outcome.phi_ci[j].hi});
    }
    outcome.strictly_decreasing = true;
    for (std::size_t j = 0; j + 1 < ng; ++j) {
        if (!(outcome.mean_diff[j] > outcome.mean_diff[j + 1])) {
            outcome.strictly_decreasing = false;
        }
    }
    outcome.end_cis_disjoint = ng >= 2 && outcome.ci.front().lo > outcome.ci.back().hi;
    out.write_rows("poc.csv", rows);
    out.finish();
    return outcome;
}

MarginalOutcome run_marginal(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    MarginalOutcome outcome;
    const int R = cfg.replicas;
    const int n = cfg.n_particles;
    std::vector<std::vector<double>> coupled(static_cast<std::size_t>(R));
    std::vector<std::vector<double>> plain(static_cast<std::size_t>(R));
    std::vector<std::vector<double>> control(static_cast<std::size_t>(R));

    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        const auto sc = cfg.sim_config();
        // The reflection legitimately relabels the common noise (symmetric
        // measure), so the coupled copy's common-noise component is removed
        // exactly per particle before pooling; what remains under test is the
        // coupling's effect on the per-particle structure. Exact for the
        // linear drift part (a = 0 in the preset).
        const auto run = sim::simulate_coupled(sc, cfg.initial, cfg.initial2, common,
                                               static_cast<std::uint64_t>(r));
        auto& a = coupled[static_cast<std::size_t>(r)];
        a = run.final_state.coupled;
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= run.final_common_coupled[i];

        auto sc_plain = sc;
        sc_plain.initial = cfg.initial2;
        const auto tp = sim::simulate_flow(sc_plain, common, static_cast<std::uint64_t>(r), 3);
        auto& b = plain[static_cast<std::size_t>(r)];
        b = tp.snapshots.back();
        for (auto& x : b) x -= tp.final_common;
        if (cfg.marginal_control) {
            const auto tc =
                sim::simulate_flow(sc_plain, common, static_cast<std::uint64_t>(r), 4);
            auto& c = control[static_cast<std::size_t>(r)];
            c = tc.snapshots.back();
            for (auto& x : c) x -= tc.final_common;
        }
    });

    auto pool_blocks = [](const std::vector<std::vector<double>>& blocks) {
        std::vector<double> pool;
        for (const auto& block : blocks) pool.insert(pool.end(), block.begin(), block.end());
        return pool;
    };
    const std::vector<double> pool_a = pool_blocks(coupled);
    const std::vector<double> pool_b = pool_blocks(plain);
    const std::vector<double> pool_c =
        cfg.marginal_control ? pool_blocks(control) : std::vector<double>{};
    outcome.pooled_m = std::min(pool_a.size(), pool_b.size());
    outcome.ks = metrics::ks_statistic(pool_a, pool_b);
    outcome.critical = 1.628 / std::sqrt(static_cast<double>(outcome.pooled_m));
    outcome.pass = outcome.ks < outcome.critical;
    if (cfg.marginal_control) {
        outcome.control_ks = metrics::ks_statistic(pool_c, pool_b);
    }

    std::vector<CsvRow> rows = {{cfg.horizon, -1, "ks", outcome.ks},
                                {cfg.horizon, -1, "ks_critical", outcome.critical},
                                {cfg.horizon, -1, "pooled_m",
                                 static_cast<double>(outcome.pooled_m)},
                                {cfg.horizon, -1, "pass", outcome.pass ? 1.0 : 0.0}};
    if (outcome.control_ks) {
        rows.push_back({cfg.horizon, -1, "control_ks", *outcome.control_ks});
    }
    out.write_rows("marginal.csv", rows);
    std::vector<CsvRow> samples;
    samples.reserve(pool_a.size() + pool_b.size());
    for (int r = 0; r < R; ++r) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
            samples.push_back({cfg.horizon, r, "coupled_centered",
                               pool_a[static_cast<std::size_t>(r) * n + i]});
            samples.push_back({cfg.horizon, r, "plain_centered",
                               pool_b[static_cast<std::size_t>(r) * n + i]});
        }
    }
    out.write_rows("marginal_samples.csv", samples);
    out.finish();
    return outcome;
}

CoupledDecayOutcome run_coupled_decay(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    CoupledDecayOutcome outcome;
    const int R = cfg.replicas;
    outcome.gap.per_replica.assign(static_cast<std::size_t>(R), {});
    std::vector<sim::CoupledDiagnostics> diags(static_cast<std::size_t>(R));

    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        const auto sc = cfg.sim_config();
        auto run = sim::simulate_coupled(sc, cfg.initial, cfg.initial2, common,
                                         static_cast<std::uint64_t>(r));
        outcome.gap.per_replica[static_cast<std::size_t>(r)] = std::move(run.mean_abs_gap);
        diags[static_cast<std::size_t>(r)] = run.diagnostics;
        if (r == 0) outcome.gap.times = run.times;
    });

    for (const auto& d : diags) {
        outcome.diagnostics.reflected_events += d.reflected_events;
        outcome.diagnostics.synchronous_events += d.synchronous_events;
        outcome.diagnostics.mixed_common_events += d.mixed_common_events;
        outcome.diagnostics.sign_violations += d.sign_violations;
    }
    outcome.gap.finalize();
    outcome.fit = fit_decay(outcome.gap, cfg.fit_burn_in, cfg.seed);
    out.write_rows("gap_series.csv", series_rows(outcome.gap, "gap"));
    out.write_rows(
        "summary.csv",
        {{cfg.horizon, -1, "fit_rate", outcome.fit.rate},
         {cfg.horizon, -1, "fit_rate_ci_lo", outcome.fit.rate_ci.lo},
         {cfg.horizon, -1, "fit_rate_ci_hi", outcome.fit.rate_ci.hi},
         {cfg.horizon, -1, "floor", outcome.fit.floor},
         {cfg.horizon, -1, "mk_z", outcome.fit.mk_z},
         {cfg.horizon, -1, "reflected_events",
          static_cast<double>(outcome.diagnostics.reflected_events)},
         {cfg.horizon, -1, "synchronous_events",
          static_cast<double>(outcome.diagnostics.synchronous_events)},
         {cfg.horizon, -1, "mixed_common_events",
          static_cast<double>(outcome.diagnostics.mixed_common_events)},
         {cfg.horizon, -1, "sign_violations",
          static_cast<double>(outcome.diagnostics.sign_violations)}});
    out.finish();
    return outcome;
}

SfpeOutcome run_sfpe(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    SfpeOutcome outcome;
    const int R = cfg.replicas;
    const std::size_t np = cfg.sfpe_centers.size();

    std::vector<metrics::SfpeEvaluator> evaluators;
    evaluators.reserve(np);
    for (double center : cfg.sfpe_centers) {
        evaluators.emplace_back(metrics::TestFunction{center, cfg.sfpe_width, 1.0},
                                cfg.drift, cfg.scales);
    }

    std::vector<std::vector<double>> sums(np, std::vector<double>(static_cast<std::size_t>(R)));
    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        auto sc = cfg.sim_config();
        sc.snapshot_cadence = cfg.dt;  // residuals need every drift step
        const auto traj = sim::simulate_flow(sc, common, static_cast<std::uint64_t>(r), 0);
        for (std::size_t p = 0; p < np; ++p) {
            const auto res = evaluators[p].residuals(traj);
            double sum = 0.0;
            for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
                if (traj.times[k] >= cfg.sfpe_t0 - 1e-12 &&
                    traj.times[k + 1] <= cfg.sfpe_t0 + cfg.sfpe_window + 1e-12) {
                    sum += res[k];
                }
            }
            sums[p][static_cast<std::size_t>(r)] = sum;
        }
    });

    std::vector<CsvRow> rows;
    for (std::size_t p = 0; p < np; ++p) {
        SfpePhiOutcome phi;
        phi.center = cfg.sfpe_centers[p];
        phi.mean = stats::mean(sums[p]);
        phi.stderr_ = R >= 2 ? stats::standard_error(sums[p]) : 0.0;
        phi.standardized = phi.stderr_ > 0.0 ? phi.mean / phi.stderr_ : 0.0;
        outcome.per_phi.push_back(phi);
        const std::string metric = "residual_c" + std::to_string(phi.center);
        for (int r = 0; r < R; ++r) {
            rows.push_back({cfg.sfpe_t0 + cfg.sfpe_window, r, metric,
                            sums[p][static_cast<std::size_t>(r)]});
        }
        rows.push_back({cfg.sfpe_t0 + cfg.sfpe_window, -1, metric + "_standardized",
                        phi.standardized});
    }
    out.write_rows("sfpe.csv", rows);
    out.finish();
    return outcome;
}

MomentsOutcome run_moments(const ExperimentConfig& cfg) {
    ExperimentOutput out(cfg);
    MomentsOutcome outcome;
    const int R = cfg.replicas;
    outcome.mean_abs.per_replica.assign(static_cast<std::size_t>(R), {});
    outcome.mean_sup.per_replica.assign(static_cast<std::size_t>(R), {});

    parallel_replicas(cfg.threads, R, [&](int r) {
        const auto common = sim::make_common_path(cfg.scales, cfg.horizon, cfg.dt,
                                                  cfg.seed, static_cast<std::uint64_t>(r));
        const auto traj = sim::simulate_flow(cfg.sim_config(), common,
                                             static_cast<std::uint64_t>(r), 0);
        const auto ms = metrics::moment_track(traj);
        outcome.mean_abs.per_replica[static_cast<std::size_t>(r)] = ms.mean_abs;
        outcome.mean_sup.per_replica[static_cast<std::size_t>(r)] = ms.mean_sup;
        if (r == 0) {
            outcome.mean_abs.times = ms.times;
            outcome.mean_sup.times = ms.times;
        }
    });

    outcome.mean_abs.finalize();
    outcome.mean_sup.finalize();

    std::size_t half = 0;
    std::size_t near_t5 = 0;
    for (std::size_t k = 0; k < outcome.mean_abs.times.size(); ++k) {
        if (outcome.mean_abs.times[k] < 0.5 * cfg.horizon - 1e-12) half = k + 1;
        if (std::fabs(outcome.mean_abs.times[k] - 5.0) <
            std::fabs(outcome.mean_abs.times[near_t5] - 5.0)) {
            near_t5 = k;
        }
    }
    const std::size_t nt = outcome.mean_abs.times.size();
    if (nt - half >= 3) {
        outcome.mk_z_tail =
            stats::mann_kendall(
                std::span<const double>(outcome.mean_abs.mean).subspan(half, nt - half))
                .z;
    }
    outcome.max_mean_abs =
        *std::max_element(outcome.mean_abs.mean.begin(), outcome.mean_abs.mean.end());
    outcome.value_near_t5 = outcome.mean_abs.mean[near_t5];

    double mean_abs_x0 = 0.0;
    switch (cfg.initial.kind) {
        case sim::InitialLawKind::Point:
            mean_abs_x0 = std::fabs(cfg.initial.p1);
            break;
        case sim::InitialLawKind::Gaussian: {
            const double m = cfg.initial.p1;
            const double s = cfg.initial.p2;
            mean_abs_x0 = s * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2.0 * s * s)) +
                          std::fabs(m) * std::erf(std::fabs(m) / (s * std::sqrt(2.0)));
            break;
        }
        case sim::InitialLawKind::TwoPoint:
            mean_abs_x0 = (1.0 - cfg.initial.p3) * std::fabs(cfg.initial.p1) +
                          cfg.initial.p3 * std::fabs(cfg.initial.p2);
            break;
    }
    if (cfg.scales.lambda2 > cfg.scales.lambda3) {
        outcome.bound_estimate = rates::moment_bound_estimate(
            cfg.scales, std::fabs(cfg.drift.base(0.0)), 1.0 + mean_abs_x0);
    } else {
        outcome.bound_estimate = std::numeric_limits<double>::infinity();
    }

    auto rows = series_rows(outcome.mean_abs, "mean_abs");
    const auto sup_rows = series_rows(outcome.mean_sup, "mean_sup");
    rows.insert(rows.end(), sup_rows.begin(), sup_rows.end());
    out.write_rows("moments.csv", rows);
    out.write_rows("summary.csv",
                   {{cfg.horizon, -1, "mk_z_tail", outcome.mk_z_tail},
                    {cfg.horizon, -1, "max_mean_abs", outcome.max_mean_abs},
                    {cfg.horizon, -1, "value_near_t5", outcome.value_near_t5},
                    {cfg.horizon, -1, "bound_estimate", outcome.bound_estimate}});
    out.finish();
    return outcome;
}

} // namespace mvjd::exp
