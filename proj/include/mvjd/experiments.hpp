#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvjd/config.hpp"
#include "mvjd/model_audit.hpp"
#include "mvjd/stats.hpp"

namespace mvjd::exp {

// Replica-parallel fan-out with a deterministic reduce: fn(replica) writes
// into replica-indexed slots, so results are independent of worker count.
void parallel_replicas(int threads, int n_replicas, const std::function<void(int)>& fn);

// Per-time-point mean and standard error of per-replica series.
struct ReplicaSeries {
    std::vector<double> times;
    std::vector<std::vector<double>> per_replica;  // [replica][time index]
    std::vector<double> mean;
    std::vector<double> stderr_;

    void finalize();  // fills mean / stderr from per_replica
};

struct DecayFit {
    double rate = 0.0;          // -slope of log mean over the fit window
    stats::Interval rate_ci;    // bootstrap 95% percentile interval
    double floor = 0.0;         // median of the mean series over the last quarter
    double mk_z = 0.0;          // Mann-Kendall trend score over the fit window
    int window_begin = 0;
    int window_end = 0;  // exclusive
    bool degenerate = false;    // fit window too short (floor reached immediately)
};

// OLS on log mean over the window where the signal exceeds 3x its Monte
// Carlo floor, after burn-in; the rate uncertainty is a percentile bootstrap
// over replicas. The floor is a single plateau level by default; a
// time-resolved floor series (from an identical-laws control) makes the
// window test pointwise in time, which matters when the floor grows from 0
// on the simulation timescale.
DecayFit fit_decay(const ReplicaSeries& series, double burn_in, std::uint64_t seed,
                   const std::vector<double>& floor_series = {});

struct RatesOutcome {
    rates::RateReport report;
    double quad_Lambda1 = 0.0;  // quadrature-route cross-check
    double quad_Lambda2 = 0.0;
    double quad_rel_err = 0.0;
};

struct ContractionOutcome {
    ReplicaSeries w1;       // outer-W1 series (synchronous common-noise estimator)
    ReplicaSeries control;  // identical-laws pair: the estimator's MC floor
    DecayFit fit;
};

struct PocOutcome {
    std::vector<int> ns;
    std::vector<double> mean_diff;          // E|X^i - X^{i,n}| at t_eval
    std::vector<stats::Interval> ci;        // bootstrap 95%
    std::vector<double> mean_phi;           // empirical phi(n) drift-measure gap
    std::vector<stats::Interval> phi_ci;
    bool strictly_decreasing = false;
    bool end_cis_disjoint = false;          // smallest vs largest n
};

// Positions are centered by their replica mean before pooling: for the
// linear drift family the common-noise and interaction components are exact
// within-replica common shifts, so centering removes them and the pooled
// two-sample KS is calibrated; what remains under test is precisely the
// coupling's distortion of the per-particle structure.
struct MarginalOutcome {
    double ks = 0.0;
    double critical = 0.0;  // 1.628 / sqrt(m), m = per-side pooled count
    std::size_t pooled_m = 0;
    bool pass = false;
    std::optional<double> control_ks;  // plain-vs-plain calibration control
};

struct CoupledDecayOutcome {
    ReplicaSeries gap;  // mean |Z_t| per replica
    DecayFit fit;
    sim::CoupledDiagnostics diagnostics;  // summed across replicas
};

struct SfpePhiOutcome {
    double center = 0.0;
    double mean = 0.0;
    double stderr_ = 0.0;
    double standardized = 0.0;
};

struct SfpeOutcome {
    std::vector<SfpePhiOutcome> per_phi;
};

struct MomentsOutcome {
    ReplicaSeries mean_abs;
    ReplicaSeries mean_sup;
    double mk_z_tail = 0.0;    // trend score over the second half
    double max_mean_abs = 0.0;
    double value_near_t5 = 0.0;
    double bound_estimate = 0.0;  // explicit first-moment bound chain
};

struct AuditOutcome {
    model::H1AuditReport h1;
    model::H2AuditReport h2;
    bool pass = false;
};

RatesOutcome run_rates(const ExperimentConfig& cfg);
AuditOutcome run_audit(const ExperimentConfig& cfg);
ContractionOutcome run_contraction(const ExperimentConfig& cfg);
PocOutcome run_poc(const ExperimentConfig& cfg);
MarginalOutcome run_marginal(const ExperimentConfig& cfg);
CoupledDecayOutcome run_coupled_decay(const ExperimentConfig& cfg);
SfpeOutcome run_sfpe(const ExperimentConfig& cfg);
MomentsOutcome run_moments(const ExperimentConfig& cfg);

// Pass/fail conditions shared by the CLI exit code and the acceptance suite.
struct CheckResult {
    bool pass = false;
    std::string detail;
};

CheckResult check_rates(const RatesOutcome& o, const ExperimentConfig& cfg);
CheckResult check_audit(const AuditOutcome& o);
// decreasing after burn-in and fitted rate >= lambda0 minus the bootstrap
// 95% half-width (one-sided: the theorem gives an upper envelope)
CheckResult check_contraction(const ContractionOutcome& o, const ExperimentConfig& cfg);
CheckResult check_poc(const PocOutcome& o);
CheckResult check_marginal(const MarginalOutcome& o);
// adds the floor <= 0.05 condition and the zero-sign-violation counter
CheckResult check_coupled_decay(const CoupledDecayOutcome& o, const ExperimentConfig& cfg);
CheckResult check_sfpe(const SfpeOutcome& o);
CheckResult check_moments(const MomentsOutcome& o);

} // namespace mvjd::exp
