#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvjd/levy.hpp"
#include "mvjd/metrics.hpp"
#include "mvjd/model.hpp"
#include "mvjd/rates.hpp"

// Jump-event-by-jump-event time stepping of the interacting system, the
// non-interacting block with a reference-measure drift, and the
// reflection-coupled pair. Within a drift window [t, t+dt): the drift is
// applied with the empirical measure frozen at the window start, then the
// small-jump Gaussian surrogates, then the jump events of (t, t+dt] in time
// order; reflection factors and size thresholds are evaluated at the state
// immediately preceding each event.

namespace mvjd::sim {

struct BlowUpError : std::runtime_error {
    BlowUpError(int particle, double time)
        : std::runtime_error("particle " + std::to_string(particle) +
                             " exceeded the blow-up guard at t = " +
                             std::to_string(time)),
          particle(particle),
          time(time) {}
    int particle;
    double time;
};

inline constexpr double kBlowUpGuard = 1e12;

enum class InitialLawKind { Point, Gaussian, TwoPoint };

struct InitialLaw {
    InitialLawKind kind = InitialLawKind::Point;
    double p1 = 0.0;  // point: x0 | gaussian: mean | two_point: x_lo
    double p2 = 0.0;  // gaussian: sd | two_point: x_hi
    double p3 = 0.0;  // two_point: P(x_hi)

    double quantile(double u) const;

    static InitialLaw point(double x0) { return {InitialLawKind::Point, x0, 0, 0}; }
    static InitialLaw gaussian(double m, double s) {
        return {InitialLawKind::Gaussian, m, s, 0};
    }
    static InitialLaw two_point(double lo, double hi, double p_hi) {
        return {InitialLawKind::TwoPoint, lo, hi, p_hi};
    }
    static InitialLaw parse(const std::string& text);
    std::string to_string() const;
};

struct SimConfig {
    int n_particles = 2;
    double dt = 1e-3;
    double horizon = 1.0;
    double eps = 1e-3;  // coupling cut-off
    rates::CouplingScales scales;
    model::DriftSpec drift;
    std::uint64_t seed = 0;
    InitialLaw initial;
    double snapshot_cadence = 0.05;

    void validate() const;
};

// One common-noise realization: the jump stream of Z^0 plus Gaussian
// surrogate increments aligned to the drift grid (already scaled by
// sqrt(variance_rate * dt); zero in Drop mode). Shared by reference across
// every particle and both coupled copies within a replica.
struct CommonPath {
    levy::JumpStream jumps;
    std::vector<double> surrogate;
    double dt = 0.0;
};

CommonPath make_common_path(const rates::CouplingScales& scales, double horizon,
                            double dt, std::uint64_t seed, std::uint64_t replica);

struct SystemState {
    double time = 0.0;
    std::vector<double> positions;
};

struct CoupledState {
    double time = 0.0;
    std::vector<double> primal;   // X^i of the coupled pair
    std::vector<double> coupled;  // X^{i,n,eps}

    std::vector<double> gaps() const;  // derived, never stored
    double mean_abs_gap() const;
};

// A jump event inside one drift window; particle < 0 marks a common jump.
struct TimedEvent {
    double time = 0.0;
    int particle = -1;
    double size = 0.0;
};

struct CoupledDiagnostics {
    long long reflected_events = 0;
    long long synchronous_events = 0;
    long long mixed_common_events = 0;  // one common jump, branches disagree
    long long sign_violations = 0;      // gap sign flips on a reflected jump
};

// Single Euler window of the interacting system. idio_surrogate entries and
// common_surrogate are Gaussian increments before noise-coefficient scaling.
SystemState step_interacting(const SystemState& state, double dt,
                             const std::vector<std::vector<double>>& idio_jump_sizes,
                             const std::vector<double>& common_jump_sizes,
                             const std::vector<double>& idio_surrogate,
                             double common_surrogate, const model::DriftSpec& drift,
                             const rates::CouplingScales& scales);

// Single window of the coupled pair; events must be time-sorted. When
// common_component is given (one entry per particle) it accumulates the
// coupled copy's common-noise input under the linear drift part.
CoupledState step_coupled(const CoupledState& state, double dt,
                          const std::vector<TimedEvent>& events,
                          const std::vector<double>& idio_surrogate,
                          double common_surrogate, const model::DriftSpec& drift,
                          const rates::CouplingScales& scales, double eps,
                          CoupledDiagnostics* diag = nullptr,
                          std::vector<double>* common_component = nullptr);

// Interacting system over the full horizon; snapshots on the configured
// cadence. An empty x0 is sampled from cfg.initial on the (replica,
// system_id) substream. stream_index remaps particle slots to substream
// indices (identity when empty); permuting it together with x0 permutes the
// output positions.
metrics::Trajectory simulate_flow(const SimConfig& cfg, const CommonPath& common,
                                  std::uint64_t replica, std::uint64_t system_id,
                                  std::vector<double> x0 = {},
                                  const std::vector<int>& stream_index = {});

struct CoupledRun {
    std::vector<double> times;
    std::vector<double> mean_abs_gap;
    std::vector<double> coupled_mean_running_sup;
    std::vector<std::vector<double>> coupled_snapshots;  // filled on request
    CoupledDiagnostics diagnostics;
    CoupledState final_state;
    // per-particle common-noise component of the coupled copy at the final
    // time (the reflection makes it particle-dependent); exact for a = 0
    std::vector<double> final_common_coupled;
};

// Reflection-coupled pair sharing idiosyncratic streams; initial pairs are
// drawn from the comonotone (quantile) coupling of the two laws, which
// attains W1 in one dimension.
CoupledRun simulate_coupled(const SimConfig& cfg, const InitialLaw& primal_law,
                            const InitialLaw& coupled_law, const CommonPath& common,
                            std::uint64_t replica,
                            bool record_coupled_snapshots = false);

struct NonintRun {
    std::vector<double> times;
    std::vector<double> mean_abs_diff;  // mean over i of |X_t^i - X_t^{i,n}|
    // empirical drift-measure gap lambda3 |int g dmu_ref - int g dmu_block|,
    // the estimable face of the mean-field approximation term phi(n)
    std::vector<double> phi_gap;
};

// Pairs the non-interacting block (drift against the empirical measure of an
// independent reference block of size n_ref on the same common path) with
// the interacting block of the same particles: same idiosyncratic streams,
// same initial points. With n == n_ref the block itself serves as the
// reference, which collapses the two systems.
NonintRun simulate_noninteracting_block(const SimConfig& cfg, int n, int n_ref,
                                        const CommonPath& common,
                                        std::uint64_t replica);

} // namespace mvjd::sim
