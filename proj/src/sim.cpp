#include "mvjd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvjd::sim {

double InitialLaw::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("InitialLaw::quantile: u must lie in [0,1]");
    }
    switch (kind) {
        case InitialLawKind::Point:
            return p1;
        case InitialLawKind::Gaussian:
            if (u == 0.0) u = 1e-16;
            if (u == 1.0) u = 1.0 - 1e-16;
            return p1 + p2 * normal_quantile(u);
        case InitialLawKind::TwoPoint:
            return u <= 1.0 - p3 ? p1 : p2;
    }
    return p1;
}

InitialLaw InitialLaw::parse(const std::string& text) {
    std::stringstream ss(text);
    std::string kind;
    std::getline(ss, kind, ':');
    auto next = [&]() {
        std::string tok;
        if (!std::getline(ss, tok, ':')) {
            throw std::invalid_argument("initial law '" + text + "': missing parameter");
        }
        return std::stod(tok);
    };
    if (kind == "point") return point(next());
    if (kind == "gaussian") {
        const double m = next();
        const double s = next();
        if (!(s >= 0.0)) throw std::invalid_argument("initial law: gaussian sd must be >= 0");
        return gaussian(m, s);
    }
    if (kind == "two_point") {
        const double lo = next();
        const double hi = next();
        const double p = next();
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("initial law: two_point probability must lie in [0,1]");
        }
        return two_point(lo, hi, p);
    }
    throw std::invalid_argument("initial law '" + text +
                                "': expected point:x | gaussian:m:s | two_point:lo:hi:p");
}

std::string InitialLaw::to_string() const {
    char buf[96];
    switch (kind) {
        case InitialLawKind::Point:
            std::snprintf(buf, sizeof buf, "point:%.17g", p1);
            break;
        case InitialLawKind::Gaussian:
            std::snprintf(buf, sizeof buf, "gaussian:%.17g:%.17g", p1, p2);
            break;
        case InitialLawKind::TwoPoint:
            std::snprintf(buf, sizeof buf, "two_point:%.17g:%.17g:%.17g", p1, p2, p3);
            break;
    }
    return buf;
}

void SimConfig::validate() const {
    if (n_particles < 2) throw std::invalid_argument("sim.n_particles: must be >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("sim.dt: must be > 0");
    if (dt > 1e-2 + 1e-15) throw std::invalid_argument("sim.dt: must be <= 1e-2");
    if (!(horizon > 0.0)) throw std::invalid_argument("sim.horizon: must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("sim.eps: must be > 0");
    if (!(snapshot_cadence > 0.0)) {
        throw std::invalid_argument("sim.snapshot: must be > 0");
    }
    const double steps = horizon / dt;
    if (std::fabs(steps - std::llround(steps)) > 1e-6) {
        throw std::invalid_argument("sim.horizon: must be an integer multiple of sim.dt");
    }
    const double snap = snapshot_cadence / dt;
    if (std::fabs(snap - std::llround(snap)) > 1e-6 || std::llround(snap) < 1) {
        throw std::invalid_argument("sim.snapshot: must be a positive multiple of sim.dt");
    }
    scales.validate();
}

CommonPath make_common_path(const rates::CouplingScales& scales, double horizon,
                            double dt, std::uint64_t seed, std::uint64_t replica) {
    CommonPath path;
    path.dt = dt;
    path.jumps = levy::generate_stream(
        scales.levy0, horizon,
        Rng(derive_stream_key(seed, replica, StreamRole::CommonJumps, 0, 0)));
    const long long steps = std::llround(horizon / dt);
    path.surrogate.assign(static_cast<std::size_t>(steps), 0.0);
    if (scales.levy0.mode == levy::SmallJumpMode::Gaussian && scales.levy0.c > 0.0) {
        const double sd = std::sqrt(levy::small_jump_variance(scales.levy0) * dt);
        Rng rng(derive_stream_key(seed, replica, StreamRole::CommonSurrogate, 0, 0));
        for (auto& v : path.surrogate) v = sd * rng.normal();
    }
    return path;
}

std::vector<double> CoupledState::gaps() const {
    std::vector<double> g(primal.size());
    for (std::size_t i = 0; i < primal.size(); ++i) g[i] = primal[i] - coupled[i];
    return g;
}

double CoupledState::mean_abs_gap() const {
    double s = 0.0;
    for (std::size_t i = 0; i < primal.size(); ++i) s += std::fabs(primal[i] - coupled[i]);
    return s / static_cast<double>(primal.size());
}

namespace {

void check_finite(const std::vector<double>& xs, double time) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(std::fabs(xs[i]) < kBlowUpGuard)) {
            throw BlowUpError(static_cast<int>(i), time);
        }
    }
}

double frozen_kernel_mean(const model::DriftSpec& drift, const std::vector<double>& xs) {
    return drift.lambda3 != 0.0 ? drift.kernel_mean(xs) : 0.0;
}

} // namespace

SystemState step_interacting(const SystemState& state, double dt,
                             const std::vector<std::vector<double>>& idio_jump_sizes,
                             const std::vector<double>& common_jump_sizes,
                             const std::vector<double>& idio_surrogate,
                             double common_surrogate, const model::DriftSpec& drift,
                             const rates::CouplingScales& scales) {
    SystemState next = state;
    const std::size_t n = state.positions.size();
    const double mean_g = frozen_kernel_mean(drift, state.positions);
    double common_sum = common_surrogate;
    for (double z : common_jump_sizes) common_sum += z;
    for (std::size_t i = 0; i < n; ++i) {
        double x = next.positions[i];
        x += drift.eval(x, mean_g) * dt;
        if (!idio_jump_sizes.empty()) {
            for (double z : idio_jump_sizes[i]) x += scales.sigma * z;
        }
        if (!idio_surrogate.empty()) x += scales.sigma * idio_surrogate[i];
        x += scales.sigma0 * common_sum;
        next.positions[i] = x;
    }
    next.time = state.time + dt;
    check_finite(next.positions, next.time);
    return next;
}

CoupledState step_coupled(const CoupledState& state, double dt,
                          const std::vector<TimedEvent>& events,
                          const std::vector<double>& idio_surrogate,
                          double common_surrogate, const model::DriftSpec& drift,
                          const rates::CouplingScales& scales, double eps,
                          CoupledDiagnostics* diag,
                          std::vector<double>* common_component) {
    CoupledState next = state;
    const std::size_t n = state.primal.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double mean_gp = frozen_kernel_mean(drift, state.primal);
    const double mean_gc = frozen_kernel_mean(drift, state.coupled);

    for (std::size_t i = 0; i < n; ++i) {
        next.primal[i] += drift.eval(next.primal[i], mean_gp) * dt;
        next.coupled[i] += drift.eval(next.coupled[i], mean_gc) * dt;
    }
    if (common_component) {
        for (auto& c : *common_component) c *= 1.0 - drift.kappa * dt;
    }

    double gap_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap_sum += std::fabs(next.primal[i] - next.coupled[i]);

    // surrogates: the coupled copy's increment carries the reflection factor
    if (!idio_surrogate.empty() || common_surrogate != 0.0) {
        const double pi = rates::reflection_scalar_from_mean(eps, gap_sum * inv_n);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = idio_surrogate.empty() ? 0.0 : idio_surrogate[i];
            next.primal[i] += scales.sigma * g + scales.sigma0 * common_surrogate;
            next.coupled[i] += pi * (scales.sigma * g + scales.sigma0 * common_surrogate);
            if (common_component) {
                (*common_component)[i] += pi * scales.sigma0 * common_surrogate;
            }
        }
        gap_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gap_sum += std::fabs(next.primal[i] - next.coupled[i]);
        }
    }

    CoupledDiagnostics local;
    CoupledDiagnostics* d = diag ? diag : &local;
    const double abs_sigma = std::fabs(scales.sigma);
    const double abs_sigma0 = std::fabs(scales.sigma0);

    auto apply_one = [&](std::size_t i, double noise_coeff, double abs_coeff, double z,
                         double pi) {
        const double old_gap = next.primal[i] - next.coupled[i];
        const bool reflected = std::fabs(z) < std::fabs(old_gap) / (2.0 * abs_coeff);
        next.primal[i] += noise_coeff * z;
        next.coupled[i] += noise_coeff * (reflected ? pi * z : z);
        const double new_gap = next.primal[i] - next.coupled[i];
        gap_sum += std::fabs(new_gap) - std::fabs(old_gap);
        if (reflected) {
            ++d->reflected_events;
            if (old_gap != 0.0 && new_gap * old_gap < 0.0) ++d->sign_violations;
        } else {
            ++d->synchronous_events;
        }
        return reflected;
    };

    for (const auto& ev : events) {
        const double pi = rates::reflection_scalar_from_mean(eps, gap_sum * inv_n);
        if (ev.particle >= 0) {
            apply_one(static_cast<std::size_t>(ev.particle), scales.sigma, abs_sigma,
                      ev.size, pi);
        } else {
            int reflected = 0, synchronous = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool refl = apply_one(i, scales.sigma0, abs_sigma0, ev.size, pi);
                if (refl) ++reflected;
                else ++synchronous;
                if (common_component) {
                    (*common_component)[i] += scales.sigma0 * (refl ? pi * ev.size : ev.size);
                }
            }
            if (reflected > 0 && synchronous > 0) ++d->mixed_common_events;
        }
    }

    next.time = state.time + dt;
    check_finite(next.primal, next.time);
    check_finite(next.coupled, next.time);
    return next;
}

// ---------------------------------------------------------------------------
// Horizon drivers

namespace {

struct Grid {
    long long steps;
    long long snap_every;
};

Grid make_grid(const SimConfig& cfg) {
    Grid g;
    g.steps = std::llround(cfg.horizon / cfg.dt);
    g.snap_every = std::llround(cfg.snapshot_cadence / cfg.dt);
    return g;
}

std::vector<double> sample_initial(const InitialLaw& law, int n, std::uint64_t seed,
                                   std::uint64_t replica, std::uint64_t system) {
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream_key(seed, replica, StreamRole::Initial, system,
                                  static_cast<std::uint64_t>(i)));
        x0[static_cast<std::size_t>(i)] = law.quantile(rng.uniform());
    }
    return x0;
}

struct IdioNoise {
    std::vector<levy::JumpSource> sources;
    std::vector<Rng> surr;
    double surr_sd = 0.0;  // per-step sd, 0 in Drop mode

    IdioNoise(const rates::CouplingScales& scales, int n, double dt, std::uint64_t seed,
              std::uint64_t replica, std::uint64_t system,
              const std::vector<int>& stream_index = {}) {
        sources.reserve(static_cast<std::size_t>(n));
        surr.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const std::uint64_t sid = static_cast<std::uint64_t>(
                stream_index.empty() ? i : stream_index[static_cast<std::size_t>(i)]);
            sources.emplace_back(
                scales.levy, Rng(derive_stream_key(seed, replica, StreamRole::IdioJumps,
                                                   system, sid)));
            surr.emplace_back(derive_stream_key(seed, replica, StreamRole::IdioSurrogate,
                                                system, sid));
        }
        if (scales.levy.mode == levy::SmallJumpMode::Gaussian && scales.levy.c > 0.0) {
            surr_sd = std::sqrt(levy::small_jump_variance(scales.levy) * dt);
        }
    }
};

} // namespace

metrics::Trajectory simulate_flow(const SimConfig& cfg, const CommonPath& common,
                                  std::uint64_t replica, std::uint64_t system_id,
                                  std::vector<double> x0,
                                  const std::vector<int>& stream_index) {
    cfg.validate();
    const Grid grid = make_grid(cfg);
    const int n = cfg.n_particles;
    if (!stream_index.empty() && static_cast<int>(stream_index.size()) != n) {
        throw std::invalid_argument("simulate_flow: stream_index size mismatch");
    }
    if (x0.empty()) x0 = sample_initial(cfg.initial, n, cfg.seed, replica, system_id);
    if (static_cast<int>(x0.size()) != n) {
        throw std::invalid_argument("simulate_flow: x0 size mismatch");
    }

    IdioNoise noise(cfg.scales, n, cfg.dt, cfg.seed, replica, system_id, stream_index);
    std::vector<double> x = std::move(x0);
    std::vector<double> sup(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sup[i] = std::fabs(x[i]);

    metrics::Trajectory traj;
    traj.dt = cfg.snapshot_cadence;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.snapshots.push_back(x);
        double s = 0.0;
        for (double v : sup) s += v;
        traj.mean_running_sup.push_back(s / static_cast<double>(x.size()));
    };
    record(0.0);

    const double sigma = cfg.scales.sigma;
    const double sigma0 = cfg.scales.sigma0;
    double common_q = 0.0;  // common-noise component under the linear drift part
    std::size_t jc = 0;     // cursor into the common jump stream
    levy::JumpEvent ev;
    for (long long k = 0; k < grid.steps; ++k) {
        const double t_end = static_cast<double>(k + 1) * cfg.dt;
        const double mean_g = frozen_kernel_mean(cfg.drift, x);
        const double common_surr =
            common.surrogate.empty() ? 0.0 : common.surrogate[static_cast<std::size_t>(k)];
        for (int i = 0; i < n; ++i) {
            double xi = x[static_cast<std::size_t>(i)];
            xi += cfg.drift.eval(xi, mean_g) * cfg.dt;
            if (noise.surr_sd > 0.0) {
                xi += sigma * noise.surr_sd * noise.surr[static_cast<std::size_t>(i)].normal();
            }
            xi += sigma0 * common_surr;
            while (noise.sources[static_cast<std::size_t>(i)].pop_until(t_end, ev)) {
                xi += sigma * ev.size;
            }
            x[static_cast<std::size_t>(i)] = xi;
        }
        common_q = common_q * (1.0 - cfg.drift.kappa * cfg.dt) + sigma0 * common_surr;
        while (jc < common.jumps.events.size() && common.jumps.events[jc].time <= t_end) {
            const double z = sigma0 * common.jumps.events[jc].size;
            for (double& xi : x) xi += z;
            common_q += z;
            ++jc;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double a = std::fabs(x[i]);
            if (a > sup[i]) sup[i] = a;
            if (!(a < kBlowUpGuard)) throw BlowUpError(static_cast<int>(i), t_end);
        }
        if ((k + 1) % grid.snap_every == 0 || k + 1 == grid.steps) record(t_end);
    }
    traj.final_common = common_q;
    return traj;
}

CoupledRun simulate_coupled(const SimConfig& cfg, const InitialLaw& primal_law,
                            const InitialLaw& coupled_law, const CommonPath& common,
                            std::uint64_t replica, bool record_coupled_snapshots) {
    cfg.validate();
    const Grid grid = make_grid(cfg);
    const int n = cfg.n_particles;
    const double inv_n = 1.0 / static_cast<double>(n);

    CoupledState st;
    st.primal.resize(static_cast<std::size_t>(n));
    st.coupled.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream_key(cfg.seed, replica, StreamRole::Initial, 0,
                                  static_cast<std::uint64_t>(i)));
        const double u = rng.uniform();
        st.primal[static_cast<std::size_t>(i)] = primal_law.quantile(u);
        st.coupled[static_cast<std::size_t>(i)] = coupled_law.quantile(u);
    }

    IdioNoise noise(cfg.scales, n, cfg.dt, cfg.seed, replica, 0);
    std::vector<double> sup(st.coupled.size());
    for (std::size_t i = 0; i < sup.size(); ++i) sup[i] = std::fabs(st.coupled[i]);

    CoupledRun run;
    auto record = [&](double t) {
        run.times.push_back(t);
        run.mean_abs_gap.push_back(st.mean_abs_gap());
        double s = 0.0;
        for (double v : sup) s += v;
        run.coupled_mean_running_sup.push_back(s * inv_n);
        if (record_coupled_snapshots) run.coupled_snapshots.push_back(st.coupled);
    };
    record(0.0);

    std::vector<TimedEvent> window;
    std::vector<double> surrogate(static_cast<std::size_t>(n), 0.0);
    std::vector<double> common_coupled(static_cast<std::size_t>(n), 0.0);
    std::size_t jc = 0;
    levy::JumpEvent ev;
    for (long long k = 0; k < grid.steps; ++k) {
        const double t_end = static_cast<double>(k + 1) * cfg.dt;
        window.clear();
        for (int i = 0; i < n; ++i) {
            while (noise.sources[static_cast<std::size_t>(i)].pop_until(t_end, ev)) {
                window.push_back({ev.time, i, ev.size});
            }
        }
        while (jc < common.jumps.events.size() && common.jumps.events[jc].time <= t_end) {
            window.push_back({common.jumps.events[jc].time, -1,
                              common.jumps.events[jc].size});
            ++jc;
        }
        std::sort(window.begin(), window.end(), [](const TimedEvent& a, const TimedEvent& b) {
            return a.time != b.time ? a.time < b.time : a.particle < b.particle;
        });
        if (noise.surr_sd > 0.0) {
            for (auto& g : surrogate) g = 0.0;
            for (int i = 0; i < n; ++i) {
                surrogate[static_cast<std::size_t>(i)] =
                    noise.surr_sd * noise.surr[static_cast<std::size_t>(i)].normal();
            }
        }
        const double common_surr =
            common.surrogate.empty() ? 0.0 : common.surrogate[static_cast<std::size_t>(k)];
        st = step_coupled(st, cfg.dt,
                          window,
                          noise.surr_sd > 0.0 ? surrogate : std::vector<double>{},
                          common_surr, cfg.drift, cfg.scales, cfg.eps, &run.diagnostics,
                          &common_coupled);
        for (std::size_t i = 0; i < sup.size(); ++i) {
            const double a = std::fabs(st.coupled[i]);
            if (a > sup[i]) sup[i] = a;
        }
        if ((k + 1) % grid.snap_every == 0 || k + 1 == grid.steps) record(t_end);
    }
    run.final_state = std::move(st);
    run.final_common_coupled = std::move(common_coupled);
    return run;
}

NonintRun simulate_noninteracting_block(const SimConfig& cfg, int n, int n_ref,
                                        const CommonPath& common,
                                        std::uint64_t replica) {
    cfg.validate();
    if (n < 2) throw std::invalid_argument("poc.n: block size must be >= 2");
    const bool block_is_reference = n == n_ref;
    if (!block_is_reference && n_ref < 8 * n) {
        throw std::invalid_argument("poc.n_ref: reference block must satisfy n_ref >= 8 n");
    }
    const Grid grid = make_grid(cfg);

    std::vector<double> ref;
    IdioNoise* ref_noise = nullptr;
    IdioNoise ref_noise_storage = block_is_reference
        ? IdioNoise(cfg.scales, 0, cfg.dt, cfg.seed, replica, 2)
        : IdioNoise(cfg.scales, n_ref, cfg.dt, cfg.seed, replica, 2);
    if (!block_is_reference) {
        ref = sample_initial(cfg.initial, n_ref, cfg.seed, replica, 2);
        ref_noise = &ref_noise_storage;
    }

    std::vector<double> x1 = sample_initial(cfg.initial, n, cfg.seed, replica, 0);
    std::vector<double> x2 = x1;
    IdioNoise noise(cfg.scales, n, cfg.dt, cfg.seed, replica, 0);

    NonintRun run;
    auto record = [&](double t) {
        run.times.push_back(t);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            s += std::fabs(x1[static_cast<std::size_t>(i)] - x2[static_cast<std::size_t>(i)]);
        }
        run.mean_abs_diff.push_back(s / static_cast<double>(n));
        if (cfg.drift.lambda3 != 0.0) {
            const double g_ref = cfg.drift.kernel_mean(block_is_reference ? x2 : ref);
            run.phi_gap.push_back(cfg.drift.lambda3 *
                                  std::fabs(g_ref - cfg.drift.kernel_mean(x1)));
        } else {
            run.phi_gap.push_back(0.0);
        }
    };
    record(0.0);

    const double sigma = cfg.scales.sigma;
    const double sigma0 = cfg.scales.sigma0;
    std::size_t jc = 0;
    levy::JumpEvent ev;
    for (long long k = 0; k < grid.steps; ++k) {
        const double t_end = static_cast<double>(k + 1) * cfg.dt;
        const double mean_g_ref =
            frozen_kernel_mean(cfg.drift, block_is_reference ? x2 : ref);
        const double mean_g_2 = frozen_kernel_mean(cfg.drift, x2);
        const double common_surr =
            common.surrogate.empty() ? 0.0 : common.surrogate[static_cast<std::size_t>(k)];

        if (!block_is_reference) {
            for (int i = 0; i < n_ref; ++i) {
                double xi = ref[static_cast<std::size_t>(i)];
                xi += cfg.drift.eval(xi, mean_g_ref) * cfg.dt;
                if (ref_noise->surr_sd > 0.0) {
                    xi += sigma * ref_noise->surr_sd *
                          ref_noise->surr[static_cast<std::size_t>(i)].normal();
                }
                xi += sigma0 * common_surr;
                while (ref_noise->sources[static_cast<std::size_t>(i)].pop_until(t_end, ev)) {
                    xi += sigma * ev.size;
                }
                ref[static_cast<std::size_t>(i)] = xi;
            }
        }
        for (int i = 0; i < n; ++i) {
            double shared = sigma0 * common_surr;
            if (noise.surr_sd > 0.0) {
                shared += sigma * noise.surr_sd *
                          noise.surr[static_cast<std::size_t>(i)].normal();
            }
            double jumps = 0.0;
            while (noise.sources[static_cast<std::size_t>(i)].pop_until(t_end, ev)) {
                jumps += sigma * ev.size;
            }
            double& a = x1[static_cast<std::size_t>(i)];
            double& b = x2[static_cast<std::size_t>(i)];
            a += cfg.drift.eval(a, mean_g_ref) * cfg.dt + shared + jumps;
            b += cfg.drift.eval(b, mean_g_2) * cfg.dt + shared + jumps;
        }
        while (jc < common.jumps.events.size() && common.jumps.events[jc].time <= t_end) {
            const double z = sigma0 * common.jumps.events[jc].size;
            if (!block_is_reference) {
                for (double& xi : ref) xi += z;
            }
            for (double& xi : x1) xi += z;
            for (double& xi : x2) xi += z;
            ++jc;
        }
        check_finite(x1, t_end);
        check_finite(x2, t_end);
        if (!block_is_reference) check_finite(ref, t_end);
        if ((k + 1) % grid.snap_every == 0 || k + 1 == grid.steps) record(t_end);
    }
    return run;
}

} // namespace mvjd::sim
