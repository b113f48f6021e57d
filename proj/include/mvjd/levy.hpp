#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvjd/rng.hpp"

// Symmetric one-dimensional alpha-stable Levy measures
//   nu(dz) = c |z|^(-1-alpha) dz,   alpha in (1,2), c >= 0,
// simulated exactly above a truncation threshold delta. Jumps below delta
// are either dropped or replaced by a Gaussian surrogate whose per-unit-time
// variance matches the truncated second moment; by symmetry the compensator
// drift is exactly zero under either convention.

namespace mvjd::levy {

enum class SmallJumpMode { Drop, Gaussian };

struct StableLevySpec {
    double alpha = 1.5;
    double c = 1.0;        // c = 0 is the degenerate "no jumps" fixture
    double delta = 1e-3;
    SmallJumpMode mode = SmallJumpMode::Gaussian;

    void validate() const;
};

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;     // |size| > delta
};

struct JumpStream {
    double horizon = 0.0;
    std::vector<JumpEvent> events;           // time-sorted
    double surrogate_variance_rate = 0.0;    // per unit time; 0 in Drop mode
};

struct IntegrabilityMoments {
    double small_second_moment = 0.0;  // int_{|z|<=1} z^2 nu(dz)
    double tail_first_moment = 0.0;    // int_{|z|>1} |z| nu(dz)
};

// Both integrals of the (|z| ^ |z|^2)-moment split at |z| = 1; finite exactly
// for alpha in (1,2).
IntegrabilityMoments integrability_moments(const StableLevySpec& spec);

// nu({|z| > delta}) = 2 c delta^(-alpha) / alpha
double tail_rate(const StableLevySpec& spec);

// Exact magnitude sampling above delta: P(|z| > x | |z| > delta) = (x/delta)^(-alpha),
// inverted as delta * u^(-1/alpha). u = 0 is rejected (unbounded magnitude).
double inverse_tail_sample(const StableLevySpec& spec, double u, bool negative);

// int_{|z|<=delta} z^2 nu(dz) = 2 c delta^(2-alpha) / (2-alpha)
double small_jump_variance(const StableLevySpec& spec);

// Lazy cursor over the compound-Poisson part above delta. Inter-arrival
// times are exponential(tail_rate), which realises the Poisson-count /
// sorted-uniform law event by event. Deterministic given its Rng key.
class JumpSource {
public:
    JumpSource(const StableLevySpec& spec, Rng rng);

    // next event time, +inf when the intensity is zero
    double next_time() const { return next_time_; }

    // pops the next event if it occurs at or before t_end
    bool pop_until(double t_end, JumpEvent& out);

private:
    void advance();
    Rng rng_;
    double rate_;
    double delta_;
    double inv_alpha_;
    double next_time_;
    double next_size_ = 0.0;
};

// Materialises the stream on [0, horizon] via a JumpSource (same event
// sequence as cursor-based consumption with the same key).
JumpStream generate_stream(const StableLevySpec& spec, double horizon, Rng rng);

} // namespace mvjd::levy
