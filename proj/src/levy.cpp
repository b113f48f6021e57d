#include "mvjd/levy.hpp"

#include <cmath>

namespace mvjd::levy {

void StableLevySpec::validate() const {
    if (!(alpha > 1.0)) {
        throw std::invalid_argument(
            "levy.alpha: tail first moment diverges for alpha <= 1 (got " +
            std::to_string(alpha) + ")");
    }
    if (!(alpha < 2.0)) {
        throw std::invalid_argument(
            "levy.alpha: small-jump second moment diverges for alpha >= 2 (got " +
            std::to_string(alpha) + ")");
    }
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("levy.c: intensity constant must be >= 0");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("levy.delta: truncation threshold must be > 0");
    }
}

IntegrabilityMoments integrability_moments(const StableLevySpec& spec) {
    spec.validate();
    IntegrabilityMoments m;
    m.small_second_moment = 2.0 * spec.c / (2.0 - spec.alpha);
    m.tail_first_moment = 2.0 * spec.c / (spec.alpha - 1.0);
    return m;
}

double tail_rate(const StableLevySpec& spec) {
    spec.validate();
    if (spec.c == 0.0) return 0.0;
    return 2.0 * spec.c * std::pow(spec.delta, -spec.alpha) / spec.alpha;
}

double inverse_tail_sample(const StableLevySpec& spec, double u, bool negative) {
    spec.validate();
    if (!(u > 0.0) || u > 1.0) {
        throw std::invalid_argument(
            "inverse_tail_sample: u must lie in (0,1]; u = 0 gives unbounded magnitude");
    }
    const double magnitude = spec.delta * std::pow(u, -1.0 / spec.alpha);
    return negative ? -magnitude : magnitude;
}

double small_jump_variance(const StableLevySpec& spec) {
    spec.validate();
    return 2.0 * spec.c * std::pow(spec.delta, 2.0 - spec.alpha) / (2.0 - spec.alpha);
}

JumpSource::JumpSource(const StableLevySpec& spec, Rng rng)
    : rng_(rng),
      rate_(tail_rate(spec)),
      delta_(spec.delta),
      inv_alpha_(1.0 / spec.alpha) {
    if (rate_ > 0.0) {
        next_time_ = rng_.exponential() / rate_;
        const double u = rng_.uniform_pos();
        const bool neg = rng_.uniform() < 0.5;
        next_size_ = delta_ * std::pow(u, -inv_alpha_);
        if (neg) next_size_ = -next_size_;
    } else {
        next_time_ = std::numeric_limits<double>::infinity();
    }
}

void JumpSource::advance() {
    next_time_ += rng_.exponential() / rate_;
    const double u = rng_.uniform_pos();
    const bool neg = rng_.uniform() < 0.5;
    next_size_ = delta_ * std::pow(u, -inv_alpha_);
    if (neg) next_size_ = -next_size_;
}

bool JumpSource::pop_until(double t_end, JumpEvent& out) {
    if (next_time_ > t_end) return false;
    out.time = next_time_;
    out.size = next_size_;
    advance();
    return true;
}

JumpStream generate_stream(const StableLevySpec& spec, double horizon, Rng rng) {
    spec.validate();
    if (!(horizon >= 0.0)) {
        throw std::invalid_argument("generate_stream: horizon must be >= 0");
    }
    JumpStream stream;
    stream.horizon = horizon;
    stream.surrogate_variance_rate =
        spec.mode == SmallJumpMode::Gaussian ? small_jump_variance(spec) : 0.0;
    JumpSource src(spec, rng);
    JumpEvent ev;
    while (src.pop_until(horizon, ev)) stream.events.push_back(ev);
    return stream;
}

} // namespace mvjd::levy
