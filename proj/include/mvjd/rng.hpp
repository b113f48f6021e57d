#pragma once

#include <cstdint>
#include <cmath>

// Counter-keyed substreams: every consumer of randomness derives its own
// generator from (seed, replica, role, system, index), so results do not
// depend on scheduling or worker count.

namespace mvjd {

inline std::uint64_t mix64(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class StreamRole : std::uint64_t {
    CommonJumps = 1,
    CommonSurrogate = 2,
    IdioJumps = 3,
    IdioSurrogate = 4,
    Initial = 5,
    Bootstrap = 6,
    Audit = 7,
    Generic = 8,
};

inline std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t replica,
                                       StreamRole role, std::uint64_t system,
                                       std::uint64_t index) {
    std::uint64_t k = mix64(seed ^ 0x243f6a8885a308d3ULL);
    k = mix64(k ^ (replica + 0x13198a2e03707344ULL));
    k = mix64(k ^ (static_cast<std::uint64_t>(role) * 0xa4093822299f31d0ULL));
    k = mix64(k ^ (system + 0x082efa98ec4e6c89ULL));
    k = mix64(k ^ (index + 0x452821e638d01377ULL));
    return k;
}

// xoshiro256++ seeded by splitmix64 expansion of a stream key.
class Rng {
public:
    explicit Rng(std::uint64_t key) {
        std::uint64_t sm = key;
        for (auto& w : s_) {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
        has_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1]
    double uniform_pos() { return 1.0 - uniform(); }

    // standard normal, Marsaglia polar with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    // standard exponential
    double exponential() { return -std::log(uniform_pos()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_;
};

// Wichura AS241: inverse standard normal CDF, double precision.
double normal_quantile(double p);

} // namespace mvjd
