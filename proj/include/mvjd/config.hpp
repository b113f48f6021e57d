#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvjd/model.hpp"
#include "mvjd/rates.hpp"
#include "mvjd/sim.hpp"

namespace mvjd::exp {

inline constexpr const char* kEngineVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sectioned key = value text config. The canonical form (sections and keys
// sorted, reals at %.17g) round-trips through parse exactly.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load_file(const std::string& path);
    std::string serialize() const;
    std::uint64_t hash() const;  // FNV-1a over the canonical serialization

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    int get_int(const std::string& section, const std::string& key) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);

    // every (section, key) pair present in the file
    std::vector<std::string> all_paths() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class ExperimentKind {
    Rates,
    Audit,
    Contraction,
    Poc,
    Marginal,
    Sfpe,
    Moments,
    CoupledDecay,
};

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Rates;
    std::uint64_t seed = 42;
    int replicas = 8;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir;
    bool require_contraction = false;

    rates::CouplingScales scales;
    model::DriftSpec drift;  // lambda3 mirrored from scales

    int n_particles = 64;
    double dt = 1e-3;
    double horizon = 1.0;
    double eps = 1e-3;
    double snapshot = 0.05;
    sim::InitialLaw initial = sim::InitialLaw::point(0.0);
    sim::InitialLaw initial2 = sim::InitialLaw::point(0.0);
    double fit_burn_in = 0.2;

    std::vector<int> n_grid{16, 64, 256};
    int n_ref = 2048;
    double t_eval = 5.0;

    double sfpe_t0 = 0.5;
    double sfpe_window = 0.5;
    double sfpe_width = 1.5;
    std::vector<double> sfpe_centers{-1.0, 0.0, 1.0};

    int audit_pairs = 20000;
    int audit_trials = 20000;
    double audit_box = 10.0;

    bool marginal_control = false;

    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    KeyValueConfig to_kv() const;
    void validate() const;

    sim::SimConfig sim_config() const;
};

// The fixed Example-parameter preset binding all experiment kinds:
// alpha = beta = 3/2, c_* = c^* = 1, theta = 1/2, ell0 = 1, sigma = sigma0 = 1,
// lambda1 = lambda2 = 1, lambda3 = 0.05, with per-kind simulation defaults.
ExperimentConfig preset_paper_example(ExperimentKind kind);

} // namespace mvjd::exp
