#include "mvjd/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mvjd/rng.hpp"

namespace mvjd::exp {

ExperimentOutput::ExperimentOutput(const ExperimentConfig& cfg)
    : enabled_(!cfg.out_dir.empty()),
      dir_(cfg.out_dir),
      cfg_(cfg),
      start_(std::chrono::steady_clock::now()) {
    if (!enabled_) return;
    std::filesystem::create_directories(dir_);
    write_manifest(-1.0);
}

void ExperimentOutput::write_manifest(double wall_seconds) {
    std::ofstream out(std::filesystem::path(dir_) / "manifest.txt");
    if (!out) throw ConfigError("cannot write manifest in '" + dir_ + "'");
    out << "engine_version=" << kEngineVersion << "\n";
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(cfg_.to_kv().hash()));
    out << "config_hash=" << hex << "\n";
    out << "kind=" << kind_name(cfg_.kind) << "\n";
    out << "seed=" << cfg_.seed << "\n";
    out << "replicas=" << cfg_.replicas << "\n";
    if (wall_seconds >= 0.0) {
        out << "wall_time_seconds=" << wall_seconds << "\n";
    } else {
        out << "wall_time_seconds=pending\n";
    }
    for (int r = 0; r < cfg_.replicas; ++r) {
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(derive_stream_key(
                          cfg_.seed, static_cast<std::uint64_t>(r),
                          StreamRole::CommonJumps, 0, 0)));
        out << "substream.replica." << r << "=" << hex << "\n";
    }
    out << "config:\n" << cfg_.to_kv().serialize();
}

void ExperimentOutput::write_rows(const std::string& filename,
                                  const std::vector<CsvRow>& rows) {
    if (!enabled_) return;
    std::ofstream out(std::filesystem::path(dir_) / filename);
    if (!out) throw ConfigError("cannot write '" + filename + "' in '" + dir_ + "'");
    out << "time,replica,metric,value\n";
    char buf[96];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%lld,", row.time, row.replica);
        out << buf << row.metric;
        std::snprintf(buf, sizeof buf, ",%.17g\n", row.value);
        out << buf;
    }
}

void ExperimentOutput::finish() {
    if (!enabled_) return;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(secs);
}

} // namespace mvjd::exp
