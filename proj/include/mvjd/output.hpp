#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "mvjd/config.hpp"

namespace mvjd::exp {

struct CsvRow {
    double time = 0.0;
    long long replica = -1;  // -1 marks aggregate rows
    std::string metric;
    double value = 0.0;
};

// Experiment output directory: a RunManifest is written before any data row,
// then long-format CSV tables (time,replica,metric,value at %.17g). Disabled
// when the config carries no output directory.
class ExperimentOutput {
public:
    explicit ExperimentOutput(const ExperimentConfig& cfg);

    bool enabled() const { return enabled_; }
    void write_rows(const std::string& filename, const std::vector<CsvRow>& rows);
    void finish();  // rewrites the manifest with the elapsed wall time

private:
    void write_manifest(double wall_seconds);
    bool enabled_ = false;
    std::string dir_;
    ExperimentConfig cfg_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace mvjd::exp
