#pragma once

// Runs a RunConfig and writes CSV tables, the resolved config and a manifest.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oesr/config.hpp"

namespace oesr {

inline constexpr const char* tool_version = "0.1.0";

/// Columns and rows already formatted as text.
struct CsvTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    /// Appended to the header comment, e.g. units.
    std::string units;
};

struct RunResult {
    std::string kind;
    /// Scalar findings in insertion-independent (sorted) order.
    std::map<std::string, double> summary;
    std::vector<CsvTable> tables;
    std::vector<std::string> warnings;
    /// False when an oracle check failed.
    bool passed = true;
};

struct RunManifest {
    std::string tool_version;
    std::string config_sha256;
    /// file name -> sha256 of its bytes
    std::map<std::string, std::string> checksums;
    std::string output_dir;
    double wall_clock_s = 0.0;
    unsigned threads = 1;
};

/// Runs the experiment in memory.
RunResult execute(const RunConfig& cfg, unsigned threads = 1);

/// Shortest round-trip decimal.
std::string format_csv_number(double v);

/// Header comment (tool version, config hash, units) + RFC-4180 body, LF endings.
std::string render_csv(const CsvTable& table, const std::string& config_sha256);

/// Flat key=value text.
std::string render_manifest(const RunManifest& m);

/// Writes <table>.csv, summary.csv, config.yaml and manifest.txt into dir.
RunManifest write_outputs(const RunConfig& cfg, const RunResult& result, const std::filesystem::path& dir,
                          unsigned threads, double wall_clock_s);

} // namespace oesr
