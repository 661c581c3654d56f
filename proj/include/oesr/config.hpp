#pragma once

// Run configuration: a YAML document checked against a fixed schema.
// Numeric physical keys carry their unit as a suffix (_mhz, _ns, _us, _uw,
// _rad, _ghz, _mhz2).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oesr/nuclear_bath.hpp"

namespace oesr {

using ConfigValue = std::variant<double, std::int64_t, bool, std::string, std::vector<double>>;

enum class ConfigOrigin { file, preset, flag, schema_default };

std::string_view to_string(ConfigOrigin o);

struct ConfigEntry {
    ConfigValue value;
    ConfigOrigin origin = ConfigOrigin::schema_default;
    /// 1-based line in the source document, 0 when not from a document.
    int line = 0;
};

/// Schema violation; `key` is the dotted path, `line` 1-based or 0.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& message);

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string key_;
    int line_;
    std::string detail_;
};

inline constexpr std::string_view experiment_kinds[] = {"rabi",     "ramsey",     "phase-scan", "spinlock", "spectral-density",
                                                        "rate-curve", "q-curve", "waveform",   "oracle"};

struct RunConfig {
    std::string kind;
    /// Dotted keys, e.g. "experiment.omega_mhz", "physics.alpha".
    std::map<std::string, ConfigEntry> values;
    std::vector<NuclearSpeciesConfig> species;
    ConfigOrigin species_origin = ConfigOrigin::schema_default;

    double number(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    const std::vector<double>& list(const std::string& key) const;
    ConfigOrigin origin(const std::string& key) const;
};

/// True if the key ends in a recognised unit suffix.
bool has_unit_suffix(std::string_view key);

/// Dimensionless numeric keys exempt from the suffix rule.
bool is_dimensionless_key(std::string_view key);

/// Keys allowed for an experiment kind (dotted, sorted).
std::vector<std::string> schema_keys(std::string_view kind);

/// Parses and validates. `overrides` are "section.key=value" strings applied
/// after the document; `origin` tags the document's own keys.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                       ConfigOrigin origin = ConfigOrigin::file);

/// Canonical YAML: fixed key order, shortest round-trip numbers. With
/// provenance, each value is followed by a comment naming its origin.
std::string serialize(const RunConfig& cfg, bool provenance = false, bool include_output = true);

/// SHA-256 (hex) of the canonical serialization without the output section.
std::string config_hash(const RunConfig& cfg);

std::string sha256_hex(std::string_view bytes);

/// Shipped presets by name; std::out_of_range if unknown.
std::string_view preset(std::string_view name);
std::vector<std::string> preset_names();
/// Preset used when a subcommand is run without a config file.
std::string_view default_preset(std::string_view kind);

} // namespace oesr
