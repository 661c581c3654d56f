#include "oesr/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

namespace oesr {

namespace {

enum class Type { number, integer, boolean, text, list };

struct KeyDef {
    std::string key;
    Type type;
    ConfigValue def;
    std::optional<double> min;
    bool strict_min = false;
    std::vector<std::string> choices;
};

KeyDef num(std::string k, double d, std::optional<double> min = std::nullopt, bool strict = false) {
    return {std::move(k), Type::number, d, min, strict, {}};
}
KeyDef integer(std::string k, std::int64_t d, std::int64_t min) {
    return {std::move(k), Type::integer, d, static_cast<double>(min), false, {}};
}
KeyDef boolean(std::string k, bool d) { return {std::move(k), Type::boolean, d, std::nullopt, false, {}}; }
KeyDef text(std::string k, std::string d, std::vector<std::string> choices = {}) {
    return {std::move(k), Type::text, std::move(d), std::nullopt, false, std::move(choices)};
}
KeyDef list(std::string k, std::vector<double> d, double min) {
    return {std::move(k), Type::list, std::move(d), min, true, {}};
}

constexpr std::array unit_suffixes{"_mhz", "_ns", "_us", "_uw", "_rad", "_ghz", "_mhz2", "_per_uw"};
constexpr std::array dimensionless{"seed",    "alpha",   "windows", "samples_per_window", "points", "lock_points",
                                   "nodes",   "samples", "tol",     "max_iter",           "grid_points",
                                   "max_nodes", "mc_nuclei", "periods", "oversample",     "tomography_points", "a1",
                                   "a2",      "drive_vpi", "ceiling_vpi"};

std::vector<std::string> sections_for(std::string_view kind) {
    if (kind == "rabi" || kind == "ramsey" || kind == "phase-scan" || kind == "spinlock" || kind == "rate-curve" ||
        kind == "q-curve")
        return {"physics", "ensemble", "fixed_point", "bath"};
    if (kind == "spectral-density" || kind == "oracle") return {"bath"};
    return {};
}

std::vector<KeyDef> experiment_keys(std::string_view kind) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (kind == "rabi")
        return {num("omega_mhz", 95.0, 0.0, true), num("delta_mhz", 0.0), integer("windows", 80, 2),
                integer("samples_per_window", 40, 20)};
    if (kind == "ramsey")
        return {num("pulse_omega_mhz", 50.0, 0.0, true), num("tau_max_ns", 150.0, 0.0, true),
                integer("points", 151, 3),
                num("final_phase_rad", 0.0),
                boolean("ideal_pulses", true),
                num("delta_mhz", 0.0)};
    if (kind == "phase-scan")
        return {num("pulse_omega_mhz", 13.0, 0.0, true), num("delta_mhz", 3.5), integer("points", 73, 4),
                num("phi_max_rad", two_pi, 0.0, true)};
    if (kind == "spinlock")
        return {num("omega_mhz", 16.0, 0.0, true), num("lock_max_ns", 6000.0, 0.0, true),
                integer("lock_points", 13, 3), integer("tomography_points", 17, 4),
                num("tomography_span_rad", 2 * two_pi, 0.0, true)};
    if (kind == "spectral-density") return {integer("mc_nuclei", 0, 0), boolean("mc_stratified", true)};
    if (kind == "rate-curve")
        return {num("omega_min_mhz", 1.0, 0.0, true), num("omega_max_mhz", 160.0, 0.0, true), integer("points", 160, 1)};
    if (kind == "q-curve")
        return {list("omega_mhz", {5, 10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 95, 120, 154}, 0.0),
                integer("windows", 80, 2), integer("samples_per_window", 40, 20), integer("max_nodes", 401, 1),
                boolean("compare_nuclear_off", true)};
    if (kind == "waveform")
        return {num("a1", 1.0, 0.0),
                num("a2", std::sqrt(3.0), 0.0),
                num("microwave_mhz", 100.0, 0.0, true),
                integer("periods", 32, 16),
                integer("oversample", 16, 1),
                num("drive_vpi", 0.02, 0.0, true),
                num("ceiling_vpi", 0.1, 0.0, true),
                boolean("filtered", true),
                num("carrier_ghz", 309000.0, 0.0),
                num("power_uw", 11.5, 0.0),
                num("mhz_per_uw", 13.4, 0.0),
                num("optical_rabi_mhz", 3000.0, 0.0),
                num("detuning_ghz", 700.0, 0.0, true),
                num("hole_zeeman_ghz", 7.0),
                num("electron_zeeman_ghz", 24.5, 0.0)};
    if (kind == "oracle") return {integer("mc_nuclei", 100000, 1000)};
    return {};
}

std::vector<KeyDef> section_keys(const std::string& section) {
    if (section == "physics")
        return {num("alpha", 2.7e-2, 0.0), num("t1_ns", 0.0, 0.0), num("t2_ns", 2800.0, 0.0),
                text("nuclear", "off", {"off", "scm", "non-markov"}), num("nuclear_step_ns", 1.0, 0.0, true)};
    if (section == "ensemble")
        return {num("sigma_oh_mhz", 4.8, 0.0), text("scheme", "gauss-hermite", {"gauss-hermite", "monte-carlo"}),
                integer("nodes", 0, 0), integer("samples", 100000, 1)};
    if (section == "fixed_point") return {num("tol", 1e-6, 0.0, true), integer("max_iter", 100, 1)};
    if (section == "bath") return {integer("grid_points", 4096, 16), num("grid_max_mhz", 0.0, 0.0)};
    return {};
}

struct Schema {
    std::map<std::string, KeyDef> keys;
    std::set<std::string> sections;
};

Schema build_schema(std::string_view kind) {
    Schema s;
    auto add = [&](const std::string& prefix, std::vector<KeyDef> defs) {
        for (auto& d : defs) {
            d.key = prefix.empty() ? d.key : prefix + "." + d.key;
            s.keys.emplace(d.key, std::move(d));
        }
    };
    add("", {integer("seed", 1, 0)});
    add("experiment", {text("kind", std::string(kind))});
    add("experiment", experiment_keys(kind));
    add("output", {text("dir", "out")});
    s.sections = {"experiment", "output"};
    for (const auto& sec : sections_for(kind)) {
        add(sec, section_keys(sec));
        s.sections.insert(sec);
    }
    return s;
}

std::string_view leaf(std::string_view key) {
    const auto dot = key.rfind('.');
    return dot == std::string_view::npos ? key : key.substr(dot + 1);
}

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

[[noreturn]] void fail(const std::string& key, int line, const std::string& msg) { throw ConfigError(key, line, msg); }

std::string unknown_key_message(const Schema& s, const std::string& key) {
    std::string msg = "unknown key";
    for (const char* suf : unit_suffixes)
        if (s.keys.count(key + suf)) return msg + " (unit suffix required: " + key + suf + ")";
    return msg;
}

ConfigValue convert(const KeyDef& def, const YAML::Node& n, const std::string& key) {
    const int line = line_of(n);
    try {
        switch (def.type) {
        case Type::number: {
            if (!n.IsScalar()) fail(key, line, "expected a number");
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(key, line, "must be finite");
            return v;
        }
        case Type::integer: {
            if (!n.IsScalar()) fail(key, line, "expected an integer");
            return n.as<std::int64_t>();
        }
        case Type::boolean:
            if (!n.IsScalar()) fail(key, line, "expected true or false");
            return n.as<bool>();
        case Type::text:
            if (!n.IsScalar()) fail(key, line, "expected a string");
            return n.as<std::string>();
        case Type::list: {
            std::vector<double> out;
            if (n.IsSequence()) {
                for (const auto& e : n) out.push_back(e.as<double>());
            } else if (n.IsScalar()) {
                // "1,2,3" from the command line
                std::stringstream ss(n.as<std::string>());
                std::string item;
                while (std::getline(ss, item, ',')) out.push_back(YAML::Load(item).as<double>());
            } else {
                fail(key, line, "expected a list of numbers");
            }
            for (double v : out)
                if (!std::isfinite(v)) fail(key, line, "list entries must be finite");
            if (out.empty()) fail(key, line, "list must not be empty");
            return out;
        }
        }
    } catch (const YAML::Exception&) {
        const char* what = def.type == Type::integer ? "expected an integer"
                           : def.type == Type::boolean ? "expected true or false"
                           : def.type == Type::list    ? "expected a list of numbers"
                                                       : "expected a number";
        fail(key, line, what);
    }
    return {};
}

void check_range(const KeyDef& def, const ConfigEntry& e, const std::string& key) {
    auto check = [&](double v) {
        if (!def.min) return;
        if (def.strict_min ? !(v > *def.min) : !(v >= *def.min)) {
            std::ostringstream os;
            os << "must be " << (def.strict_min ? "> " : ">= ") << *def.min;
            fail(key, e.line, os.str());
        }
    };
    if (const auto* d = std::get_if<double>(&e.value)) check(*d);
    if (const auto* i = std::get_if<std::int64_t>(&e.value)) check(static_cast<double>(*i));
    if (const auto* l = std::get_if<std::vector<double>>(&e.value))
        for (double v : *l) check(v);
    if (const auto* s = std::get_if<std::string>(&e.value); s && !def.choices.empty() &&
                                                           std::find(def.choices.begin(), def.choices.end(), *s) ==
                                                               def.choices.end()) {
        std::string msg = "must be one of:";
        for (const auto& c : def.choices) msg += " " + c;
        fail(key, e.line, msg);
    }
}

NuclearSpeciesConfig parse_species(const YAML::Node& n, std::size_t index) {
    const std::string base = "bath.species[" + std::to_string(index) + "]";
    if (!n.IsMap()) fail(base, line_of(n), "expected a mapping");
    static const std::set<std::string> allowed{"name",        "spin",          "count",      "a2_mean_mhz2",
                                               "bq_mean_mhz", "bq_std_mhz",    "polar_std_rad", "zeeman_mhz"};
    for (const auto& kv : n) {
        const auto k = kv.first.as<std::string>();
        if (!allowed.count(k)) fail(base + "." + k, line_of(kv.first), "unknown key");
    }
    auto get = [&](const char* k) -> double {
        if (!n[k]) fail(base + "." + k, line_of(n), "missing required key");
        try {
            const double v = n[k].as<double>();
            if (!std::isfinite(v)) fail(base + "." + k, line_of(n[k]), "must be finite");
            return v;
        } catch (const YAML::Exception&) {
            fail(base + "." + k, line_of(n[k]), "expected a number");
        }
    };
    NuclearSpeciesConfig s;
    if (!n["name"]) fail(base + ".name", line_of(n), "missing required key");
    s.name = n["name"].as<std::string>();
    s.spin = get("spin");
    s.count = get("count");
    s.a2_mean_mhz2 = get("a2_mean_mhz2");
    s.bq_mhz = {get("bq_mean_mhz"), get("bq_std_mhz")};
    s.polar_std_rad = get("polar_std_rad");
    s.zeeman_mhz = get("zeeman_mhz");
    try {
        s.validate();
    } catch (const std::exception& e) {
        fail(base, line_of(n), e.what());
    }
    return s;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), r.ptr);
    // keep a decimal marker so the text reads as a float
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string format_value(const ConfigValue& v) {
    struct {
        std::string operator()(double d) const { return format_number(d); }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::string& s) const {
            std::string out = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            return out + "\"";
        }
        std::string operator()(const std::vector<double>& l) const {
            std::string out = "[";
            for (std::size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + format_number(l[i]);
            return out + "]";
        }
    } visitor;
    return std::visit(visitor, v);
}

std::string origin_comment(const ConfigEntry& e) {
    std::string s = "  # " + std::string(to_string(e.origin));
    if (e.line > 0) s += " line " + std::to_string(e.line);
    return s;
}

} // namespace

std::string_view to_string(ConfigOrigin o) {
    switch (o) {
    case ConfigOrigin::file: return "file";
    case ConfigOrigin::preset: return "preset";
    case ConfigOrigin::flag: return "flag";
    case ConfigOrigin::schema_default: return "default";
    }
    return "unknown";
}

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::runtime_error((key.empty() ? std::string() : key + ": ") + message +
                         (line > 0 ? " (line " + std::to_string(line) + ")" : std::string())),
      key_(std::move(key)), line_(line), detail_(message) {}

namespace {

const ConfigEntry& entry(const RunConfig& c, const std::string& key) {
    const auto it = c.values.find(key);
    if (it == c.values.end()) throw std::out_of_range("RunConfig: no key " + key);
    return it->second;
}

template <typename T>
const T& typed(const RunConfig& c, const std::string& key) {
    const auto* v = std::get_if<T>(&entry(c, key).value);
    if (!v) throw std::logic_error("RunConfig: wrong type for " + key);
    return *v;
}

} // namespace

double RunConfig::number(const std::string& key) const { return typed<double>(*this, key); }
std::int64_t RunConfig::integer(const std::string& key) const { return typed<std::int64_t>(*this, key); }
bool RunConfig::flag(const std::string& key) const { return typed<bool>(*this, key); }
const std::string& RunConfig::text(const std::string& key) const { return typed<std::string>(*this, key); }
const std::vector<double>& RunConfig::list(const std::string& key) const {
    return typed<std::vector<double>>(*this, key);
}
ConfigOrigin RunConfig::origin(const std::string& key) const { return entry(*this, key).origin; }

bool has_unit_suffix(std::string_view key) {
    const auto l = leaf(key);
    return std::any_of(unit_suffixes.begin(), unit_suffixes.end(), [&](std::string_view s) {
        return l.size() > s.size() && l.substr(l.size() - s.size()) == s;
    });
}

bool is_dimensionless_key(std::string_view key) {
    const auto l = leaf(key);
    return std::find(dimensionless.begin(), dimensionless.end(), l) != dimensionless.end();
}

std::vector<std::string> schema_keys(std::string_view kind) {
    std::vector<std::string> out;
    for (const auto& [k, d] : build_schema(kind).keys) out.push_back(k);
    return out;
}

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides, ConfigOrigin origin) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        fail("", e.mark.is_null() ? 0 : e.mark.line + 1, "malformed document: " + e.msg);
    }
    if (root.IsNull()) fail("experiment", 0, "missing required key");
    if (!root.IsMap()) fail("", line_of(root), "top level must be a mapping");

    const auto exp = root["experiment"];
    if (!exp) fail("experiment", 0, "missing required key");
    if (!exp.IsMap() || !exp["kind"]) fail("experiment.kind", line_of(exp), "missing required key");
    const auto kind = exp["kind"].as<std::string>();
    if (std::find(std::begin(experiment_kinds), std::end(experiment_kinds), kind) == std::end(experiment_kinds))
        fail("experiment.kind", line_of(exp["kind"]), "unknown experiment kind '" + kind + "'");

    const Schema schema = build_schema(kind);
    RunConfig cfg;
    cfg.kind = kind;
    for (const auto& [k, d] : schema.keys) cfg.values[k] = ConfigEntry{d.def, ConfigOrigin::schema_default, 0};
    const bool wants_bath = schema.sections.count("bath") > 0;
    if (wants_bath) cfg.species = default_bath();

    auto assign = [&](const std::string& key, const YAML::Node& node, ConfigOrigin o, int line) {
        const auto it = schema.keys.find(key);
        if (it == schema.keys.end()) fail(key, line, unknown_key_message(schema, key));
        ConfigEntry e{convert(it->second, node, key), o, line};
        check_range(it->second, e, key);
        cfg.values[key] = std::move(e);
    };

    for (const auto& top : root) {
        const auto name = top.first.as<std::string>();
        const int line = line_of(top.first);
        if (name == "seed") {
            assign(name, top.second, origin, line);
            continue;
        }
        if (!schema.sections.count(name)) {
            const bool known = name == "physics" || name == "ensemble" || name == "fixed_point" || name == "bath";
            fail(name, line, known ? "section not used by experiment '" + kind + "'" : "unknown section");
        }
        if (top.second.IsNull()) continue;
        if (!top.second.IsMap()) fail(name, line, "expected a mapping");
        for (const auto& kv : top.second) {
            const auto key = name + "." + kv.first.as<std::string>();
            const int kline = line_of(kv.first);
            if (key == "bath.species") {
                if (!kv.second.IsSequence() || kv.second.size() == 0)
                    fail(key, kline, "expected a non-empty list of species");
                cfg.species.clear();
                for (std::size_t i = 0; i < kv.second.size(); ++i) cfg.species.push_back(parse_species(kv.second[i], i));
                cfg.species_origin = origin;
                continue;
            }
            assign(key, kv.second, origin, kline);
        }
    }

    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) fail(ov, 0, "override must look like section.key=value");
        const auto key = ov.substr(0, eq);
        if (key == "experiment.kind") fail(key, 0, "the experiment kind is set by the subcommand");
        if (key.rfind("bath.species", 0) == 0) fail(key, 0, "species can only be set in a config file");
        YAML::Node node;
        try {
            node = YAML::Load(ov.substr(eq + 1));
        } catch (const YAML::Exception& e) {
            fail(key, 0, "malformed value: " + e.msg);
        }
        assign(key, node, ConfigOrigin::flag, 0);
    }

    if (schema.sections.count("physics") && cfg.number("physics.alpha") > 0.0 && cfg.number("physics.t1_ns") > 0.0)
        fail("physics.t1_ns", cfg.values["physics.t1_ns"].line,
             "choose either a drive-proportional (alpha) or a fixed (t1_ns) relaxation law");
    if (kind == "rate-curve" && !(cfg.number("experiment.omega_max_mhz") >= cfg.number("experiment.omega_min_mhz")))
        fail("experiment.omega_max_mhz", cfg.values["experiment.omega_max_mhz"].line, "must be >= omega_min_mhz");
    if (kind == "q-curve" && cfg.text("physics.nuclear") == "non-markov")
        fail("physics.nuclear", cfg.values["physics.nuclear"].line, "q-curve supports nuclear: off or scm");
    if (kind == "q-curve" && cfg.number("physics.t1_ns") > 0.0)
        fail("physics.t1_ns", cfg.values["physics.t1_ns"].line, "q-curve uses the drive-proportional law (alpha)");
    if (kind == "q-curve" && cfg.text("ensemble.scheme") != "gauss-hermite")
        fail("ensemble.scheme", cfg.values["ensemble.scheme"].line, "q-curve averages with gauss-hermite nodes");
    if (kind == "waveform" && cfg.number("experiment.a1") == 0.0 && cfg.number("experiment.a2") == 0.0)
        fail("experiment.a2", cfg.values["experiment.a2"].line, "a1 and a2 must not both be zero");
    return cfg;
}

std::string serialize(const RunConfig& cfg, bool provenance, bool include_output) {
    std::ostringstream os;
    auto line = [&](const std::string& indent, const std::string& key, const ConfigEntry& e) {
        os << indent << leaf(key) << ": " << format_value(e.value);
        if (provenance) os << origin_comment(e);
        os << '\n';
    };
    line("", "seed", cfg.values.at("seed"));
    for (const std::string sec : {"experiment", "physics", "ensemble", "fixed_point", "bath", "output"}) {
        if (sec == "output" && !include_output) continue;
        const std::string prefix = sec + ".";
        auto first = cfg.values.lower_bound(prefix);
        if (first == cfg.values.end() || first->first.rfind(prefix, 0) != 0) continue;
        os << sec << ":\n";
        if (sec == "experiment") line("  ", "experiment.kind", cfg.values.at("experiment.kind"));
        for (auto it = first; it != cfg.values.end() && it->first.rfind(prefix, 0) == 0; ++it)
            if (it->first != "experiment.kind") line("  ", it->first, it->second);
        if (sec == "bath") {
            os << "  species:";
            if (provenance) os << "  # " << to_string(cfg.species_origin);
            os << '\n';
            for (const auto& s : cfg.species) {
                os << "    - name: " << format_value(s.name) << '\n';
                os << "      spin: " << format_number(s.spin) << '\n';
                os << "      count: " << format_number(s.count) << '\n';
                os << "      a2_mean_mhz2: " << format_number(s.a2_mean_mhz2) << '\n';
                os << "      bq_mean_mhz: " << format_number(s.bq_mhz.mean) << '\n';
                os << "      bq_std_mhz: " << format_number(s.bq_mhz.std) << '\n';
                os << "      polar_std_rad: " << format_number(s.polar_std_rad) << '\n';
                os << "      zeeman_mhz: " << format_number(s.zeeman_mhz) << '\n';
            }
        }
    }
    return os.str();
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(serialize(cfg, false, false)); }

} // namespace oesr
