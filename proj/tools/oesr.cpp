// oesr: run simulation experiments from YAML configs or shipped presets.
//
//   oesr q-curve --preset fig2a --threads 4 --out out/fig2a
//   oesr rabi --config my.yaml --experiment.omega_mhz=120
//
// Exit codes: 0 ok, 1 oracle check failed, 2 bad config or usage, 3 run failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oesr/config.hpp"
#include "oesr/errors.hpp"
#include "oesr/run.hpp"

namespace {

void error_record(const std::string& kind, const std::string& message, const std::string& key = {}, int line = 0) {
    nlohmann::json j{{"error", kind}, {"message", message}};
    if (!key.empty()) j["key"] = key;
    if (line > 0) j["line"] = line;
    std::cerr << j.dump() << '\n';
}

/// Pulls "--section.key=value" and "--section.key value" out of argv.
std::vector<std::string> take_overrides(std::vector<std::string>& args) {
    std::vector<std::string> overrides, rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        const auto eq = a.find('=');
        const auto name = a.substr(0, eq);
        if (a.rfind("--", 0) == 0 && name.find('.') != std::string::npos) {
            if (eq != std::string::npos) {
                overrides.push_back(a.substr(2));
            } else if (i + 1 < args.size()) {
                overrides.push_back(a.substr(2) + "=" + args[++i]);
            } else {
                throw oesr::ConfigError(a.substr(2), 0, "missing value");
            }
        } else {
            rest.push_back(a);
        }
    }
    args = std::move(rest);
    return overrides;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw oesr::ConfigError("", 0, "cannot read config file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> overrides;
    try {
        overrides = take_overrides(args);
    } catch (const oesr::ConfigError& e) {
        error_record("config", e.detail(), e.key(), e.line());
        return 2;
    }

    CLI::App app{"Optically driven electron spin resonance simulator"};
    app.require_subcommand(0, 1);
    bool list_presets = false;
    app.add_flag("--list-presets", list_presets, "List shipped presets and exit");
    app.set_version_flag("--version", oesr::tool_version);

    struct Options {
        std::string config, preset_name, out;
        unsigned threads = 1;
        bool print_config = false, dry_run = false;
    } opt;

    std::vector<CLI::App*> subs;
    for (auto kind : oesr::experiment_kinds) {
        auto* sub = app.add_subcommand(std::string(kind), "Run the " + std::string(kind) + " experiment");
        sub->add_option("-c,--config", opt.config, "YAML config file");
        sub->add_option("-p,--preset", opt.preset_name, "Shipped preset (default: " +
                                                            std::string(oesr::default_preset(kind)) + ")");
        sub->add_option("-o,--out", opt.out, "Output directory (overrides output.dir)");
        sub->add_option("-j,--threads", opt.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--print-config", opt.print_config, "Print the resolved config with provenance and exit");
        sub->add_flag("--dry-run", opt.dry_run, "Validate the config without running");
        sub->footer("Any config key can be overridden as --section.key=value, e.g. --experiment.omega_mhz=120");
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (list_presets) {
        for (const auto& p : oesr::preset_names()) std::cout << p << '\n';
        return 0;
    }
    CLI::App* chosen = nullptr;
    for (auto* s : subs)
        if (s->parsed()) chosen = s;
    if (!chosen) {
        std::cout << app.help();
        return 2;
    }
    const std::string kind = chosen->get_name();

    oesr::RunConfig cfg;
    try {
        if (!opt.config.empty() && !opt.preset_name.empty())
            throw oesr::ConfigError("", 0, "use either --config or --preset");
        std::string text;
        auto origin = oesr::ConfigOrigin::file;
        if (!opt.config.empty()) {
            text = read_file(opt.config);
        } else {
            try {
                text = std::string(oesr::preset(opt.preset_name.empty() ? oesr::default_preset(kind) : opt.preset_name));
            } catch (const std::out_of_range& e) {
                throw oesr::ConfigError("", 0, e.what());
            }
            origin = oesr::ConfigOrigin::preset;
        }
        if (!opt.out.empty()) overrides.push_back("output.dir=\"" + opt.out + "\"");
        cfg = oesr::parse_config(text, overrides, origin);
        if (cfg.kind != kind)
            throw oesr::ConfigError("experiment.kind", cfg.values.at("experiment.kind").line,
                                    "config is for '" + cfg.kind + "', subcommand is '" + kind + "'");
    } catch (const oesr::ConfigError& e) {
        error_record("config", e.detail(), e.key(), e.line());
        return 2;
    }

    if (opt.print_config) {
        std::cout << oesr::serialize(cfg, true);
        return 0;
    }
    if (opt.dry_run) {
        std::cout << "config ok, sha256 " << oesr::config_hash(cfg) << '\n';
        return 0;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        const auto result = oesr::execute(cfg, opt.threads);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto dir = cfg.text("output.dir");
        oesr::write_outputs(cfg, result, dir, opt.threads, wall);
        for (const auto& [k, v] : result.summary) std::cout << k << '=' << oesr::format_csv_number(v) << '\n';
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << "wrote " << dir << '\n';
        return result.passed ? 0 : 1;
    } catch (const oesr::ConfigError& e) {
        error_record("config", e.detail(), e.key(), e.line());
        return 2;
    } catch (const oesr::SolverError& e) {
        error_record("solver", e.what());
    } catch (const oesr::ResolutionError& e) {
        error_record("resolution", e.what());
    } catch (const oesr::DivergenceError& e) {
        error_record("divergence", e.what());
    } catch (const oesr::UnsupportedRegime& e) {
        error_record("unsupported_regime", e.what());
    } catch (const std::exception& e) {
        error_record("runtime", e.what());
    }
    return 3;
}
