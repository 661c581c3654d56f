#include <algorithm>
#include <stdexcept>
#include <utility>

#include "oesr/config.hpp"

namespace oesr {

namespace {

constexpr std::pair<std::string_view, std::string_view> presets[] = {
    {"rabi", R"(experiment:
  kind: rabi
  omega_mhz: 95
physics:
  alpha: 0.027
  t2_ns: 2800
  nuclear: off
ensemble:
  sigma_oh_mhz: 4.8
output:
  dir: out/rabi
)"},
    {"ramsey", R"(experiment:
  kind: ramsey
  pulse_omega_mhz: 50
  tau_max_ns: 150
  points: 151
  ideal_pulses: true
physics:
  alpha: 0
  t2_ns: 0
ensemble:
  sigma_oh_mhz: 4.8
output:
  dir: out/ramsey
)"},
    {"fig2a", R"(# Q factor against Rabi frequency with the nuclear bath.
experiment:
  kind: q-curve
  omega_mhz: [5, 10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80, 95, 120, 154]
  windows: 80
  samples_per_window: 40
  compare_nuclear_off: true
physics:
  alpha: 0.027
  t2_ns: 2800
  nuclear: scm
ensemble:
  sigma_oh_mhz: 4.8
output:
  dir: out/fig2a
)"},
    {"fig2b", R"(experiment:
  kind: spectral-density
  mc_nuclei: 100000
output:
  dir: out/fig2b
)"},
    {"rate-curve", R"(experiment:
  kind: rate-curve
  omega_min_mhz: 1
  omega_max_mhz: 160
  points: 160
physics:
  alpha: 0.027
  t2_ns: 2800
  nuclear: scm
ensemble:
  sigma_oh_mhz: 4.8
output:
  dir: out/rate-curve
)"},
    {"fig3b", R"(# Phase tomography of two pi/2 pulses under detuning.
experiment:
  kind: phase-scan
  pulse_omega_mhz: 13
  delta_mhz: 3.5
  points: 73
physics:
  alpha: 0
  t2_ns: 0
ensemble:
  sigma_oh_mhz: 0
output:
  dir: out/fig3b
)"},
    {"fig4", R"(# Spin locking at 16 MHz.
experiment:
  kind: spinlock
  omega_mhz: 16
  lock_max_ns: 6000
  lock_points: 13
  tomography_points: 17
physics:
  alpha: 0.027
  t2_ns: 2800
ensemble:
  sigma_oh_mhz: 4.8
output:
  dir: out/fig4
)"},
    {"waveform", R"(experiment:
  kind: waveform
  a1: 1
  a2: 1.7320508075688772
  microwave_mhz: 100
  periods: 32
output:
  dir: out/waveform
)"},
    {"oracle", R"(experiment:
  kind: oracle
  mc_nuclei: 100000
output:
  dir: out/oracle
)"},
};

constexpr std::pair<std::string_view, std::string_view> defaults[] = {
    {"rabi", "rabi"},         {"ramsey", "ramsey"},         {"phase-scan", "fig3b"},
    {"spinlock", "fig4"},     {"spectral-density", "fig2b"}, {"rate-curve", "rate-curve"},
    {"q-curve", "fig2a"},     {"waveform", "waveform"},     {"oracle", "oracle"},
};

} // namespace

std::string_view preset(std::string_view name) {
    for (const auto& [n, text] : presets)
        if (n == name) return text;
    throw std::out_of_range("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& p : presets) out.emplace_back(p.first);
    return out;
}

std::string_view default_preset(std::string_view kind) {
    for (const auto& [k, p] : defaults)
        if (k == kind) return p;
    throw std::out_of_range("no preset for experiment '" + std::string(kind) + "'");
}

} // namespace oesr
