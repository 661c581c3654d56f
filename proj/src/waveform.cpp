#include "oesr/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "oesr/errors.hpp"

namespace oesr {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double omega_per_ns(double mhz) { return two_pi * mhz * 1e-3; }

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

} // namespace

std::size_t MicrowaveWaveform::samples_per_period() const {
    if (!(omega_mhz > 0.0)) return 0;
    return static_cast<std::size_t>(std::lround(sample_rate_per_ns * 1e3 / omega_mhz));
}

double MicrowaveWaveform::duration_ns() const {
    return sample_rate_per_ns > 0.0 ? static_cast<double>(samples.size()) / sample_rate_per_ns : 0.0;
}

double OpticalField::duration_ns() const {
    return sample_rate_per_ns > 0.0 ? static_cast<double>(envelope.size()) / sample_rate_per_ns : 0.0;
}

OpticalField OpticalField::slice(std::size_t first, std::size_t count) const {
    if (first + count > static_cast<std::size_t>(envelope.size()))
        throw std::out_of_range("OpticalField::slice: range past the end");
    OpticalField out = *this;
    out.envelope = envelope.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    out.t0_ns = t0_ns + static_cast<double>(first) / sample_rate_per_ns;
    return out;
}

MicrowaveWaveform synth_quadrature(double a1, double a2, double omega_mhz, std::size_t n_periods) {
    if (!(a1 >= 0.0) || !(a2 >= 0.0)) throw std::invalid_argument("synth_quadrature: amplitudes must be >= 0");
    if (a1 == 0.0 && a2 == 0.0) throw std::invalid_argument("synth_quadrature: both amplitudes are zero");
    if (!(omega_mhz > 0.0)) throw std::invalid_argument("synth_quadrature: frequency must be positive");
    if (n_periods == 0) throw std::invalid_argument("synth_quadrature: need at least one period");

    // quarter-period cells: cos channel + - - +, sin channel + + - -
    const double cos_ch[4] = {1.0, -1.0, -1.0, 1.0};
    const double sin_ch[4] = {1.0, 1.0, -1.0, -1.0};

    MicrowaveWaveform w;
    w.omega_mhz = omega_mhz;
    w.sample_rate_per_ns = 4.0 * omega_mhz * 1e-3;
    w.a1 = a1;
    w.a2 = a2;
    w.phase_rad = std::atan2(a1, a2);
    w.samples.resize(static_cast<Eigen::Index>(4 * n_periods));
    for (Eigen::Index k = 0; k < w.samples.size(); ++k)
        w.samples[k] = a2 * cos_ch[k % 4] + a1 * sin_ch[k % 4];
    return w;
}

std::complex<double> fundamental(const MicrowaveWaveform& w) {
    if (w.samples.size() == 0 || !(w.sample_rate_per_ns > 0.0) || !(w.omega_mhz > 0.0))
        throw std::invalid_argument("fundamental: empty or unconfigured waveform");
    const double om = omega_per_ns(w.omega_mhz);
    const double h = 1.0 / w.sample_rate_per_ns;
    // each held cell contributes v_k (e^{-i w t_k} - e^{-i w (t_k + h)}) / (i w)
    const std::complex<double> cell = (1.0 - std::polar(1.0, -om * h)) / std::complex<double>(0.0, om);
    std::complex<double> acc = 0.0;
    for (Eigen::Index k = 0; k < w.samples.size(); ++k)
        acc += w.samples[k] * std::polar(1.0, -om * static_cast<double>(k) * h);
    return 2.0 * acc * cell / w.duration_ns();
}

MicrowaveWaveform hold_resample(const MicrowaveWaveform& w, std::size_t factor) {
    if (factor == 0) throw std::invalid_argument("hold_resample: factor must be positive");
    MicrowaveWaveform out = w;
    out.sample_rate_per_ns = w.sample_rate_per_ns * static_cast<double>(factor);
    out.samples.resize(w.samples.size() * static_cast<Eigen::Index>(factor));
    for (Eigen::Index k = 0; k < out.samples.size(); ++k)
        out.samples[k] = w.samples[k / static_cast<Eigen::Index>(factor)];
    return out;
}

MicrowaveWaveform sine_wave(double amplitude, double omega_mhz, double phase_rad, std::size_t n_periods,
                            std::size_t samples_per_period) {
    if (!(omega_mhz > 0.0)) throw std::invalid_argument("sine_wave: frequency must be positive");
    if (samples_per_period < 3) throw std::invalid_argument("sine_wave: need at least 3 samples per period");
    MicrowaveWaveform w;
    w.omega_mhz = omega_mhz;
    w.phase_rad = phase_rad;
    w.sample_rate_per_ns = static_cast<double>(samples_per_period) * omega_mhz * 1e-3;
    w.samples.resize(static_cast<Eigen::Index>(n_periods * samples_per_period));
    const double step = two_pi / static_cast<double>(samples_per_period);
    for (Eigen::Index k = 0; k < w.samples.size(); ++k) {
        const auto j = static_cast<std::size_t>(k) % samples_per_period;
        w.samples[k] = amplitude * std::cos(step * static_cast<double>(j) - phase_rad);
    }
    return w;
}

MicrowaveWaveform filtered(const MicrowaveWaveform& w, std::size_t samples_per_period) {
    const auto c = fundamental(w);
    const double periods = w.duration_ns() * w.omega_mhz * 1e-3;
    const auto n = static_cast<std::size_t>(std::lround(periods));
    auto out = sine_wave(std::abs(c), w.omega_mhz, -std::arg(c), n, samples_per_period);
    out.a1 = w.a1;
    out.a2 = w.a2;
    return out;
}

MicrowaveWaveform concatenate(const MicrowaveWaveform& first, const MicrowaveWaveform& second) {
    if (!same_rate(first.sample_rate_per_ns, second.sample_rate_per_ns))
        throw std::invalid_argument("concatenate: sample rates differ");
    MicrowaveWaveform out = first;
    out.samples.resize(first.samples.size() + second.samples.size());
    out.samples << first.samples, second.samples;
    return out;
}

OpticalField monochromatic(double amplitude, double carrier_ghz, double sample_rate_per_ns, std::size_t n) {
    if (!(sample_rate_per_ns > 0.0)) throw std::invalid_argument("monochromatic: sample rate must be positive");
    OpticalField f;
    f.carrier_ghz = carrier_ghz;
    f.sample_rate_per_ns = sample_rate_per_ns;
    f.envelope = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(n), std::complex<double>(amplitude, 0.0));
    return f;
}

OpticalField modulate(const OpticalField& in, const MicrowaveWaveform& v, const ModulateOptions& opts) {
    if (in.envelope.size() != v.samples.size() || !same_rate(in.sample_rate_per_ns, v.sample_rate_per_ns) ||
        std::abs(in.t0_ns) * in.sample_rate_per_ns > 1e-9)
        throw std::invalid_argument("modulate: optical and microwave sample grids differ");
    if (!in.envelope.allFinite()) throw std::invalid_argument("modulate: non-finite envelope");
    if (v.samples.size() > 0 && v.samples.cwiseAbs().maxCoeff() > opts.amplitude_ceiling)
        throw UnsupportedRegime("modulate: drive exceeds the linear amplitude ceiling");
    OpticalField out = in;
    out.envelope = in.envelope.cwiseProduct(v.samples.cast<std::complex<double>>());
    out.modulation_mhz = v.omega_mhz;
    return out;
}

SidebandSpectrum sideband_spectrum(const OpticalField& field, const SpectrumOptions& opts) {
    const auto n = field.envelope.size();
    if (n == 0) throw std::invalid_argument("sideband_spectrum: empty field");
    if (field.modulation_mhz > 0.0 &&
        field.duration_ns() * field.modulation_mhz * 1e-3 < static_cast<double>(opts.min_periods) - 1e-9)
        throw std::invalid_argument("sideband_spectrum: too few microwave periods for resolution");

    Eigen::FFT<double> fft;
    Eigen::VectorXcd spec(n);
    fft.fwd(spec, field.envelope);

    const double nd = static_cast<double>(n);
    const Eigen::VectorXd mag = spec.cwiseAbs() / nd;
    const Eigen::VectorXd pow = mag.cwiseAbs2();

    SidebandSpectrum out;
    out.time_power = field.envelope.squaredNorm() / nd;
    out.spectral_power = pow.sum();

    const double bin = field.sample_rate_per_ns * 1e3 / nd;
    const double floor = opts.line_threshold * mag.maxCoeff();
    double in_lines = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double m = mag[k];
        if (!(m > floor)) continue;
        if (n > 1 && (m < mag[(k + n - 1) % n] || m < mag[(k + 1) % n])) continue;
        const double f = (2 * k <= n ? static_cast<double>(k) : static_cast<double>(k - n)) * bin;
        const double ph = std::remainder(std::arg(spec[k]) - two_pi * f * field.t0_ns * 1e-3, two_pi);
        out.lines.push_back({f, m, ph});
        in_lines += pow[k];
    }
    std::stable_sort(out.lines.begin(), out.lines.end(),
                     [](const SpectralLine& a, const SpectralLine& b) { return a.magnitude > b.magnitude; });
    out.leakage = out.spectral_power > 0.0 ? std::max(0.0, 1.0 - in_lines / out.spectral_power) : 0.0;
    out.leaked = out.leakage > opts.leakage_tolerance;
    return out;
}

const SpectralLine& line_at(const SidebandSpectrum& s, double offset_mhz, double bin_mhz) {
    const SpectralLine* best = nullptr;
    for (const auto& l : s.lines)
        if (std::abs(l.offset_mhz - offset_mhz) <= 0.5 * bin_mhz &&
            (!best || std::abs(l.offset_mhz - offset_mhz) < std::abs(best->offset_mhz - offset_mhz)))
            best = &l;
    if (!best) throw std::out_of_range("line_at: no line at the requested offset");
    return *best;
}

double RamanParams::two_photon_detuning_mhz() const { return electron_zeeman_ghz * 1e3 - 2.0 * microwave_mhz; }

std::vector<std::string> RamanParams::validate() const {
    if (!std::isfinite(omega_l_mhz) || !std::isfinite(detuning_ghz) || !std::isfinite(hole_zeeman_ghz))
        throw std::invalid_argument("RamanParams: non-finite parameter");
    if (!(std::abs(hole_zeeman_ghz) / 2.0 < detuning_ghz))
        throw std::invalid_argument("RamanParams: single-photon detuning must exceed half the hole splitting");
    std::vector<std::string> warnings;
    const double r = omega_l_mhz / (detuning_ghz * 1e3);
    if (r * r > 1e-2) warnings.push_back("RamanParams: (Omega_L/Delta)^2 above 1e-2, adiabatic elimination is poor");
    return warnings;
}

double effective_esr_rabi(const RamanParams& p) {
    p.validate();
    const double ol2 = p.omega_l_mhz * p.omega_l_mhz;
    const double d = p.detuning_ghz * 1e3;
    const double h = 0.5 * p.hole_zeeman_ghz * 1e3;
    return ol2 / (2.0 * (d + h)) + ol2 / (2.0 * (d - h));
}

double power_to_rabi(double power_uw, double mhz_per_uw) {
    if (!(power_uw >= 0.0)) throw std::invalid_argument("power_to_rabi: power must be >= 0");
    return mhz_per_uw * power_uw;
}

} // namespace oesr
