#pragma once

// Microwave synthesis, EOM sideband generation and the two-photon Rabi
// frequency. Microwave frequencies in MHz, sample rates in samples/ns,
// times in ns. The optical carrier is kept symbolic (complex envelope).

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oesr {

/// Real drive voltage in units of V_pi. Sample k is held over [k, k+1)/rate.
struct MicrowaveWaveform {
    double sample_rate_per_ns = 0.0;
    Eigen::VectorXd samples;
    double omega_mhz = 0.0;
    double phase_rad = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;

    std::size_t samples_per_period() const;
    double duration_ns() const;
};

/// Complex envelope in the carrier frame, sampled at t0 + n / rate.
struct OpticalField {
    double carrier_ghz = 0.0;
    double sample_rate_per_ns = 0.0;
    double t0_ns = 0.0;
    Eigen::VectorXcd envelope;
    /// Microwave frequency imprinted by modulate; 0 for a bare carrier.
    double modulation_mhz = 0.0;

    double duration_ns() const;
    /// Sub-range of samples keeping the absolute time origin.
    OpticalField slice(std::size_t first, std::size_t count) const;
};

/// Two channels of square waves a quarter period apart, four samples per
/// period. Fundamental is (4/pi) sqrt(a1^2 + a2^2) cos(w t - atan2(a1, a2)).
MicrowaveWaveform synth_quadrature(double a1, double a2, double omega_mhz, std::size_t n_periods);

/// Complex amplitude c of the held waveform's fundamental, v ~ Re(c e^{i w t}) + ...
std::complex<double> fundamental(const MicrowaveWaveform& w);

/// Zero-order-hold upsampling by an integer factor (same continuous waveform).
MicrowaveWaveform hold_resample(const MicrowaveWaveform& w, std::size_t factor);

/// amplitude cos(w t - phase) sampled at t = k / rate.
MicrowaveWaveform sine_wave(double amplitude, double omega_mhz, double phase_rad, std::size_t n_periods,
                            std::size_t samples_per_period);

/// The filtered drive: fundamental of `w` rendered as a sine.
MicrowaveWaveform filtered(const MicrowaveWaveform& w, std::size_t samples_per_period);

/// Waveform followed by another of the same rate; phase/amplitude fields from `first`.
MicrowaveWaveform concatenate(const MicrowaveWaveform& first, const MicrowaveWaveform& second);

/// Constant envelope on n samples.
OpticalField monochromatic(double amplitude, double carrier_ghz, double sample_rate_per_ns, std::size_t n);

struct ModulateOptions {
    /// Largest |V_in| / V_pi accepted as linear.
    double amplitude_ceiling = 0.1;
};

/// E_out = V_in E_in, pointwise. invalid_argument on a grid mismatch,
/// UnsupportedRegime above the amplitude ceiling.
OpticalField modulate(const OpticalField& in, const MicrowaveWaveform& v, const ModulateOptions& opts = {});

struct SpectralLine {
    double offset_mhz = 0.0;
    /// |c| for the component c e^{i 2 pi f t}.
    double magnitude = 0.0;
    /// arg c, time origin at t = 0.
    double phase_rad = 0.0;
};

struct SidebandSpectrum {
    /// Sorted by magnitude, largest first.
    std::vector<SpectralLine> lines;
    /// Mean |E|^2 over the samples.
    double time_power = 0.0;
    double spectral_power = 0.0;
    /// Fraction of power outside local maxima.
    double leakage = 0.0;
    bool leaked = false;
};

struct SpectrumOptions {
    /// Lines below this fraction of the strongest magnitude are dropped.
    double line_threshold = 1e-9;
    double leakage_tolerance = 1e-6;
    std::size_t min_periods = 16;
};

/// FFT of the envelope. invalid_argument when a modulated field holds fewer
/// than min_periods microwave periods.
SidebandSpectrum sideband_spectrum(const OpticalField& field, const SpectrumOptions& opts = {});

/// Line nearest the given offset; out_of_range if none within half a bin.
const SpectralLine& line_at(const SidebandSpectrum& s, double offset_mhz, double bin_mhz);

struct RamanParams {
    double omega_l_mhz = 0.0;
    double detuning_ghz = 700.0;
    double hole_zeeman_ghz = 0.0;
    double electron_zeeman_ghz = 24.5;
    double microwave_mhz = 12250.0;

    /// omega_e - 2 omega_uw, MHz.
    double two_photon_detuning_mhz() const;
    /// Throws invalid_argument when |omega_h| / 2 >= Delta; warns when (Omega_L / Delta)^2 > 1e-2.
    std::vector<std::string> validate() const;
};

/// Sum of the two Raman paths, Omega_L^2 / (2 (Delta +- omega_h / 2)). MHz.
double effective_esr_rabi(const RamanParams& p);

/// Linear power calibration, MHz per uW.
double power_to_rabi(double power_uw, double mhz_per_uw = 13.4);

} // namespace oesr
