#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "oesr/errors.hpp"
#include "oesr/waveform.hpp"

using namespace oesr;

namespace {

constexpr double pi = std::numbers::pi;

// Composite Simpson projection of the held waveform onto e^{-i w t}, cell by cell.
std::complex<double> simpson_fundamental(const MicrowaveWaveform& w, int sub = 200) {
    const double om = 2 * pi * w.omega_mhz * 1e-3;
    const double h = 1.0 / w.sample_rate_per_ns;
    const double dx = h / sub;
    std::complex<double> acc = 0.0;
    for (Eigen::Index k = 0; k < w.samples.size(); ++k) {
        const double t0 = static_cast<double>(k) * h;
        std::complex<double> cell = 0.0;
        for (int j = 0; j <= sub; ++j) {
            const double c = (j == 0 || j == sub) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            cell += c * std::polar(1.0, -om * (t0 + j * dx));
        }
        acc += w.samples[k] * cell * dx / 3.0;
    }
    return 2.0 * acc / w.duration_ns();
}

double programmed_phase(const MicrowaveWaveform& w) { return -std::arg(fundamental(w)); }

double wrap(double x) { return std::remainder(x, 2 * pi); }

// lower-minus-upper sideband phase of a field modulated at omega
double sideband_relative_phase(const OpticalField& f, double omega) {
    const auto s = sideband_spectrum(f);
    const double bin = f.sample_rate_per_ns * 1e3 / static_cast<double>(f.envelope.size());
    return wrap(line_at(s, -omega, bin).phase_rad - line_at(s, omega, bin).phase_rad);
}

} // namespace

TEST_CASE("quadrature synthesis sets the fundamental phase") {
    const double om = 250.0;

    SUBCASE("a1 = 0 gives phase 0") {
        auto w = synth_quadrature(0.0, 1.0, om, 4);
        CHECK(std::abs(programmed_phase(w)) < 1e-12);
    }
    SUBCASE("a1 = a2 gives pi/4") {
        auto w = synth_quadrature(0.7, 0.7, om, 4);
        CHECK(programmed_phase(w) == doctest::Approx(pi / 4).epsilon(1e-12));
    }
    SUBCASE("a1 = 1, a2 = sqrt 3 against a Simpson projection") {
        auto w = synth_quadrature(1.0, std::sqrt(3.0), om, 8);
        const auto c = simpson_fundamental(w);
        CHECK(std::abs(-std::arg(c) - pi / 6) < 1e-9);
        CHECK(std::abs(programmed_phase(w) - pi / 6) < 1e-9);
        CHECK(w.phase_rad == doctest::Approx(pi / 6));
    }
    SUBCASE("fundamental amplitude is the square-wave coefficient") {
        for (double a1 : {0.0, 0.3, 1.0, 2.5})
            for (double a2 : {0.0, 0.4, 1.0}) {
                if (a1 == 0.0 && a2 == 0.0) continue;
                auto w = synth_quadrature(a1, a2, om, 3);
                const double expect = 4.0 / pi * std::hypot(a1, a2);
                CHECK(std::abs(std::abs(simpson_fundamental(w)) - expect) < 1e-9);
                CHECK(std::abs(std::abs(fundamental(w)) - expect) < 1e-9);
                CHECK(std::abs(programmed_phase(w) - std::atan2(a1, a2)) < 1e-9);
            }
    }
    SUBCASE("four samples per period, frequency as requested") {
        auto w = synth_quadrature(1.0, 2.0, om, 5);
        CHECK(w.samples_per_period() == 4);
        CHECK(w.samples.size() == 20);
        CHECK(w.sample_rate_per_ns == doctest::Approx(1.0));
        CHECK(std::abs(std::tan(w.phase_rad) - 0.5) < 1e-12);
    }
    SUBCASE("hold resampling leaves the continuous waveform unchanged") {
        auto w = synth_quadrature(0.3, 0.9, om, 2);
        auto r = hold_resample(w, 16);
        CHECK(std::abs(fundamental(r) - fundamental(w)) < 1e-12);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(synth_quadrature(0.0, 0.0, om, 4), std::invalid_argument);
        CHECK_THROWS_AS(synth_quadrature(-1.0, 1.0, om, 4), std::invalid_argument);
        CHECK_THROWS_AS(synth_quadrature(1.0, 1.0, 0.0, 4), std::invalid_argument);
    }
}

TEST_CASE("modulation of a monochromatic carrier") {
    const double om = 100.0;
    const std::size_t spp = 16;

    SUBCASE("pure sine gives two equal sidebands and no carrier") {
        const double a = 0.05, e0 = 2.0;
        auto v = sine_wave(a, om, 0.3, 32, spp);
        auto f = modulate(monochromatic(e0, 400e3, v.sample_rate_per_ns, v.samples.size()), v);
        auto s = sideband_spectrum(f);
        REQUIRE(s.lines.size() == 2);
        CHECK(std::abs(std::abs(s.lines[0].offset_mhz) - om) < 1e-9);
        CHECK(s.lines[0].offset_mhz == doctest::Approx(-s.lines[1].offset_mhz));
        CHECK(s.lines[0].magnitude == doctest::Approx(a * e0 / 2).epsilon(1e-12));
        CHECK(s.lines[1].magnitude == doctest::Approx(a * e0 / 2).epsilon(1e-12));
        CHECK_FALSE(s.leaked);
        CHECK(std::abs(f.envelope.mean()) < 1e-12);
        CHECK(f.modulation_mhz == om);
    }
    SUBCASE("square drive puts odd harmonics at a third") {
        auto v = hold_resample(synth_quadrature(0.0, 0.02, om, 32), 64);
        auto f = modulate(monochromatic(1.0, 400e3, v.sample_rate_per_ns, v.samples.size()), v);
        auto s = sideband_spectrum(f);
        const double bin = f.sample_rate_per_ns * 1e3 / static_cast<double>(f.envelope.size());
        const double m1 = line_at(s, om, bin).magnitude;
        CHECK(line_at(s, -om, bin).magnitude == doctest::Approx(m1).epsilon(1e-12));
        CHECK(line_at(s, 3 * om, bin).magnitude / m1 == doctest::Approx(1.0 / 3).epsilon(1e-3));
        CHECK(line_at(s, -3 * om, bin).magnitude / m1 == doctest::Approx(1.0 / 3).epsilon(1e-3));
        CHECK(line_at(s, 5 * om, bin).magnitude / m1 == doctest::Approx(1.0 / 5).epsilon(1e-3));
        CHECK_THROWS_AS(line_at(s, 2 * om, bin), std::out_of_range);
    }
    SUBCASE("lines sorted by magnitude") {
        auto v = hold_resample(synth_quadrature(0.01, 0.02, om, 16), 8);
        auto f = modulate(monochromatic(1.0, 400e3, v.sample_rate_per_ns, v.samples.size()), v);
        auto s = sideband_spectrum(f);
        for (std::size_t i = 1; i < s.lines.size(); ++i) CHECK(s.lines[i - 1].magnitude >= s.lines[i].magnitude);
    }
    SUBCASE("grid mismatch and amplitude ceiling") {
        auto v = sine_wave(0.05, om, 0.0, 16, spp);
        CHECK_THROWS_AS(modulate(monochromatic(1.0, 0.0, v.sample_rate_per_ns, v.samples.size() - 1), v),
                        std::invalid_argument);
        CHECK_THROWS_AS(modulate(monochromatic(1.0, 0.0, 2 * v.sample_rate_per_ns, v.samples.size()), v),
                        std::invalid_argument);
        auto big = sine_wave(0.5, om, 0.0, 16, spp);
        CHECK_THROWS_AS(modulate(monochromatic(1.0, 0.0, big.sample_rate_per_ns, big.samples.size()), big),
                        UnsupportedRegime);
        CHECK_NOTHROW(modulate(monochromatic(1.0, 0.0, big.sample_rate_per_ns, big.samples.size()), big,
                               ModulateOptions{1.0}));
    }
}

TEST_CASE("sideband relative phase doubles the microwave phase step") {
    const double om = 80.0;
    const std::size_t spp = 16, periods = 32;
    const double phi0 = 0.37;
    double worst = 0.0;
    for (int j = 0; j < 64; ++j) {
        const double dphi = 2 * pi * j / 64.0;
        auto v = concatenate(sine_wave(0.05, om, phi0, periods, spp), sine_wave(0.05, om, phi0 + dphi, periods, spp));
        auto f = modulate(monochromatic(1.0, 400e3, v.sample_rate_per_ns, v.samples.size()), v);
        const std::size_t half = periods * spp;
        const double before = sideband_relative_phase(f.slice(0, half), om);
        const double after = sideband_relative_phase(f.slice(half, half), om);
        worst = std::max(worst, std::abs(wrap(after - before - 2 * dphi)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("programmed quadrature phase reaches the sidebands doubled") {
    const double om = 120.0;
    for (double phi : {0.0, 0.2, pi / 6, pi / 4, 1.3}) {
        auto drive = filtered(synth_quadrature(0.01 * std::sin(phi), 0.01 * std::cos(phi), om, 32), 12);
        auto f = modulate(monochromatic(1.0, 400e3, drive.sample_rate_per_ns, drive.samples.size()), drive);
        CHECK(std::abs(wrap(sideband_relative_phase(f, om) - 2 * phi)) < 1e-9);
    }
}

TEST_CASE("spectrum bookkeeping") {
    const double om = 50.0;
    auto v = hold_resample(synth_quadrature(0.01, 0.03, om, 20), 10);
    auto f = modulate(monochromatic(1.5, 400e3, v.sample_rate_per_ns, v.samples.size()), v);

    SUBCASE("Parseval") {
        auto s = sideband_spectrum(f);
        CHECK(std::abs(s.spectral_power - s.time_power) <= 1e-9 * s.time_power);
    }
    SUBCASE("a window that cuts a period leaks") {
        auto s = sideband_spectrum(f.slice(0, 17 * 40 + 13));
        CHECK(s.leaked);
        CHECK(s.leakage > 1e-3);
        CHECK_FALSE(sideband_spectrum(f).leaked);
    }
    SUBCASE("too few periods") {
        CHECK_THROWS_AS(sideband_spectrum(f.slice(0, 15 * 40)), std::invalid_argument);
        CHECK_NOTHROW(sideband_spectrum(f.slice(0, 16 * 40)));
    }
    SUBCASE("time origin is carried by slices") {
        auto a = sideband_spectrum(f.slice(0, 16 * 40));
        auto b = sideband_spectrum(f.slice(3 * 40 + 7, 16 * 40));
        const double bin = f.sample_rate_per_ns * 1e3 / (16.0 * 40.0);
        CHECK(std::abs(wrap(line_at(a, om, bin).phase_rad - line_at(b, om, bin).phase_rad)) < 1e-9);
    }
}

TEST_CASE("two-photon Rabi frequency") {
    RamanParams p;
    p.omega_l_mhz = 3000.0;
    p.detuning_ghz = 700.0;

    SUBCASE("no hole splitting") {
        p.hole_zeeman_ghz = 0.0;
        CHECK(effective_esr_rabi(p) == doctest::Approx(3000.0 * 3000.0 / 700e3).epsilon(1e-15));
    }
    SUBCASE("700 GHz detuning, 7 GHz hole splitting") {
        p.hole_zeeman_ghz = 7.0;
        const double limit = 3000.0 * 3000.0 / 700e3;
        const double rel = effective_esr_rabi(p) / limit - 1.0;
        CHECK(rel > 0.0);
        CHECK(rel < 1e-4);
        const double x2 = std::pow(7.0 / (2 * 700.0), 2);
        CHECK(rel == doctest::Approx(x2 / (1 - x2)).epsilon(1e-8));
    }
    SUBCASE("invariant under hole splitting sign") {
        p.hole_zeeman_ghz = 40.0;
        const double a = effective_esr_rabi(p);
        p.hole_zeeman_ghz = -40.0;
        CHECK(effective_esr_rabi(p) == doctest::Approx(a).epsilon(1e-15));
    }
    SUBCASE("resonance crossing") {
        p.hole_zeeman_ghz = 1400.0;
        CHECK_THROWS_AS(effective_esr_rabi(p), std::invalid_argument);
        p.hole_zeeman_ghz = 2000.0;
        CHECK_THROWS_AS(effective_esr_rabi(p), std::invalid_argument);
    }
    SUBCASE("adiabatic warning") {
        CHECK(p.validate().empty());
        p.omega_l_mhz = 80e3;
        CHECK(p.validate().size() == 1);
    }
    SUBCASE("two-photon detuning") {
        p.electron_zeeman_ghz = 24.5;
        p.microwave_mhz = 12240.0;
        CHECK(p.two_photon_detuning_mhz() == doctest::Approx(20.0));
    }
}

TEST_CASE("power calibration") {
    CHECK(power_to_rabi(0.0) == 0.0);
    CHECK(power_to_rabi(1.0) == doctest::Approx(13.4));
    CHECK(power_to_rabi(11.5) == doctest::Approx(154.1));
    CHECK(power_to_rabi(2.0, 10.0) == doctest::Approx(20.0));
    CHECK_THROWS_AS(power_to_rabi(-0.1), std::invalid_argument);
}
