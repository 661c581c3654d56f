#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "oesr/analysis.hpp"
#include "oesr/quadrature.hpp"
#include "oesr/sequence.hpp"

using namespace oesr;
using cd = std::complex<double>;

namespace {

// Closed-form SU(2) rotation for a rectangular pulse: no solver involved.
Eigen::Matrix2cd su2(double omega_mhz, double phase, double detuning_mhz, double t_ns) {
    const double wx = two_pi * omega_mhz * std::cos(phase);
    const double wy = two_pi * omega_mhz * std::sin(phase);
    const double wz = two_pi * detuning_mhz;
    const double w = std::sqrt(wx * wx + wy * wy + wz * wz);
    const double half = w * t_ns * 1e-3 / 2;
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity() * std::cos(half);
    if (w > 0) {
        Eigen::Matrix2cd ns;
        ns << wz / w, cd(wx / w, -wy / w), cd(wx / w, wy / w), -wz / w;
        u -= cd(0, 1) * std::sin(half) * ns;
    }
    return u;
}

double p_down(const Eigen::Matrix2cd& u) { return std::norm(u(1, 0)); }

std::vector<Duration> grid_ns(double t_end, std::size_t n) { return uniform_times(Duration::ns(t_end), n); }

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

Dissipation drive_relaxation(double alpha, double gamma2_per_us) {
    Dissipation d;
    d.relax = RelaxationParams::drive_proportional(alpha, Rate::per_us(gamma2_per_us));
    return d;
}

} // namespace

TEST_CASE("Gauss-Hermite rule") {
    const auto r = gauss_hermite(31);
    CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(std::sqrt(pi)).epsilon(1e-13));
    // E[x^2] under exp(-x^2)/sqrt(pi) is 1/2, E[x^4] is 3/4.
    double m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < 31; ++i) {
        m2 += r.weights[i] * std::pow(r.nodes[i], 2) / std::sqrt(pi);
        m4 += r.weights[i] * std::pow(r.nodes[i], 4) / std::sqrt(pi);
    }
    CHECK(m2 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(gauss_hermite(1).nodes[0] == 0.0);
    CHECK_THROWS(gauss_hermite(0));
}

TEST_CASE("ensemble construction") {
    CHECK(OverhauserEnsemble::none().nodes().size() == 1);
    CHECK(OverhauserEnsemble::gauss_hermite(Frequency{}, 31).nodes().size() == 1);
    CHECK_THROWS(OverhauserEnsemble::gauss_hermite(Frequency::mhz(-1)));
    CHECK_THROWS(OverhauserEnsemble::gauss_hermite(Frequency::mhz(1), 0));

    for (bool stratified : {true, false}) {
        const auto nodes = OverhauserEnsemble::monte_carlo(Frequency::mhz(4.8), 200000, 9, stratified).nodes();
        double m1 = 0, m2 = 0;
        for (const auto& n : nodes) {
            m1 += n.weight * n.shift.mhz();
            m2 += n.weight * n.shift.mhz() * n.shift.mhz();
        }
        CHECK(std::abs(m1) < 0.05);
        CHECK(std::sqrt(m2) == doctest::Approx(4.8).epsilon(0.01));
    }
    // Counter-based: a sample depends only on (seed, index).
    const auto a = OverhauserEnsemble::monte_carlo(Frequency::mhz(1), 100, 3, false).nodes();
    const auto b = OverhauserEnsemble::monte_carlo(Frequency::mhz(1), 200, 3, false).nodes();
    for (std::size_t i = 0; i < 100; ++i) CHECK(a[i].shift == b[i].shift);
}

TEST_CASE("basic sequences") {
    const auto none = OverhauserEnsemble::none();
    const Frequency w = Frequency::mhz(100);

    PulseSequence pi_pulse{{Segment::pulse(Duration::ns(5), w)}};
    CHECK(run_sequence(pi_pulse, Dissipation::none(), none).p_down[0] == doctest::Approx(1.0).epsilon(1e-9));

    PulseSequence add{{Segment::rotation(pi / 2, w), Segment::rotation(pi / 2, w)}};
    CHECK(run_sequence(add, Dissipation::none(), none).p_down[0] == doctest::Approx(1.0).epsilon(1e-9));

    PulseSequence cancel{{Segment::rotation(pi / 2, w), Segment::rotation(pi / 2, w, pi)}};
    CHECK(run_sequence(cancel, Dissipation::none(), none).p_down[0] < 1e-8);

    CHECK_THROWS(run_sequence(PulseSequence{}, Dissipation::none(), none));
    Segment bad = Segment::delay(Duration::ns(1));
    bad.omega = w;
    CHECK_THROWS(run_sequence(PulseSequence{{bad}}, Dissipation::none(), none));
}

TEST_CASE("solver errors carry the segment index") {
    Dissipation d;
    d.nuclear = [](const DriveParams& drive, Duration) {
        return drive.phase > 1.0 ? RateFunction::tabulated(Duration::ns(100), {-50.0, -50.0}) : RateFunction{};
    };
    PulseSequence seq{{Segment::rotation(pi / 2, Frequency::mhz(1)), Segment::pulse(Duration::us(1), Frequency::mhz(1), 2.0)}};
    try {
        run_sequence(seq, d, OverhauserEnsemble::none());
        FAIL("expected a solver error");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("segment 1") != std::string::npos);
    }
}

TEST_CASE("sigma = 0 ensemble equals a single run") {
    const auto diss = drive_relaxation(2.7e-2, 1 / 2.8);
    PulseSequence seq{{Segment::rotation(pi / 2, Frequency::mhz(30)), Segment::delay(Duration::ns(20), Frequency::mhz(2)),
                       Segment::rotation(pi / 3, Frequency::mhz(30), 1.1)}};
    const double single = run_member(seq, diss, Frequency{}).p_down();
    CHECK(run_sequence(seq, diss, OverhauserEnsemble::gauss_hermite(Frequency{}, 31)).p_down[0] == single);
    CHECK(run_sequence(seq, diss, OverhauserEnsemble::monte_carlo(Frequency{}, 10, 1)).p_down[0] == single);
}

TEST_CASE("Rabi decay time at high power") {
    const Frequency w = Frequency::mhz(95);
    const double tpi = pi_time(w).ns();
    const auto t = grid_ns(100 * tpi, 100 * 40 + 1);
    const auto res = run_rabi(w, Frequency{}, t, drive_relaxation(2.7e-2, 0.0), OverhauserEnsemble::none());
    const auto tau = one_over_e_time(visibility_per_pi(res.grid, res.p_down, w));
    const double expected_ns = 1e3 / (1.5 * drive_proportional_rate(2.7e-2, w).per_us());
    CHECK(tau.tau_ns == doctest::Approx(expected_ns).epsilon(0.03));
}

TEST_CASE("detuned Rabi amplitude") {
    for (double f : {7.0, 23.0}) {
        const Frequency w = Frequency::mhz(f);
        const auto res = run_rabi(w, w, grid_ns(1e3 / f, 2001), Dissipation::none(), OverhauserEnsemble::none());
        CHECK(*std::max_element(res.p_down.begin(), res.p_down.end()) == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("low-power pi-pulse fidelity is limited by the Overhauser spread") {
    const auto ens = OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8));
    const double f10 = pi_pulse_population(Frequency::mhz(10), Dissipation::none(), ens);
    const double f5 = pi_pulse_population(Frequency::mhz(5), Dissipation::none(), ens);
    MESSAGE("pi-pulse population at 10 MHz: " << f10 << ", at 5 MHz: " << f5);
    CHECK(f10 == doctest::Approx(0.8).epsilon(0.05 / 0.8));
    CHECK(f5 == doctest::Approx(0.6).epsilon(0.1 / 0.6));
}

TEST_CASE("Ramsey fringes") {
    const auto tau = grid_ns(150, 151);
    RamseyOptions ideal;
    ideal.ideal_pulses = true;
    const auto ens = OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8));

    const auto plus = run_ramsey(Frequency::mhz(50), tau, 0.0, Dissipation::none(), ens, ideal);
    const auto fit = fit_ramsey_gaussian(plus.grid, plus.p_down);
    REQUIRE(fit.success);
    CHECK(fit.value("t2star_ns") == doctest::Approx(t2star_from_sigma(Frequency::mhz(4.8))).epsilon(0.01));

    const auto minus = run_ramsey(Frequency::mhz(50), tau, pi, Dissipation::none(), ens, ideal);
    for (std::size_t i = 0; i < tau.size(); ++i) CHECK(plus.p_down[i] + minus.p_down[i] == doctest::Approx(1.0).epsilon(1e-9));

    const auto flat = run_ramsey(Frequency::mhz(50), tau, 0.0, Dissipation::none(), OverhauserEnsemble::none());
    for (double p : flat.p_down) CHECK(p == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phase scan") {
    const auto phi = linspace(0, 2 * pi, 73);
    const auto res = run_phase_scan(Frequency::mhz(13), phi, Frequency{}, Dissipation::none(), OverhauserEnsemble::none());
    CHECK(res.p_down.front() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.p_down[36] < 1e-9);
    const auto fit = fit_sinusoid(phi, res.p_down);
    CHECK(2 * fit.amplitude == doctest::Approx(1.0).epsilon(1e-3));

    // Four pi gives two periods.
    const auto phi4 = linspace(0, 4 * pi, 401);
    const auto r4 = run_phase_scan(Frequency::mhz(13), phi4, Frequency{}, Dissipation::none(), OverhauserEnsemble::none());
    int maxima = 0;
    for (std::size_t i = 0; i + 1 < phi4.size(); ++i)
        if (r4.p_down[i] > 1 - 1e-9) ++maxima;
    CHECK(maxima == 2);
    CHECK(fit_sinusoid(phi4, r4.p_down).residual_rms < 1e-9);
}

TEST_CASE("phase-scan fringe offset under detuning matches a brute-force oracle") {
    const double omega = 13.0, delta = 3.5;
    const double t_half = 1e3 / (4 * omega);
    // Oracle: dense scan of the closed-form SU(2) product.
    double best_phi = 0, best = -1;
    for (int i = 0; i < 200000; ++i) {
        const double phi = -pi + two_pi * i / 200000.0;
        const double p = p_down(su2(omega, phi, delta, t_half) * su2(omega, 0, delta, t_half));
        if (p > best) {
            best = p;
            best_phi = phi;
        }
    }
    const auto phi = linspace(0, 2 * pi, 37);
    const auto res = run_phase_scan(Frequency::mhz(omega), phi, Frequency::mhz(delta), Dissipation::none(),
                                    OverhauserEnsemble::none());
    const auto fit = fit_sinusoid(phi, res.p_down);
    double offset = std::remainder(pi / 2 - fit.phase, two_pi);
    MESSAGE("fringe offset " << offset << " rad, oracle " << best_phi << " rad");
    CHECK(std::abs(best_phi) > 0.05);
    CHECK(offset == doctest::Approx(best_phi).epsilon(0.01));
}

TEST_CASE("time-reversed, phase-inverted sequences give the same readout") {
    const Frequency shift = Frequency::mhz(1.7);
    PulseSequence fwd{{Segment::pulse(Duration::ns(13), Frequency::mhz(20), 0.4, Frequency::mhz(1)),
                       Segment::delay(Duration::ns(31), Frequency::mhz(-2)),
                       Segment::pulse(Duration::ns(7), Frequency::mhz(35), 2.1),
                       Segment::pulse(Duration::ns(19), Frequency::mhz(9), 5.0, Frequency::mhz(0.5))}};
    PulseSequence rev;
    for (auto it = fwd.segments.rbegin(); it != fwd.segments.rend(); ++it) {
        Segment s = *it;
        s.phase = DriveParams::reduce_phase(-s.phase);
        rev.segments.push_back(s);
    }
    CHECK(run_member(fwd, Dissipation::none(), shift).p_down() ==
          doctest::Approx(run_member(rev, Dissipation::none(), shift).p_down()).epsilon(1e-10));
    const auto ens = OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8));
    CHECK(run_sequence(fwd, Dissipation::none(), ens).p_down[0] ==
          doctest::Approx(run_sequence(rev, Dissipation::none(), ens).p_down[0]).epsilon(1e-10));

    // Solver against the closed-form SU(2) product.
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const auto& s : fwd.segments)
        u = su2(s.omega.mhz(), s.phase, s.delta.mhz() + shift.mhz(), s.duration.ns()) * u;
    CHECK(run_member(fwd, Dissipation::none(), shift).p_down() == doctest::Approx(p_down(u)).epsilon(1e-9));
}

TEST_CASE("spin lock without dissipation keeps full visibility") {
    const auto T = grid_ns(2000, 5);
    const auto phi = linspace(0, 4 * pi, 33);
    const auto res = run_spinlock(Frequency::mhz(16), T, phi, Dissipation::none(), OverhauserEnsemble::none());
    for (std::size_t i = 0; i < T.size(); ++i) {
        CHECK_FALSE(res.fit_failed[i]);
        CHECK(res.visibility[i] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("spin-lock fit failure is flagged below the noise floor") {
    // A 1 us lock with very strong dephasing leaves no fringe.
    Dissipation d;
    d.relax = RelaxationParams::fixed(Rate::per_us(20), Rate{});
    const std::vector<Duration> T{Duration::us(1)};
    const auto phi = linspace(0, 2 * pi, 9);
    const auto res = run_spinlock(Frequency::mhz(16), T, phi, d, OverhauserEnsemble::none());
    CHECK(res.fit_failed[0]);
}

TEST_CASE("spin lock decay at 16 MHz") {
    const auto T = grid_ns(6000, 13);
    const auto phi = linspace(0, 4 * pi, 17);
    const auto res = run_spinlock(Frequency::mhz(16), T, phi, drive_relaxation(2.7e-2, 1 / 2.8),
                                  OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8)));
    const auto fit = fit_exponential(res.lock_times_ns, res.visibility);
    REQUIRE(fit.success);
    MESSAGE("spin-lock tau = " << fit.value("tau") << " ns");
    CHECK(fit.value("tau") == doctest::Approx(2300.0).epsilon(0.15));
}

TEST_CASE("locked population shows small residual oscillations near the drive frequency") {
    const Frequency w = Frequency::mhz(11);
    const auto T = grid_ns(600, 1201);
    const auto res = run_spinlock_trace(w, T, Dissipation::none(), OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8)));
    // Project the detrended trace on sinusoids and locate the strongest line.
    const double mean = std::accumulate(res.p_down.begin(), res.p_down.end(), 0.0) / res.p_down.size();
    double best_f = 0, best_power = 0, amplitude = 0;
    for (double f = 3; f <= 30; f += 0.05) {
        cd acc = 0;
        for (std::size_t i = 0; i < T.size(); ++i)
            acc += (res.p_down[i] - mean) * std::exp(cd(0, -two_pi * f * T[i].us()));
        const double power = std::norm(acc);
        if (power > best_power) {
            best_power = power;
            best_f = f;
            amplitude = 2 * std::abs(acc) / T.size();
        }
    }
    MESSAGE("residual line at " << best_f << " MHz, amplitude " << amplitude);
    CHECK(best_f == doctest::Approx(11.0).epsilon(0.2));
    CHECK(amplitude > 1e-3);
    CHECK(amplitude < 0.1);
}

TEST_CASE("spin-lock visibility beats Rabi visibility at equal drive and time") {
    for (double f : {8.0, 12.0, 16.0}) {
        for (double sigma : {2.0, 4.8}) {
            const Frequency w = Frequency::mhz(f);
            const double tpi = pi_time(w).ns();
            const auto ens = OverhauserEnsemble::gauss_hermite(Frequency::mhz(sigma));
            const auto diss = drive_relaxation(2.7e-2, 1 / 2.8);
            const std::size_t windows = 24;
            const auto rabi = run_rabi(w, Frequency{}, grid_ns(windows * tpi, windows * 40 + 1), diss, ens);
            const auto vis = visibility_per_pi(rabi.grid, rabi.p_down, w);
            for (std::size_t k : {5ul, 11ul, 23ul}) {
                const double total = vis.t_ns[k] + tpi / 2;
                const std::vector<Duration> T{Duration::ns(total - tpi)};
                const auto lock = run_spinlock(w, T, linspace(0, 2 * pi, 9), diss, ens);
                CHECK(lock.visibility[0] >= vis.visibility[k]);
            }
        }
    }
}

namespace {

double worst_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

void compare_ensembles(const OverhauserEnsemble& gh, const OverhauserEnsemble& mc, double span_ns) {
    const auto diss = drive_relaxation(2.7e-2, 1 / 2.8);
    const auto t = grid_ns(span_ns, 41);
    CHECK(worst_gap(run_rabi(Frequency::mhz(10), Frequency{}, t, diss, gh).p_down,
                    run_rabi(Frequency::mhz(10), Frequency{}, t, diss, mc).p_down) < 2e-3);

    const auto tau = grid_ns(span_ns, 31);
    CHECK(worst_gap(run_ramsey(Frequency::mhz(40), tau, 0.0, diss, gh).p_down,
                    run_ramsey(Frequency::mhz(40), tau, 0.0, diss, mc).p_down) < 2e-3);

    const auto phi = linspace(0, 2 * pi, 9);
    CHECK(worst_gap(run_phase_scan(Frequency::mhz(13), phi, Frequency::mhz(3.5), diss, gh).p_down,
                    run_phase_scan(Frequency::mhz(13), phi, Frequency::mhz(3.5), diss, mc).p_down) < 2e-3);

    const std::vector<Duration> T{Duration::ns(span_ns / 3), Duration::ns(span_ns)};
    const auto phi_lock = linspace(0, 2 * pi, 5);
    const auto a = run_spinlock(Frequency::mhz(11), T, phi_lock, diss, gh);
    const auto b = run_spinlock(Frequency::mhz(11), T, phi_lock, diss, mc);
    for (std::size_t i = 0; i < T.size(); ++i) CHECK(worst_gap(a.fringes[i], b.fringes[i]) < 2e-3);
}

} // namespace

TEST_CASE("Gauss-Hermite and Monte-Carlo ensembles agree") {
    const Frequency sigma = Frequency::mhz(4.8);
    const auto mc = OverhauserEnsemble::monte_carlo(sigma, 100000, 12345);
    // n nodes follow a phase 2 pi Delta T while (2 pi sigma T)^2 <= n.
    SUBCASE("default 31 nodes") { compare_ensembles(OverhauserEnsemble::gauss_hermite(sigma, 31), mc, 180); }
    SUBCASE("20 nodes") { compare_ensembles(OverhauserEnsemble::gauss_hermite(sigma, 20), mc, 140); }
    SUBCASE("longer sequences with a resolving node count") {
        const auto gh = OverhauserEnsemble::gauss_hermite_resolving(sigma, Duration::ns(500));
        CHECK(std::get<GaussHermite>(gh.scheme).nodes > 31);
        compare_ensembles(gh, mc, 500);
    }
    SUBCASE("plain Monte-Carlo sampling") {
        // Unstratified draws: standard error about 1.6e-3, so compare a smooth quantity.
        const auto plain = OverhauserEnsemble::monte_carlo(sigma, 400000, 777, false);
        const auto t = grid_ns(100, 11);
        const auto diss = drive_relaxation(2.7e-2, 1 / 2.8);
        CHECK(worst_gap(run_rabi(Frequency::mhz(10), Frequency{}, t, diss, OverhauserEnsemble::gauss_hermite(sigma)).p_down,
                        run_rabi(Frequency::mhz(10), Frequency{}, t, diss, plain).p_down) < 2e-3);
    }
}

TEST_CASE("results do not depend on the thread count") {
    const auto t = grid_ns(200, 21);
    const auto ens = OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8));
    const auto a = run_rabi(Frequency::mhz(10), Frequency{}, t, drive_relaxation(2.7e-2, 0.3), ens, {1});
    const auto b = run_rabi(Frequency::mhz(10), Frequency{}, t, drive_relaxation(2.7e-2, 0.3), ens, {4});
    CHECK(a.p_down == b.p_down);
    CHECK(a.spread == b.spread);
}
