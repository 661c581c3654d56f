#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oesr/analysis.hpp"
#include "oesr/errors.hpp"
#include "oesr/spin_core.hpp"

using namespace oesr;

namespace {

struct Trace {
    std::vector<double> t;
    std::vector<double> p;
};

template <typename F>
Trace sample(double t_end, std::size_t n, F f) {
    Trace tr;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
        tr.t.push_back(t);
        tr.p.push_back(f(t));
    }
    return tr;
}

VisibilityTrace direct_trace(double t_end, std::size_t n, double (*f)(double)) {
    VisibilityTrace v;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
        v.t_ns.push_back(t);
        v.visibility.push_back(f(t));
    }
    return v;
}

} // namespace

TEST_CASE("visibility of an undamped oscillation is one in every window") {
    const Frequency omega = Frequency::mhz(50);   // t_pi = 10 ns
    const auto tr = sample(200.0, 20 * 20 + 1, [](double t) { return 0.5 * (1 - std::cos(two_pi * 0.05 * t)); });
    const auto vis = visibility_per_pi(tr.t, tr.p, omega);
    CHECK(vis.visibility.size() == 20);
    for (double v : vis.visibility) CHECK(std::abs(v - 1.0) < 2e-3);

    // Spacing incommensurate with t_pi: an extremum can sit up to one spacing
    // from the nearest sample, so each side is off by at most (pi dt/t_pi)^2/4.
    const auto off = sample(203.7, 431, [](double t) { return 0.5 * (1 - std::cos(two_pi * 0.05 * t)); });
    const double x = pi * (off.t[1] - off.t[0]) / 10.0;
    for (double v : visibility_per_pi(off.t, off.p, omega).visibility) CHECK(std::abs(v - 1.0) <= x * x / 2);
}

TEST_CASE("visibility of a damped oscillation follows the envelope") {
    const Frequency omega = Frequency::mhz(50);
    const double tau = 80.0;
    const auto tr = sample(200.0, 801, [&](double t) { return 0.5 * (1 - std::exp(-t / tau) * std::cos(two_pi * 0.05 * t)); });
    const auto vis = visibility_per_pi(tr.t, tr.p, omega);
    for (std::size_t k = 0; k < vis.t_ns.size(); ++k)
        CHECK(vis.visibility[k] == doctest::Approx(std::exp(-vis.t_ns[k] / tau)).epsilon(0.02));
}

TEST_CASE("visibility edge cases") {
    const Frequency omega = Frequency::mhz(50);
    const auto flat = sample(100.0, 401, [](double) { return 0.3; });
    for (double v : visibility_per_pi(flat.t, flat.p, omega).visibility) CHECK(v == 0.0);

    const auto sparse = sample(100.0, 101, [](double t) { return std::cos(t); });
    CHECK_THROWS_AS(visibility_per_pi(sparse.t, sparse.p, omega), ResolutionError);
}

TEST_CASE("one-over-e time") {
    const auto e = one_over_e_time(direct_trace(500.0, 501, [](double t) { return std::exp(-t / 100.0); }));
    CHECK_FALSE(e.censored);
    CHECK(e.tau_ns == doctest::Approx(100.0).epsilon(0.01));

    const auto g = one_over_e_time(direct_trace(500.0, 501, [](double t) { return std::exp(-(t / 100.0) * (t / 100.0)); }));
    CHECK(g.tau_ns == doctest::Approx(100.0).epsilon(0.01));

    // First crossing wins on a non-monotonic trace.
    VisibilityTrace bumpy{{0, 10, 20, 30}, {1.0, 0.2, 0.9, 0.1}};
    CHECK(one_over_e_time(bumpy).tau_ns < 10.0);

    const auto c = one_over_e_time(direct_trace(50.0, 51, [](double t) { return std::exp(-t / 100.0); }));
    CHECK(c.censored);
    CHECK(c.tau_ns == doctest::Approx(50.0));
}

TEST_CASE("Q factor and pi fidelity") {
    CHECK(q_factor(100.0, Frequency::mhz(50)) == doctest::Approx(10.0));
    CHECK(pi_fidelity(49.0) == doctest::Approx(0.98990).epsilon(1e-5));
    CHECK(pi_fidelity(1e12) == doctest::Approx(1.0));
    CHECK(pi_fidelity(1.0) == doctest::Approx(0.68394).epsilon(1e-5));
    double prev = 0.5;
    for (double q = 0.05; q < 1e4; q *= 1.3) {
        const double f = pi_fidelity(q);
        CHECK(f > prev);
        CHECK(f < 1.0);
        prev = f;
    }
    CHECK_THROWS(pi_fidelity(0.0));
}

TEST_CASE("closed-form Rabi traces give Q = 4/(3 alpha)") {
    const double alpha = 2.7e-2;
    for (double f = 80.0; f <= 160.0; f += 20.0) {
        const Frequency omega = Frequency::mhz(f);
        const Rate g1 = drive_proportional_rate(alpha, omega);
        const double tpi = pi_time(omega).ns();
        const auto tr = sample(80 * tpi, 80 * 40 + 1, [&](double t) { return 1.0 - analytic_rabi(omega, g1, Duration::ns(t)); });
        const auto tau = one_over_e_time(visibility_per_pi(tr.t, tr.p, omega));
        REQUIRE_FALSE(tau.censored);
        CHECK(q_factor(tau.tau_ns, omega) == doctest::Approx(4.0 / (3.0 * alpha)).epsilon(0.05));
        CHECK(q_factor(tau.tau_ns, omega) == doctest::Approx(4.0 * f / (3.0 * g1.per_us())).epsilon(0.05));
    }
}

TEST_CASE("sigma and T2* conversion") {
    CHECK(sigma_from_t2star(47.2).mhz() == doctest::Approx(4.77).epsilon(5e-3));
    CHECK(sigma_from_t2star(1e15).mhz() < 1e-9);
    CHECK(t2star_from_sigma(Frequency::mhz(4.8)) == doctest::Approx(46.89).epsilon(1e-3));
    CHECK(t2star_from_sigma(sigma_from_t2star(33.3)) == doctest::Approx(33.3));
}

TEST_CASE("Gaussian Ramsey fit") {
    const double t2 = 47.2;
    const auto plus = sample(150.0, 151, [&](double t) { return 0.93 / 2 * (1 + std::exp(-(t / t2) * (t / t2))); });
    const auto fp = fit_ramsey_gaussian(plus.t, plus.p);
    REQUIRE(fp.success);
    CHECK(fp.value("t2star_ns") == doctest::Approx(t2).epsilon(5e-3));
    CHECK(fp.value("rho0") == doctest::Approx(0.93).epsilon(1e-6));
    CHECK(fp.value("sign") == 1.0);

    const auto minus = sample(150.0, 151, [&](double t) { return 0.93 / 2 * (1 - std::exp(-(t / t2) * (t / t2))); });
    const auto fm = fit_ramsey_gaussian(minus.t, minus.p);
    REQUIRE(fm.success);
    CHECK(fm.value("t2star_ns") == doctest::Approx(t2).epsilon(5e-3));
    CHECK(fm.value("sign") == -1.0);

    const auto flat = sample(150.0, 151, [](double) { return 1.0; });
    CHECK_FALSE(fit_ramsey_gaussian(flat.t, flat.p).success);

    // Round trip through sigma.
    const double t10 = t2star_from_sigma(Frequency::mhz(10));
    const auto s10 = sample(60.0, 121, [&](double t) { return 0.5 * (1 + std::exp(-(t / t10) * (t / t10))); });
    const auto f10 = fit_ramsey_gaussian(s10.t, s10.p);
    CHECK(sigma_from_t2star(f10.value("t2star_ns")).mhz() == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("exponential fit") {
    const auto tr = sample(6000.0, 31, [](double t) { return 0.97 * std::exp(-t / 2300.0); });
    const auto fit = fit_exponential(tr.t, tr.p);
    REQUIRE(fit.success);
    CHECK(fit.value("tau") == doctest::Approx(2300.0).epsilon(1e-8));
    CHECK(fit.value("v0") == doctest::Approx(0.97).epsilon(1e-8));
    CHECK(fit.error("tau") < 1e-6);

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    double mean_tau = 0.0;
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        auto noisy = tr;
        for (auto& v : noisy.p) v += noise(rng);
        const auto nf = fit_exponential(noisy.t, noisy.p);
        REQUIRE(nf.success);
        CHECK(nf.error("tau") > 0.0);
        mean_tau += nf.value("tau") / runs;
    }
    CHECK(std::abs(mean_tau / 2300.0 - 1.0) < 0.02);

    const auto rising = sample(10.0, 11, [](double t) { return 0.1 * t + 0.1; });
    CHECK_FALSE(fit_exponential(rising.t, rising.p).success);
}

TEST_CASE("fits are invariant under time rescaling") {
    for (double scale : {1e-3, 0.5, 7.0, 1e3}) {
        const auto e = sample(6000.0 * scale, 31, [&](double t) { return 0.9 * std::exp(-t / (1500.0 * scale)); });
        CHECK(fit_exponential(e.t, e.p).value("tau") == doctest::Approx(1500.0 * scale).epsilon(1e-8));

        const auto g = sample(150.0 * scale, 151, [&](double t) {
            const double x = t / (40.0 * scale);
            return 0.5 * (1 + std::exp(-x * x));
        });
        CHECK(fit_ramsey_gaussian(g.t, g.p).value("t2star_ns") == doctest::Approx(40.0 * scale).epsilon(1e-8));
    }
}
