#include "oesr/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "oesr/analysis.hpp"
#include "oesr/errors.hpp"
#include "oesr/parallel.hpp"
#include "oesr/quadrature.hpp"

namespace oesr {

namespace {

constexpr double window_widths = 40.0;

double prefactor(double chi) {
    const double s = std::sin(chi);
    return s * s / 4.0;
}

/// atan(x) - atan(y) without cancellation when x and y share a sign.
double atan_difference(double x, double y) {
    if (x * y > 0.0) return std::atan((x - y) / (1.0 + x * y));
    return std::atan(x) - std::atan(y);
}

bool all_zero(const SpectralDensity& d) {
    return std::all_of(d.values.begin(), d.values.end(), [](double v) { return v == 0.0; });
}

/// (1/pi) int D(w) gamma / (gamma^2 + (w - c)^2) dw for piecewise-linear D, zero off the grid.
double lorentzian_integral(const SpectralDensity& d, double c, double gamma) {
    const auto& w = d.omega_mhz;
    const auto& v = d.values;
    if (gamma == 0.0) return d.covers(c) ? d.at(c) : 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        if (v[i] == 0.0 && v[i + 1] == 0.0) continue;
        const double slope = (v[i + 1] - v[i]) / (w[i + 1] - w[i]);
        const double ua = w[i] - c;
        const double ub = w[i + 1] - c;
        const double level = v[i] - slope * ua;
        const double ratio = (ub - ua) * (ub + ua) / (gamma * gamma + ua * ua);
        sum += level * atan_difference(ub / gamma, ua / gamma) + slope * gamma / 2.0 * std::log1p(ratio);
    }
    return sum / pi;
}

bool window_truncated(const SpectralDensity& d, double c, double gamma) {
    const bool low = d.omega_mhz.front() > c - window_widths * gamma && d.values.front() != 0.0;
    const bool high = d.omega_mhz.back() < c + window_widths * gamma && d.values.back() != 0.0;
    return low || high;
}

double min_spacing(const SpectralDensity& d) {
    double h = INFINITY;
    for (std::size_t i = 1; i < d.omega_mhz.size(); ++i) h = std::min(h, d.omega_mhz[i] - d.omega_mhz[i - 1]);
    return h;
}

double max_spacing(const SpectralDensity& d) {
    double h = 0.0;
    for (std::size_t i = 1; i < d.omega_mhz.size(); ++i) h = std::max(h, d.omega_mhz[i] - d.omega_mhz[i - 1]);
    return h;
}

void check_damping(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma_scm: damping must be finite and > 0");
}

} // namespace

double gamma_nonmarkov(const SpectralDensity& d, double omega_prime_mhz, double chi, Duration t) {
    const double t_us = t.us();
    if (!(t_us >= 0.0) || !std::isfinite(t_us)) throw std::invalid_argument("gamma_nonmarkov: t must be >= 0");
    if (t_us == 0.0) return 0.0;
    const double h = max_spacing(d);
    if (h * t_us > 0.5)
        throw ResolutionError("gamma_nonmarkov: grid spacing " + std::to_string(h) + " MHz cannot resolve the kernel at t = " +
                              std::to_string(t_us) + " us (need spacing * t <= 1/2)");
    const auto& w = d.omega_mhz;
    const auto& v = d.values;
    const auto kernel = [&](std::size_t i) {
        const double u = w[i] - omega_prime_mhz;
        if (u == 0.0) return two_pi * t_us;
        return std::sin(two_pi * u * t_us) / u;
    };
    double sum = 0.0;
    double prev = v[0] * kernel(0);
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double cur = v[i] * kernel(i);
        sum += 0.5 * (prev + cur) * (w[i] - w[i - 1]);
        prev = cur;
    }
    return prefactor(chi) * sum / pi;
}

std::vector<double> gamma_nonmarkov(const SpectralDensity& d, double omega_prime_mhz, double chi,
                                    std::span<const Duration> times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (const auto& t : times) out.push_back(gamma_nonmarkov(d, omega_prime_mhz, chi, t));
    return out;
}

double gamma_markov(const SpectralDensity& d, double omega_prime_mhz, double chi) {
    return prefactor(chi) * d.at(omega_prime_mhz);
}

ConvolvedRate gamma_scm(const SpectralDensity& d, double omega_prime_mhz, double chi, double gamma_damp_mhz) {
    check_damping(gamma_damp_mhz);
    return {prefactor(chi) * lorentzian_integral(d, omega_prime_mhz, gamma_damp_mhz),
            window_truncated(d, omega_prime_mhz, gamma_damp_mhz)};
}

ConvolvedRate gamma_scm_averaged(const SpectralDensity& d, double omega_mhz, double sigma_oh_mhz,
                                 double gamma_damp_mhz) {
    check_damping(gamma_damp_mhz);
    if (!(sigma_oh_mhz >= 0.0)) throw std::invalid_argument("gamma_scm_averaged: sigma must be >= 0");
    if (!(omega_mhz >= 0.0)) throw std::invalid_argument("gamma_scm_averaged: Omega must be >= 0");
    if (sigma_oh_mhz == 0.0) return gamma_scm(d, omega_mhz, pi / 2, gamma_damp_mhz);
    if (omega_mhz == 0.0) return {};

    bool truncated = false;
    const double norm = 2.0 / (sigma_oh_mhz * std::sqrt(two_pi));
    const auto integrand = [&](double delta) {
        const double op = std::hypot(omega_mhz, delta);
        const double weight = norm * std::exp(-0.5 * delta * delta / (sigma_oh_mhz * sigma_oh_mhz));
        truncated = truncated || window_truncated(d, op, gamma_damp_mhz);
        return weight * (omega_mhz * omega_mhz) / (op * op) * 0.25 * lorentzian_integral(d, op, gamma_damp_mhz);
    };
    const double rate = integrate_adaptive<15>(integrand, 0.0, 8.0 * sigma_oh_mhz, 10, 1e-9);
    return {rate, truncated};
}

FixedPointReport self_consistent_rate(const SpectralDensity& d, double omega_mhz, double sigma_oh_mhz, Rate gamma1,
                                      Rate gamma2, const FixedPointOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("self_consistent_rate: tol must be > 0");
    if (options.max_iter == 0) throw std::invalid_argument("self_consistent_rate: max_iter must be >= 1");
    const double fixed = 1.5 * gamma1.mhz() + gamma2.mhz();

    FixedPointReport report;
    if (all_zero(d)) {
        report.converged = true;
        report.iterations = 1;
        report.damping_mhz = fixed;
        report.residuals = {0.0};
        return report;
    }

    double gamma = 0.25 * (d.covers(omega_mhz) ? d.at(omega_mhz) : 0.0) + fixed;
    // A zero start would make the kernel a delta; begin at the grid resolution instead.
    if (!(gamma > 0.0)) gamma = min_spacing(d);

    std::size_t increases = 0;
    for (std::size_t k = 1; k <= options.max_iter; ++k) {
        const ConvolvedRate r = gamma_scm_averaged(d, omega_mhz, sigma_oh_mhz, gamma);
        double next = r.mhz + fixed;
        if (report.averaged_updates) next = 0.5 * (gamma + next);
        const double residual = next > 0.0 ? std::abs(next - gamma) / next : 0.0;
        report.iterations = k;
        report.rate_mhz = r.mhz;
        report.damping_mhz = gamma;
        report.truncated = r.truncated;
        report.residuals.push_back(residual);
        if (!std::isfinite(next) || !std::isfinite(residual))
            throw DivergenceError("self_consistent_rate: non-finite iterate at Omega = " + std::to_string(omega_mhz) +
                                  " MHz after " + std::to_string(k) + " iterations");
        if (residual < options.tol) {
            report.converged = true;
            return report;
        }
        if (report.residuals.size() >= 2 && residual > report.residuals[report.residuals.size() - 2]) ++increases;
        if (increases >= 2) report.averaged_updates = true;
        if (!(next > 0.0)) next = min_spacing(d);
        gamma = next;
    }
    return report;
}

std::vector<FixedPointReport> rate_curve(const SpectralDensity& d, std::span<const double> omega_mhz,
                                         double sigma_oh_mhz, const RelaxationParams& relax,
                                         const FixedPointOptions& options, unsigned threads) {
    relax.validate();
    std::vector<FixedPointReport> out(omega_mhz.size());
    parallel_for(omega_mhz.size(), threads, [&](std::size_t i) {
        out[i] = self_consistent_rate(d, omega_mhz[i], sigma_oh_mhz, relax.gamma1(Frequency::mhz(omega_mhz[i])),
                                      relax.gamma2, options);
    });
    return out;
}

NuclearRateProvider scm_rate_provider(SpectralDensity d, double damping_mhz) {
    check_damping(damping_mhz);
    return [d = std::move(d), damping_mhz](const DriveParams& drive, Duration) {
        if (drive.omega.rad_per_us() == 0.0) return RateFunction{};
        const ConvolvedRate r = gamma_scm(d, drive.omega_prime().mhz(), drive.dressed_angle().chi, damping_mhz);
        return RateFunction::constant(Rate::mhz(r.mhz));
    };
}

NuclearRateProvider nonmarkov_rate_provider(SpectralDensity d, Duration step) {
    if (!(step.us() > 0.0)) throw std::invalid_argument("nonmarkov_rate_provider: step must be > 0");
    return [d = std::move(d), step](const DriveParams& drive, Duration duration) {
        if (drive.omega.rad_per_us() == 0.0) return RateFunction{};
        const auto n = static_cast<std::size_t>(std::ceil(duration.us() / step.us()));
        std::vector<double> values(n + 1);
        const double op = drive.omega_prime().mhz();
        const double chi = drive.dressed_angle().chi;
        for (std::size_t k = 0; k <= n; ++k)
            values[k] = Rate::mhz(gamma_nonmarkov(d, op, chi, Duration::us(step.us() * static_cast<double>(k)))).per_us();
        return RateFunction::tabulated(step, std::move(values));
    };
}

std::vector<QCurvePoint> model_q_curve(std::span<const double> omega_mhz, const SpectralDensity& bath, double alpha,
                                       Rate gamma2, double sigma_oh_mhz, const QCurveOptions& options) {
    if (options.windows == 0 || options.samples_per_window < 20)
        throw std::invalid_argument("model_q_curve: need >= 1 window and >= 20 samples per window");
    const RelaxationParams relax = RelaxationParams::drive_proportional(alpha, gamma2);
    relax.validate();

    std::vector<QCurvePoint> out(omega_mhz.size());
    Execution inner = options.execution;
    inner.threads = 1;
    parallel_for(omega_mhz.size(), options.execution.threads, [&](std::size_t i) {
        const double w = omega_mhz[i];
        if (!(w > 0.0)) throw std::invalid_argument("model_q_curve: Omega must be > 0");
        const Frequency omega = Frequency::mhz(w);
        QCurvePoint& p = out[i];
        p.omega_mhz = w;

        Dissipation diss{relax, {}};
        if (options.nuclear) {
            const FixedPointReport fp =
                self_consistent_rate(bath, w, sigma_oh_mhz, relax.gamma1(omega), gamma2, options.fixed_point);
            p.nuclear_rate_mhz = fp.rate_mhz;
            p.converged = fp.converged;
            diss.nuclear = scm_rate_provider(bath, fp.damping_mhz);
        }

        const double dt = pi_time(omega).us() / static_cast<double>(options.samples_per_window);
        const std::size_t n = options.windows * options.samples_per_window + 1;
        std::vector<Duration> grid(n);
        for (std::size_t k = 0; k < n; ++k) grid[k] = Duration::us(dt * static_cast<double>(k));

        const OverhauserEnsemble ensemble =
            sigma_oh_mhz > 0.0 ? OverhauserEnsemble::gauss_hermite_resolving(Frequency::mhz(sigma_oh_mhz), grid.back(),
                                                                             options.max_nodes)
                               : OverhauserEnsemble::none();
        const ExperimentResult r = run_rabi(omega, Frequency{}, grid, diss, ensemble, inner);
        const DecayTime tau = one_over_e_time(visibility_per_pi(r.grid, r.p_down, omega));
        p.tau_ns = tau.tau_ns;
        p.censored = tau.censored;
        p.q = q_factor(tau.tau_ns, omega);
    });
    return out;
}

} // namespace oesr
