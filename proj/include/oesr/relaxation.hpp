#pragma once

// Nuclear-induced decay of the dressed electron: non-Markovian, Markov,
// self-consistent (Lorentzian-broadened) and Overhauser-averaged rates.
// Spectral variables in MHz; returned rates in MHz (Rate::mhz converts).

#include <cstddef>
#include <span>
#include <vector>

#include "oesr/nuclear_bath.hpp"
#include "oesr/sequence.hpp"
#include "oesr/spin_core.hpp"
#include "oesr/units.hpp"

namespace oesr {

/// Rate from a Lorentzian convolution; `truncated` when the grid does not
/// reach 40 widths on both sides of the query.
struct ConvolvedRate {
    double mhz = 0.0;
    bool truncated = false;
};

/// (sin^2 chi / 4) (1/pi) int D(w) sin(2 pi (w - W') t) / (w - W') dw, trapezoid on the grid.
/// Throws ResolutionError when the grid spacing cannot follow the kernel at t.
double gamma_nonmarkov(const SpectralDensity& d, double omega_prime_mhz, double chi, Duration t);

/// Same kernel on a list of times (one pass per time).
std::vector<double> gamma_nonmarkov(const SpectralDensity& d, double omega_prime_mhz, double chi,
                                    std::span<const Duration> times);

/// (sin^2 chi / 4) D(W'); std::out_of_range off the grid.
double gamma_markov(const SpectralDensity& d, double omega_prime_mhz, double chi);

/// Lorentzian of half width gamma_damp against the piecewise-linear D (exact per cell).
ConvolvedRate gamma_scm(const SpectralDensity& d, double omega_prime_mhz, double chi, double gamma_damp_mhz);

/// Average of gamma_scm over a Gaussian Overhauser shift of width sigma at fixed Omega.
ConvolvedRate gamma_scm_averaged(const SpectralDensity& d, double omega_mhz, double sigma_oh_mhz,
                                 double gamma_damp_mhz);

struct FixedPointOptions {
    double tol = 1e-6;
    std::size_t max_iter = 100;
};

struct FixedPointReport {
    bool converged = false;
    std::size_t iterations = 0;
    /// Nuclear rate of the last iterate, MHz.
    double rate_mhz = 0.0;
    /// Lorentzian half width that produced it, MHz.
    double damping_mhz = 0.0;
    /// Relative change of the damping per iteration.
    std::vector<double> residuals;
    /// Set once oscillation switched the update to half steps.
    bool averaged_updates = false;
    bool truncated = false;
};

/// gamma <- rate(gamma) + 3/2 Gamma1 + Gamma2, starting from D(Omega)/4.
/// Throws DivergenceError on a non-finite iterate.
FixedPointReport self_consistent_rate(const SpectralDensity& d, double omega_mhz, double sigma_oh_mhz, Rate gamma1,
                                      Rate gamma2, const FixedPointOptions& options = {});

/// One report per Omega; points are independent.
std::vector<FixedPointReport> rate_curve(const SpectralDensity& d, std::span<const double> omega_mhz,
                                         double sigma_oh_mhz, const RelaxationParams& relax,
                                         const FixedPointOptions& options = {}, unsigned threads = 1);

/// Constant per-member rate gamma_scm(W', chi, damping) for the member's own drive.
NuclearRateProvider scm_rate_provider(SpectralDensity d, double damping_mhz);

/// Time-dependent rate within each segment, tabulated every `step`.
NuclearRateProvider nonmarkov_rate_provider(SpectralDensity d, Duration step);

struct QCurveOptions {
    /// Rabi windows simulated per point.
    std::size_t windows = 80;
    std::size_t samples_per_window = 40;
    /// Gauss-Hermite nodes are raised to resolve the span, up to this cap.
    std::size_t max_nodes = 401;
    bool nuclear = true;
    FixedPointOptions fixed_point = {};
    Execution execution = {};
};

struct QCurvePoint {
    double omega_mhz = 0.0;
    double q = 0.0;
    double tau_ns = 0.0;
    bool censored = false;
    double nuclear_rate_mhz = 0.0;
    bool converged = true;
};

/// Rabi Q(Omega) with Gamma1 = alpha |Omega|, Gamma2, sigma_OH and the
/// self-consistent nuclear rate, extracted by visibility per pi-period.
std::vector<QCurvePoint> model_q_curve(std::span<const double> omega_mhz, const SpectralDensity& bath, double alpha,
                                       Rate gamma2, double sigma_oh_mhz, const QCurveOptions& options = {});

} // namespace oesr
