#pragma once

// Metrics and fits on sampled traces. Times are ns, frequencies MHz.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oesr/units.hpp"

namespace oesr {

struct VisibilityTrace {
    /// Window centres.
    std::vector<double> t_ns;
    std::vector<double> visibility;
};

/// Max - min of the samples in consecutive closed windows [k t_pi, (k+1) t_pi].
/// Needs at least 20 samples per window.
VisibilityTrace visibility_per_pi(std::span<const double> t_ns, std::span<const double> p, Frequency omega);

struct DecayTime {
    double tau_ns = 0.0;
    /// No crossing found; tau_ns is then a lower bound.
    bool censored = false;
};

/// Time from the first sample until the trace first drops to V(first)/e,
/// linearly interpolated.
DecayTime one_over_e_time(const VisibilityTrace& vis);

/// tau / t_pi
double q_factor(double tau_ns, Frequency omega);

/// (1 + exp(-1/Q)) / 2
double pi_fidelity(double q);

/// sigma = 1/(sqrt(2) pi T2*)
Frequency sigma_from_t2star(double t2star_ns);
double t2star_from_sigma(Frequency sigma);

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd values;
    /// 1-sigma, from s^2 (J^T J)^-1.
    Eigen::VectorXd errors;
    double residual_norm = 0.0;
    bool success = false;
    std::string message;

    double value(const std::string& name) const;
    double error(const std::string& name) const;
};

/// p(t) = rho0/2 (1 + s exp(-(t/T2*)^2)), s = +-1 taken from the data.
/// Parameters: t2star_ns, rho0, sign.
FitResult fit_ramsey_gaussian(std::span<const double> tau_ns, std::span<const double> p);

/// v(t) = v0 exp(-t/tau). Parameters: tau, v0 (tau in the units of t).
FitResult fit_exponential(std::span<const double> t, std::span<const double> v);

} // namespace oesr
