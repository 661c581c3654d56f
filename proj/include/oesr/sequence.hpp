#pragma once

// Pulse sequences built from rectangular segments, evaluated from |up> with a
// readout of rho_down,down and averaged over a quasi-static Overhauser shift.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oesr/random.hpp"
#include "oesr/spin_core.hpp"

namespace oesr {

struct Segment {
    enum class Kind { drive, delay };

    Kind kind = Kind::drive;
    Duration duration;
    Frequency omega;
    double phase = 0.0;
    Frequency delta;

    static Segment pulse(Duration duration, Frequency omega, double phase = 0.0, Frequency delta = {});
    static Segment delay(Duration duration, Frequency delta = {});
    /// Rotation by `angle` (rad) at Rabi frequency omega.
    static Segment rotation(double angle, Frequency omega, double phase = 0.0, Frequency delta = {});

    DriveParams drive(Frequency overhauser) const { return DriveParams(omega, phase, delta, overhauser); }
};

struct PulseSequence {
    std::vector<Segment> segments;

    void validate() const;
    Duration total_duration() const;
};

/// Nuclear-induced rate for one segment, given the drive seen by one ensemble
/// member. Time in the returned function runs from the segment start.
using NuclearRateProvider = std::function<RateFunction(const DriveParams&, Duration)>;

struct Dissipation {
    RelaxationParams relax;
    NuclearRateProvider nuclear;

    static Dissipation none() { return {}; }
    RateFunction nuclear_rate(const DriveParams& drive, Duration duration) const {
        return nuclear ? nuclear(drive, duration) : RateFunction{};
    }
};

struct GaussHermite {
    std::size_t nodes = 31;
};
struct MonteCarlo {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    /// One draw per equal-probability stratum of the Gaussian.
    bool stratified = true;
};

struct EnsembleNode {
    Frequency shift;
    double weight = 1.0;
};

struct OverhauserEnsemble {
    Frequency sigma;
    std::variant<GaussHermite, MonteCarlo> scheme = GaussHermite{};

    static OverhauserEnsemble none() { return {}; }
    static OverhauserEnsemble gauss_hermite(Frequency sigma, std::size_t nodes = 31);
    /// Gauss-Hermite with enough nodes to follow a Delta-dependent phase
    /// accrued over `span`: n = max(31, (2 pi sigma T)^2), capped.
    static OverhauserEnsemble gauss_hermite_resolving(Frequency sigma, Duration span, std::size_t cap = 1001);
    static OverhauserEnsemble monte_carlo(Frequency sigma, std::size_t samples, std::uint64_t seed,
                                          bool stratified = true);

    void validate() const;
    /// Weighted samples of Delta; a single unit-weight node when sigma = 0.
    std::vector<EnsembleNode> nodes() const;
};

struct ExperimentResult {
    std::string grid_name;
    std::vector<double> grid;
    std::vector<double> p_down;
    /// Weighted standard deviation over ensemble members.
    std::vector<double> spread;
    std::map<std::string, std::string> metadata;
};

struct Execution {
    unsigned threads = 1;
    StepControl control = {};
};

/// Single ensemble member: state after the whole sequence.
DensityMatrixd run_member(const PulseSequence& seq, const Dissipation& diss, Frequency overhauser,
                          const StepControl& control = {});

ExperimentResult run_sequence(const PulseSequence& seq, const Dissipation& diss, const OverhauserEnsemble& ensemble,
                              const Execution& exec = {});

ExperimentResult run_rabi(Frequency omega, Frequency delta, std::span<const Duration> t_grid, const Dissipation& diss,
                          const OverhauserEnsemble& ensemble, const Execution& exec = {});

struct RamseyOptions {
    /// Pulses as exact rotations: no detuning, dissipation or duration effects.
    bool ideal_pulses = false;
    Frequency delta;
};

ExperimentResult run_ramsey(Frequency omega_pulse, std::span<const Duration> tau_grid, double final_phase,
                            const Dissipation& diss, const OverhauserEnsemble& ensemble,
                            const RamseyOptions& options = {}, const Execution& exec = {});

ExperimentResult run_phase_scan(Frequency omega_pulse, std::span<const double> phi_grid, Frequency delta,
                                const Dissipation& diss, const OverhauserEnsemble& ensemble,
                                const Execution& exec = {});

struct SinusoidFit {
    double amplitude = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    double residual_rms = 0.0;
    bool success = false;
};

/// Linear least squares for y = A sin(phi + phi0) + B, A >= 0.
SinusoidFit fit_sinusoid(std::span<const double> phi, std::span<const double> y);

struct SpinLockResult {
    std::vector<double> lock_times_ns;
    std::vector<double> visibility;
    std::vector<bool> fit_failed;
    /// Ensemble-averaged rho_down,down per lock time (rows) and phase (cols).
    std::vector<std::vector<double>> fringes;
    std::vector<double> phi_grid;
};

struct SpinLockOptions {
    /// Fringe amplitude below this is reported as a failed fit.
    double noise_floor = 1e-3;
    /// Rabi frequency of the two pi/2 pulses; the lock frequency if zero.
    Frequency pulse_omega;
};

SpinLockResult run_spinlock(Frequency omega_lock, std::span<const Duration> lock_times,
                            std::span<const double> tomography_phi, const Dissipation& diss,
                            const OverhauserEnsemble& ensemble, const SpinLockOptions& options = {},
                            const Execution& exec = {});

/// Population of the locked basis (rho_down,down after the closing pi/2 at
/// phase 0) versus lock time.
ExperimentResult run_spinlock_trace(Frequency omega_lock, std::span<const Duration> lock_times,
                                    const Dissipation& diss, const OverhauserEnsemble& ensemble,
                                    const Execution& exec = {});

/// Ensemble-averaged rho_down,down after a single pi pulse.
double pi_pulse_population(Frequency omega, const Dissipation& diss, const OverhauserEnsemble& ensemble,
                           const Execution& exec = {});

} // namespace oesr
