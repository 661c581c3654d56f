#include "oesr/sequence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "oesr/parallel.hpp"
#include "oesr/quadrature.hpp"

namespace oesr {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void annotate_and_rethrow(const SolverError& e, std::size_t segment) {
    throw SolverError(e.kind(), "segment " + std::to_string(segment) + ": " + e.what());
}

DensityMatrixd evolve_segment(const DensityMatrixd& rho, const Segment& seg, const Dissipation& diss,
                              Frequency overhauser, const StepControl& control, std::size_t index) {
    try {
        const DriveParams drive = seg.drive(overhauser);
        const std::array<Duration, 1> t{seg.duration};
        return evolve(rho, drive, diss.relax, diss.nuclear_rate(drive, seg.duration), t, control).states.back();
    } catch (const SolverError& e) {
        annotate_and_rethrow(e, index);
    }
    return rho;
}

SuperOperator<double> segment_map(const Segment& seg, const Dissipation& diss, Frequency overhauser,
                                  const StepControl& control, std::size_t index) {
    try {
        const DriveParams drive = seg.drive(overhauser);
        return segment_propagator(drive, diss.relax, diss.nuclear_rate(drive, seg.duration), seg.duration, control);
    } catch (const SolverError& e) {
        annotate_and_rethrow(e, index);
    }
    return SuperOperator<double>::Identity();
}

double readout(const SuperOperator<double>& p, const DensityMatrixd& rho) {
    return std::clamp(apply(p, rho).p_down(), 0.0, 1.0);
}

/// Weighted mean and spread over members for every grid point, reduced in
/// member order.
void reduce(const std::vector<EnsembleNode>& nodes, const std::vector<std::vector<double>>& values,
            ExperimentResult& out) {
    const std::size_t n = values.empty() ? 0 : values.front().size();
    out.p_down.assign(n, 0.0);
    out.spread.assign(n, 0.0);
    double total = 0.0;
    for (const auto& node : nodes) total += node.weight;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) out.p_down[i] += nodes[k].weight / total * values[k][i];
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = values[k][i] - out.p_down[i];
            out.spread[i] += nodes[k].weight / total * d * d;
        }
    for (std::size_t i = 0; i < n; ++i) {
        out.spread[i] = std::sqrt(out.spread[i]);
        out.p_down[i] = std::clamp(out.p_down[i], 0.0, 1.0);
    }
}

void describe(const OverhauserEnsemble& e, ExperimentResult& out) {
    out.metadata["sigma_oh_mhz"] = fmt(e.sigma.mhz());
    if (const auto* gh = std::get_if<GaussHermite>(&e.scheme)) {
        out.metadata["ensemble"] = "gauss_hermite";
        out.metadata["ensemble_nodes"] = std::to_string(gh->nodes);
    } else {
        const auto& mc = std::get<MonteCarlo>(e.scheme);
        out.metadata["ensemble"] = mc.stratified ? "monte_carlo_stratified" : "monte_carlo";
        out.metadata["ensemble_samples"] = std::to_string(mc.samples);
        out.metadata["seed"] = std::to_string(mc.seed);
    }
}

std::vector<double> to_ns(std::span<const Duration> t) {
    std::vector<double> out;
    out.reserve(t.size());
    for (const auto& d : t) out.push_back(d.ns());
    return out;
}

} // namespace

Segment Segment::pulse(Duration duration, Frequency omega, double phase, Frequency delta) {
    return Segment{Kind::drive, duration, omega, phase, delta};
}

Segment Segment::delay(Duration duration, Frequency delta) {
    return Segment{Kind::delay, duration, Frequency{}, 0.0, delta};
}

Segment Segment::rotation(double angle, Frequency omega, double phase, Frequency delta) {
    if (!(omega.rad_per_us() > 0.0)) throw std::invalid_argument("Segment::rotation: omega must be > 0");
    return pulse(Duration::us(angle / omega.rad_per_us()), omega, phase, delta);
}

void PulseSequence::validate() const {
    if (segments.empty()) throw std::invalid_argument("PulseSequence: no segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.duration.us() >= 0.0) || !std::isfinite(s.duration.us()))
            throw std::invalid_argument("PulseSequence: segment " + std::to_string(i) + " has invalid duration");
        if (s.kind == Segment::Kind::delay && s.omega.rad_per_us() != 0.0)
            throw std::invalid_argument("PulseSequence: delay segment " + std::to_string(i) + " has nonzero omega");
        if (s.omega.rad_per_us() < 0.0)
            throw std::invalid_argument("PulseSequence: segment " + std::to_string(i) + " has negative omega");
    }
}

Duration PulseSequence::total_duration() const {
    Duration t;
    for (const auto& s : segments) t = t + s.duration;
    return t;
}

OverhauserEnsemble OverhauserEnsemble::gauss_hermite(Frequency sigma, std::size_t nodes) {
    OverhauserEnsemble e{sigma, GaussHermite{nodes}};
    e.validate();
    return e;
}

OverhauserEnsemble OverhauserEnsemble::gauss_hermite_resolving(Frequency sigma, Duration span, std::size_t cap) {
    const double st = sigma.mhz() * span.us();
    const auto needed = static_cast<std::size_t>(std::ceil(4.0 * pi * pi * st * st));
    return gauss_hermite(sigma, std::clamp<std::size_t>(needed, 31, std::max<std::size_t>(cap, 31)));
}

OverhauserEnsemble OverhauserEnsemble::monte_carlo(Frequency sigma, std::size_t samples, std::uint64_t seed,
                                                   bool stratified) {
    OverhauserEnsemble e{sigma, MonteCarlo{samples, seed, stratified}};
    e.validate();
    return e;
}

void OverhauserEnsemble::validate() const {
    if (!(sigma.rad_per_us() >= 0.0) || !std::isfinite(sigma.rad_per_us()))
        throw std::invalid_argument("OverhauserEnsemble: sigma must be finite and >= 0");
    if (const auto* gh = std::get_if<GaussHermite>(&scheme); gh && gh->nodes < 1)
        throw std::invalid_argument("OverhauserEnsemble: need at least one Gauss-Hermite node");
    if (const auto* mc = std::get_if<MonteCarlo>(&scheme); mc && mc->samples < 1)
        throw std::invalid_argument("OverhauserEnsemble: need at least one Monte-Carlo sample");
}

std::vector<EnsembleNode> OverhauserEnsemble::nodes() const {
    validate();
    if (sigma.rad_per_us() == 0.0) return {EnsembleNode{Frequency{}, 1.0}};
    std::vector<EnsembleNode> out;
    if (const auto* gh = std::get_if<GaussHermite>(&scheme)) {
        const auto rule = oesr::gauss_hermite(gh->nodes);
        out.reserve(gh->nodes);
        for (std::size_t i = 0; i < gh->nodes; ++i)
            out.push_back({std::sqrt(2.0) * rule.nodes[i] * sigma, rule.weights[i] / std::sqrt(pi)});
        return out;
    }
    const auto& mc = std::get<MonteCarlo>(scheme);
    const double w = 1.0 / static_cast<double>(mc.samples);
    const boost::math::normal_distribution<double> normal;
    out.reserve(mc.samples);
    for (std::size_t i = 0; i < mc.samples; ++i) {
        double z = 0.0;
        if (mc.stratified) {
            const double u = (static_cast<double>(i) + uniform_from_counter(mc.seed, i)) /
                             static_cast<double>(mc.samples);
            z = boost::math::quantile(normal, u);
        } else {
            const double u1 = uniform_from_counter(mc.seed, 2 * i);
            const double u2 = uniform_from_counter(mc.seed, 2 * i + 1);
            z = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
        }
        out.push_back({z * sigma, w});
    }
    return out;
}

DensityMatrixd run_member(const PulseSequence& seq, const Dissipation& diss, Frequency overhauser,
                          const StepControl& control) {
    DensityMatrixd rho = DensityMatrixd::spin_up();
    for (std::size_t i = 0; i < seq.segments.size(); ++i)
        rho = evolve_segment(rho, seq.segments[i], diss, overhauser, control, i);
    return rho;
}

ExperimentResult run_sequence(const PulseSequence& seq, const Dissipation& diss, const OverhauserEnsemble& ensemble,
                              const Execution& exec) {
    seq.validate();
    const auto nodes = ensemble.nodes();
    std::vector<std::vector<double>> values(nodes.size());
    parallel_for(nodes.size(), exec.threads, [&](std::size_t k) {
        values[k] = {std::clamp(run_member(seq, diss, nodes[k].shift, exec.control).p_down(), 0.0, 1.0)};
    });
    ExperimentResult out;
    out.grid_name = "t_ns";
    out.grid = {seq.total_duration().ns()};
    reduce(nodes, values, out);
    describe(ensemble, out);
    out.metadata["segments"] = std::to_string(seq.segments.size());
    return out;
}

ExperimentResult run_rabi(Frequency omega, Frequency delta, std::span<const Duration> t_grid, const Dissipation& diss,
                          const OverhauserEnsemble& ensemble, const Execution& exec) {
    if (t_grid.empty()) throw std::invalid_argument("run_rabi: empty time grid");
    const auto nodes = ensemble.nodes();
    std::vector<std::vector<double>> values(nodes.size());
    parallel_for(nodes.size(), exec.threads, [&](std::size_t k) {
        const DriveParams drive(omega, 0.0, delta, nodes[k].shift);
        try {
            const auto traj = evolve(DensityMatrixd::spin_up(), drive, diss.relax,
                                     diss.nuclear_rate(drive, t_grid.back()), t_grid, exec.control);
            values[k].reserve(t_grid.size());
            for (const auto& s : traj.states) values[k].push_back(std::clamp(s.p_down(), 0.0, 1.0));
        } catch (const SolverError& e) {
            annotate_and_rethrow(e, 0);
        }
    });
    ExperimentResult out;
    out.grid_name = "t_ns";
    out.grid = to_ns(t_grid);
    reduce(nodes, values, out);
    describe(ensemble, out);
    out.metadata["omega_mhz"] = fmt(omega.mhz());
    out.metadata["delta_mhz"] = fmt(delta.mhz());
    return out;
}

ExperimentResult run_ramsey(Frequency omega_pulse, std::span<const Duration> tau_grid, double final_phase,
                            const Dissipation& diss, const OverhauserEnsemble& ensemble,
                            const RamseyOptions& options, const Execution& exec) {
    if (tau_grid.empty()) throw std::invalid_argument("run_ramsey: empty delay grid");
    const auto nodes = ensemble.nodes();
    const Segment first = Segment::rotation(pi / 2, omega_pulse, 0.0, options.delta);
    const Segment last = Segment::rotation(pi / 2, omega_pulse, final_phase, options.delta);
    const Dissipation none = Dissipation::none();

    std::vector<std::vector<double>> values(nodes.size());
    parallel_for(nodes.size(), exec.threads, [&](std::size_t k) {
        const Frequency shift = nodes[k].shift;
        Segment p1 = first;
        Segment p2 = last;
        const Dissipation& pulse_diss = options.ideal_pulses ? none : diss;
        const Frequency pulse_shift = options.ideal_pulses ? Frequency{} : shift;
        if (options.ideal_pulses) p1.delta = p2.delta = Frequency{};

        const DensityMatrixd after_first = evolve_segment(DensityMatrixd::spin_up(), p1, pulse_diss, pulse_shift,
                                                          exec.control, 0);
        const DriveParams free(Frequency{}, 0.0, options.delta, shift);
        Trajectory<double> traj;
        try {
            traj = evolve(after_first, free, diss.relax, diss.nuclear_rate(free, tau_grid.back()), tau_grid,
                          exec.control);
        } catch (const SolverError& e) {
            annotate_and_rethrow(e, 1);
        }
        const auto p = segment_map(p2, pulse_diss, pulse_shift, exec.control, 2);
        values[k].reserve(tau_grid.size());
        for (const auto& s : traj.states) values[k].push_back(readout(p, s));
    });
    ExperimentResult out;
    out.grid_name = "tau_ns";
    out.grid = to_ns(tau_grid);
    reduce(nodes, values, out);
    describe(ensemble, out);
    out.metadata["omega_pulse_mhz"] = fmt(omega_pulse.mhz());
    out.metadata["final_phase_rad"] = fmt(final_phase);
    out.metadata["ideal_pulses"] = options.ideal_pulses ? "true" : "false";
    return out;
}

ExperimentResult run_phase_scan(Frequency omega_pulse, std::span<const double> phi_grid, Frequency delta,
                                const Dissipation& diss, const OverhauserEnsemble& ensemble, const Execution& exec) {
    if (phi_grid.empty()) throw std::invalid_argument("run_phase_scan: empty phase grid");
    const auto nodes = ensemble.nodes();
    std::vector<std::vector<double>> values(nodes.size());
    parallel_for(nodes.size(), exec.threads, [&](std::size_t k) {
        const Frequency shift = nodes[k].shift;
        const DensityMatrixd after_first = evolve_segment(
            DensityMatrixd::spin_up(), Segment::rotation(pi / 2, omega_pulse, 0.0, delta), diss, shift, exec.control, 0);
        values[k].reserve(phi_grid.size());
        for (double phi : phi_grid) {
            const auto p = segment_map(Segment::rotation(pi / 2, omega_pulse, phi, delta), diss, shift, exec.control, 1);
            values[k].push_back(readout(p, after_first));
        }
    });
    ExperimentResult out;
    out.grid_name = "phi_rad";
    out.grid.assign(phi_grid.begin(), phi_grid.end());
    reduce(nodes, values, out);
    describe(ensemble, out);
    out.metadata["omega_pulse_mhz"] = fmt(omega_pulse.mhz());
    out.metadata["delta_mhz"] = fmt(delta.mhz());
    return out;
}

SinusoidFit fit_sinusoid(std::span<const double> phi, std::span<const double> y) {
    SinusoidFit fit;
    if (phi.size() != y.size()) throw std::invalid_argument("fit_sinusoid: size mismatch");
    if (phi.size() < 3) return fit;
    const auto n = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = std::sin(phi[i]);
        a(i, 1) = std::cos(phi[i]);
        a(i, 2) = 1.0;
        b(i) = y[i];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 3) return fit;
    const Eigen::Vector3d c = qr.solve(b);
    fit.amplitude = std::hypot(c(0), c(1));
    fit.phase = std::atan2(c(1), c(0));
    fit.offset = c(2);
    fit.residual_rms = std::sqrt((a * c - b).squaredNorm() / static_cast<double>(n));
    fit.success = std::isfinite(fit.amplitude) && std::isfinite(fit.offset);
    return fit;
}

namespace {

/// fringes[k][t][phi] for every ensemble member.
std::vector<std::vector<std::vector<double>>> spinlock_members(Frequency omega_lock,
                                                               std::span<const Duration> lock_times,
                                                               std::span<const double> phi, const Dissipation& diss,
                                                               const std::vector<EnsembleNode>& nodes,
                                                               Frequency pulse_omega, const Execution& exec) {
    const Frequency pulse = pulse_omega.rad_per_us() > 0.0 ? pulse_omega : omega_lock;
    std::vector<std::vector<std::vector<double>>> out(nodes.size());
    parallel_for(nodes.size(), exec.threads, [&](std::size_t k) {
        const Frequency shift = nodes[k].shift;
        const DensityMatrixd after_first = evolve_segment(DensityMatrixd::spin_up(), Segment::rotation(pi / 2, pulse),
                                                          diss, shift, exec.control, 0);
        const DriveParams lock(omega_lock, pi / 2, Frequency{}, shift);
        Trajectory<double> traj;
        try {
            traj = evolve(after_first, lock, diss.relax, diss.nuclear_rate(lock, lock_times.back()), lock_times,
                          exec.control);
        } catch (const SolverError& e) {
            annotate_and_rethrow(e, 1);
        }
        std::vector<SuperOperator<double>> closing;
        closing.reserve(phi.size());
        for (double p : phi) closing.push_back(segment_map(Segment::rotation(pi / 2, pulse, p), diss, shift, exec.control, 2));
        out[k].assign(lock_times.size(), std::vector<double>(phi.size()));
        for (std::size_t t = 0; t < lock_times.size(); ++t)
            for (std::size_t j = 0; j < phi.size(); ++j) out[k][t][j] = readout(closing[j], traj.states[t]);
    });
    return out;
}

} // namespace

SpinLockResult run_spinlock(Frequency omega_lock, std::span<const Duration> lock_times,
                            std::span<const double> tomography_phi, const Dissipation& diss,
                            const OverhauserEnsemble& ensemble, const SpinLockOptions& options, const Execution& exec) {
    if (lock_times.empty() || tomography_phi.size() < 3)
        throw std::invalid_argument("run_spinlock: need lock times and at least three phases");
    const auto nodes = ensemble.nodes();
    const auto members = spinlock_members(omega_lock, lock_times, tomography_phi, diss, nodes, options.pulse_omega, exec);

    double total = 0.0;
    for (const auto& n : nodes) total += n.weight;
    SpinLockResult out;
    out.phi_grid.assign(tomography_phi.begin(), tomography_phi.end());
    out.lock_times_ns = to_ns(lock_times);
    out.fringes.assign(lock_times.size(), std::vector<double>(tomography_phi.size(), 0.0));
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (std::size_t t = 0; t < lock_times.size(); ++t)
            for (std::size_t j = 0; j < tomography_phi.size(); ++j)
                out.fringes[t][j] += nodes[k].weight / total * members[k][t][j];

    for (const auto& row : out.fringes) {
        const auto fit = fit_sinusoid(tomography_phi, row);
        const bool failed = !fit.success || fit.amplitude < options.noise_floor;
        // Ideal fringe runs from 0 to 1, so the maximum contrast is 1.
        out.visibility.push_back(failed ? 0.0 : std::clamp(2.0 * fit.amplitude, 0.0, 1.0));
        out.fit_failed.push_back(failed);
    }
    return out;
}

ExperimentResult run_spinlock_trace(Frequency omega_lock, std::span<const Duration> lock_times,
                                    const Dissipation& diss, const OverhauserEnsemble& ensemble,
                                    const Execution& exec) {
    if (lock_times.empty()) throw std::invalid_argument("run_spinlock_trace: empty lock-time grid");
    const auto nodes = ensemble.nodes();
    const std::array<double, 1> phi{0.0};
    const auto members = spinlock_members(omega_lock, lock_times, phi, diss, nodes, Frequency{}, exec);
    std::vector<std::vector<double>> values(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (const auto& row : members[k]) values[k].push_back(row[0]);
    ExperimentResult out;
    out.grid_name = "T_ns";
    out.grid = to_ns(lock_times);
    reduce(nodes, values, out);
    describe(ensemble, out);
    out.metadata["omega_lock_mhz"] = fmt(omega_lock.mhz());
    return out;
}

double pi_pulse_population(Frequency omega, const Dissipation& diss, const OverhauserEnsemble& ensemble,
                           const Execution& exec) {
    PulseSequence seq{{Segment::rotation(pi, omega)}};
    return run_sequence(seq, diss, ensemble, exec).p_down.front();
}

} // namespace oesr
