#include "oesr/run.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "oesr/analysis.hpp"
#include "oesr/nuclear_bath.hpp"
#include "oesr/quadrature.hpp"
#include "oesr/relaxation.hpp"
#include "oesr/sequence.hpp"
#include "oesr/spin_core.hpp"
#include "oesr/waveform.hpp"

namespace oesr {

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 1) return {a};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

std::vector<Duration> ns_grid(const std::vector<double>& t_ns) {
    std::vector<Duration> out;
    out.reserve(t_ns.size());
    for (double t : t_ns) out.push_back(Duration::ns(t));
    return out;
}

std::size_t count(const RunConfig& cfg, const std::string& key) { return static_cast<std::size_t>(cfg.integer(key)); }

std::string num(double v) { return format_csv_number(v); }

Rate gamma2_of(const RunConfig& cfg) {
    const double t2 = cfg.number("physics.t2_ns");
    return t2 > 0.0 ? Rate::per_us(1e3 / t2) : Rate{};
}

RelaxationParams relaxation_of(const RunConfig& cfg) {
    const double alpha = cfg.number("physics.alpha");
    const double t1 = cfg.number("physics.t1_ns");
    RelaxationParams p = alpha > 0.0 ? RelaxationParams::drive_proportional(alpha, gamma2_of(cfg))
                                     : RelaxationParams::fixed(t1 > 0.0 ? Rate::per_us(1e3 / t1) : Rate{}, gamma2_of(cfg));
    const auto& mode = cfg.text("physics.nuclear");
    p.nuclear_rate_mode = mode == "scm"          ? NuclearRateMode::self_consistent_markov
                          : mode == "non-markov" ? NuclearRateMode::non_markovian
                                                 : NuclearRateMode::off;
    return p;
}

FixedPointOptions fixed_point_of(const RunConfig& cfg) {
    return {cfg.number("fixed_point.tol"), count(cfg, "fixed_point.max_iter")};
}

double sigma_of(const RunConfig& cfg) { return cfg.number("ensemble.sigma_oh_mhz"); }

/// Ensemble for a sequence lasting `span`; nodes = 0 resolves the span automatically.
OverhauserEnsemble ensemble_of(const RunConfig& cfg, Duration span) {
    const double sigma = sigma_of(cfg);
    if (sigma == 0.0) return OverhauserEnsemble::none();
    const auto s = Frequency::mhz(sigma);
    if (cfg.text("ensemble.scheme") == "monte-carlo")
        return OverhauserEnsemble::monte_carlo(s, count(cfg, "ensemble.samples"),
                                               static_cast<std::uint64_t>(cfg.integer("seed")));
    const auto nodes = count(cfg, "ensemble.nodes");
    return nodes == 0 ? OverhauserEnsemble::gauss_hermite_resolving(s, span) : OverhauserEnsemble::gauss_hermite(s, nodes);
}

SpectralDensity bath_of(const RunConfig& cfg, std::vector<std::string>& warnings) {
    const auto points = count(cfg, "bath.grid_points");
    const double top = cfg.number("bath.grid_max_mhz");
    const auto grid = top > 0.0 ? linspace(0.0, top, points) : default_omega_grid(cfg.species, points);
    auto d = spectral_density(cfg.species, grid);
    warnings.insert(warnings.end(), d.warnings.begin(), d.warnings.end());
    return d;
}

/// Dissipation for a drive at omega; the scm damping is solved at that drive.
Dissipation dissipation_of(const RunConfig& cfg, Frequency omega, RunResult& out) {
    Dissipation diss{relaxation_of(cfg), {}};
    const auto& mode = cfg.text("physics.nuclear");
    if (mode == "off") return diss;
    auto d = bath_of(cfg, out.warnings);
    if (mode == "scm") {
        const auto fp = self_consistent_rate(d, omega.mhz(), sigma_of(cfg), diss.relax.gamma1(omega),
                                             diss.relax.gamma2, fixed_point_of(cfg));
        if (!fp.converged) out.warnings.push_back("nuclear rate fixed point did not converge");
        out.summary["nuclear_rate_mhz"] = fp.rate_mhz;
        out.summary["nuclear_damping_mhz"] = fp.damping_mhz;
        out.summary["fixed_point_iterations"] = static_cast<double>(fp.iterations);
        diss.nuclear = scm_rate_provider(std::move(d), fp.damping_mhz);
    } else {
        diss.nuclear = nonmarkov_rate_provider(std::move(d), Duration::ns(cfg.number("physics.nuclear_step_ns")));
    }
    return diss;
}

CsvTable two_columns(std::string name, std::string a, std::string b, const std::vector<double>& x,
                     const std::vector<double>& y, std::string units) {
    CsvTable t{std::move(name), {std::move(a), std::move(b)}, {}, std::move(units)};
    for (std::size_t i = 0; i < x.size(); ++i) t.rows.push_back({num(x[i]), num(y[i])});
    return t;
}

void run_rabi_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto omega = Frequency::mhz(cfg.number("experiment.omega_mhz"));
    const auto delta = Frequency::mhz(cfg.number("experiment.delta_mhz"));
    const auto windows = count(cfg, "experiment.windows");
    const auto spw = count(cfg, "experiment.samples_per_window");
    const double dt = pi_time(omega).ns() / static_cast<double>(spw);
    std::vector<double> t(windows * spw + 1);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = dt * static_cast<double>(k);
    const auto grid = ns_grid(t);

    const auto diss = dissipation_of(cfg, omega, out);
    const auto r = run_rabi(omega, delta, grid, diss, ensemble_of(cfg, grid.back()), Execution{threads, {}});
    const auto vis = visibility_per_pi(r.grid, r.p_down, omega);
    const auto tau = one_over_e_time(vis);
    const double q = q_factor(tau.tau_ns, omega);
    out.summary["q"] = q;
    out.summary["tau_ns"] = tau.tau_ns;
    out.summary["censored"] = tau.censored ? 1.0 : 0.0;
    out.summary["pi_fidelity"] = pi_fidelity(q);
    if (cfg.number("physics.alpha") > 0.0) out.summary["q_bound"] = 4.0 / (3.0 * cfg.number("physics.alpha"));
    if (tau.censored) out.warnings.push_back("visibility never fell to 1/e; tau is a lower bound");
    out.tables.push_back(two_columns("rabi", "t_ns", "p_down", r.grid, r.p_down, "t in ns"));
    out.tables.push_back(two_columns("visibility", "t_ns", "visibility", vis.t_ns, vis.visibility, "t in ns"));
}

void run_ramsey_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto omega = Frequency::mhz(cfg.number("experiment.pulse_omega_mhz"));
    const auto tau = ns_grid(linspace(0.0, cfg.number("experiment.tau_max_ns"), count(cfg, "experiment.points")));
    RamseyOptions opts;
    opts.ideal_pulses = cfg.flag("experiment.ideal_pulses");
    opts.delta = Frequency::mhz(cfg.number("experiment.delta_mhz"));
    const auto diss = dissipation_of(cfg, omega, out);
    const auto r = run_ramsey(omega, tau, cfg.number("experiment.final_phase_rad"), diss,
                              ensemble_of(cfg, tau.back() + pi_time(omega)), opts, Execution{threads, {}});
    out.tables.push_back(two_columns("ramsey", "tau_ns", "p_down", r.grid, r.p_down, "tau in ns"));
    if (sigma_of(cfg) > 0.0) out.summary["t2star_expected_ns"] = t2star_from_sigma(Frequency::mhz(sigma_of(cfg)));
    const auto fit = fit_ramsey_gaussian(r.grid, r.p_down);
    if (!fit.success) {
        out.warnings.push_back("Gaussian Ramsey fit failed: " + fit.message);
        return;
    }
    out.summary["t2star_ns"] = fit.value("t2star_ns");
    out.summary["t2star_err_ns"] = fit.error("t2star_ns");
    out.summary["sigma_from_fit_mhz"] = sigma_from_t2star(fit.value("t2star_ns")).mhz();
}

void run_phase_scan_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto omega = Frequency::mhz(cfg.number("experiment.pulse_omega_mhz"));
    const auto phi = linspace(0.0, cfg.number("experiment.phi_max_rad"), count(cfg, "experiment.points"));
    const auto diss = dissipation_of(cfg, omega, out);
    const auto r = run_phase_scan(omega, phi, Frequency::mhz(cfg.number("experiment.delta_mhz")), diss,
                                  ensemble_of(cfg, pi_time(omega)), Execution{threads, {}});
    out.tables.push_back(two_columns("phase_scan", "phi_rad", "p_down", r.grid, r.p_down, "phi in rad"));
    const auto fit = fit_sinusoid(r.grid, r.p_down);
    out.summary["contrast"] = 2.0 * fit.amplitude;
    out.summary["fringe_offset_rad"] = std::remainder(pi / 2 - fit.phase, two_pi);
    out.summary["fit_residual_rms"] = fit.residual_rms;
}

void run_spinlock_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto omega = Frequency::mhz(cfg.number("experiment.omega_mhz"));
    const auto t_ns = linspace(0.0, cfg.number("experiment.lock_max_ns"), count(cfg, "experiment.lock_points"));
    const auto phi = linspace(0.0, cfg.number("experiment.tomography_span_rad"), count(cfg, "experiment.tomography_points"));
    const auto diss = dissipation_of(cfg, omega, out);
    const auto T = ns_grid(t_ns);
    const auto r = run_spinlock(omega, T, phi, diss, ensemble_of(cfg, T.back() + pi_time(omega)), {},
                                Execution{threads, {}});
    const auto fit = fit_exponential(r.lock_times_ns, r.visibility);
    const double tau_us = fit.success ? fit.value("tau") * 1e-3 : std::numeric_limits<double>::quiet_NaN();
    if (fit.success) out.summary["fit_tau_us"] = tau_us;
    else out.warnings.push_back("exponential visibility fit failed: " + fit.message);
    CsvTable t{"spinlock", {"T_ns", "visibility", "fit_tau_us"}, {}, "T in ns, tau in us"};
    for (std::size_t i = 0; i < r.lock_times_ns.size(); ++i) {
        t.rows.push_back({num(r.lock_times_ns[i]), num(r.visibility[i]), num(tau_us)});
        if (r.fit_failed[i]) out.warnings.push_back("fringe below noise floor at T = " + num(r.lock_times_ns[i]) + " ns");
    }
    out.tables.push_back(std::move(t));
}

void run_spectral_density_experiment(const RunConfig& cfg, RunResult& out) {
    const auto d = bath_of(cfg, out.warnings);
    const auto mc_n = count(cfg, "experiment.mc_nuclei");
    SpectralDensity mc;
    if (mc_n > 0) {
        mc = spectral_density_monte_carlo(
            cfg.species, d.omega_mhz,
            MonteCarloBathOptions{mc_n, static_cast<std::uint64_t>(cfg.integer("seed")), cfg.flag("experiment.mc_stratified")});
        out.warnings.insert(out.warnings.end(), mc.warnings.begin(), mc.warnings.end());
        out.summary["mc_integrated_relative_difference"] = integrated_relative_difference(d, mc);
    }
    CsvTable t{"spectral_density", {"omega_mhz", "d_mhz"}, {}, "omega in MHz, D in MHz"};
    for (const auto& c : d.components) {
        t.columns.push_back("d1_" + c.name + "_mhz");
        t.columns.push_back("d2_" + c.name + "_mhz");
    }
    if (mc_n > 0) t.columns.push_back("d_monte_carlo_mhz");
    for (std::size_t i = 0; i < d.omega_mhz.size(); ++i) {
        std::vector<std::string> row{num(d.omega_mhz[i]), num(d.values[i])};
        for (const auto& c : d.components) {
            row.push_back(num(c.d1[i]));
            row.push_back(num(c.d2[i]));
        }
        if (mc_n > 0) row.push_back(num(mc.values[i]));
        t.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(t));
    out.summary["integral_mhz2"] = d.integral();
    for (const auto& s : cfg.species) out.summary["weight_" + s.name + "_mhz2"] = spectral_weight(s);
}

void run_rate_curve_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto d = bath_of(cfg, out.warnings);
    const auto omega = linspace(cfg.number("experiment.omega_min_mhz"), cfg.number("experiment.omega_max_mhz"),
                                count(cfg, "experiment.points"));
    const auto reports = rate_curve(d, omega, sigma_of(cfg), relaxation_of(cfg), fixed_point_of(cfg), threads);
    CsvTable t{"rate_curve",
               {"omega_mhz", "rate_mhz", "damping_mhz", "iterations", "converged", "truncated"},
               {},
               "omega, rates and damping in MHz"};
    std::size_t worst = 0, peak = 0;
    bool all = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        t.rows.push_back({num(omega[i]), num(r.rate_mhz), num(r.damping_mhz), std::to_string(r.iterations),
                          r.converged ? "1" : "0", r.truncated ? "1" : "0"});
        worst = std::max(worst, r.iterations);
        all = all && r.converged;
        if (r.rate_mhz > reports[peak].rate_mhz) peak = i;
    }
    out.tables.push_back(std::move(t));
    out.summary["max_iterations"] = static_cast<double>(worst);
    out.summary["all_converged"] = all ? 1.0 : 0.0;
    out.summary["peak_omega_mhz"] = omega[peak];
    out.summary["peak_rate_mhz"] = reports[peak].rate_mhz;
    if (!all) out.warnings.push_back("some fixed points did not converge");
}

void run_q_curve_experiment(const RunConfig& cfg, unsigned threads, RunResult& out) {
    const auto& omega = cfg.list("experiment.omega_mhz");
    const double alpha = cfg.number("physics.alpha");
    QCurveOptions opts;
    opts.windows = count(cfg, "experiment.windows");
    opts.samples_per_window = count(cfg, "experiment.samples_per_window");
    opts.max_nodes = count(cfg, "experiment.max_nodes");
    opts.nuclear = cfg.text("physics.nuclear") != "off";
    opts.fixed_point = fixed_point_of(cfg);
    opts.execution.threads = threads;
    const auto d = opts.nuclear ? bath_of(cfg, out.warnings) : SpectralDensity::zero({0.0, 1.0});
    const auto on = model_q_curve(omega, d, alpha, gamma2_of(cfg), sigma_of(cfg), opts);
    std::vector<QCurvePoint> off;
    const bool compare = cfg.flag("experiment.compare_nuclear_off") && opts.nuclear;
    if (compare) {
        opts.nuclear = false;
        off = model_q_curve(omega, d, alpha, gamma2_of(cfg), sigma_of(cfg), opts);
    }
    CsvTable t{"q_curve", {"omega_mhz", "q", "tau_ns", "censored", "nuclear_rate_mhz", "converged"}, {},
               "omega and rates in MHz, tau in ns"};
    if (compare) t.columns.push_back("q_nuclear_off");
    std::size_t low = 0;
    for (std::size_t i = 0; i < on.size(); ++i) {
        const auto& p = on[i];
        std::vector<std::string> row{num(p.omega_mhz), num(p.q),         num(p.tau_ns),
                                     p.censored ? "1" : "0", num(p.nuclear_rate_mhz), p.converged ? "1" : "0"};
        if (compare) row.push_back(num(off[i].q));
        t.rows.push_back(std::move(row));
        if (p.q < on[low].q) low = i;
        if (p.censored) out.warnings.push_back("censored 1/e time at " + num(p.omega_mhz) + " MHz");
    }
    out.tables.push_back(std::move(t));
    out.summary["min_q"] = on[low].q;
    out.summary["min_q_omega_mhz"] = on[low].omega_mhz;
    if (alpha > 0.0) out.summary["q_bound"] = 4.0 / (3.0 * alpha);
}

void run_waveform_experiment(const RunConfig& cfg, RunResult& out) {
    const double a1 = cfg.number("experiment.a1"), a2 = cfg.number("experiment.a2");
    const double f = cfg.number("experiment.microwave_mhz");
    const double scale = cfg.number("experiment.drive_vpi") / (a1 + a2);
    const auto raw = synth_quadrature(scale * a1, scale * a2, f, count(cfg, "experiment.periods"));
    const auto over = count(cfg, "experiment.oversample");
    const auto drive = cfg.flag("experiment.filtered") ? filtered(raw, std::max<std::size_t>(4 * over, 8))
                                                       : hold_resample(raw, over);
    const auto field =
        modulate(monochromatic(1.0, cfg.number("experiment.carrier_ghz"), drive.sample_rate_per_ns, drive.samples.size()),
                 drive, ModulateOptions{cfg.number("experiment.ceiling_vpi")});
    const auto spec = sideband_spectrum(field);
    const double bin = field.sample_rate_per_ns * 1e3 / static_cast<double>(field.envelope.size());

    const auto c = fundamental(raw);
    out.summary["programmed_phase_rad"] = raw.phase_rad;
    out.summary["fundamental_phase_rad"] = -std::arg(c);
    out.summary["fundamental_amplitude_vpi"] = std::abs(c);
    out.summary["sideband_relative_phase_rad"] =
        std::remainder(line_at(spec, -f, bin).phase_rad - line_at(spec, f, bin).phase_rad, two_pi);
    out.summary["leakage"] = spec.leakage;
    out.summary["parseval_relative_error"] = std::abs(spec.spectral_power - spec.time_power) / spec.time_power;
    out.summary["rabi_from_power_mhz"] =
        power_to_rabi(cfg.number("experiment.power_uw"), cfg.number("experiment.mhz_per_uw"));
    RamanParams rp;
    rp.omega_l_mhz = cfg.number("experiment.optical_rabi_mhz");
    rp.detuning_ghz = cfg.number("experiment.detuning_ghz");
    rp.hole_zeeman_ghz = cfg.number("experiment.hole_zeeman_ghz");
    rp.electron_zeeman_ghz = cfg.number("experiment.electron_zeeman_ghz");
    rp.microwave_mhz = f;
    const auto w = rp.validate();
    out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    out.summary["raman_rabi_mhz"] = effective_esr_rabi(rp);
    if (spec.leaked) out.warnings.push_back("spectral leakage above tolerance");

    CsvTable wt{"waveform", {"t_ns", "value"}, {}, "t in ns, value in V_pi"};
    for (Eigen::Index k = 0; k < raw.samples.size(); ++k)
        wt.rows.push_back({num(static_cast<double>(k) / raw.sample_rate_per_ns), num(raw.samples[k])});
    out.tables.push_back(std::move(wt));
    CsvTable st{"spectrum", {"offset_mhz", "magnitude", "phase_rad"}, {}, "offset in MHz, phase in rad"};
    for (const auto& l : spec.lines) st.rows.push_back({num(l.offset_mhz), num(l.magnitude), num(l.phase_rad)});
    out.tables.push_back(std::move(st));
}

void run_oracle_experiment(const RunConfig& cfg, RunResult& out) {
    CsvTable t{"oracle", {"check", "value", "threshold", "pass"}, {}, "dimensionless"};
    auto record = [&](const std::string& name, double value, double threshold) {
        const bool ok = value < threshold;
        t.rows.push_back({name, num(value), num(threshold), ok ? "1" : "0"});
        out.summary[name] = value;
        out.passed = out.passed && ok;
    };

    // semi-analytic spectral density against direct sampling
    const auto d = bath_of(cfg, out.warnings);
    const auto mc = spectral_density_monte_carlo(
        cfg.species, d.omega_mhz,
        MonteCarloBathOptions{count(cfg, "experiment.mc_nuclei"), static_cast<std::uint64_t>(cfg.integer("seed")), true});
    record("spectral_density_mc_difference", integrated_relative_difference(d, mc), 0.05);
    double weight = 0.0;
    for (const auto& s : cfg.species) weight += spectral_weight(s);
    record("spectral_weight_sum_rule", std::abs(d.integral() / weight - 1.0), 1e-3);

    // polar density normalization
    double worst_norm = 0.0;
    for (const auto& s : cfg.species) {
        if (s.polar_std_rad == 0.0) continue;
        const PolarAngleDistribution p(s.polar_std_rad);
        const double norm = integrate_adaptive<61>([&](double th) { return p.density(th); }, 0.0, pi, 12, 1e-12);
        worst_norm = std::max(worst_norm, std::abs(norm - 1.0));
    }
    record("polar_density_normalization", worst_norm, 1e-6);

    // master equation against the closed-form Rabi solution
    double worst_rabi = 0.0;
    const auto times = uniform_times(Duration::ns(790), 1581);
    for (const auto& [w, g] : std::array<std::pair<double, double>, 3>{{{20.0, 0.5}, {95.0, 2.5}, {154.0, 4.2}}}) {
        const auto omega = Frequency::mhz(w);
        const auto g1 = Rate::mhz(g);
        const auto traj = evolve(DensityMatrixd::spin_up(), DriveParams(omega), RelaxationParams::fixed(g1),
                                 RateFunction{}, std::span<const Duration>(times));
        for (std::size_t i = 0; i < times.size(); ++i)
            worst_rabi = std::max(worst_rabi, std::abs(traj.states[i].p_up() - analytic_rabi(omega, g1, times[i])));
    }
    record("closed_form_rabi_max_error", worst_rabi, 1e-6);

    // Ramsey envelope width against sigma
    const auto tau = ns_grid(linspace(0.0, 150.0, 151));
    RamseyOptions ideal;
    ideal.ideal_pulses = true;
    const auto r = run_ramsey(Frequency::mhz(50), tau, 0.0, Dissipation::none(),
                              OverhauserEnsemble::gauss_hermite(Frequency::mhz(4.8)), ideal);
    const auto fit = fit_ramsey_gaussian(r.grid, r.p_down);
    const double expect = t2star_from_sigma(Frequency::mhz(4.8));
    record("ramsey_t2star_relative_error",
           fit.success ? std::abs(fit.value("t2star_ns") / expect - 1.0) : std::numeric_limits<double>::infinity(), 0.01);
    out.tables.push_back(std::move(t));
}

} // namespace

RunResult execute(const RunConfig& cfg, unsigned threads) {
    threads = std::max(1u, threads);
    RunResult out;
    out.kind = cfg.kind;
    if (cfg.kind == "rabi") run_rabi_experiment(cfg, threads, out);
    else if (cfg.kind == "ramsey") run_ramsey_experiment(cfg, threads, out);
    else if (cfg.kind == "phase-scan") run_phase_scan_experiment(cfg, threads, out);
    else if (cfg.kind == "spinlock") run_spinlock_experiment(cfg, threads, out);
    else if (cfg.kind == "spectral-density") run_spectral_density_experiment(cfg, out);
    else if (cfg.kind == "rate-curve") run_rate_curve_experiment(cfg, threads, out);
    else if (cfg.kind == "q-curve") run_q_curve_experiment(cfg, threads, out);
    else if (cfg.kind == "waveform") run_waveform_experiment(cfg, out);
    else if (cfg.kind == "oracle") run_oracle_experiment(cfg, out);
    else throw std::invalid_argument("execute: unknown experiment kind '" + cfg.kind + "'");
    return out;
}

std::string format_csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << bytes;
    if (!f) throw std::runtime_error("write failed: " + p.string());
}

} // namespace

std::string render_csv(const CsvTable& table, const std::string& config_sha256) {
    std::ostringstream os;
    os << "# oesr " << tool_version << '\n';
    os << "# config_sha256: " << config_sha256 << '\n';
    os << "# units: time ns, frequency MHz, rate MHz (2 pi / us), phase rad";
    if (!table.units.empty()) os << "; " << table.units;
    os << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << csv_field(table.columns[i]);
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
        os << '\n';
    }
    return os.str();
}

std::string render_manifest(const RunManifest& m) {
    std::ostringstream os;
    os << "tool_version=" << m.tool_version << '\n';
    os << "config_sha256=" << m.config_sha256 << '\n';
    for (const auto& [file, sum] : m.checksums) os << "sha256." << file << '=' << sum << '\n';
    os << "output_dir=" << m.output_dir << '\n';
    os << "threads=" << m.threads << '\n';
    os << "wall_clock_s=" << format_csv_number(m.wall_clock_s) << '\n';
    return os.str();
}

RunManifest write_outputs(const RunConfig& cfg, const RunResult& result, const std::filesystem::path& dir,
                          unsigned threads, double wall_clock_s) {
    std::filesystem::create_directories(dir);
    RunManifest m{tool_version, config_hash(cfg), {}, dir.string(), wall_clock_s, threads};
    auto emit = [&](const std::string& name, const std::string& bytes) {
        write_file(dir / name, bytes);
        m.checksums[name] = sha256_hex(bytes);
    };
    emit("config.yaml", serialize(cfg, false, false));
    for (const auto& t : result.tables) emit(t.name + ".csv", render_csv(t, m.config_sha256));

    CsvTable summary{"summary", {"key", "value"}, {}, "see key suffixes"};
    for (const auto& [k, v] : result.summary) summary.rows.push_back({k, format_csv_number(v)});
    for (const auto& w : result.warnings) summary.rows.push_back({"warning", w});
    emit("summary.csv", render_csv(summary, m.config_sha256));
    write_file(dir / "manifest.txt", render_manifest(m));
    return m;
}

} // namespace oesr
