#pragma once

// Driven two-level spin: state types, Lindblad generators and a fixed-step
// RK4 integrator.
//
// Conventions used throughout:
//   basis (|up>, |down>), S_i = sigma_i / 2,
//   H = Omega (cos(phi) S_x + sin(phi) S_y) + (delta + Delta) S_z,
//   L(a) rho = a rho a^+ - {a^+ a, rho} / 2,
//   Bloch vector x = 2 Re(rho_ud), y = 2 Im(rho_du), z = rho_uu - rho_dd.
// Superoperators act on the column-major vectorisation
// vec(rho) = (rho_uu, rho_du, rho_ud, rho_dd).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "oesr/errors.hpp"
#include "oesr/units.hpp"

namespace oesr {

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Vector2c = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar>
using SuperOperator = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
template <typename Scalar>
using Vector4c = Eigen::Matrix<std::complex<Scalar>, 4, 1>;

template <typename Scalar>
struct SpinOperators {
    using C = std::complex<Scalar>;
    static Matrix2c<Scalar> sx() { return (Matrix2c<Scalar>() << C(0), C(0.5), C(0.5), C(0)).finished(); }
    static Matrix2c<Scalar> sy() { return (Matrix2c<Scalar>() << C(0), C(0, -0.5), C(0, 0.5), C(0)).finished(); }
    static Matrix2c<Scalar> sz() { return (Matrix2c<Scalar>() << C(0.5), C(0), C(0), C(-0.5)).finished(); }
    /// S+ = |up><down|
    static Matrix2c<Scalar> raising() { return (Matrix2c<Scalar>() << C(0), C(1), C(0), C(0)).finished(); }
    /// S- = |down><up|
    static Matrix2c<Scalar> lowering() { return (Matrix2c<Scalar>() << C(0), C(0), C(1), C(0)).finished(); }

    /// n.S for a real 3-vector n.
    static Matrix2c<Scalar> along(const Eigen::Matrix<Scalar, 3, 1>& n) {
        return C(n.x()) * sx() + C(n.y()) * sy() + C(n.z()) * sz();
    }
};

// ---------------------------------------------------------------------------
// States

template <typename Scalar>
class DensityMatrix {
public:
    using C = std::complex<Scalar>;

    DensityMatrix() : DensityMatrix(spin_up()) {}

    static DensityMatrix spin_up() { return DensityMatrix(Scalar(1), Scalar(0), C(0)); }
    static DensityMatrix spin_down() { return DensityMatrix(Scalar(0), Scalar(1), C(0)); }
    static DensityMatrix maximally_mixed() { return DensityMatrix(Scalar(0.5), Scalar(0.5), C(0)); }

    /// |psi><psi| for a (not necessarily normalised) state vector.
    static DensityMatrix from_pure(const Vector2c<Scalar>& psi) {
        const Vector2c<Scalar> v = psi / psi.norm();
        return from_matrix(v * v.adjoint());
    }

    /// Hermitian part of an arbitrary 2x2 matrix.
    static DensityMatrix from_matrix(const Matrix2c<Scalar>& m) {
        return DensityMatrix(m(0, 0).real(), m(1, 1).real(), (m(0, 1) + std::conj(m(1, 0))) / Scalar(2));
    }

    static DensityMatrix from_vectorized(const Vector4c<Scalar>& v) {
        return DensityMatrix(v(0).real(), v(3).real(), (v(2) + std::conj(v(1))) / Scalar(2));
    }

    Scalar p_up() const { return p_up_; }
    Scalar p_down() const { return p_down_; }
    /// rho_{up,down}
    C coherence() const { return coherence_; }

    Matrix2c<Scalar> matrix() const {
        Matrix2c<Scalar> m;
        m << C(p_up_), coherence_, std::conj(coherence_), C(p_down_);
        return m;
    }

    Vector4c<Scalar> vectorized() const {
        Vector4c<Scalar> v;
        v << C(p_up_), std::conj(coherence_), coherence_, C(p_down_);
        return v;
    }

    Scalar trace() const { return p_up_ + p_down_; }
    Scalar purity() const { return p_up_ * p_up_ + p_down_ * p_down_ + Scalar(2) * std::norm(coherence_); }

    Scalar min_eigenvalue() const {
        using std::sqrt;
        const Scalar half_gap = sqrt((p_up_ - p_down_) * (p_up_ - p_down_) / Scalar(4) + std::norm(coherence_));
        return (p_up_ + p_down_) / Scalar(2) - half_gap;
    }

private:
    DensityMatrix(Scalar up, Scalar down, C coherence) : p_up_(up), p_down_(down), coherence_(coherence) {}

    Scalar p_up_;
    Scalar p_down_;
    C coherence_;
};

using DensityMatrixd = DensityMatrix<double>;

template <typename Scalar>
struct BlochVector {
    Eigen::Matrix<Scalar, 3, 1> v = Eigen::Matrix<Scalar, 3, 1>::Zero();

    Scalar x() const { return v.x(); }
    Scalar y() const { return v.y(); }
    Scalar z() const { return v.z(); }
    Scalar norm() const { return v.norm(); }
};

template <typename Scalar>
BlochVector<Scalar> bloch_from_density(const DensityMatrix<Scalar>& rho) {
    BlochVector<Scalar> b;
    b.v << Scalar(2) * rho.coherence().real(), Scalar(2) * std::conj(rho.coherence()).imag(),
        rho.p_up() - rho.p_down();
    return b;
}

template <typename Scalar>
DensityMatrix<Scalar> density_from_bloch(const BlochVector<Scalar>& b) {
    using C = std::complex<Scalar>;
    Matrix2c<Scalar> m;
    m << C((Scalar(1) + b.z()) / Scalar(2)), C(b.x(), -b.y()) / Scalar(2), C(b.x(), b.y()) / Scalar(2),
        C((Scalar(1) - b.z()) / Scalar(2));
    return DensityMatrix<Scalar>::from_matrix(m);
}

// ---------------------------------------------------------------------------
// Parameters

/// Mixing angle of the dressed states: sin(chi) = Omega/Omega',
/// cos(chi) = Delta/Omega'.
struct DressedAngle {
    double chi = 0.0;

    static DressedAngle from(Frequency omega, Frequency detuning) {
        return DressedAngle{std::atan2(omega.rad_per_us(), detuning.rad_per_us())};
    }
    static DressedAngle resonant() { return DressedAngle{pi / 2}; }

    double sin() const { return std::sin(chi); }
    double cos() const { return std::cos(chi); }
    double sin_squared() const { return sin() * sin(); }
};

struct DriveParams {
    Frequency omega;
    double phase = 0.0;
    Frequency delta;
    Frequency overhauser;

    DriveParams() = default;
    DriveParams(Frequency omega_, double phase_ = 0.0, Frequency delta_ = {}, Frequency overhauser_ = {})
        : omega(omega_), phase(reduce_phase(phase_)), delta(delta_), overhauser(overhauser_) {
        if (omega.rad_per_us() < 0.0 || !std::isfinite(omega.rad_per_us()))
            throw std::invalid_argument("DriveParams: Rabi frequency must be finite and >= 0");
    }

    static double reduce_phase(double phi) {
        double r = std::fmod(phi, two_pi);
        if (r < 0.0) r += two_pi;
        if (r >= two_pi) r = 0.0;
        return r;
    }

    /// Total z-detuning delta + Delta.
    Frequency detuning() const { return delta + overhauser; }

    /// Rabi vector (rad/us).
    Eigen::Vector3d rabi_vector() const {
        return {omega.rad_per_us() * std::cos(phase), omega.rad_per_us() * std::sin(phase), detuning().rad_per_us()};
    }

    Frequency omega_prime() const { return Frequency::rad_per_us(rabi_vector().norm()); }
    DressedAngle dressed_angle() const { return DressedAngle::from(omega, detuning()); }
};

enum class NuclearRateMode { off, non_markovian, self_consistent_markov };
enum class DephasingFrame { laboratory, dressed };

struct DriveProportional {
    double alpha = 0.0;
};
struct FixedRate {
    Rate rate;
};

struct RelaxationParams {
    std::variant<DriveProportional, FixedRate> gamma1_law = FixedRate{};
    Rate gamma2;
    DephasingFrame dephasing_frame = DephasingFrame::dressed;
    NuclearRateMode nuclear_rate_mode = NuclearRateMode::off;

    static RelaxationParams none() { return {}; }
    static RelaxationParams drive_proportional(double alpha, Rate gamma2 = {}) {
        RelaxationParams p;
        p.gamma1_law = DriveProportional{alpha};
        p.gamma2 = gamma2;
        p.validate();
        return p;
    }
    static RelaxationParams fixed(Rate gamma1, Rate gamma2 = {}) {
        RelaxationParams p;
        p.gamma1_law = FixedRate{gamma1};
        p.gamma2 = gamma2;
        p.validate();
        return p;
    }

    Rate gamma1(Frequency omega) const {
        if (const auto* law = std::get_if<DriveProportional>(&gamma1_law))
            return drive_proportional_rate(law->alpha, omega);
        return std::get<FixedRate>(gamma1_law).rate;
    }

    void validate() const {
        const bool ok = std::visit(
            [](const auto& law) {
                if constexpr (std::is_same_v<std::decay_t<decltype(law)>, DriveProportional>)
                    return law.alpha >= 0.0 && std::isfinite(law.alpha);
                else
                    return law.rate.per_us() >= 0.0 && std::isfinite(law.rate.per_us());
            },
            gamma1_law);
        if (!ok || !(gamma2.per_us() >= 0.0) || !std::isfinite(gamma2.per_us()))
            throw std::invalid_argument("RelaxationParams: rates must be finite and >= 0");
    }
};

/// Nuclear-induced rate Gamma(Omega', t) seen by an evolution segment. Time
/// is measured from the start of the segment. Tabulated values are linearly
/// interpolated and held at the last value beyond the table.
class RateFunction {
public:
    RateFunction() = default;

    static RateFunction constant(Rate r);
    static RateFunction tabulated(Duration step, std::vector<double> values_per_us);

    bool is_constant() const { return table_.empty(); }
    bool is_zero() const;
    bool has_negative() const;
    Rate at(Duration t) const;
    Rate max_abs() const;

private:
    double constant_ = 0.0;
    double step_us_ = 0.0;
    std::vector<double> table_;
};

struct StepControl {
    /// Step bound h <= 1 / (steps_per_radian * max(Omega', rates)).
    double steps_per_radian = 100.0;
    double positivity_tolerance = 1e-9;
    /// Used instead when the nuclear rate goes transiently negative.
    double transient_positivity_tolerance = 1e-6;
    double min_step_us = 1e-12;
};

template <typename Scalar>
struct Trajectory {
    std::vector<double> times_ns;
    std::vector<DensityMatrix<Scalar>> states;
};

// ---------------------------------------------------------------------------
// Generators

namespace detail {

template <typename Scalar>
SuperOperator<Scalar> kron(const Matrix2c<Scalar>& a, const Matrix2c<Scalar>& b) {
    SuperOperator<Scalar> k;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k.template block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return k;
}

} // namespace detail

/// vec(-i[H, rho])
template <typename Scalar>
SuperOperator<Scalar> hamiltonian_generator(const Matrix2c<Scalar>& h) {
    using C = std::complex<Scalar>;
    const Matrix2c<Scalar> id = Matrix2c<Scalar>::Identity();
    return C(0, -1) * (detail::kron<Scalar>(id, h) - detail::kron<Scalar>(h.transpose(), id));
}

/// vec(L(a) rho)
template <typename Scalar>
SuperOperator<Scalar> dissipator(const Matrix2c<Scalar>& a) {
    using C = std::complex<Scalar>;
    const Matrix2c<Scalar> id = Matrix2c<Scalar>::Identity();
    const Matrix2c<Scalar> ada = a.adjoint() * a;
    return detail::kron<Scalar>(a.conjugate(), a) - C(0.5) * detail::kron<Scalar>(id, ada) -
           C(0.5) * detail::kron<Scalar>(ada.transpose(), id);
}

/// L(S~+) + L(S~-) for the ladder operators of n.S.
template <typename Scalar>
SuperOperator<Scalar> ladder_dissipator(const Eigen::Matrix<Scalar, 3, 1>& n) {
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
    using C = std::complex<Scalar>;
    using std::abs;
    const Vec3 ref = abs(n.x()) < Scalar(0.9) ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = n.cross(ref).normalized();
    const Vec3 e2 = n.cross(e1);
    const Matrix2c<Scalar> up = SpinOperators<Scalar>::along(e1) + C(0, 1) * SpinOperators<Scalar>::along(e2);
    return dissipator<Scalar>(up) + dissipator<Scalar>(Matrix2c<Scalar>(up.adjoint()));
}

/// Liouvillian split as L(t) = fixed + Gamma_nuc(t) * nuclear.
template <typename Scalar>
struct Generator {
    SuperOperator<Scalar> fixed;
    SuperOperator<Scalar> nuclear;
    /// Largest rate/frequency scale (rad/us) of the fixed part.
    double scale = 0.0;
};

template <typename Scalar>
Generator<Scalar> build_generator(const DriveParams& drive, const RelaxationParams& relax) {
    using Ops = SpinOperators<Scalar>;
    using C = std::complex<Scalar>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

    const Eigen::Vector3d rabi = drive.rabi_vector();
    const Matrix2c<Scalar> h = C(Scalar(rabi.x())) * Ops::sx() + C(Scalar(rabi.y())) * Ops::sy() +
                               C(Scalar(rabi.z())) * Ops::sz();
    const double omega_prime = rabi.norm();
    const Vec3 axis = omega_prime > 0.0 ? Vec3(rabi.cast<Scalar>() / Scalar(omega_prime)) : Vec3(Vec3::UnitZ());

    const double g1 = relax.gamma1(drive.omega).per_us();
    const double g2 = relax.gamma2.per_us();

    Generator<Scalar> gen;
    gen.fixed = hamiltonian_generator<Scalar>(h);
    if (g1 > 0.0)
        gen.fixed += C(Scalar(g1)) * (dissipator<Scalar>(Ops::raising()) + dissipator<Scalar>(Ops::lowering()));
    if (g2 > 0.0) {
        const Matrix2c<Scalar> dephasing =
            relax.dephasing_frame == DephasingFrame::dressed ? Ops::along(axis) : Ops::sz();
        gen.fixed += C(Scalar(g2)) * dissipator<Scalar>(dephasing);
    }
    gen.nuclear = ladder_dissipator<Scalar>(axis);
    gen.scale = std::max({omega_prime, g1, g2});
    return gen;
}

namespace detail {

/// One classical RK4 step of dy/dt = L y with constant L, as a matrix.
template <typename Scalar>
SuperOperator<Scalar> rk4_step_matrix(const SuperOperator<Scalar>& l, Scalar h) {
    using C = std::complex<Scalar>;
    const SuperOperator<Scalar> a = C(h) * l;
    const SuperOperator<Scalar> a2 = a * a;
    const SuperOperator<Scalar> a3 = a2 * a;
    const SuperOperator<Scalar> a4 = a3 * a;
    return SuperOperator<Scalar>::Identity() + a + a2 / C(2) + a3 / C(6) + a4 / C(24);
}

template <typename Scalar>
SuperOperator<Scalar> matrix_power(SuperOperator<Scalar> base, std::size_t n) {
    SuperOperator<Scalar> result = SuperOperator<Scalar>::Identity();
    while (n > 0) {
        if (n & 1U) result = base * result;
        n >>= 1U;
        if (n > 0) base = base * base;
    }
    return result;
}

inline std::size_t substep_count(double interval_us, double scale, const StepControl& control) {
    if (interval_us <= 0.0) return 0;
    if (scale <= 0.0) return 1;
    const double h_max = 1.0 / (control.steps_per_radian * scale);
    if (!(h_max >= control.min_step_us))
        throw SolverError(SolverError::Kind::step_underflow,
                          "evolve: step size " + std::to_string(h_max) + " us underflows (stiff generator, scale " +
                              std::to_string(scale) + " rad/us)");
    const double n = std::ceil(interval_us / h_max * (1.0 - 1e-12));
    if (n > 1e12)
        throw SolverError(SolverError::Kind::step_underflow, "evolve: too many substeps requested");
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

/// Propagator over [t0, t0 + interval] for L(t) = fixed + rate(t) * nuclear.
template <typename Scalar>
SuperOperator<Scalar> interval_propagator(const Generator<Scalar>& gen, const RateFunction& rate, double t0_us,
                                          double interval_us, const StepControl& control) {
    using C = std::complex<Scalar>;
    const double scale = std::max(gen.scale, rate.max_abs().per_us());
    const std::size_t n = substep_count(interval_us, scale, control);
    if (n == 0) return SuperOperator<Scalar>::Identity();
    const Scalar h = Scalar(interval_us / static_cast<double>(n));

    if (rate.is_constant()) {
        const SuperOperator<Scalar> l = gen.fixed + C(Scalar(rate.at(Duration{}).per_us())) * gen.nuclear;
        return matrix_power<Scalar>(rk4_step_matrix<Scalar>(l, h), n);
    }

    auto l_at = [&](double t_us) -> SuperOperator<Scalar> {
        return gen.fixed + C(Scalar(rate.at(Duration::us(t_us)).per_us())) * gen.nuclear;
    };
    SuperOperator<Scalar> y = SuperOperator<Scalar>::Identity();
    const double hd = static_cast<double>(h);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0_us + static_cast<double>(k) * hd;
        const SuperOperator<Scalar> l0 = l_at(t);
        const SuperOperator<Scalar> lm = l_at(t + hd / 2);
        const SuperOperator<Scalar> l1 = l_at(t + hd);
        const SuperOperator<Scalar> k1 = l0 * y;
        const SuperOperator<Scalar> k2 = lm * (y + C(h / 2) * k1);
        const SuperOperator<Scalar> k3 = lm * (y + C(h / 2) * k2);
        const SuperOperator<Scalar> k4 = l1 * (y + C(h) * k3);
        y += C(h / 6) * (k1 + C(2) * k2 + C(2) * k3 + k4);
    }
    return y;
}

template <typename Scalar>
void check_state(const DensityMatrix<Scalar>& rho, double tolerance, double t_ns) {
    const double p = static_cast<double>(rho.p_up() + rho.p_down());
    if (!std::isfinite(p) || !std::isfinite(static_cast<double>(std::abs(rho.coherence()))))
        throw SolverError(SolverError::Kind::non_finite, "evolve: non-finite state at t = " + std::to_string(t_ns) + " ns");
    const double lambda = static_cast<double>(rho.min_eigenvalue());
    if (lambda < -tolerance)
        throw SolverError(SolverError::Kind::positivity_violation,
                          "evolve: density matrix eigenvalue " + std::to_string(lambda) + " below tolerance at t = " +
                              std::to_string(t_ns) + " ns");
}

} // namespace detail

template <typename Scalar>
DensityMatrix<Scalar> apply(const SuperOperator<Scalar>& p, const DensityMatrix<Scalar>& rho) {
    return DensityMatrix<Scalar>::from_vectorized(p * rho.vectorized());
}

/// Superoperator mapping vec(rho(0)) to vec(rho(duration)) for one
/// piecewise-constant drive segment.
template <typename Scalar = double>
SuperOperator<Scalar> segment_propagator(const DriveParams& drive, const RelaxationParams& relax,
                                         const RateFunction& nuclear, Duration duration,
                                         const StepControl& control = {}) {
    if (duration.us() < 0.0) throw std::invalid_argument("segment_propagator: negative duration");
    const Generator<Scalar> gen = build_generator<Scalar>(drive, relax);
    return detail::interval_propagator<Scalar>(gen, nuclear, 0.0, duration.us(), control);
}

/// Evolves rho0 under a constant drive and samples the state at the given
/// ascending, non-negative times (measured from the start of the drive).
template <typename Scalar = double>
Trajectory<Scalar> evolve(const DensityMatrix<Scalar>& rho0, const DriveParams& drive, const RelaxationParams& relax,
                          const RateFunction& nuclear, std::span<const Duration> sample_times,
                          const StepControl& control = {}) {
    relax.validate();
    const Generator<Scalar> gen = build_generator<Scalar>(drive, relax);
    const double tolerance =
        nuclear.has_negative() ? control.transient_positivity_tolerance : control.positivity_tolerance;

    Trajectory<Scalar> out;
    out.times_ns.reserve(sample_times.size());
    out.states.reserve(sample_times.size());

    Vector4c<Scalar> state = rho0.vectorized();
    double t_prev = 0.0;
    // Uniform spacing reuses one interval propagator when the rate is constant.
    double cached_interval = -1.0;
    SuperOperator<Scalar> cached;
    for (const Duration& t : sample_times) {
        const double t_us = t.us();
        if (!(t_us >= t_prev - 1e-15)) throw std::invalid_argument("evolve: sample times must be ascending and >= 0");
        const double interval = std::max(0.0, t_us - t_prev);
        if (interval > 0.0) {
            if (nuclear.is_constant()) {
                if (std::abs(interval - cached_interval) > 1e-12 * std::max(1.0, interval)) {
                    cached = detail::interval_propagator<Scalar>(gen, nuclear, t_prev, interval, control);
                    cached_interval = interval;
                }
                state = cached * state;
            } else {
                state = detail::interval_propagator<Scalar>(gen, nuclear, t_prev, interval, control) * state;
            }
        }
        const DensityMatrix<Scalar> rho = DensityMatrix<Scalar>::from_vectorized(state);
        detail::check_state(rho, tolerance, t.ns());
        state = rho.vectorized();
        out.times_ns.push_back(t.ns());
        out.states.push_back(rho);
        t_prev = std::max(t_prev, t_us);
    }
    return out;
}

/// Uniform grid of n >= 2 points on [0, duration].
std::vector<Duration> uniform_times(Duration duration, std::size_t n);

/// Closed-form rho_up,up(t) of a resonantly driven spin from |up> with
/// symmetric spin flips Gamma1 (underdamped branch only).
double analytic_rabi(Frequency omega, Rate gamma1, Duration t);

} // namespace oesr
