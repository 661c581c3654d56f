#pragma once

#include <numbers>

namespace oesr {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Internal unit system: time in microseconds, angular frequency in rad/us,
// decay rates in 1/us. Ordinary frequencies at the boundary are MHz and
// times are ns.

/// Angular frequency. Stored in rad/us.
class Frequency {
public:
    constexpr Frequency() = default;

    static constexpr Frequency mhz(double f) { return Frequency(two_pi * f); }
    static constexpr Frequency rad_per_us(double w) { return Frequency(w); }

    constexpr double mhz() const { return value_ / two_pi; }
    constexpr double rad_per_us() const { return value_; }

    constexpr Frequency operator-() const { return Frequency(-value_); }
    friend constexpr Frequency operator+(Frequency a, Frequency b) { return Frequency(a.value_ + b.value_); }
    friend constexpr Frequency operator-(Frequency a, Frequency b) { return Frequency(a.value_ - b.value_); }
    friend constexpr Frequency operator*(double s, Frequency a) { return Frequency(s * a.value_); }
    friend constexpr auto operator<=>(Frequency, Frequency) = default;

private:
    constexpr explicit Frequency(double w) : value_(w) {}
    double value_ = 0.0;
};

/// Decay rate. Stored in 1/us. A rate quoted "in MHz" follows the same
/// 2*pi convention as Frequency, so Rate::mhz(1) == Rate::per_us(2*pi).
class Rate {
public:
    constexpr Rate() = default;

    static constexpr Rate per_us(double r) { return Rate(r); }
    static constexpr Rate mhz(double f) { return Rate(two_pi * f); }

    constexpr double per_us() const { return value_; }
    constexpr double mhz() const { return value_ / two_pi; }

    friend constexpr Rate operator+(Rate a, Rate b) { return Rate(a.value_ + b.value_); }
    friend constexpr Rate operator-(Rate a, Rate b) { return Rate(a.value_ - b.value_); }
    friend constexpr Rate operator*(double s, Rate a) { return Rate(s * a.value_); }
    friend constexpr auto operator<=>(Rate, Rate) = default;

private:
    constexpr explicit Rate(double r) : value_(r) {}
    double value_ = 0.0;
};

/// Time span. Stored in us.
class Duration {
public:
    constexpr Duration() = default;

    static constexpr Duration ns(double t) { return Duration(t * 1e-3); }
    static constexpr Duration us(double t) { return Duration(t); }

    constexpr double ns() const { return value_ * 1e3; }
    constexpr double us() const { return value_; }

    friend constexpr Duration operator+(Duration a, Duration b) { return Duration(a.value_ + b.value_); }
    friend constexpr Duration operator-(Duration a, Duration b) { return Duration(a.value_ - b.value_); }
    friend constexpr Duration operator*(double s, Duration a) { return Duration(s * a.value_); }
    friend constexpr auto operator<=>(Duration, Duration) = default;

private:
    constexpr explicit Duration(double t) : value_(t) {}
    double value_ = 0.0;
};

/// pi-pulse time t_pi = 1/(2*Omega) for a Rabi frequency Omega.
constexpr Duration pi_time(Frequency omega) { return Duration::us(pi / omega.rad_per_us()); }

/// Drive-proportional relaxation law: Gamma1 [1/us] = alpha * Omega [MHz].
/// With this reading Q = 4*Omega/(3*Gamma1) = 4/(3*alpha).
constexpr Rate drive_proportional_rate(double alpha, Frequency omega) {
    return Rate::per_us(alpha * (omega.mhz() < 0 ? -omega.mhz() : omega.mhz()));
}

} // namespace oesr
