#include "oesr/nuclear_bath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oesr/quadrature.hpp"
#include "oesr/random.hpp"
#include "oesr/units.hpp"

namespace oesr {

namespace {

using boost::math::quadrature::gauss_kronrod;

/// Width of the box used in place of a delta when the polar std is zero.
constexpr double degenerate_width = 1e-6;

/// Polar Gaussian is cut at 14 standard deviations (relative weight e^-98).
double polar_support(double std) { return std::min(pi, 14 * std); }

bool is_half_integer_multiple(double x) {
    const double twice = 2.0 * x;
    return std::abs(twice - std::round(twice)) < 1e-12;
}

/// int_{-inf}^{b} p(B) B^2 dB for a Gaussian B_Q, as lower and upper tails.
struct SecondMoment {
    double mean;
    double std;

    double total() const { return mean * mean + std * std; }

    double lower(double b) const {
        if (std == 0.0) return b >= mean ? total() : 0.0;
        if (b == -INFINITY) return 0.0;
        if (b == INFINITY) return total();
        const double z = (b - mean) / std;
        const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(two_pi);
        return mean * mean * cdf - 2 * mean * std * pdf + std * std * (cdf - z * pdf);
    }

    double upper(double b) const {
        if (std == 0.0) return b < mean ? total() : 0.0;
        if (b == INFINITY) return 0.0;
        if (b == -INFINITY) return total();
        const double z = (b - mean) / std;
        const double q = 0.5 * std::erfc(z / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(two_pi);
        return mean * mean * q + 2 * mean * std * pdf + std * std * (q + z * pdf);
    }

    /// Mass on [b1, b2], b1 <= b2, using the better-conditioned tail.
    double between(double b1, double b2) const {
        if (!(b2 > b1)) return 0.0;
        if (0.5 * (b1 + b2) > mean) return std::max(0.0, upper(b1) - upper(b2));
        return std::max(0.0, lower(b2) - lower(b1));
    }
};

/// One line family: omega = center + k * g(theta) * B_Q with weight
/// prefactor * w(theta) * B_Q^2.
struct LineFamily {
    double center;
    double k;
    double prefactor;
    bool double_quantum;

    double angular_weight(double theta) const {
        if (double_quantum) {
            const double c = std::cos(theta);
            return c * c * c * c;
        }
        const double s = std::sin(2 * theta);
        return s * s;
    }
};

std::vector<LineFamily> line_families(const NuclearSpeciesConfig& s) {
    std::vector<LineFamily> out;
    const double base = (pi / 2) * s.a2_mean_mhz2 * s.count / (2 * s.spin + 1) / (s.zeeman_mhz * s.zeeman_mhz);
    const int levels = static_cast<int>(std::lround(2 * s.spin));
    for (int i = 0; i < levels; ++i) {
        const double m = -s.spin + i;
        const double k = 2 * m + 1;
        if (std::abs(k) < 1e-12) continue;
        const double mp = m_plus(s.spin, m) * k;
        out.push_back({s.zeeman_mhz, k, base * mp * mp, false});
    }
    for (int i = 0; i + 1 < levels; ++i) {
        const double m = -s.spin + i;
        const double mp = m_plus(s.spin, m) * m_plus(s.spin, m + 1);
        out.push_back({2 * s.zeeman_mhz, 4 * (m + 1), base * mp * mp, true});
    }
    return out;
}

/// G(g) = 2 int_{theta: g(theta) < g} p(theta) w(theta) dtheta over [0, pi/2],
/// tabulated in theta; g(theta) is increasing there.
class AngularCdf {
public:
    AngularCdf(const PolarAngleDistribution& angles, const LineFamily& f, std::size_t points = 4097)
        : degenerate_(angles.degenerate()), w0_(f.angular_weight(0.0)) {
        if (degenerate_) return;
        cum_.assign(points, 0.0);
        const double h = (pi / 2) / static_cast<double>(points - 1);
        const auto integrand = [&](double t) { return angles.density_interpolated(t) * f.angular_weight(t); };
        for (std::size_t i = 1; i < points; ++i)
            cum_[i] = cum_[i - 1] + 2 * gauss_kronrod<double, 15>::integrate(integrand, h * static_cast<double>(i - 1),
                                                                               h * static_cast<double>(i), 0);
    }

    double operator()(double g) const {
        if (degenerate_) return g > -0.5 ? w0_ : 0.0;
        if (!(g > -0.5)) return 0.0;
        if (g >= 1.0) return cum_.back();
        const double theta = std::asin(std::sqrt((g + 0.5) / 1.5));
        const double x = theta / (pi / 2) * static_cast<double>(cum_.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(x), cum_.size() - 2);
        const double f = x - static_cast<double>(i);
        return cum_[i] + f * (cum_[i + 1] - cum_[i]);
    }

    double total() const { return degenerate_ ? w0_ : cum_.back(); }
    bool degenerate() const { return degenerate_; }
    double edge_weight() const { return w0_; }

private:
    bool degenerate_;
    double w0_;
    std::vector<double> cum_;
};

/// Spectral mass of one line family inside [lo, hi).
double cell_mass(const LineFamily& f, const SecondMoment& bq, const AngularCdf& cdf, double lo, double hi) {
    // Angular weight of lines from coupling b that land in the cell.
    const auto inside = [&](double b) {
        if (b == 0.0 || f.k == 0.0) return (lo <= f.center && f.center < hi) ? cdf.total() : 0.0;
        const double g1 = (lo - f.center) / (f.k * b);
        const double g2 = (hi - f.center) / (f.k * b);
        return cdf(std::max(g1, g2)) - cdf(std::min(g1, g2));
    };

    if (bq.std == 0.0) return f.prefactor * bq.mean * bq.mean * inside(bq.mean);
    if (cdf.degenerate()) {
        // Every nucleus sits at theta = 0, g = -1/2.
        const double c = -0.5 * f.k;
        if (c == 0.0) return (lo <= f.center && f.center < hi) ? f.prefactor * cdf.edge_weight() * bq.total() : 0.0;
        const double b1 = (lo - f.center) / c;
        const double b2 = (hi - f.center) / c;
        return f.prefactor * cdf.edge_weight() * bq.between(std::min(b1, b2), std::max(b1, b2));
    }

    const double norm = 1.0 / (bq.std * std::sqrt(two_pi));
    const auto integrand = [&](double b) {
        const double z = (b - bq.mean) / bq.std;
        return norm * std::exp(-0.5 * z * z) * b * b * inside(b);
    };
    // The integrand kinks where a cell edge meets g = -1/2 or g = 1; split there.
    const double a = bq.mean - 9 * bq.std;
    const double b = bq.mean + 9 * bq.std;
    std::vector<double> cuts{a, b};
    if (a < 0.0 && 0.0 < b) cuts.push_back(0.0);
    for (double edge : {lo, hi})
        for (double g : {-0.5, 1.0}) {
            const double x = (edge - f.center) / (f.k * g);
            if (a < x && x < b) cuts.push_back(x);
        }
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (!(cuts[i + 1] > cuts[i]) || inside(mid) == 0.0) continue;
        sum += integrate_adaptive<31>(integrand, cuts[i], cuts[i + 1], 3, 1e-7);
    }
    return f.prefactor * sum;
}

void check_grid(std::span<const double> omega) {
    if (omega.size() < 2) throw std::invalid_argument("spectral density: grid needs at least two points");
    for (std::size_t i = 1; i < omega.size(); ++i)
        if (!(omega[i] > omega[i - 1])) throw std::invalid_argument("spectral density: grid must be strictly increasing");
}

void coverage_warnings(std::span<const NuclearSpeciesConfig> species, std::span<const double> omega,
                       std::vector<std::string>& warnings) {
    double zmax = 0.0;
    for (const auto& s : species) zmax = std::max(zmax, s.zeeman_mhz);
    if (omega.front() > 0.0 || omega.back() < 2.5 * zmax)
        warnings.push_back("frequency grid [" + std::to_string(omega.front()) + ", " + std::to_string(omega.back()) +
                           "] MHz does not cover [0, 2.5 max omega_z] = [0, " + std::to_string(2.5 * zmax) + "] MHz");
}

} // namespace

void NuclearSpeciesConfig::validate() const {
    const double twice = 2 * spin;
    if (!(spin >= 0.5) || !is_half_integer_multiple(spin) || twice < 1)
        throw std::invalid_argument("species " + name + ": spin must be a positive multiple of 1/2");
    if (!(count >= 0) || !(a2_mean_mhz2 >= 0) || !(bq_mhz.std >= 0) || !(polar_std_rad >= 0))
        throw std::invalid_argument("species " + name + ": counts, <A^2> and widths must be >= 0");
    if (!(zeeman_mhz > 0)) throw std::invalid_argument("species " + name + ": nuclear Zeeman frequency must be > 0");
    for (double v : {count, a2_mean_mhz2, bq_mhz.mean, bq_mhz.std, polar_std_rad, zeeman_mhz})
        if (!std::isfinite(v)) throw std::invalid_argument("species " + name + ": non-finite parameter");
}

std::vector<NuclearSpeciesConfig> default_bath() {
    NuclearSpeciesConfig in;
    in.name = "In115";
    in.spin = 4.5;
    in.count = 5.0e4;
    in.a2_mean_mhz2 = 2.0e-3;
    in.bq_mhz = {0.8, 0.25};
    in.polar_std_rad = 0.4;
    in.zeeman_mhz = 30.8;

    NuclearSpeciesConfig as;
    as.name = "As75";
    as.spin = 1.5;
    as.count = 1.0e5;
    as.a2_mean_mhz2 = 1.2e-2;
    as.bq_mhz = {0.5, 0.15};
    as.polar_std_rad = 0.4;
    as.zeeman_mhz = 24.1;
    return {in, as};
}

double m_plus(double spin, double m) {
    const double steps = m + spin;
    if (!is_half_integer_multiple(spin) || std::abs(steps - std::round(steps)) > 1e-12 || steps < -1e-12 ||
        m > spin - 1 + 1e-12)
        throw std::out_of_range("m_plus: m must lie in {-I, ..., I-1}");
    return std::sqrt(std::max(0.0, spin * (spin + 1) - m * (m + 1)));
}

double quadrupolar_factor(double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    return s * s - 0.5 * c * c;
}

PolarAngleDistribution::PolarAngleDistribution(double polar_std_rad, std::size_t table_points) : std_(polar_std_rad) {
    if (!(polar_std_rad >= 0) || !std::isfinite(polar_std_rad))
        throw std::invalid_argument("PolarAngleDistribution: std must be finite and >= 0");
    if (degenerate()) return;
    const double upper = polar_support(std_);
    const auto gauss = [this](double t) { return std::exp(-t * t / (2 * std_ * std_)) * std::sin(t); };
    norm_ = integrate_adaptive<61>(gauss, 0.0, upper, 20, 1e-14);

    table_.resize(std::max<std::size_t>(table_points, 2));
    for (std::size_t i = 0; i < table_.size(); ++i)
        table_[i] = density(pi / 2 * static_cast<double>(i) / static_cast<double>(table_.size() - 1));

    const std::size_t n = 20001;
    polar_cdf_.resize(n);
    polar_cdf_[0] = 0.0;
    const double h = upper / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        polar_cdf_[i] = polar_cdf_[i - 1] +
                        gauss_kronrod<double, 15>::integrate(gauss, h * static_cast<double>(i - 1), h * static_cast<double>(i), 0) / norm_;
    for (auto& v : polar_cdf_) v /= polar_cdf_.back();
}

double PolarAngleDistribution::polar_density(double theta_prime) const {
    if (degenerate()) return theta_prime == 0.0 ? INFINITY : 0.0;
    if (theta_prime < 0 || theta_prime > pi) return 0.0;
    return std::exp(-theta_prime * theta_prime / (2 * std_ * std_)) / norm_;
}

double PolarAngleDistribution::density(double theta) const {
    if (theta < 0 || theta > pi) return 0.0;
    const double t = std::min(theta, pi - theta);
    if (degenerate()) return t < degenerate_width / 2 ? 1.0 / degenerate_width : 0.0;
    const double a = pi / 2 - t;
    if (a < 1e-14) return 0.0;
    // theta' = pi/2 - a cos(v) removes the inverse-square-root endpoints.
    const auto integrand = [&](double v) {
        const double s = std::sin(v / 2);
        const double c = std::cos(v / 2);
        const double tp = pi / 2 - a * std::cos(v);
        // sin(x) = sin(pi - x); pi - 2a s^2 = pi c^2 + 2t s^2 keeps precision when x is near pi.
        const double x1 = 2 * a * s * s;
        const double x2 = 2 * a * c * c;
        const double f1 = x1 < pi / 2 ? std::sin(x1) : std::sin(pi * c * c + 2 * t * s * s);
        const double f2 = x2 < pi / 2 ? std::sin(x2) : std::sin(pi * s * s + 2 * t * c * c);
        const double root = std::sqrt(f1 * f2);
        if (root == 0.0) return 0.0;
        return polar_density(tp) * std::sin(tp) * 2 * a * s * c / root;
    };
    // Only v with theta' inside the Gaussian support contribute.
    const double reach = (pi / 2 - polar_support(std_)) / a;
    if (reach >= 1.0) return 0.0;
    const double v_max = std::acos(std::max(-1.0, reach));
    // Near theta = 0 the integrand has a feature of width ~sqrt(theta) at v = 0.
    const double v_split = std::min(v_max, 8 * std::sqrt(t));
    double inner = integrate_adaptive<61>(integrand, v_split, v_max, 20, 1e-11);
    if (v_split > 0.0) inner += integrate_adaptive<61>(integrand, 0.0, v_split, 20, 1e-11);
    return std::cos(t) * inner / pi;
}

double PolarAngleDistribution::density_interpolated(double theta) const {
    if (theta < 0 || theta > pi) return 0.0;
    if (degenerate()) return density(theta);
    const double t = std::min(theta, pi - theta);
    const double x = t / (pi / 2) * static_cast<double>(table_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(x), table_.size() - 2);
    const double f = x - static_cast<double>(i);
    return table_[i] + f * (table_[i + 1] - table_[i]);
}

double PolarAngleDistribution::sample_polar(double u) const {
    if (degenerate()) return 0.0;
    const double upper = polar_support(std_);
    const auto it = std::upper_bound(polar_cdf_.begin(), polar_cdf_.end(), u);
    if (it == polar_cdf_.begin()) return 0.0;
    if (it == polar_cdf_.end()) return upper;
    const auto i = static_cast<std::size_t>(it - polar_cdf_.begin()) - 1;
    const double h = upper / static_cast<double>(polar_cdf_.size() - 1);
    const double span = polar_cdf_[i + 1] - polar_cdf_[i];
    const double f = span > 0 ? (u - polar_cdf_[i]) / span : 0.0;
    return h * (static_cast<double>(i) + f);
}

double PolarAngleDistribution::theta_from_axis(double theta_prime, double azimuth) {
    // Field along x; theta is measured so that (pi/2 - theta) is the angle to the field.
    const double nx = std::sin(theta_prime) * std::cos(azimuth);
    const double ny = std::sin(theta_prime) * std::sin(azimuth);
    const double nz = std::cos(theta_prime);
    double theta = std::atan2(nx, std::hypot(ny, nz));
    if (theta < 0) theta += pi;
    return theta;
}

double polar_angle_density(double theta, double polar_std_rad) {
    return PolarAngleDistribution(polar_std_rad, 2).density(theta);
}

std::vector<double> sample_quadrupolar_angles(double polar_std_rad, std::size_t n, std::uint64_t seed) {
    const PolarAngleDistribution dist(polar_std_rad, 2);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = PolarAngleDistribution::theta_from_axis(dist.sample_polar(uniform_from_counter(substream(seed, 0), i)),
                                                         two_pi * uniform_from_counter(substream(seed, 1), i));
    return out;
}

double SpectralDensity::at(double omega) const {
    if (!covers(omega)) throw std::out_of_range("SpectralDensity: " + std::to_string(omega) + " MHz is off the grid");
    auto it = std::upper_bound(omega_mhz.begin(), omega_mhz.end(), omega);
    if (it == omega_mhz.end()) return values.back();
    const auto i = static_cast<std::size_t>(it - omega_mhz.begin()) - 1;
    const double f = (omega - omega_mhz[i]) / (omega_mhz[i + 1] - omega_mhz[i]);
    return values[i] + f * (values[i + 1] - values[i]);
}

bool SpectralDensity::covers(double omega) const {
    return !omega_mhz.empty() && omega >= omega_mhz.front() && omega <= omega_mhz.back();
}

double SpectralDensity::integral() const {
    const auto edges = cell_edges(omega_mhz);
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * (edges[i + 1] - edges[i]);
    return sum;
}

SpectralDensity SpectralDensity::zero(std::vector<double> omega) {
    return from_values(std::move(omega), {});
}

SpectralDensity SpectralDensity::from_values(std::vector<double> omega, std::vector<double> v) {
    check_grid(omega);
    if (v.empty()) v.assign(omega.size(), 0.0);
    if (v.size() != omega.size()) throw std::invalid_argument("SpectralDensity: size mismatch");
    for (double x : v)
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("SpectralDensity: values must be finite and >= 0");
    SpectralDensity d;
    d.omega_mhz = std::move(omega);
    d.values = std::move(v);
    return d;
}

std::vector<double> default_omega_grid(std::span<const NuclearSpeciesConfig> species, std::size_t points) {
    double zmax = 0.0;
    for (const auto& s : species) zmax = std::max(zmax, s.zeeman_mhz);
    if (!(zmax > 0) || points < 2) throw std::invalid_argument("default_omega_grid: need species and >= 2 points");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = 3 * zmax * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

std::vector<double> cell_edges(std::span<const double> omega) {
    check_grid(omega);
    std::vector<double> e(omega.size() + 1);
    for (std::size_t i = 1; i < omega.size(); ++i) e[i] = 0.5 * (omega[i - 1] + omega[i]);
    e.front() = omega.front() - (e[1] - omega.front());
    e.back() = omega.back() + (omega.back() - e[omega.size() - 1]);
    return e;
}

SpectralDensity spectral_density(std::span<const NuclearSpeciesConfig> species, std::span<const double> omega) {
    check_grid(omega);
    const auto edges = cell_edges(omega);
    SpectralDensity out;
    out.omega_mhz.assign(omega.begin(), omega.end());
    out.values.assign(omega.size(), 0.0);
    coverage_warnings(species, omega, out.warnings);

    for (const auto& s : species) {
        s.validate();
        const PolarAngleDistribution angles(s.polar_std_rad);
        const SecondMoment bq{s.bq_mhz.mean, s.bq_mhz.std};
        SpeciesComponent comp{s.name, std::vector<double>(omega.size(), 0.0), std::vector<double>(omega.size(), 0.0)};
        for (const auto& family : line_families(s)) {
            const AngularCdf cdf(angles, family);
            auto& target = family.double_quantum ? comp.d2 : comp.d1;
            for (std::size_t i = 0; i < omega.size(); ++i)
                target[i] += cell_mass(family, bq, cdf, edges[i], edges[i + 1]) / (edges[i + 1] - edges[i]);
        }
        for (std::size_t i = 0; i < omega.size(); ++i) out.values[i] += comp.d1[i] + comp.d2[i];
        out.components.push_back(std::move(comp));
    }
    return out;
}

double spectral_weight(const NuclearSpeciesConfig& s) {
    s.validate();
    const PolarAngleDistribution angles(s.polar_std_rad);
    const double b2 = s.bq_mhz.mean * s.bq_mhz.mean + s.bq_mhz.std * s.bq_mhz.std;
    double total = 0.0;
    for (const auto& f : line_families(s)) {
        double avg = 0.0;
        if (angles.degenerate()) {
            avg = f.angular_weight(0.0);
        } else {
            const auto integrand = [&](double t) { return angles.density(t) * f.angular_weight(t); };
            avg = 2 * integrate_adaptive<61>(integrand, 0.0, pi / 2, 15, 1e-12);
        }
        total += f.prefactor * b2 * avg;
    }
    return total;
}

namespace {

/// Fisher-Yates with counter-based draws.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_from_counter(seed, i) * static_cast<double>(i));
        std::swap(p[i - 1], p[std::min(j, i - 1)]);
    }
    return p;
}

} // namespace

SpectralDensity spectral_density_monte_carlo(std::span<const NuclearSpeciesConfig> species,
                                             std::span<const double> omega, const MonteCarloBathOptions& options) {
    check_grid(omega);
    if (options.nuclei_per_species == 0) throw std::invalid_argument("spectral_density_monte_carlo: no samples");
    const auto edges = cell_edges(omega);
    SpectralDensity out;
    out.omega_mhz.assign(omega.begin(), omega.end());
    out.values.assign(omega.size(), 0.0);
    coverage_warnings(species, omega, out.warnings);

    const boost::math::normal_distribution<double> normal;
    const std::size_t n = options.nuclei_per_species;
    for (std::size_t si = 0; si < species.size(); ++si) {
        const auto& s = species[si];
        s.validate();
        const PolarAngleDistribution angles(s.polar_std_rad, 2);
        const auto families = line_families(s);
        SpeciesComponent comp{s.name, std::vector<double>(omega.size(), 0.0), std::vector<double>(omega.size(), 0.0)};
        const std::uint64_t seed = substream(options.seed, si);
        std::array<std::vector<std::size_t>, 3> strata;
        if (options.stratified)
            for (std::size_t d = 0; d < 3; ++d) strata[d] = permutation(n, substream(seed, 100 + d));

        double dropped = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::array<double, 3> u{};
            for (std::size_t d = 0; d < 3; ++d) {
                const double r = uniform_from_counter(substream(seed, d), j);
                u[d] = options.stratified ? (static_cast<double>(strata[d][j]) + r) / static_cast<double>(n) : r;
            }
            const double theta = PolarAngleDistribution::theta_from_axis(angles.sample_polar(u[0]), two_pi * u[1]);
            const double b = s.bq_mhz.mean + s.bq_mhz.std * boost::math::quantile(normal, u[2]);
            const double g = quadrupolar_factor(theta);
            for (const auto& f : families) {
                const double w = f.prefactor * f.angular_weight(theta) * b * b / static_cast<double>(n);
                const double line = f.center + f.k * g * b;
                const auto it = std::upper_bound(edges.begin(), edges.end(), line);
                if (it == edges.begin() || it == edges.end()) {
                    dropped += w;
                    continue;
                }
                const auto cell = static_cast<std::size_t>(it - edges.begin()) - 1;
                (f.double_quantum ? comp.d2 : comp.d1)[cell] += w / (edges[cell + 1] - edges[cell]);
            }
        }
        if (dropped > 0.0)
            out.warnings.push_back("species " + s.name + ": spectral weight " + std::to_string(dropped) +
                                   " MHz^2 fell outside the grid");
        for (std::size_t i = 0; i < omega.size(); ++i) out.values[i] += comp.d1[i] + comp.d2[i];
        out.components.push_back(std::move(comp));
    }
    return out;
}

double integrated_relative_difference(const SpectralDensity& a, const SpectralDensity& b) {
    if (a.omega_mhz != b.omega_mhz) throw std::invalid_argument("integrated_relative_difference: grids differ");
    const auto edges = cell_edges(a.omega_mhz);
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double w = edges[i + 1] - edges[i];
        diff += std::abs(a.values[i] - b.values[i]) * w;
        norm += a.values[i] * w;
    }
    if (!(norm > 0.0)) throw std::invalid_argument("integrated_relative_difference: reference has no weight");
    return diff / norm;
}

} // namespace oesr
