#pragma once

// Nuclear spectral densities D(omega) = D1 + D2 for strain-tilted
// quadrupolar nuclei, evaluated semi-analytically and by direct sampling.
// Frequencies in MHz (ordinary); D in MHz.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oesr {

struct GaussianSpread {
    double mean = 0.0;
    double std = 0.0;
};

struct NuclearSpeciesConfig {
    std::string name;
    /// Total spin I (2I integer >= 1).
    double spin = 0.5;
    double count = 0.0;
    /// <A^2>, MHz^2.
    double a2_mean_mhz2 = 0.0;
    /// Quadrupolar coupling B_Q, MHz.
    GaussianSpread bq_mhz;
    /// Gaussian width of the quadrupolar-axis polar angle about the growth axis.
    double polar_std_rad = 0.0;
    double zeeman_mhz = 0.0;

    void validate() const;
};

/// Illustrative In-115 / As-75 bath at about 3.3 T.
std::vector<NuclearSpeciesConfig> default_bath();

/// sqrt(I(I+1) - m(m+1)), m in {-I, ..., I-1}.
double m_plus(double spin, double m);

/// sin^2(theta) - cos^2(theta)/2
double quadrupolar_factor(double theta);

/// Density of the angle theta (quadrupolar axis vs. field, theta in [0, pi])
/// induced by a Gaussian polar angle theta' about the growth axis and a
/// uniform azimuth. Normalised on [0, pi] and symmetric about pi/2.
class PolarAngleDistribution {
public:
    explicit PolarAngleDistribution(double polar_std_rad, std::size_t table_points = 4097);

    double polar_std() const { return std_; }
    /// std = 0: all mass at theta = 0 and pi (half each).
    bool degenerate() const { return std_ == 0.0; }

    /// Direct quadrature of the theta' integral.
    double density(double theta) const;
    /// Interpolated from a table on [0, pi/2].
    double density_interpolated(double theta) const;

    /// Normalised Gaussian polar density p_p(theta') (w.r.t. sin(theta') dtheta').
    double polar_density(double theta_prime) const;

    /// theta' quantile for a uniform u in (0, 1).
    double sample_polar(double u) const;
    /// theta from (theta', azimuth).
    static double theta_from_axis(double theta_prime, double azimuth);

private:
    double std_;
    double norm_ = 1.0;
    std::vector<double> table_;
    std::vector<double> polar_cdf_;
};

/// Convenience wrapper of PolarAngleDistribution::density.
double polar_angle_density(double theta, double polar_std_rad);

/// Monte-Carlo draws of theta following the axis construction.
std::vector<double> sample_quadrupolar_angles(double polar_std_rad, std::size_t n, std::uint64_t seed);

struct SpeciesComponent {
    std::string name;
    std::vector<double> d1;
    std::vector<double> d2;
};

struct SpectralDensity {
    std::vector<double> omega_mhz;
    std::vector<double> values;
    std::vector<SpeciesComponent> components;
    std::vector<std::string> warnings;

    /// Linear interpolation; throws std::out_of_range off the grid.
    double at(double omega_mhz) const;
    bool covers(double omega_mhz) const;
    /// Sum of D times the cell widths (cells bounded by grid midpoints).
    double integral() const;
    static SpectralDensity zero(std::vector<double> omega_mhz);
    static SpectralDensity from_values(std::vector<double> omega_mhz, std::vector<double> values);
};

/// 4096 points on [0, 3 max omega_z].
std::vector<double> default_omega_grid(std::span<const NuclearSpeciesConfig> species, std::size_t points = 4096);

/// Cell edges: midpoints between grid points, outer cells symmetric.
std::vector<double> cell_edges(std::span<const double> omega_mhz);

/// Each grid value is the cell average of D over the cell around the point,
/// so the integral over the grid carries the exact spectral weight.
SpectralDensity spectral_density(std::span<const NuclearSpeciesConfig> species, std::span<const double> omega_mhz);

/// Total analytic weight int (D1 + D2) d omega for one species.
double spectral_weight(const NuclearSpeciesConfig& species);

struct MonteCarloBathOptions {
    std::size_t nuclei_per_species = 100000;
    std::uint64_t seed = 1;
    /// Latin-hypercube draws over (theta', azimuth, B_Q).
    bool stratified = true;
};

/// Direct sum over sampled nuclei; each line is binned as weight / cell width.
SpectralDensity spectral_density_monte_carlo(std::span<const NuclearSpeciesConfig> species,
                                             std::span<const double> omega_mhz,
                                             const MonteCarloBathOptions& options = {});

/// int |a - b| / int a on a common grid.
double integrated_relative_difference(const SpectralDensity& a, const SpectralDensity& b);

} // namespace oesr
