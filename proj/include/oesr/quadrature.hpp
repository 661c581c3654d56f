#pragma once

#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oesr {

/// Nodes and weights for  int exp(-x^2) f(x) dx ~ sum w_i f(x_i).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Hermite rule via Golub-Welsch. Nodes ascending.
GaussHermiteRule gauss_hermite(std::size_t n);

/// Adaptive Gauss-Kronrod on [a, b], evaluated on the unit interval so the
/// stopping test is relative to the integral whatever the interval length.
template <unsigned Points = 61, typename F>
double integrate_adaptive(F&& f, double a, double b, unsigned max_depth = 15, double tol = 1e-10) {
    if (!(b > a)) return 0.0;
    const double w = b - a;
    const auto g = [&](double x) { return f(a + w * x); };
    return w * boost::math::quadrature::gauss_kronrod<double, Points>::integrate(g, 0.0, 1.0, max_depth, tol);
}

} // namespace oesr
