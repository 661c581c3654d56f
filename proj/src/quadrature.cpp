#include "oesr/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "oesr/units.hpp"

namespace oesr {

GaussHermiteRule gauss_hermite(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_hermite: need at least one node");
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 1; k < m; ++k) {
        const double b = std::sqrt(static_cast<double>(k) / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        rule.nodes[k] = eig.eigenvalues()(k);
        rule.weights[k] = std::sqrt(pi) * v0 * v0;
    }
    // Exact symmetry keeps Delta -> -Delta pairs bitwise matched.
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double x = 0.5 * (rule.nodes[n - 1 - k] - rule.nodes[k]);
        const double w = 0.5 * (rule.weights[n - 1 - k] + rule.weights[k]);
        rule.nodes[k] = -x;
        rule.nodes[n - 1 - k] = x;
        rule.weights[k] = w;
        rule.weights[n - 1 - k] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

} // namespace oesr
