#include "oesr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "oesr/errors.hpp"

namespace oesr {

VisibilityTrace visibility_per_pi(std::span<const double> t_ns, std::span<const double> p, Frequency omega) {
    if (t_ns.size() != p.size()) throw std::invalid_argument("visibility_per_pi: size mismatch");
    if (!(omega.rad_per_us() > 0.0)) throw std::invalid_argument("visibility_per_pi: omega must be > 0");
    if (t_ns.size() < 2) throw ResolutionError("visibility_per_pi: trace too short");
    const double tpi = pi_time(omega).ns();
    const double eps = 1e-9 * tpi;
    const double t0 = t_ns.front();
    const double t_end = t_ns.back();

    VisibilityTrace out;
    std::size_t start = 0;
    for (std::size_t k = 0;; ++k) {
        const double lo = t0 + static_cast<double>(k) * tpi;
        const double hi = lo + tpi;
        if (hi > t_end + eps) break;
        while (start < t_ns.size() && t_ns[start] < lo - eps) ++start;
        double mx = -INFINITY;
        double mn = INFINITY;
        std::size_t count = 0;
        for (std::size_t i = start; i < t_ns.size() && t_ns[i] <= hi + eps; ++i) {
            mx = std::max(mx, p[i]);
            mn = std::min(mn, p[i]);
            ++count;
        }
        if (count < 20)
            throw ResolutionError("visibility_per_pi: window " + std::to_string(k) + " holds " + std::to_string(count) +
                                  " samples, need >= 20 per pi-period");
        out.t_ns.push_back(lo + tpi / 2);
        out.visibility.push_back(mx - mn);
    }
    if (out.t_ns.empty()) throw ResolutionError("visibility_per_pi: trace shorter than one pi-period");
    return out;
}

DecayTime one_over_e_time(const VisibilityTrace& vis) {
    if (vis.t_ns.empty() || vis.t_ns.size() != vis.visibility.size())
        throw std::invalid_argument("one_over_e_time: empty or inconsistent trace");
    const double v0 = vis.visibility.front();
    const double t0 = vis.t_ns.front();
    const double threshold = v0 / std::exp(1.0);
    for (std::size_t i = 1; i < vis.t_ns.size(); ++i) {
        if (vis.visibility[i] <= threshold) {
            const double va = vis.visibility[i - 1];
            const double vb = vis.visibility[i];
            const double f = va == vb ? 0.0 : (va - threshold) / (va - vb);
            return {vis.t_ns[i - 1] + f * (vis.t_ns[i] - vis.t_ns[i - 1]) - t0, false};
        }
    }
    return {vis.t_ns.back() - t0, true};
}

double q_factor(double tau_ns, Frequency omega) { return tau_ns / pi_time(omega).ns(); }

double pi_fidelity(double q) {
    if (!(q > 0.0)) throw std::invalid_argument("pi_fidelity: Q must be > 0");
    return 0.5 * (1.0 + std::exp(-1.0 / q));
}

Frequency sigma_from_t2star(double t2star_ns) {
    if (!(t2star_ns > 0.0)) throw std::invalid_argument("sigma_from_t2star: T2* must be > 0");
    return Frequency::mhz(1.0 / (std::sqrt(2.0) * pi * t2star_ns * 1e-3));
}

double t2star_from_sigma(Frequency sigma) {
    if (!(sigma.mhz() > 0.0)) throw std::invalid_argument("t2star_from_sigma: sigma must be > 0");
    return 1e3 / (std::sqrt(2.0) * pi * sigma.mhz());
}

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter " + name);
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return errors(static_cast<Eigen::Index>(i));
    throw std::out_of_range("FitResult: no parameter " + name);
}

namespace {

/// Residuals r_i = model(t_i, p) - y_i with an analytic Jacobian.
struct CurveFunctor : Eigen::DenseFunctor<double> {
    using Model = std::function<double(double, const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>;

    CurveFunctor(std::span<const double> t, std::span<const double> y, int n_params, Model model)
        : Eigen::DenseFunctor<double>(n_params, static_cast<int>(t.size())), t_(t), y_(y), model_(std::move(model)) {}

    int operator()(const InputType& p, ValueType& r) const {
        Eigen::VectorXd g(p.size());
        for (std::size_t i = 0; i < t_.size(); ++i) r(static_cast<Eigen::Index>(i)) = model_(t_[i], p, g) - y_[i];
        return 0;
    }

    int df(const InputType& p, JacobianType& j) const {
        Eigen::VectorXd g(p.size());
        for (std::size_t i = 0; i < t_.size(); ++i) {
            model_(t_[i], p, g);
            j.row(static_cast<Eigen::Index>(i)) = g.transpose();
        }
        return 0;
    }

    std::span<const double> t_;
    std::span<const double> y_;
    Model model_;
};

FitResult least_squares(std::span<const double> t, std::span<const double> y, Eigen::VectorXd p0,
                        std::vector<std::string> names, CurveFunctor::Model model) {
    FitResult fit;
    fit.names = std::move(names);
    CurveFunctor f(t, y, static_cast<int>(p0.size()), std::move(model));
    Eigen::LevenbergMarquardt<CurveFunctor> lm(f);
    lm.setMaxfev(2000);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    const auto status = lm.minimize(p0);

    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    f(p0, r);
    Eigen::MatrixXd j(static_cast<Eigen::Index>(t.size()), p0.size());
    f.df(p0, j);
    const auto dof = static_cast<double>(t.size()) - static_cast<double>(p0.size());
    const double s2 = dof > 0 ? r.squaredNorm() / dof : 0.0;
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);

    fit.values = p0;
    fit.residual_norm = r.norm();
    fit.errors = Eigen::VectorXd::Zero(p0.size());
    const bool finite = p0.allFinite() && std::isfinite(fit.residual_norm);
    if (lu.isInvertible()) fit.errors = (s2 * lu.inverse().diagonal()).cwiseMax(0.0).cwiseSqrt();
    fit.success = finite && lu.isInvertible() && status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
    if (!fit.success) fit.message = "least-squares fit did not converge to an identifiable optimum";
    return fit;
}

void check_series(std::span<const double> t, std::span<const double> y, std::size_t min_points, const char* who) {
    if (t.size() != y.size()) throw std::invalid_argument(std::string(who) + ": size mismatch");
    if (t.size() < min_points) throw std::invalid_argument(std::string(who) + ": too few points");
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw std::invalid_argument(std::string(who) + ": non-finite data");
}

} // namespace

FitResult fit_ramsey_gaussian(std::span<const double> tau_ns, std::span<const double> p) {
    check_series(tau_ns, p, 4, "fit_ramsey_gaussian");
    const std::size_t n = p.size();
    const std::size_t tail_n = std::max<std::size_t>(1, n / 5);
    const double tail = std::accumulate(p.end() - static_cast<std::ptrdiff_t>(tail_n), p.end(), 0.0) / tail_n;
    const double first = p.front();
    const double swing = *std::max_element(p.begin(), p.end()) - *std::min_element(p.begin(), p.end());

    FitResult failed;
    failed.names = {"t2star_ns", "rho0", "sign"};
    failed.values = Eigen::VectorXd::Zero(3);
    failed.errors = Eigen::VectorXd::Zero(3);
    if (swing < 1e-6 * std::max(1.0, std::abs(first))) {
        failed.message = "flat data: Gaussian envelope not identifiable";
        return failed;
    }

    const double sign = first >= tail ? 1.0 : -1.0;
    const double rho0_guess = sign > 0 ? first : 2.0 * tail;
    const double half = rho0_guess / 2.0;
    double t_guess = tau_ns.back() - tau_ns.front();
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(p[i] - half) <= std::abs(first - half) / std::exp(1.0)) {
            t_guess = std::max(tau_ns[i], 1e-9 * (tau_ns.back() - tau_ns.front()));
            break;
        }

    Eigen::VectorXd p0(2);
    p0 << t_guess, rho0_guess;
    auto fit = least_squares(tau_ns, p, p0, {"t2star_ns", "rho0"},
                             [sign](double t, const Eigen::VectorXd& q, Eigen::Ref<Eigen::VectorXd> g) {
                                 const double x = t / q(0);
                                 const double e = std::exp(-x * x);
                                 g(0) = q(1) / 2 * sign * e * 2 * x * x / q(0);
                                 g(1) = 0.5 * (1 + sign * e);
                                 return q(1) / 2 * (1 + sign * e);
                             });
    fit.values(0) = std::abs(fit.values(0));
    fit.names.push_back("sign");
    fit.values.conservativeResize(3);
    fit.values(2) = sign;
    fit.errors.conservativeResize(3);
    fit.errors(2) = 0.0;
    if (fit.success && !(fit.values(0) > 0.0)) {
        fit.success = false;
        fit.message = "non-positive T2*";
    }
    return fit;
}

FitResult fit_exponential(std::span<const double> t, std::span<const double> v) {
    check_series(t, v, 3, "fit_exponential");
    FitResult failed;
    failed.names = {"tau", "v0"};
    failed.values = Eigen::VectorXd::Zero(2);
    failed.errors = Eigen::VectorXd::Zero(2);

    // Log-linear regression over the positive samples seeds the fit.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (v[i] <= 0.0) continue;
        const double ly = std::log(v[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++m;
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (m < 2 || denom <= 0.0) {
        failed.message = "not enough positive samples";
        return failed;
    }
    const double slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) {
        failed.message = "no decay in data";
        return failed;
    }
    const double intercept = (sy - slope * sx) / static_cast<double>(m);

    Eigen::VectorXd p0(2);
    p0 << -1.0 / slope, std::exp(intercept);
    auto fit = least_squares(t, v, p0, {"tau", "v0"}, [](double x, const Eigen::VectorXd& q, Eigen::Ref<Eigen::VectorXd> g) {
        const double e = std::exp(-x / q(0));
        g(0) = q(1) * e * x / (q(0) * q(0));
        g(1) = e;
        return q(1) * e;
    });
    if (fit.success && !(fit.values(0) > 0.0)) {
        fit.success = false;
        fit.message = "non-positive decay time";
    }
    return fit;
}

} // namespace oesr
