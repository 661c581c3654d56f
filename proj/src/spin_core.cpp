#include "oesr/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oesr {

RateFunction RateFunction::constant(Rate r) {
    if (!std::isfinite(r.per_us())) throw std::invalid_argument("RateFunction: non-finite rate");
    RateFunction f;
    f.constant_ = r.per_us();
    return f;
}

RateFunction RateFunction::tabulated(Duration step, std::vector<double> values_per_us) {
    if (!(step.us() > 0.0)) throw std::invalid_argument("RateFunction: table step must be > 0");
    if (values_per_us.empty()) throw std::invalid_argument("RateFunction: empty table");
    for (double v : values_per_us)
        if (!std::isfinite(v)) throw std::invalid_argument("RateFunction: non-finite table entry");
    RateFunction f;
    f.step_us_ = step.us();
    f.table_ = std::move(values_per_us);
    if (f.table_.size() == 1) {
        f.constant_ = f.table_.front();
        f.table_.clear();
    }
    return f;
}

bool RateFunction::is_zero() const {
    return table_.empty() ? constant_ == 0.0
                          : std::all_of(table_.begin(), table_.end(), [](double v) { return v == 0.0; });
}

bool RateFunction::has_negative() const {
    return table_.empty() ? constant_ < 0.0
                          : std::any_of(table_.begin(), table_.end(), [](double v) { return v < 0.0; });
}

Rate RateFunction::at(Duration t) const {
    if (table_.empty()) return Rate::per_us(constant_);
    const double x = std::max(0.0, t.us()) / step_us_;
    const auto last = table_.size() - 1;
    if (x >= static_cast<double>(last)) return Rate::per_us(table_.back());
    const auto i = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(i);
    return Rate::per_us(table_[i] + frac * (table_[i + 1] - table_[i]));
}

Rate RateFunction::max_abs() const {
    if (table_.empty()) return Rate::per_us(std::abs(constant_));
    double m = 0.0;
    for (double v : table_) m = std::max(m, std::abs(v));
    return Rate::per_us(m);
}

std::vector<Duration> uniform_times(Duration duration, std::size_t n) {
    if (n < 2) throw std::invalid_argument("uniform_times: need at least two points");
    std::vector<Duration> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = Duration::us(duration.us() * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

double analytic_rabi(Frequency omega, Rate gamma1, Duration t) {
    const double w = omega.rad_per_us();
    const double g = gamma1.per_us();
    if (t.us() < 0.0) throw std::invalid_argument("analytic_rabi: t must be >= 0");
    if (!(2.0 * w > g)) throw UnsupportedRegime("analytic_rabi: overdamped regime (2*Omega <= Gamma1) not supported");
    const double wt = std::sqrt(4.0 * w * w - g * g);
    const double tt = t.us();
    const double p = 0.5 * (1.0 + std::exp(-1.5 * g * tt) * (std::cos(wt * tt / 2.0) - g / wt * std::sin(wt * tt / 2.0)));
    return std::clamp(p, 0.0, 1.0);
}

} // namespace oesr
