#include "glab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "glab/rng.hpp"

namespace glab {

VolatilityBand::VolatilityBand(double sigma_lower, double sigma_upper) : lower_(sigma_lower), upper_(sigma_upper) {
    if (!(sigma_lower > 0.0) || !std::isfinite(sigma_upper) || sigma_lower > sigma_upper) {
        std::ostringstream msg;
        msg << "volatility band requires 0 < sigma_lower <= sigma_upper, got [" << sigma_lower << ", "
            << sigma_upper << "]";
        throw std::invalid_argument(msg.str());
    }
}

double g_function(double a, const VolatilityBand& band) noexcept {
    const double hi = band.upper() * band.upper();
    const double lo = band.lower() * band.lower();
    return a >= 0.0 ? 0.5 * hi * a : 0.5 * lo * a;
}

TimeGrid::TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("time horizon must be positive");
    if (n_steps < 1) throw std::invalid_argument("time grid needs at least one step");
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(n_steps_) + 1);
    for (int j = 0; j <= n_steps_; ++j) out[static_cast<std::size_t>(j)] = node(j);
    return out;
}

int TimeGrid::last_node_at_or_before(double t) const noexcept {
    if (t >= horizon_) return n_steps_;
    if (t <= 0.0) return 0;
    const double slack = 1e-9 * dt();
    int j = static_cast<int>(std::floor((t + slack) / dt()));
    return std::clamp(j, 0, n_steps_);
}

ModelCoefficients::ModelCoefficients(Expression drift, Expression qv_drift, Expression diffusion, double lipschitz,
                                     double kappa1, double kappa2)
    : drift_(std::move(drift)),
      qv_drift_(std::move(qv_drift)),
      diffusion_(std::move(diffusion)),
      lipschitz_(lipschitz),
      kappa1_(kappa1),
      kappa2_(kappa2) {
    if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) {
        throw std::invalid_argument("Lipschitz constant K must be finite and nonnegative");
    }
    if (!(kappa1 > 0.0) || !(kappa1 <= kappa2) || !std::isfinite(kappa2)) {
        std::ostringstream msg;
        msg << "diffusion bounds require 0 < kappa1 <= kappa2, got kappa1=" << kappa1 << " kappa2=" << kappa2;
        throw std::invalid_argument(msg.str());
    }
}

ModelCoefficients ModelCoefficients::g_brownian() {
    return {Expression::constant(0.0), Expression::constant(0.0), Expression::constant(1.0), 0.0, 1.0, 1.0};
}

CoefficientReport validate_coefficients(const ModelCoefficients& coeffs, Interval domain, const TimeGrid& grid,
                                        int samples, double tol, std::uint64_t seed) {
    if (samples < 2) throw std::invalid_argument("validate_coefficients needs at least 2 samples");
    if (!(domain.lo < domain.hi)) throw std::invalid_argument("validation domain must be a nonempty interval");

    CoefficientReport report;
    report.sigma_min = std::numeric_limits<double>::infinity();
    report.sigma_max = -std::numeric_limits<double>::infinity();

    const double step = domain.width() / (samples - 1);
    std::vector<double> xs(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) xs[static_cast<std::size_t>(i)] = i + 1 == samples ? domain.hi : domain.lo + i * step;

    const NormalSource rng(seed);
    auto quotient = [&](double t, double x, double y) {
        const double num = std::abs(coeffs.b(t, x) - coeffs.b(t, y)) + std::abs(coeffs.h(t, x) - coeffs.h(t, y)) +
                           std::abs(coeffs.sigma(t, x) - coeffs.sigma(t, y));
        return num / std::abs(x - y);
    };

    // Time nodes: all of them for short grids, otherwise a spread of 17.
    std::vector<int> time_nodes;
    const int n_time = std::min(grid.n_steps() + 1, 17);
    for (int k = 0; k < n_time; ++k) {
        time_nodes.push_back(n_time == 1 ? 0 : static_cast<int>(std::lround(1.0 * k * grid.n_steps() / (n_time - 1))));
    }

    for (int j : time_nodes) {
        const double t = grid.node(j);
        for (double x : xs) {
            const double s = coeffs.sigma(t, x);
            report.sigma_min = std::min(report.sigma_min, s);
            report.sigma_max = std::max(report.sigma_max, s);
        }
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            report.max_lipschitz_quotient = std::max(report.max_lipschitz_quotient, quotient(t, xs[i], xs[i + 1]));
        }
        for (int k = 0; k < samples; ++k) {
            const DrawAddress at{static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j), 7};
            const double x = domain.lo + domain.width() * rng.uniform(at);
            const double y = domain.lo + domain.width() * rng.uniform({at.path, at.step, 8});
            if (x == y) continue;
            report.max_lipschitz_quotient = std::max(report.max_lipschitz_quotient, quotient(t, x, y));
        }
    }

    if (report.max_lipschitz_quotient > coeffs.lipschitz() * (1.0 + tol)) {
        report.lipschitz_violation = true;
        std::ostringstream msg;
        msg << "observed Lipschitz quotient " << report.max_lipschitz_quotient << " exceeds declared K="
            << coeffs.lipschitz();
        report.messages.push_back(msg.str());
    }
    if (report.sigma_min < coeffs.kappa1() * (1.0 - tol)) {
        report.sigma_violation = true;
        std::ostringstream msg;
        msg << "sigma reaches " << report.sigma_min << " below declared kappa1=" << coeffs.kappa1();
        report.messages.push_back(msg.str());
    }
    if (report.sigma_max > coeffs.kappa2() * (1.0 + tol)) {
        report.sigma_violation = true;
        std::ostringstream msg;
        msg << "sigma reaches " << report.sigma_max << " above declared kappa2=" << coeffs.kappa2();
        report.messages.push_back(msg.str());
    }
    return report;
}

void require_valid_coefficients(const ModelCoefficients& coeffs, Interval domain, const TimeGrid& grid, int samples) {
    const auto report = validate_coefficients(coeffs, domain, grid, samples);
    if (!report.violation()) return;
    std::string msg = "coefficients violate their declared constants:";
    for (const auto& m : report.messages) msg += " " + m + ";";
    throw std::invalid_argument(msg);
}

Interval default_validation_domain(double x_ref, const VolatilityBand& band, double horizon, double lipschitz) {
    const double half = 6.0 * band.upper() * std::sqrt(horizon) * std::exp(lipschitz * horizon);
    return {x_ref - half, x_ref + half};
}

double Payoff::sup_norm() const noexcept { return std::max(std::abs(lower_bound), std::abs(upper_bound)); }

Payoff make_payoff(const Expression& expr, Interval domain) {
    if (!(domain.lo < domain.hi)) throw std::invalid_argument("payoff domain must be a nonempty interval");
    Payoff out;
    out.f = [expr](double x) { return expr(x); };
    out.name = expr.to_string();
    out.convex = expr.convex();
    out.concave = expr.concave();

    const auto& p = expr.params();
    using K = Expression::Kind;
    switch (expr.kind()) {
        case K::sine:
        case K::cosine:
        case K::tanh:
            out.lower_bound = p[0] - std::abs(p[1]);
            out.upper_bound = p[0] + std::abs(p[1]);
            break;
        case K::logistic:
        case K::bump:
            out.lower_bound = p[0] + std::min(0.0, p[1]);
            out.upper_bound = p[0] + std::max(0.0, p[1]);
            break;
        default: {
            // Piecewise-monotone shapes: extrema at the endpoints or the kink.
            std::vector<double> probes{domain.lo, domain.hi};
            if (expr.kind() == K::quadratic || expr.kind() == K::quartic) probes.push_back(0.0);
            if (expr.kind() == K::call || expr.kind() == K::put) probes.push_back(p[0]);
            out.lower_bound = std::numeric_limits<double>::infinity();
            out.upper_bound = -std::numeric_limits<double>::infinity();
            for (double x : probes) {
                if (!domain.contains(x)) continue;
                out.lower_bound = std::min(out.lower_bound, expr(x));
                out.upper_bound = std::max(out.upper_bound, expr(x));
            }
        }
    }
    out.strictly_positive = out.lower_bound > 0.0;
    return out;
}

Payoff make_payoff(std::string name, std::function<double(double)> f, Interval domain, int samples) {
    if (!(domain.lo < domain.hi) || samples < 2) throw std::invalid_argument("payoff sampling needs a nonempty domain");
    Payoff out;
    out.name = std::move(name);
    out.lower_bound = std::numeric_limits<double>::infinity();
    out.upper_bound = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double x = i + 1 == samples ? domain.hi : domain.lo + domain.width() * i / (samples - 1);
        const double v = f(x);
        out.lower_bound = std::min(out.lower_bound, v);
        out.upper_bound = std::max(out.upper_bound, v);
    }
    out.f = std::move(f);
    out.strictly_positive = out.lower_bound > 0.0;
    return out;
}

Payoff log_payoff(const Payoff& payoff) {
    if (!payoff.strictly_positive || !(payoff.lower_bound > 0.0)) {
        throw std::invalid_argument("log of payoff '" + payoff.name + "' needs a positive lower bound");
    }
    Payoff out;
    out.f = [f = payoff.f](double x) { return std::log(f(x)); };
    out.lower_bound = std::log(payoff.lower_bound);
    out.upper_bound = std::log(payoff.upper_bound);
    out.strictly_positive = out.lower_bound > 0.0;
    out.name = "log(" + payoff.name + ")";
    return out;
}

Payoff power_payoff(const Payoff& payoff, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("payoff power must be positive");
    if (payoff.lower_bound < 0.0) {
        throw std::invalid_argument("power of payoff '" + payoff.name + "' needs a nonnegative payoff");
    }
    Payoff out;
    out.f = [f = payoff.f, p](double x) { return std::pow(f(x), p); };
    out.lower_bound = std::pow(payoff.lower_bound, p);
    out.upper_bound = std::pow(payoff.upper_bound, p);
    out.strictly_positive = payoff.strictly_positive;
    std::ostringstream name;
    name << '(' << payoff.name << ")^" << p;
    out.name = name.str();
    return out;
}

void require_bounded(const Payoff& payoff) {
    if (!payoff.f) throw std::invalid_argument("payoff has no function");
    if (!std::isfinite(payoff.lower_bound) || !std::isfinite(payoff.upper_bound)) {
        throw std::invalid_argument("payoff '" + payoff.name + "' is declared unbounded");
    }
    if (payoff.lower_bound > payoff.upper_bound) {
        throw std::invalid_argument("payoff '" + payoff.name + "' has lower_bound > upper_bound");
    }
    if (payoff.strictly_positive && !(payoff.lower_bound > 0.0)) {
        throw std::invalid_argument("payoff '" + payoff.name + "' is flagged strictly positive with lower_bound <= 0");
    }
}

}  // namespace glab
