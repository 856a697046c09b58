#include "glab/gheat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "glab/io.hpp"

namespace glab {

double GridFunction::at(double state) const {
    if (x.empty()) throw std::out_of_range("empty grid function");
    if (state < x.front() || state > x.back()) {
        std::ostringstream msg;
        msg << "state " << state << " outside grid [" << x.front() << ", " << x.back() << "]";
        throw std::out_of_range(msg.str());
    }
    if (x.size() == 1) return values.front();
    const double h = dx();
    auto i = static_cast<std::size_t>(std::floor((state - x.front()) / h));
    i = std::min(i, x.size() - 2);
    const double w = (state - x[i]) / h;
    if (w <= 0.0) return values[i];
    if (w >= 1.0) return values[i + 1];
    return (1.0 - w) * values[i] + w * values[i + 1];
}

void write_csv(const GridFunction& u, std::ostream& out) {
    out << "x,u\n";
    for (std::size_t i = 0; i < u.size(); ++i) out << format_double(u.x[i]) << ',' << format_double(u.values[i]) << '\n';
}

PdeConfig PdeConfig::coarsened() const {
    PdeConfig out = *this;
    out.n_space = (n_space - 1) / 2 + 1;
    return out;
}

void PdeConfig::validate() const {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw std::invalid_argument("PDE domain requires x_min < x_max");
    }
    if (n_space < 16) throw std::invalid_argument("PDE grid needs n_space >= 16");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
        throw std::invalid_argument("cfl_safety must lie in (0, 1] for a monotone explicit scheme");
    }
}

Interval padded_domain(double x_ref, const VolatilityBand& band, double horizon, double requested_half_width) {
    const double half = std::max(6.0 * band.upper() * std::sqrt(horizon), requested_half_width);
    return {x_ref - half, x_ref + half};
}

namespace {

std::vector<double> make_nodes(const PdeConfig& cfg) {
    std::vector<double> x(static_cast<std::size_t>(cfg.n_space));
    const double h = cfg.dx();
    for (int i = 0; i < cfg.n_space; ++i) x[static_cast<std::size_t>(i)] = i + 1 == cfg.n_space ? cfg.x_max : cfg.x_min + i * h;
    return x;
}

struct NodeCoefficients {
    std::vector<double> b;
    std::vector<double> h;
    std::vector<double> sigma_sq;
};

NodeCoefficients sample_coefficients(const ModelCoefficients& coeffs, const std::vector<double>& x) {
    NodeCoefficients c;
    c.b.resize(x.size());
    c.h.resize(x.size());
    c.sigma_sq.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        c.b[i] = coeffs.b(0.0, x[i]);
        c.h[i] = coeffs.h(0.0, x[i]);
        const double s = coeffs.sigma(0.0, x[i]);
        c.sigma_sq[i] = s * s;
    }
    return c;
}

// One-sided at the ends (ghost node by linear extrapolation), central inside.
inline void differences(const std::vector<double>& u, std::size_t i, double dx, double& d1, double& d2) {
    const std::size_t n = u.size();
    if (i == 0) {
        d1 = (u[1] - u[0]) / dx;
        d2 = 0.0;
    } else if (i + 1 == n) {
        d1 = (u[n - 1] - u[n - 2]) / dx;
        d2 = 0.0;
    } else {
        d1 = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
    }
}

inline double upwind_drift(const std::vector<double>& u, std::size_t i, double dx, double b) {
    const std::size_t n = u.size();
    if (i == 0) return b * (u[1] - u[0]) / dx;
    if (i + 1 == n) return b * (u[n - 1] - u[n - 2]) / dx;
    return b > 0.0 ? b * (u[i + 1] - u[i]) / dx : b * (u[i] - u[i - 1]) / dx;
}

}  // namespace

PdeSolution solve_g_hjb(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                        double horizon, const PdeConfig& cfg, const SolveOptions& options) {
    cfg.validate();
    require_bounded(payoff);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");

    const auto x = make_nodes(cfg);
    const double dx = cfg.dx();
    const auto c = sample_coefficients(coeffs, x);

    const double hi_sq = band.upper() * band.upper();
    double rate = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s2 = c.sigma_sq[i];
        if (!(s2 > 0.0)) throw std::invalid_argument("diffusion coefficient vanishes on the PDE grid");
        if (s2 < coeffs.kappa1() * coeffs.kappa1() * (1.0 - 1e-9) ||
            s2 > coeffs.kappa2() * coeffs.kappa2() * (1.0 + 1e-9)) {
            throw std::invalid_argument("diffusion coefficient leaves [kappa1, kappa2] on the PDE grid");
        }
        // Central h-difference keeps nonnegative neighbour weights only if
        // sigma^2 / dx >= |h|.
        if (std::abs(c.h[i]) * dx > s2) {
            throw std::invalid_argument("PDE grid too coarse for a monotone h-term: need dx <= sigma^2/|h|");
        }
        rate = std::max(rate, hi_sq * s2 / (dx * dx) + std::abs(c.b[i]) / dx);
    }
    const double dt_max = cfg.cfl_safety / rate;
    const int n_time = std::max(1, static_cast<int>(std::ceil(horizon / dt_max * (1.0 - 1e-12))));
    const double dt = horizon / n_time;

    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = payoff(x[i]);
    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    const double f_min = *lo_it;
    const double f_max = *hi_it;

    PdeSolution out;
    out.dt = dt;
    out.n_time_steps = n_time;

    std::vector<int> snapshot_step(options.snapshot_times.size());
    out.snapshots.resize(options.snapshot_times.size());
    for (std::size_t k = 0; k < snapshot_step.size(); ++k) {
        const double s = std::clamp(options.snapshot_times[k], 0.0, horizon);
        snapshot_step[k] = static_cast<int>(std::lround((horizon - s) / dt));
    }
    auto record = [&](int step) {
        for (std::size_t k = 0; k < snapshot_step.size(); ++k) {
            if (snapshot_step[k] != step) continue;
            out.snapshots[k] = GridFunction{x, u, horizon - step * dt};
        }
    };
    record(0);

    std::vector<double> next(u.size());
    for (int step = 1; step <= n_time; ++step) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            double d1 = 0.0;
            double d2 = 0.0;
            differences(u, i, dx, d1, d2);
            const double a = 2.0 * c.h[i] * d1 + c.sigma_sq[i] * d2;
            next[i] = u[i] + dt * (upwind_drift(u, i, dx, c.b[i]) + g_function(a, band));
        }
        u.swap(next);
        record(step);
    }

    const double scale = std::max({1.0, std::abs(f_min), std::abs(f_max)});
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * scale * std::sqrt(static_cast<double>(n_time));
    for (double v : u) {
        out.comparison_excess = std::max({out.comparison_excess, f_min - v, v - f_max});
    }
    out.comparison_ok = out.comparison_excess <= slack;
    out.u0 = GridFunction{x, std::move(u), horizon - n_time * dt};
    out.u0.time = 0.0;
    return out;
}

PdeSolution solve_g_heat(const Payoff& payoff, const VolatilityBand& band, double horizon, const PdeConfig& cfg,
                         const SolveOptions& options) {
    return solve_g_hjb(ModelCoefficients::g_brownian(), band, payoff, horizon, cfg, options);
}

std::vector<double> hamiltonian_argument(const GridFunction& u, const ModelCoefficients& coeffs) {
    if (u.size() < 3) throw std::invalid_argument("hamiltonian_argument needs at least 3 nodes");
    std::vector<double> a(u.size());
    const double dx = u.dx();
    for (std::size_t i = 0; i < u.size(); ++i) {
        double d1 = 0.0;
        double d2 = 0.0;
        differences(u.values, i, dx, d1, d2);
        const double s = coeffs.sigma(u.time, u.x[i]);
        a[i] = 2.0 * coeffs.h(u.time, u.x[i]) * d1 + s * s * d2;
    }
    return a;
}

std::vector<double> feedback_optimal_control(const GridFunction& u, const ModelCoefficients& coeffs,
                                             const VolatilityBand& band) {
    auto levels = hamiltonian_argument(u, coeffs);
    // Arguments within rounding of zero count as ties.
    const double dx = u.dx();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = std::min(i + 1, levels.size() - 1);
        const double s = coeffs.sigma(u.time, u.x[i]);
        const double scale = (std::abs(u.values[lo]) + 2.0 * std::abs(u.values[i]) + std::abs(u.values[hi])) *
                             (s * s / (dx * dx) + std::abs(coeffs.h(u.time, u.x[i])) / dx);
        const double noise = 16.0 * std::numeric_limits<double>::epsilon() * scale;
        levels[i] = levels[i] >= -noise ? band.upper() : band.lower();
    }
    return levels;
}

PdeEstimate two_grid_estimate(const GridFunction& fine, const GridFunction& coarse, double state) {
    PdeEstimate e;
    e.value = fine.at(state);
    e.coarse = coarse.at(state);
    e.tolerance = std::abs(e.value - e.coarse);
    return e;
}

}  // namespace glab
