#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "glab/expression.hpp"

namespace glab {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

// Uncertainty interval [sigma_lower, sigma_upper] of the G-Brownian volatility.
class VolatilityBand {
public:
    VolatilityBand(double sigma_lower, double sigma_upper);

    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    bool degenerate() const noexcept { return lower_ == upper_; }
    bool contains(double level) const noexcept { return lower_ <= level && level <= upper_; }

private:
    double lower_;
    double upper_;
};

// G(a) = (upper^2 a^+ - lower^2 a^-) / 2.
double g_function(double a, const VolatilityBand& band) noexcept;

// Uniform grid t_0 = 0 < ... < t_N = T.
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps);

    double horizon() const noexcept { return horizon_; }
    int n_steps() const noexcept { return n_steps_; }
    double dt() const noexcept { return horizon_ / n_steps_; }
    double node(int j) const noexcept { return j == n_steps_ ? horizon_ : j * dt(); }
    std::vector<double> nodes() const;

    // Largest index j with t_j <= t (up to rounding of the uniform nodes).
    int last_node_at_or_before(double t) const noexcept;

private:
    double horizon_;
    int n_steps_;
};

// Coefficients (b, h, sigma) of dX = b dt + h d<B> + sigma dB together with
// the declared constants of the standing assumptions:
//   |b(x)-b(y)| + |h(x)-h(y)| + |sigma(x)-sigma(y)| <= K |x-y|,
//   kappa1 <= sigma <= kappa2.
class ModelCoefficients {
public:
    ModelCoefficients(Expression drift, Expression qv_drift, Expression diffusion, double lipschitz,
                      double kappa1, double kappa2);

    // b = h = 0, sigma = 1: X is the G-Brownian motion itself.
    static ModelCoefficients g_brownian();

    double b(double t, double x) const noexcept { return drift_(t, x); }
    double h(double t, double x) const noexcept { return qv_drift_(t, x); }
    double sigma(double t, double x) const noexcept { return diffusion_(t, x); }

    const Expression& drift() const noexcept { return drift_; }
    const Expression& qv_drift() const noexcept { return qv_drift_; }
    const Expression& diffusion() const noexcept { return diffusion_; }

    double lipschitz() const noexcept { return lipschitz_; }
    double kappa1() const noexcept { return kappa1_; }
    double kappa2() const noexcept { return kappa2_; }

private:
    Expression drift_;
    Expression qv_drift_;
    Expression diffusion_;
    double lipschitz_;
    double kappa1_;
    double kappa2_;
};

struct CoefficientReport {
    double max_lipschitz_quotient = 0.0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    bool lipschitz_violation = false;
    bool sigma_violation = false;
    std::vector<std::string> messages;

    bool violation() const noexcept { return lipschitz_violation || sigma_violation; }
};

// Sampling check of the declared constants over `domain` x grid nodes: a dense
// state grid of `samples` points, its consecutive pairs, and `samples` random
// pairs. Violations are reported, not thrown.
CoefficientReport validate_coefficients(const ModelCoefficients& coeffs, Interval domain, const TimeGrid& grid,
                                        int samples, double tol = 1e-9, std::uint64_t seed = 0x5eed);

// Throws std::invalid_argument listing the violations if the check fails.
void require_valid_coefficients(const ModelCoefficients& coeffs, Interval domain, const TimeGrid& grid,
                                int samples);

// x_ref +- 6 * upper * sqrt(T) * exp(K T).
Interval default_validation_domain(double x_ref, const VolatilityBand& band, double horizon, double lipschitz);

// Bounded terminal function with declared bounds on the domain it is used on.
struct Payoff {
    std::function<double(double)> f;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    bool strictly_positive = false;
    std::string name;
    bool convex = false;
    bool concave = false;

    double operator()(double x) const { return f(x); }
    double sup_norm() const noexcept;
};

// Catalog payoff with bounds taken over `domain` (analytic extrema where the
// shape has them inside the domain, endpoints otherwise).
Payoff make_payoff(const Expression& expr, Interval domain);

// Wraps an arbitrary function; bounds come from dense sampling of `domain`.
Payoff make_payoff(std::string name, std::function<double(double)> f, Interval domain, int samples = 4097);

// log f, requires a strictly positive payoff.
Payoff log_payoff(const Payoff& payoff);
// f^p for p > 0, requires a nonnegative payoff.
Payoff power_payoff(const Payoff& payoff, double p);

// Throws std::invalid_argument unless bounds are finite and ordered, and
// strictly_positive is consistent with the lower bound.
void require_bounded(const Payoff& payoff);

}  // namespace glab
